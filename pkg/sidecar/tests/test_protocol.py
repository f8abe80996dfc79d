import json
import subprocess
import sys
from pathlib import Path

GOLDEN = Path(__file__).parent / "golden_transcript.jsonl"


def test_golden_transcript(client):
    """Recorded request/response pairs match byte for byte."""
    for entry in GOLDEN.read_text().splitlines():
        record = json.loads(entry)
        response = client.send_line(record["send"])
        assert response == record["expect"], record["send"]


def test_generate_over_the_wire(client):
    r = client.request(op="generate", texts=["hello", "world"], beam=5)
    assert r["ok"] is True
    assert len(r["outputs"]) == 2
    assert all(isinstance(o, str) for o in r["outputs"])


def test_train_over_the_wire(client):
    r1 = client.request(op="train", src=["u r"], tgt=["you are"])
    r2 = client.request(op="train", src=["u r"], tgt=["you are"])
    assert r1["ok"] and r2["ok"]
    assert r2["loss"] < r1["loss"]


def test_save_load_missing_checkpoint(client):
    r = client.request(op="load", tag="never-saved")
    assert r["ok"] is False
    assert "no such checkpoint" in r["error"]


def test_errors_do_not_kill_process(client):
    client.send_line("garbage")
    client.request(op="bogus")
    r = client.request(op="hello", version=1)
    assert r == {"ok": True, "version": 1}


def test_clean_shutdown_on_eof(tmp_path):
    proc = subprocess.Popen(
        [sys.executable, "-m", "constyle_sidecar.server", "--model", "tiny",
         "--checkpoint-dir", str(tmp_path)],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1)
    proc.stdin.write('{"op": "hello", "version": 1}\n')
    proc.stdin.flush()
    assert json.loads(proc.stdout.readline())["ok"] is True
    proc.stdin.close()
    assert proc.wait(timeout=10) == 0


def test_unloadable_model_exits_nonzero(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "constyle_sidecar.server",
         "--model", "/nonexistent/model", "--checkpoint-dir", str(tmp_path)],
        input="", capture_output=True, text=True, timeout=120)
    assert proc.returncode == 1
    assert "fatal" in proc.stderr
