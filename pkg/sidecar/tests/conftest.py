import json
import subprocess
import sys

import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class SidecarClient:
    """Raw line-JSON client for a sidecar child process."""

    def __init__(self, *extra_args: str, checkpoint_dir=None):
        cmd = [sys.executable, "-m", "constyle_sidecar.server",
               "--model", "tiny", "--seed", "0", "--lr", "1e-3"]
        if checkpoint_dir is not None:
            cmd += ["--checkpoint-dir", str(checkpoint_dir)]
        cmd += list(extra_args)
        self.proc = subprocess.Popen(cmd, stdin=subprocess.PIPE,
                                     stdout=subprocess.PIPE, text=True,
                                     bufsize=1)

    def send_line(self, line: str) -> str:
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()
        return self.proc.stdout.readline().rstrip("\n")

    def request(self, **obj) -> dict:
        return json.loads(self.send_line(json.dumps(obj)))

    def close(self):
        self.proc.stdin.close()
        self.proc.wait(timeout=10)


@pytest.fixture
def client(tmp_path):
    c = SidecarClient(checkpoint_dir=tmp_path / "ckpt")
    yield c
    c.close()
