"""Pluggable sequence generators: in-repo test doubles and a remote client.

The remote client speaks line-delimited JSON over a child process's
standard streams (or TCP), one request and one response at a time:

    {"op": "hello", "version": 1}      -> {"ok": true, "version": 1}
    {"op": "generate", "texts": [...], "beam": 5}
                                       -> {"ok": true, "outputs": [...]}
    {"op": "train", "src": [...], "tgt": [...]} -> {"ok": true, "loss": ...}
    {"op": "save", "tag": "..."}       -> {"ok": true}
    {"op": "load", "tag": "..."}       -> {"ok": true}
"""

from __future__ import annotations

import copy
import json
import math
import queue
import socket
import subprocess
import threading
from collections import Counter, defaultdict
from pathlib import Path
from typing import Protocol, runtime_checkable

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 30.0


class GeneratorError(Exception):
    pass


class BatchMismatch(GeneratorError):
    pass


class NoSnapshot(GeneratorError):
    pass


class Timeout(GeneratorError):
    pass


class ProtocolError(GeneratorError):
    pass


@runtime_checkable
class GeneratorHandle(Protocol):
    def generate(self, texts: list[str], beam: int = 5) -> list[str]: ...

    def train_step(self, sources: list[str], targets: list[str]) -> float: ...

    def snapshot(self) -> None: ...

    def restore(self) -> None: ...

    def save(self, tag: str) -> None: ...

    def load(self, tag: str) -> None: ...


def _check_batch(sources, targets):
    if not sources or len(sources) != len(targets):
        raise BatchMismatch(
            f"batch sizes {len(sources)} vs {len(targets)} (must be equal, non-empty)")


class EchoGenerator:
    """Identity generator; training is a no-op with zero loss."""

    def generate(self, texts, beam: int = 5):
        return list(texts)

    def train_step(self, sources, targets) -> float:
        _check_batch(sources, targets)
        return 0.0

    def snapshot(self) -> None:
        pass

    def restore(self) -> None:
        pass

    def save(self, tag: str) -> None:
        pass

    def load(self, tag: str) -> None:
        pass


class TableGenerator:
    """Token-substitution count model; a trainable desk-scale stand-in.

    Generation maps each source token to the most frequent target token
    aligned with it during training (position-wise over the overlapping
    prefix), falling back to copying the token. The loss is the batch mean
    negative log of add-one-smoothed substitution probabilities.
    """

    def __init__(self, checkpoint_dir: str | Path | None = None):
        self.counts: dict[str, Counter] = defaultdict(Counter)
        self._snapshot: dict[str, Counter] | None = None
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None

    def _best(self, counts, token: str) -> str:
        c = counts.get(token)
        if not c:
            return token
        best = max(c.items(), key=lambda kv: (kv[1], kv[0] == token, kv[0]))
        return best[0]

    def generate(self, texts, beam: int = 5):
        counts = self._snapshot if self._snapshot is not None else self.counts
        outputs = []
        for text in texts:
            tokens = text.split()
            outputs.append(" ".join(self._best(counts, t) for t in tokens))
        return outputs

    def train_step(self, sources, targets) -> float:
        _check_batch(sources, targets)
        vocab = set()
        for c in self.counts.values():
            vocab.update(c)
        for tgt in targets:
            vocab.update(tgt.split())
        vocab_size = max(len(vocab), 1)
        nll = 0.0
        n_tokens = 0
        for src, tgt in zip(sources, targets):
            s_toks = src.split()
            t_toks = tgt.split()
            for s, t in zip(s_toks, t_toks):
                c = self.counts[s]
                total = sum(c.values())
                p = (c[t] + 1.0) / (total + vocab_size)
                nll += -math.log(p)
                n_tokens += 1
                c[t] += 1
        return nll / max(n_tokens, 1)

    def snapshot(self) -> None:
        self._snapshot = copy.deepcopy(dict(self.counts))

    def restore(self) -> None:
        if self._snapshot is None:
            raise NoSnapshot("restore without a prior snapshot")
        self._snapshot = None

    def _ckpt_path(self, tag: str) -> Path:
        base = self.checkpoint_dir or Path(".")
        base.mkdir(parents=True, exist_ok=True)
        return base / f"table-{tag}.json"

    def save(self, tag: str) -> None:
        data = {s: dict(c) for s, c in self.counts.items()}
        self._ckpt_path(tag).write_text(json.dumps(data), encoding="utf-8")

    def load(self, tag: str) -> None:
        data = json.loads(self._ckpt_path(tag).read_text(encoding="utf-8"))
        self.counts = defaultdict(Counter)
        for s, c in data.items():
            self.counts[s] = Counter(c)


class _LineTransport:
    """One-request-one-response line transport with a read timeout."""

    def __init__(self, readline, writeline, timeout: float):
        self._writeline = writeline
        self.timeout = timeout
        self._queue: queue.Queue = queue.Queue()

        def _reader():
            try:
                while True:
                    line = readline()
                    if not line:
                        break
                    self._queue.put(line)
            except Exception:
                pass
            self._queue.put(None)

        self._thread = threading.Thread(target=_reader, daemon=True)
        self._thread.start()

    def request(self, message: dict) -> dict:
        self._writeline(json.dumps(message) + "\n")
        try:
            line = self._queue.get(timeout=self.timeout)
        except queue.Empty:
            raise Timeout(f"no response within {self.timeout}s") from None
        if line is None:
            raise ProtocolError("peer closed the connection")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"bad response line: {line!r}") from e
        if not response.get("ok", False):
            raise ProtocolError(response.get("error", "remote error"))
        return response


class RemoteGenerator:
    """Client for a sidecar process speaking the wire protocol."""

    def __init__(self, command: list[str] | None = None,
                 address: tuple[str, int] | None = None,
                 timeout: float = DEFAULT_TIMEOUT):
        if (command is None) == (address is None):
            raise GeneratorError("specify exactly one of command or address")
        self.command = command
        self.address = address
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._sock: socket.socket | None = None
        self._transport: _LineTransport | None = None
        self._connect()
        self._handshake()

    def _connect(self):
        if self.command is not None:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, bufsize=1)
            proc = self._proc

            def writeline(s):
                proc.stdin.write(s)
                proc.stdin.flush()

            self._transport = _LineTransport(
                proc.stdout.readline, writeline, self.timeout)
        else:
            self._sock = socket.create_connection(self.address,
                                                  timeout=self.timeout)
            f = self._sock.makefile("rw", encoding="utf-8", newline="\n")

            def writeline(s):
                f.write(s)
                f.flush()

            self._transport = _LineTransport(f.readline, writeline,
                                             self.timeout)

    def _handshake(self):
        response = self._transport.request(
            {"op": "hello", "version": PROTOCOL_VERSION})
        version = response.get("version")
        if version != PROTOCOL_VERSION:
            raise ProtocolError(f"protocol version mismatch: {version}")

    def generate(self, texts, beam: int = 5):
        response = self._transport.request(
            {"op": "generate", "texts": list(texts), "beam": beam})
        outputs = response.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != len(texts):
            raise ProtocolError("generate response cardinality mismatch")
        return outputs

    def train_step(self, sources, targets) -> float:
        _check_batch(sources, targets)
        response = self._transport.request(
            {"op": "train", "src": list(sources), "tgt": list(targets)})
        loss = response.get("loss")
        if not isinstance(loss, (int, float)) or not math.isfinite(loss):
            raise ProtocolError(f"bad loss in response: {loss!r}")
        return float(loss)

    def snapshot(self) -> None:
        # pseudo-targets for a whole batch are generated before the joint
        # train step, which approximates a fixed parameter copy remotely
        pass

    def restore(self) -> None:
        pass

    def save(self, tag: str) -> None:
        self._transport.request({"op": "save", "tag": tag})

    def load(self, tag: str) -> None:
        self._transport.request({"op": "load", "tag": tag})

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except Exception:
                pass
            self._proc.terminate()
            self._proc.wait(timeout=5)
            self._proc = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_generator(spec: str, checkpoint_dir=None) -> GeneratorHandle:
    """Build a generator from a CLI spec: mock | table | remote:<command>."""
    if spec == "mock":
        return EchoGenerator()
    if spec == "table":
        return TableGenerator(checkpoint_dir=checkpoint_dir)
    if spec.startswith("remote:"):
        import shlex
        return RemoteGenerator(command=shlex.split(spec[len("remote:"):]))
    if spec.startswith("tcp:"):
        host, port = spec[len("tcp:"):].rsplit(":", 1)
        return RemoteGenerator(address=(host, int(port)))
    raise GeneratorError(f"unknown generator spec {spec!r}")
