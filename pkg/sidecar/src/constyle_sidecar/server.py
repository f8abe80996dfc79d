"""Line-delimited JSON protocol loop over stdin/stdout.

Requests are handled strictly sequentially; every request gets exactly
one response line. Malformed or failing requests produce a structured
``{"ok": false, "error": ...}`` response instead of killing the process;
only an unrecoverable model-load failure exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import DEFAULT_MODEL, SidecarConfig
from .model import SidecarModel

PROTOCOL_VERSION = 1


def handle(model: SidecarModel, request: dict) -> dict:
    op = request.get("op")
    if op == "hello":
        return {"ok": True, "version": PROTOCOL_VERSION}
    if op == "generate":
        texts = request.get("texts")
        if not isinstance(texts, list):
            return {"ok": False, "error": "generate requires a texts list"}
        outputs = model.generate(texts, beam=int(request.get("beam", 5)),
                                 sample=bool(request.get("sample", False)))
        return {"ok": True, "outputs": outputs}
    if op == "train":
        src = request.get("src")
        tgt = request.get("tgt")
        if (not isinstance(src, list) or not isinstance(tgt, list)
                or not src or len(src) != len(tgt)):
            return {"ok": False,
                    "error": "train requires equal-length non-empty src/tgt"}
        return {"ok": True, "loss": model.train_step(src, tgt)}
    if op == "save":
        model.save(str(request.get("tag", "latest")))
        return {"ok": True}
    if op == "load":
        try:
            model.load(str(request.get("tag", "latest")))
        except FileNotFoundError as e:
            return {"ok": False, "error": f"no such checkpoint: {e.filename}"}
        return {"ok": True}
    return {"ok": False, "error": f"unknown op {op!r}"}


def serve(cfg: SidecarConfig, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    try:
        model = SidecarModel(cfg)
    except Exception as e:
        print(f"fatal: cannot load model {cfg.model!r}: {e}", file=sys.stderr)
        return 1

    def reply(obj: dict) -> None:
        stdout.write(json.dumps(obj) + "\n")
        stdout.flush()

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            reply({"ok": False, "error": "request is not valid JSON"})
            continue
        try:
            reply(handle(model, request))
        except Exception as e:
            reply({"ok": False, "error": f"{type(e).__name__}: {e}"})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="constyle-sidecar",
        description="Generation server speaking the line-JSON protocol.")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="pretrained checkpoint name, or 'tiny' for an "
                             "offline randomly initialized model")
    parser.add_argument("--lr", type=float, default=2e-5)
    parser.add_argument("--max-length", type=int, default=50)
    parser.add_argument("--device", default=None)
    parser.add_argument("--checkpoint-dir", default=None)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    kwargs = dict(model=args.model, lr=args.lr, max_length=args.max_length,
                  seed=args.seed)
    if args.device is not None:
        kwargs["device"] = args.device
    if args.checkpoint_dir is not None:
        kwargs["checkpoint_dir"] = args.checkpoint_dir
    return serve(SidecarConfig(**kwargs))


if __name__ == "__main__":
    sys.exit(main())
