"""Command-line surface wiring corpora, scorers, filters, and training runs.

Every subcommand writes a run manifest into its output directory before
doing any work, so a run can be replayed from the manifest alone.
Configuration precedence: flags > config file > defaults; the defaults are
the reference hyper-parameter setting.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import __version__, ngram_lm, perturb
from .corpus import (Sentence, load_eval, load_parallel, load_unlabeled,
                     write_sentences)
from .filters import AuditLine, FilterConfig, FilterKind, replay_decision
from .generator import make_generator
from .metrics import EvalReport, corpus_bleu
from .style_classifier import StyleClassifier, style_accuracy, train_classifier
from .trainer import TrainConfig, TrainData, Trainer, collect_unlabeled

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _write_manifest(out_dir: Path, subcommand: str, args: argparse.Namespace):
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "subcommand": subcommand,
        "tool_version": __version__,
        "args": {k: (str(v) if isinstance(v, Path) else v)
                 for k, v in vars(args).items()
                 if k != "func" and not k.startswith("_")},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def _load_config_file(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    values = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _load_lexicons(args) -> perturb.Lexicons:
    lex = perturb.Lexicons()
    if getattr(args, "spelling", None):
        lex.spelling = perturb.load_spelling(args.spelling)
    if getattr(args, "abbrev", None):
        lex.abbrev = perturb.load_abbrev(args.abbrev)
    if getattr(args, "synonyms", None):
        lex.synonym = perturb.load_synonyms(args.synonyms)
    return lex


def cmd_train_classifier(args) -> int:
    out = Path(args.out)
    _write_manifest(out.parent if out.suffix else out, "train-classifier", args)
    pairs = load_parallel(args.informal, args.formal)
    informal = [ex.source for ex in pairs]
    formal = [ex.target for ex in pairs]
    clf = train_classifier(informal, formal, epochs=args.epochs, lr=args.lr,
                           seed=args.seed, dim=args.dim)
    clf.save(out if out.suffix else out / "style.clf")
    print(f"trained classifier on {len(informal)}+{len(formal)} sentences")
    return EXIT_OK


def cmd_train_lm(args) -> int:
    out = Path(args.out)
    _write_manifest(out.parent if out.suffix else out, "train-lm", args)
    pool = load_unlabeled(args.corpus)
    model = ngram_lm.train_lm(list(pool.sentences), order=args.order,
                              discount=args.discount)
    model.save(out if out.suffix else out / "lm.txt")
    print(f"trained {args.order}-gram model on {len(pool)} sentences")
    return EXIT_OK


def cmd_collect_unlabeled(args) -> int:
    out = Path(args.out)
    _write_manifest(out.parent, "collect-unlabeled", args)
    pool = load_unlabeled(args.input)
    clf = StyleClassifier.load(args.classifier)
    lm = ngram_lm.KneserNeyModel.load(args.lm)
    kept = collect_unlabeled(list(pool.sentences), clf, lm, args.n)
    write_sentences(out, kept.sentences)
    print(f"kept {len(kept)} of {len(pool)} sentences")
    return EXIT_OK


def cmd_perturb(args) -> int:
    out = Path(args.out)
    _write_manifest(out.parent, "perturb", args)
    pool = load_unlabeled(args.input)
    lexicons = _load_lexicons(args)
    method = perturb.PerturbMethod(args.method)
    if method is perturb.PerturbMethod.TFIDF and lexicons.tfidf is None:
        lexicons.tfidf = perturb.build_tfidf(pool)
    cfg = perturb.PerturbConfig(method=method, ratio=args.ratio,
                                seed=args.seed, mask_token=args.mask_token,
                                lexicons=lexicons)
    rng = random.Random(args.seed)
    perturbed = [perturb.apply(s, cfg, rng) for s in pool.sentences]
    write_sentences(out, perturbed)
    print(f"perturbed {len(perturbed)} sentences with {args.method}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out_dir = Path(args.run_dir) if args.run_dir else Path(".")
    if args.run_dir:
        _write_manifest(out_dir, "evaluate", args)
    hyp_pool = load_unlabeled(args.hyp, max_tokens=10 ** 9)
    hyp_tokens = [list(s.tokens) for s in hyp_pool.sentences]
    ref_pools = [load_unlabeled(p, max_tokens=10 ** 9) for p in args.refs]
    refs = [[list(pool.sentences[i].tokens) for pool in ref_pools]
            for i in range(len(hyp_tokens))]
    bleu = corpus_bleu(hyp_tokens, refs)
    acc = 0.0
    if args.classifier:
        clf = StyleClassifier.load(args.classifier)
        acc = 100.0 * style_accuracy(clf, hyp_pool.sentences)
    report = EvalReport(bleu=bleu, accuracy=acc)
    print(json.dumps(report.as_record()))
    print(report.table())
    return EXIT_OK


def cmd_filter_replay(args) -> int:
    mismatches = 0
    total = 0
    with open(args.audit, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record["kind"] == "none":
                continue
            audit = AuditLine(record["kind"], record["score"],
                              record["threshold"], record["keep"])
            total += 1
            if replay_decision(audit) != audit.keep:
                mismatches += 1
    print(f"replayed {total} decisions, {mismatches} mismatches")
    return EXIT_OK if mismatches == 0 else EXIT_RUNTIME


def cmd_train(args) -> int:
    run_dir = Path(args.run_dir)
    _write_manifest(run_dir, "train", args)
    parallel = load_parallel(args.src, args.tgt)
    unlabeled = load_unlabeled(args.unlabeled, max_tokens=args.max_src_tokens)
    val_src = load_unlabeled(args.val_src, max_tokens=10 ** 9)
    ref_pools = [load_unlabeled(p, max_tokens=10 ** 9) for p in args.val_refs]
    val_refs = [[pool.sentences[i] for pool in ref_pools]
                for i in range(len(val_src.sentences))]

    perturb_cfg = None
    if args.perturb_method != "none":
        lexicons = _load_lexicons(args)
        method = perturb.PerturbMethod(args.perturb_method)
        if method is perturb.PerturbMethod.TFIDF and lexicons.tfidf is None:
            lexicons.tfidf = perturb.build_tfidf(unlabeled)
        perturb_cfg = perturb.PerturbConfig(
            method=method, ratio=args.ratio, seed=args.seed,
            lexicons=lexicons)

    filter_cfg = None
    clf = None
    lm = None
    if args.filter != "none":
        filter_cfg = FilterConfig(kind=FilterKind(args.filter),
                                  sigma=args.sigma, phi=args.phi)
        if filter_cfg.kind is FilterKind.STYLE:
            if not args.classifier:
                raise ValueError("--filter style requires --classifier")
            clf = StyleClassifier.load(args.classifier)
        if filter_cfg.kind is FilterKind.PERPLEXITY:
            if not args.lm:
                raise ValueError("--filter perplexity requires --lm")
            lm = ngram_lm.KneserNeyModel.load(args.lm)
    if clf is None and args.classifier:
        clf = StyleClassifier.load(args.classifier)

    cfg = TrainConfig(
        lam=args.lam, sup_batch=args.sup_batch, unsup_batch=args.unsup_batch,
        warmup_steps=args.warmup_steps, validate_every=args.validate_every,
        patience=args.patience, beam=args.beam,
        max_src_tokens=args.max_src_tokens, perturb=perturb_cfg,
        filter=filter_cfg, seed=args.seed, max_steps=args.max_steps)
    gen = make_generator(args.generator,
                         checkpoint_dir=run_dir / "checkpoints")
    data = TrainData(parallel=parallel,
                     unlabeled=unlabeled,
                     val_sources=list(val_src.sentences),
                     val_references=val_refs)
    trainer = Trainer(gen, data, cfg, run_dir, clf=clf, fluency_lm=lm)
    state = trainer.run()
    print(json.dumps({"best_tag": state.best_tag,
                      "best_bleu": round(state.best_bleu, 4),
                      "validations": len(state.history)}))
    return EXIT_OK


def _add_lexicon_flags(p):
    p.add_argument("--spelling", help="spelling-error TSV")
    p.add_argument("--abbrev", help="abbreviation TSV")
    p.add_argument("--synonyms", help="synonym TSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="constyle",
        description="Semi-supervised consistency training for formality "
                    "style transfer.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-classifier", help="train the formality scorer")
    p.add_argument("--informal", required=True)
    p.add_argument("--formal", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=1 << 20)
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("train-lm", help="train the Kneser-Ney language model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--discount", type=float, default=0.75)
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("collect-unlabeled",
                       help="filter raw sentences into an unlabeled pool")
    p.add_argument("--input", required=True)
    p.add_argument("--classifier", required=True)
    p.add_argument("--lm", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_collect_unlabeled)

    p = sub.add_parser("perturb", help="perturb a corpus file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", required=True,
                   choices=[m.value for m in perturb.PerturbMethod
                            if m is not perturb.PerturbMethod.EXTERNAL])
    p.add_argument("--ratio", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-token", default="_")
    _add_lexicon_flags(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("evaluate", help="BLEU / accuracy / HM report")
    p.add_argument("--hyp", required=True)
    p.add_argument("--refs", nargs="+", required=True)
    p.add_argument("--classifier")
    p.add_argument("--run-dir")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("filter-replay",
                       help="recompute decisions from an audit log")
    p.add_argument("--audit", required=True)
    p.set_defaults(func=cmd_filter_replay)

    p = sub.add_parser("train", help="full semi-supervised training run")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--val-src", required=True)
    p.add_argument("--val-refs", nargs="+", required=True)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--generator", default="table",
                   help="mock | table | remote:<cmd> | tcp:<host>:<port>")
    p.add_argument("--perturb-method", default="spell",
                   choices=["none"] + [m.value for m in perturb.PerturbMethod])
    p.add_argument("--ratio", type=float, default=0.1)
    p.add_argument("--filter", default="none",
                   choices=["none", "style", "bleu", "perplexity"])
    p.add_argument("--sigma", type=float, default=0.8)
    p.add_argument("--phi", type=float, default=0.4)
    p.add_argument("--classifier")
    p.add_argument("--lm")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--sup-batch", type=int, default=8)
    p.add_argument("--unsup-batch", type=int, default=56)
    p.add_argument("--warmup-steps", type=int, default=2000)
    p.add_argument("--validate-every", type=int, default=1000)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--beam", type=int, default=5)
    p.add_argument("--max-src-tokens", type=int, default=50)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    _add_lexicon_flags(p)
    p.set_defaults(func=cmd_train, _subparser=p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    if getattr(args, "config", None):
        defaults = _load_config_file(args.config)
        subparser = getattr(args, "_subparser", parser)
        # config values fill in only flags left at their parser defaults
        for key, value in defaults.items():
            if hasattr(args, key):
                current = getattr(args, key)
                default = subparser.get_default(key)
                if current == default:
                    if default is not None:
                        value = type(default)(value)
                    elif value.lstrip("-").isdigit():
                        value = int(value)
                    setattr(args, key, value)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: missing file: {e.filename or e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
