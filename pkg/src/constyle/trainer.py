"""Training orchestration: supervised warm-up, then joint consistency training.

Each SSL step samples a supervised batch and an unsupervised batch,
perturbs the unlabeled sentences, pseudo-labels the *unperturbed* ones
under the snapshot contract, filters the (perturbed, pseudo-target) pairs,
and takes one train step on each batch. Also houses the unlabeled-corpus
collection procedure.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import ngram_lm
from .corpus import ParallelExample, Sentence, UnlabeledPool
from .filters import (DynamicFilter, FilterConfig, FilterDecision, FilterKind,
                      style_keep)
from .generator import GeneratorHandle
from .metrics import EvalReport, corpus_bleu, sentence_bleu
from .perturb import PerturbConfig
from .perturb import apply as perturb_apply
from .style_classifier import StyleClassifier, style_accuracy

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lam: float = 1.0
    sup_batch: int = 8
    unsup_batch: int = 56
    warmup_steps: int = 2000
    validate_every: int = 1000
    patience: int = 10
    beam: int = 5
    max_src_tokens: int = 50
    perturb: PerturbConfig | None = None
    filter: FilterConfig | None = None
    seed: int = 0
    max_steps: int | None = None  # optional hard cap on SSL steps

    def __post_init__(self):
        for name in ("sup_batch", "unsup_batch", "validate_every", "patience",
                     "beam", "max_src_tokens"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")


@dataclass
class TrainState:
    step: int = 0
    best_bleu: float = float("-inf")
    best_tag: str | None = None
    since_improvement: int = 0
    history: list[dict] = field(default_factory=list)


@dataclass
class PseudoPair:
    perturbed_source: Sentence
    pseudo_target: Sentence
    original: Sentence
    decision: FilterDecision


@dataclass
class TrainData:
    parallel: list[ParallelExample]
    unlabeled: UnlabeledPool
    val_sources: list[Sentence]
    val_references: list[list[Sentence]]


class _CycleSampler:
    """Shuffled epochs over a list, yielding fixed-size batches."""

    def __init__(self, items, batch_size: int, rng: random.Random):
        if not items:
            raise ValueError("cannot sample from an empty list")
        self.items = list(items)
        self.batch_size = batch_size
        self.rng = rng
        self._order: list = []
        self._pos = 0

    def next_batch(self) -> tuple[list, bool]:
        """Return (batch, epoch_ended)."""
        batch = []
        ended = False
        while len(batch) < self.batch_size:
            if self._pos >= len(self._order):
                self._order = list(range(len(self.items)))
                self.rng.shuffle(self._order)
                self._pos = 0
                if batch:
                    ended = True
                    break
            batch.append(self.items[self._order[self._pos]])
            self._pos += 1
        if self._pos >= len(self._order):
            ended = True
        return batch, ended

    def steps_per_epoch(self) -> int:
        return math.ceil(len(self.items) / self.batch_size)


def warmup(gen: GeneratorHandle, parallel, cfg: TrainConfig,
           rng: random.Random | None = None) -> TrainState:
    """Supervised-only pretraining for exactly cfg.warmup_steps batches."""
    rng = rng or random.Random(cfg.seed)
    state = TrainState()
    if cfg.warmup_steps == 0:
        return state
    sampler = _CycleSampler(parallel, cfg.sup_batch, rng)
    for _ in range(cfg.warmup_steps):
        batch, _ = sampler.next_batch()
        loss = gen.train_step([ex.source.raw for ex in batch],
                              [ex.target.raw for ex in batch])
        state.step += 1
        state.history.append({"step": state.step, "loss_sup": loss})
    return state


class Trainer:
    def __init__(self, gen: GeneratorHandle, data: TrainData, cfg: TrainConfig,
                 run_dir: str | Path, clf: StyleClassifier | None = None,
                 fluency_lm: ngram_lm.KneserNeyModel | None = None):
        self.gen = gen
        self.data = data
        self.cfg = cfg
        self.clf = clf
        self.fluency_lm = fluency_lm
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        (self.run_dir / "checkpoints").mkdir(exist_ok=True)
        self.rng = random.Random(cfg.seed)
        self.state = TrainState()
        self._audit_path = self.run_dir / "filter_audit.log"
        self._metrics_path = self.run_dir / "metrics.log"
        self._audit_file = None

        self.dyn_filter: DynamicFilter | None = None
        if cfg.filter is not None and cfg.filter.kind is not FilterKind.STYLE:
            fcfg = cfg.filter
            if fcfg.warmup_unfiltered_steps == 0:
                # default warm-up span: first 10% of the first unlabeled epoch
                epoch_steps = math.ceil(len(data.unlabeled) / cfg.unsup_batch)
                fcfg = FilterConfig(
                    kind=fcfg.kind, sigma=fcfg.sigma, phi=fcfg.phi,
                    warmup_unfiltered_steps=max(1, epoch_steps // 10),
                    freeze_after_one_epoch=fcfg.freeze_after_one_epoch)
            self.dyn_filter = DynamicFilter(fcfg, seed=cfg.seed)
        self._validate_filter_requirements()
        self._write_config()

    def _validate_filter_requirements(self):
        f = self.cfg.filter
        if f is None:
            return
        if f.kind is FilterKind.STYLE and self.clf is None:
            raise ValueError("style filter requires a trained classifier")
        if f.kind is FilterKind.PERPLEXITY and self.fluency_lm is None:
            raise ValueError("perplexity filter requires a trained language model")

    def _write_config(self):
        lines = []
        for key, value in vars(self.cfg).items():
            if key in ("perturb", "filter"):
                value = None if value is None else vars(value)
            lines.append(f"{key} = {value}")
        (self.run_dir / "config.txt").write_text("\n".join(lines) + "\n",
                                                 encoding="utf-8")

    def _audit(self, kind: str, decision: FilterDecision):
        if self._audit_file is None:
            self._audit_file = open(self._audit_path, "a", encoding="utf-8")
        self._audit_file.write(json.dumps({
            "kind": kind, "score": decision.score,
            "threshold": decision.threshold_used, "keep": decision.keep,
        }) + "\n")

    def _score_and_filter(self, originals, perturbed,
                          pseudo_targets) -> list[PseudoPair]:
        f = self.cfg.filter
        pairs = []
        if f is None:
            for u, pu, y in zip(originals, perturbed, pseudo_targets):
                d = FilterDecision(keep=True, score=0.0)
                self._audit("none", d)
                pairs.append(PseudoPair(pu, y, u, d))
            return pairs
        if f.kind is FilterKind.STYLE:
            for u, pu, y in zip(originals, perturbed, pseudo_targets):
                d = style_keep(self.clf.predict_formal_prob(u),
                               self.clf.predict_formal_prob(y), f.sigma)
                d.threshold_used = f.sigma
                self._audit("style", d)
                pairs.append(PseudoPair(pu, y, u, d))
            return pairs
        if f.kind is FilterKind.BLEU:
            # source-BLEU: the unlabeled source is the reference
            scores = [sentence_bleu(y.tokens, u.tokens)
                      for u, y in zip(originals, pseudo_targets)]
        else:
            scores = [ngram_lm.perplexity(self.fluency_lm, y.tokens)
                      for y in pseudo_targets]
        decisions = self.dyn_filter.decide_batch(scores)
        for u, pu, y, d in zip(originals, perturbed, pseudo_targets,
                               decisions):
            self._audit(f.kind.value, d)
            pairs.append(PseudoPair(pu, y, u, d))
        return pairs

    def ssl_step(self, sup_batch, unsup_batch) -> tuple[float, float, int]:
        """One joint step; returns (loss_sup, loss_unsup, kept_count)."""
        cfg = self.cfg
        originals = list(unsup_batch)
        if cfg.perturb is not None:
            perturbed = [perturb_apply(u, cfg.perturb, self.rng)
                         for u in originals]
        else:
            perturbed = list(originals)

        self.gen.snapshot()
        raw_targets = self.gen.generate([u.raw for u in originals],
                                        beam=cfg.beam)
        pseudo_targets = [Sentence(t) for t in raw_targets]

        pairs = self._score_and_filter(originals, perturbed, pseudo_targets)
        kept = [p for p in pairs if p.decision.keep
                and not p.pseudo_target.is_empty()
                and not p.perturbed_source.is_empty()]

        loss_unsup = 0.0
        if kept:
            loss_unsup = self.gen.train_step(
                [p.perturbed_source.raw for p in kept],
                [p.pseudo_target.raw for p in kept])
        loss_sup = self.gen.train_step(
            [ex.source.raw for ex in sup_batch],
            [ex.target.raw for ex in sup_batch])
        self.gen.restore()
        return loss_sup, loss_unsup, len(kept)

    def validate(self) -> EvalReport:
        hyps = self.gen.generate([s.raw for s in self.data.val_sources],
                                 beam=self.cfg.beam)
        hyp_tokens = [h.split() for h in hyps]
        refs = [[r.tokens for r in refset]
                for refset in self.data.val_references]
        bleu = corpus_bleu(hyp_tokens, refs)
        acc = 0.0
        if self.clf is not None:
            acc = 100.0 * style_accuracy(
                self.clf, [Sentence(h) for h in hyps])
        return EvalReport(bleu=bleu, accuracy=acc)

    def run(self) -> TrainState:
        cfg = self.cfg
        warmup(self.gen, self.data.parallel, cfg, self.rng)
        sup_sampler = _CycleSampler(self.data.parallel, cfg.sup_batch,
                                    self.rng)
        unsup_sampler = _CycleSampler(list(self.data.unlabeled.sentences),
                                      cfg.unsup_batch, self.rng)
        state = self.state
        ssl_steps = 0
        with open(self._metrics_path, "w", encoding="utf-8") as metrics_file:
            while cfg.max_steps is None or ssl_steps < cfg.max_steps:
                sup_batch, _ = sup_sampler.next_batch()
                unsup_batch, epoch_ended = unsup_sampler.next_batch()
                loss_sup, loss_unsup, kept = self.ssl_step(sup_batch,
                                                           unsup_batch)
                total = loss_sup + cfg.lam * loss_unsup
                ssl_steps += 1
                state.step += 1
                if epoch_ended and self.dyn_filter is not None:
                    self.dyn_filter.end_of_epoch()
                if ssl_steps % cfg.validate_every == 0:
                    report = self.validate()
                    improved = report.bleu > state.best_bleu
                    if improved:
                        state.best_bleu = report.bleu
                        state.since_improvement = 0
                        state.best_tag = f"step-{ssl_steps}"
                        self.gen.save(state.best_tag)
                    else:
                        state.since_improvement += 1
                    entry = {"step": ssl_steps, "bleu": round(report.bleu, 4),
                             "acc": round(report.accuracy, 4),
                             "hm": round(report.hm, 4),
                             "loss_sup": loss_sup, "loss_unsup": loss_unsup,
                             "total": total, "kept": kept,
                             "best": improved}
                    state.history.append(entry)
                    metrics_file.write(json.dumps(entry) + "\n")
                    metrics_file.flush()
                    if state.since_improvement >= cfg.patience:
                        break
        if self._audit_file is not None:
            self._audit_file.close()
            self._audit_file = None
        return state


def collect_unlabeled(raw_sentences, clf: StyleClassifier,
                      informal_lm: ngram_lm.KneserNeyModel,
                      n: int, domain_tag: str = "") -> UnlabeledPool:
    """Drop formal-looking sentences, keep the n most fluent informal ones."""
    survivors = [s for s in raw_sentences
                 if clf.predict_formal_prob(s) <= 0.5]
    scored = [(ngram_lm.perplexity(informal_lm, s.tokens), i, s)
              for i, s in enumerate(survivors)]
    scored.sort(key=lambda t: (t[0], t[1]))
    if len(scored) < n:
        logger.warning("only %d sentences survive filtering, requested %d",
                       len(scored), n)
    kept = [s for _, _, s in scored[:n]]
    return UnlabeledPool(tuple(kept), domain_tag)
