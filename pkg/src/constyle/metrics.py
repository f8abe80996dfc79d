"""BLEU scoring (corpus and sentence level) and the combined report.

Corpus BLEU is the standard unsmoothed BLEU-4 with closest-reference-length
brevity penalty. Sentence BLEU adds an epsilon count to zero precisions so
per-pair filter scores stay continuous on short sentences.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field


class LengthMismatch(Exception):
    pass


class EmptyReferenceSet(Exception):
    pass


class EmptyInput(Exception):
    pass


@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4
    weights: tuple[float, ...] = (0.25, 0.25, 0.25, 0.25)
    smoothing_epsilon: float = 0.0  # added to zero numerators when > 0

    def __post_init__(self):
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


CORPUS_CONFIG = BleuConfig()
SENTENCE_CONFIG = BleuConfig(smoothing_epsilon=0.1)


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _clipped_counts(hyp, refs, n: int) -> tuple[int, int]:
    hyp_ngrams = _ngrams(hyp, n)
    if not hyp_ngrams:
        return 0, 0
    max_ref: Counter = Counter()
    for ref in refs:
        for gram, c in _ngrams(ref, n).items():
            if c > max_ref[gram]:
                max_ref[gram] = c
    clipped = sum(min(c, max_ref[g]) for g, c in hyp_ngrams.items())
    return clipped, sum(hyp_ngrams.values())


def _closest_ref_length(hyp_len: int, refs) -> int:
    # ties broken toward the shorter reference
    return min((abs(len(r) - hyp_len), len(r)) for r in refs)[1]


def _bleu_from_stats(numerators, denominators, hyp_len, ref_len,
                     cfg: BleuConfig) -> float:
    log_score = 0.0
    for w, num, den in zip(cfg.weights, numerators, denominators):
        if den == 0:
            num, den = cfg.smoothing_epsilon, 1
        elif num == 0:
            num = cfg.smoothing_epsilon
        if num == 0:
            return 0.0
        log_score += w * math.log(num / den)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / max(hyp_len, 1))
    return 100.0 * bp * math.exp(log_score)


def corpus_bleu(hypotheses, references, cfg: BleuConfig = CORPUS_CONFIG) -> float:
    """Corpus BLEU on the 0-100 scale.

    `hypotheses` is a list of token lists; `references` is a list of
    reference sets, each a non-empty list of token lists.
    """
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} reference sets")
    numerators = [0] * cfg.max_order
    denominators = [0] * cfg.max_order
    hyp_len = 0
    ref_len = 0
    for hyp, refs in zip(hypotheses, references):
        refs = list(refs)
        if not refs:
            raise EmptyReferenceSet("empty reference set")
        hyp = list(hyp)
        hyp_len += len(hyp)
        ref_len += _closest_ref_length(len(hyp), refs)
        for n in range(1, cfg.max_order + 1):
            num, den = _clipped_counts(hyp, refs, n)
            numerators[n - 1] += num
            denominators[n - 1] += den
    return _bleu_from_stats(numerators, denominators, hyp_len, ref_len, cfg)


def sentence_bleu(hypothesis, reference,
                  cfg: BleuConfig = SENTENCE_CONFIG) -> float:
    """Single-pair BLEU on the 0-100 scale, smoothed by default."""
    hyp = list(hypothesis)
    ref = list(reference)
    if not hyp or not ref:
        raise EmptyInput("sentence BLEU needs non-empty inputs")
    numerators = []
    denominators = []
    for n in range(1, cfg.max_order + 1):
        num, den = _clipped_counts(hyp, [ref], n)
        numerators.append(num)
        denominators.append(den)
    return _bleu_from_stats(numerators, denominators, len(hyp), len(ref), cfg)


def harmonic_mean(bleu: float, acc_percent: float) -> float:
    """Overall score 2ab/(a+b); zero if either input is zero."""
    if bleu < 0 or acc_percent < 0:
        raise ValueError("inputs must be non-negative")
    if bleu == 0 or acc_percent == 0:
        return 0.0
    return 2.0 * bleu * acc_percent / (bleu + acc_percent)


@dataclass
class EvalReport:
    bleu: float
    accuracy: float  # percentage in [0, 100]
    hm: float = field(init=False)

    def __post_init__(self):
        self.hm = harmonic_mean(self.bleu, self.accuracy)

    def as_record(self) -> dict:
        return {"bleu": round(self.bleu, 4), "acc": round(self.accuracy, 4),
                "hm": round(self.hm, 4)}

    def table(self) -> str:
        return (f"{'BLEU':>8} {'Acc(%)':>8} {'HM':>8}\n"
                f"{self.bleu:8.2f} {self.accuracy:8.2f} {self.hm:8.2f}")
