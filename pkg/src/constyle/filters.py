"""Pseudo-pair filters: style-gap gate plus dynamic-threshold filters.

The dynamic threshold is the value at rank floor(phi * len(L)) of an
ordered score list, implemented as an indexable skiplist so each insert
is O(log n). The BLEU list is kept decreasing with keep-above; the
perplexity list increasing with keep-below, so phi approximates the kept
fraction for both kinds.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum


class FilterError(Exception):
    pass


class NonFiniteScore(FilterError):
    pass


class EmptyList(FilterError):
    pass


class FilterKind(Enum):
    STYLE = "style"
    BLEU = "bleu"
    PERPLEXITY = "perplexity"


class LifecycleMode(Enum):
    PASS_THROUGH = "pass_through"
    UPDATE_AND_FILTER = "update_and_filter"
    FROZEN_FILTER = "frozen_filter"


DEFAULT_SIGMA = 0.8
DEFAULT_PHI = 0.4


@dataclass
class FilterConfig:
    kind: FilterKind
    sigma: float = DEFAULT_SIGMA
    phi: float = DEFAULT_PHI
    warmup_unfiltered_steps: int = 0
    freeze_after_one_epoch: bool = True

    def __post_init__(self):
        if not 0.0 <= self.phi <= 1.0:
            raise FilterError(f"phi {self.phi} not in [0, 1]")
        if not 0.0 <= self.sigma <= 1.0:
            raise FilterError(f"sigma {self.sigma} not in [0, 1]")


@dataclass
class FilterDecision:
    keep: bool
    score: float
    threshold_used: float | None = None


class _Node:
    __slots__ = ("key", "next", "width")

    def __init__(self, key, levels):
        self.key = key
        self.next = [None] * levels
        self.width = [1] * levels


class ScoreList:
    """Ordered multiset of scores with O(log n) insert and rank query.

    Iteration and rank indexing follow the configured direction:
    decreasing for BLEU scores, increasing for perplexities.
    """

    MAX_LEVELS = 32

    def __init__(self, decreasing: bool = True, seed: int = 0):
        self.decreasing = decreasing
        self._rng = random.Random(seed)
        self._head = _Node(None, self.MAX_LEVELS)
        self._levels = 1
        self.size = 0
        self.comparisons = 0

    def _key(self, score: float) -> float:
        return -score if self.decreasing else score

    def insert(self, score: float) -> None:
        if not math.isfinite(score):
            raise NonFiniteScore(f"cannot insert {score}")
        key = self._key(score)
        update = [self._head] * self.MAX_LEVELS
        rank = [0] * self.MAX_LEVELS
        node = self._head
        for level in range(self._levels - 1, -1, -1):
            while node.next[level] is not None and node.next[level].key <= key:
                self.comparisons += 1
                rank[level] += node.width[level]
                node = node.next[level]
            if node.next[level] is not None:
                self.comparisons += 1
            update[level] = node
            if level > 0:
                rank[level - 1] = rank[level]
        levels = 1
        while levels < self.MAX_LEVELS and self._rng.random() < 0.5:
            levels += 1
        if levels > self._levels:
            for level in range(self._levels, levels):
                rank[level] = 0
                update[level] = self._head
                self._head.width[level] = self.size + 1
            self._levels = levels
        new = _Node(key, levels)
        for level in range(levels):
            prev = update[level]
            new.next[level] = prev.next[level]
            prev.next[level] = new
            new.width[level] = prev.width[level] - (rank[0] - rank[level])
            prev.width[level] = rank[0] - rank[level] + 1
        for level in range(levels, self._levels):
            update[level].width[level] += 1
        self.size += 1

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, index: int) -> float:
        """Score at 0-based rank `index` in the configured order."""
        if not 0 <= index < self.size:
            raise IndexError(index)
        node = self._head
        remaining = index + 1
        for level in range(self._levels - 1, -1, -1):
            while (node.next[level] is not None
                   and node.width[level] <= remaining):
                remaining -= node.width[level]
                node = node.next[level]
        key = node.key
        return -key if self.decreasing else key

    def __iter__(self):
        node = self._head.next[0]
        while node is not None:
            yield -node.key if self.decreasing else node.key
            node = node.next[0]


def insert_batch(score_list: ScoreList, scores) -> ScoreList:
    for s in scores:
        score_list.insert(s)
    return score_list


def current_threshold(score_list: ScoreList, phi: float) -> float:
    """Element at 0-based index floor(phi * len), clamped to the last rank."""
    if len(score_list) == 0:
        raise EmptyList("threshold of an empty score list")
    index = min(int(phi * len(score_list)), len(score_list) - 1)
    return score_list[index]


def threshold_keep(kind: FilterKind, score: float, threshold: float) -> bool:
    if kind is FilterKind.BLEU:
        return score > threshold
    if kind is FilterKind.PERPLEXITY:
        return score < threshold
    raise FilterError(f"{kind} does not use a threshold")


def style_keep(u_prob: float, y_hat_prob: float,
               sigma: float = DEFAULT_SIGMA) -> FilterDecision:
    """Keep when the formal probability rises by more than sigma."""
    gap = y_hat_prob - u_prob
    return FilterDecision(keep=gap > sigma, score=gap)


def lifecycle(step_index: int, first_epoch_done: bool,
              cfg: FilterConfig) -> LifecycleMode:
    if step_index < cfg.warmup_unfiltered_steps:
        return LifecycleMode.PASS_THROUGH
    if first_epoch_done and cfg.freeze_after_one_epoch:
        return LifecycleMode.FROZEN_FILTER
    return LifecycleMode.UPDATE_AND_FILTER


class DynamicFilter:
    """Stateful BLEU/perplexity filter driving the score list lifecycle.

    During warm-up every pair passes but scores are still inserted, so the
    first real threshold is informed. After one unlabeled epoch the
    threshold freezes and inserts stop.
    """

    def __init__(self, cfg: FilterConfig, seed: int = 0):
        if cfg.kind is FilterKind.STYLE:
            raise FilterError("style filter does not use a score list")
        self.cfg = cfg
        self.scores = ScoreList(
            decreasing=cfg.kind is FilterKind.BLEU, seed=seed)
        self.step_index = 0
        self.first_epoch_done = False
        self.frozen_threshold: float | None = None

    def mode(self) -> LifecycleMode:
        return lifecycle(self.step_index, self.first_epoch_done, self.cfg)

    def decide_batch(self, batch_scores) -> list[FilterDecision]:
        """One training step: insert the batch (unless frozen), then decide."""
        mode = self.mode()
        if mode is not LifecycleMode.FROZEN_FILTER:
            insert_batch(self.scores, batch_scores)
        self.step_index += 1
        if mode is LifecycleMode.PASS_THROUGH:
            decisions = [FilterDecision(True, s) for s in batch_scores]
        else:
            if mode is LifecycleMode.FROZEN_FILTER:
                threshold = self.frozen_threshold
                if threshold is None:
                    threshold = current_threshold(self.scores, self.cfg.phi)
                    self.frozen_threshold = threshold
            else:
                threshold = current_threshold(self.scores, self.cfg.phi)
            decisions = [
                FilterDecision(threshold_keep(self.cfg.kind, s, threshold),
                               s, threshold)
                for s in batch_scores
            ]
        return decisions

    def end_of_epoch(self) -> None:
        if self.cfg.freeze_after_one_epoch and not self.first_epoch_done:
            self.first_epoch_done = True
            if len(self.scores):
                self.frozen_threshold = current_threshold(
                    self.scores, self.cfg.phi)


@dataclass
class AuditLine:
    kind: str
    score: float
    threshold: float | None
    keep: bool

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind, "score": self.score,
            "threshold": self.threshold, "keep": self.keep,
        })

    @classmethod
    def from_json(cls, line: str) -> "AuditLine":
        d = json.loads(line)
        return cls(d["kind"], d["score"], d["threshold"], d["keep"])


def replay_decision(line: AuditLine) -> bool:
    """Recompute the keep decision an audit line claims."""
    kind = FilterKind(line.kind)
    if kind is FilterKind.STYLE:
        return line.score > (line.threshold if line.threshold is not None
                             else DEFAULT_SIGMA)
    if line.threshold is None:
        return True  # warm-up pass-through
    return threshold_keep(kind, line.score, line.threshold)
