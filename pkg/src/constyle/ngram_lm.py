"""Interpolated Kneser-Ney 4-gram language model for fluency scoring.

Absolute discounting with a single discount for all orders; lower orders
use continuation counts. Training tokens with frequency 1 are mapped to
<unk> so any sentence receives a finite score.
"""

from __future__ import annotations

from collections import Counter
from pathlib import Path

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

DEFAULT_ORDER = 4
DEFAULT_DISCOUNT = 0.75


class EmptyCorpus(Exception):
    pass


class KneserNeyModel:
    def __init__(self, order: int, discount: float,
                 raw_counts: dict[int, Counter], vocab: set[str]):
        if not 0.0 <= discount < 1.0:
            raise ValueError(f"discount {discount} not in [0, 1)")
        self.order = order
        self.discount = discount
        self.raw = raw_counts
        # event space: everything the model can predict
        self.vocab = set(vocab) | {UNK, EOS}
        self.vocab.discard(BOS)
        self._build_tables()

    def _build_tables(self):
        top = self.order
        self.ctx_total: Counter = Counter()
        self.ctx_follow: Counter = Counter()
        for gram, c in self.raw[top].items():
            self.ctx_total[gram[:-1]] += c
            self.ctx_follow[gram[:-1]] += 1
        # continuation counts for orders 1..top-1, from raw counts one up
        self.cont: dict[int, Counter] = {}
        self.cont_ctx_total: dict[int, Counter] = {}
        self.cont_ctx_follow: dict[int, Counter] = {}
        for k in range(1, top):
            cc: Counter = Counter()
            for gram in self.raw[k + 1]:
                cc[gram[1:]] += 1
            tot: Counter = Counter()
            follow: Counter = Counter()
            for gram, c in cc.items():
                tot[gram[:-1]] += c
                follow[gram[:-1]] += 1
            self.cont[k] = cc
            self.cont_ctx_total[k] = tot
            self.cont_ctx_follow[k] = follow

    def _map(self, token: str) -> str:
        return token if token in self.vocab or token == BOS else UNK

    def prob(self, context: tuple[str, ...], word: str) -> float:
        """p(word | last order-1 tokens of context), interpolated KN."""
        ctx = tuple(self._map(t) for t in context)[-(self.order - 1):]
        w = self._map(word)
        return self._p(self.order, ctx, w)

    def _p(self, k: int, ctx: tuple[str, ...], w: str) -> float:
        if k == 0:
            return 1.0 / len(self.vocab)
        if k == self.order:
            total = self.ctx_total.get(ctx, 0)
            if total == 0:
                return self._p(k - 1, ctx[1:], w)
            num = self.raw[k].get(ctx + (w,), 0)
            lam = self.discount * self.ctx_follow[ctx] / total
            return max(num - self.discount, 0.0) / total + lam * self._p(
                k - 1, ctx[1:], w)
        total = self.cont_ctx_total[k].get(ctx, 0)
        if total == 0:
            return self._p(k - 1, ctx[1:], w)
        num = self.cont[k].get(ctx + (w,), 0)
        lam = self.discount * self.cont_ctx_follow[k][ctx] / total
        return max(num - self.discount, 0.0) / total + lam * self._p(
            k - 1, ctx[1:], w)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"order\t{self.order}\n")
            f.write(f"discount\t{self.discount!r}\n")
            f.write(f"vocab\t{len(self.vocab)}\n")
            for w in sorted(self.vocab):
                f.write(f"w\t{w}\n")
            for k in range(1, self.order + 1):
                for gram, c in sorted(self.raw[k].items()):
                    f.write(f"g{k}\t" + " ".join(gram) + f"\t{c}\n")

    @classmethod
    def load(cls, path: str | Path) -> "KneserNeyModel":
        order = None
        discount = None
        vocab: set[str] = set()
        raw: dict[int, Counter] = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                parts = line.rstrip("\n").split("\t")
                key = parts[0]
                if key == "order":
                    order = int(parts[1])
                    raw = {k: Counter() for k in range(1, order + 1)}
                elif key == "discount":
                    discount = float(parts[1])
                elif key == "w":
                    vocab.add(parts[1])
                elif key.startswith("g"):
                    k = int(key[1:])
                    raw[k][tuple(parts[1].split(" "))] = int(parts[2])
        if order is None or discount is None:
            raise ValueError(f"{path}: missing model header")
        return cls(order, discount, raw, vocab)


def _padded(tokens, order: int) -> list[str]:
    return [BOS] * (order - 1) + list(tokens) + [EOS]


def train_lm(corpus, order: int = DEFAULT_ORDER,
             discount: float = DEFAULT_DISCOUNT) -> KneserNeyModel:
    """Train interpolated KN on a list of Sentence (or token lists)."""
    sentences = [list(getattr(s, "tokens", s)) for s in corpus]
    if not sentences:
        raise EmptyCorpus("cannot train on an empty corpus")
    freq = Counter(t for toks in sentences for t in toks)
    vocab = {w for w, c in freq.items() if c > 1}

    def unkify(t: str) -> str:
        return t if t in vocab else UNK

    raw: dict[int, Counter] = {k: Counter() for k in range(1, order + 1)}
    for toks in sentences:
        seq = _padded([unkify(t) for t in toks], order)
        for k in range(1, order + 1):
            for i in range(len(seq) - k + 1):
                gram = tuple(seq[i:i + k])
                if gram[-1] == BOS:
                    continue
                raw[k][gram] += 1
    return KneserNeyModel(order, discount, raw, vocab)


def log_prob(model: KneserNeyModel, sentence) -> float:
    """Natural-log probability of the sentence including the </s> event."""
    import math

    tokens = list(getattr(sentence, "tokens", sentence))
    seq = _padded(tokens, model.order)
    lp = 0.0
    for i in range(model.order - 1, len(seq)):
        ctx = tuple(seq[i - model.order + 1:i])
        lp += math.log(model.prob(ctx, seq[i]))
    return lp


def perplexity(model: KneserNeyModel, sentence) -> float:
    import math

    tokens = list(getattr(sentence, "tokens", sentence))
    lp = log_prob(model, tokens)
    return math.exp(-lp / (len(tokens) + 1))
