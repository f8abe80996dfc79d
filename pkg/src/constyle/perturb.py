"""Word-level sentence perturbation methods and their lexicon tables.

Eight in-repo methods (drop, swap, mask, synonym, tf-idf replace, spelling
error injection, abbreviation replace, capitalization) plus an External
hook that delegates to a configured generator client.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .corpus import Sentence, UnlabeledPool, tokenize

DEFAULT_RATIO = 0.1
DEFAULT_MASK_TOKEN = "_"


class PerturbError(Exception):
    pass


class LexiconMissing(PerturbError):
    pass


class ParseError(PerturbError):
    pass


class InvariantViolation(PerturbError):
    pass


class EmptyPool(PerturbError):
    pass


class PerturbMethod(Enum):
    DROP = "drop"
    SWAP = "swap"
    MASK = "mask"
    SYNONYM = "synonym"
    TFIDF = "tfidf"
    SPELL = "spell"
    ABBR = "abbr"
    CAPITAL = "capital"
    EXTERNAL = "external"


@dataclass
class SpellingDict:
    variants: dict[str, list[str]]

    def __post_init__(self):
        for word, vs in self.variants.items():
            if word != word.lower():
                raise InvariantViolation(f"spelling key not lowercase: {word!r}")
            if not vs:
                raise InvariantViolation(f"no variants for {word!r}")
            if word in vs:
                raise InvariantViolation(f"variant equals its key: {word!r}")


@dataclass
class AbbrevDict:
    # phrase (1-3 lowercase tokens, space-joined) -> abbreviation text
    phrases: dict[str, str]
    max_phrase_len: int = field(init=False)

    def __post_init__(self):
        for phrase, abbr in self.phrases.items():
            n = len(phrase.split())
            if not 1 <= n <= 3:
                raise InvariantViolation(f"phrase length {n} not in 1..3: {phrase!r}")
            if phrase != phrase.lower():
                raise InvariantViolation(f"phrase not lowercase: {phrase!r}")
            if phrase == abbr:
                raise InvariantViolation(f"phrase maps to itself: {phrase!r}")
        self.max_phrase_len = max(
            (len(p.split()) for p in self.phrases), default=1
        )


@dataclass
class SynonymLexicon:
    synonyms: dict[str, list[str]]

    def __post_init__(self):
        for word, syns in self.synonyms.items():
            deduped = []
            for s in syns:
                if s != word and s not in deduped:
                    deduped.append(s)
            if not deduped:
                raise InvariantViolation(f"no usable synonyms for {word!r}")
            self.synonyms[word] = deduped


@dataclass
class TfIdfTable:
    scores: dict[str, float]
    # unigram relative frequencies used to sample replacement words
    unigram: dict[str, float]
    max_score: float = field(init=False)

    def __post_init__(self):
        if any(s < 0 for s in self.scores.values()):
            raise InvariantViolation("negative tf-idf score")
        total = sum(self.unigram.values())
        if abs(total - 1.0) > 1e-9:
            raise InvariantViolation(f"unigram table sums to {total}")
        self.max_score = max(self.scores.values(), default=0.0)

    def score(self, word: str) -> float:
        return self.scores.get(word, 0.0)


@dataclass
class Lexicons:
    spelling: SpellingDict | None = None
    abbrev: AbbrevDict | None = None
    synonym: SynonymLexicon | None = None
    tfidf: TfIdfTable | None = None


@dataclass
class PerturbConfig:
    method: PerturbMethod
    ratio: float = DEFAULT_RATIO
    seed: int = 0
    mask_token: str = DEFAULT_MASK_TOKEN
    lexicons: Lexicons = field(default_factory=Lexicons)
    # only used for PerturbMethod.EXTERNAL
    external_client: object = None

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise PerturbError(f"ratio {self.ratio} not in [0, 1]")
        if not self.mask_token:
            raise PerturbError("mask_token must be non-empty")


def _num_perturbed(ratio: float, n: int) -> int:
    if ratio == 0.0 or n == 0:
        return 0
    return max(1, round(ratio * n))


def _require(lexicon, name: str):
    if lexicon is None:
        raise LexiconMissing(f"method requires a loaded {name} table")
    return lexicon


def apply(sentence: Sentence, cfg: PerturbConfig,
          rng: random.Random) -> Sentence:
    """Apply the configured perturbation. Deterministic given (sentence, cfg, rng state)."""
    if sentence.is_empty():
        raise PerturbError("cannot perturb an empty sentence")
    tokens = list(sentence.tokens)
    n = len(tokens)
    method = cfg.method

    if method is PerturbMethod.EXTERNAL:
        if cfg.external_client is None:
            raise LexiconMissing("External perturbation needs a generator client")
        out = cfg.external_client.generate([sentence.raw], beam=1)[0]
        return Sentence(out)

    if method is PerturbMethod.ABBR:
        abbrev = _require(cfg.lexicons.abbrev, "abbreviation")
        return Sentence.from_tokens(_replace_abbreviations(tokens, abbrev))

    k = _num_perturbed(cfg.ratio, n)

    if method is PerturbMethod.DROP:
        if k == 0:
            return sentence
        keep = set(range(n)) - set(rng.sample(range(n), k))
        return Sentence.from_tokens([tokens[i] for i in sorted(keep)])

    if method is PerturbMethod.SWAP:
        if k == 0:
            return sentence
        for i in sorted(rng.sample(range(n), k)):
            j = i + 1 if i + 1 < n else i - 1
            if j >= 0:
                tokens[i], tokens[j] = tokens[j], tokens[i]
        return Sentence.from_tokens(tokens)

    if method is PerturbMethod.MASK:
        for i in rng.sample(range(n), k):
            tokens[i] = cfg.mask_token
        return Sentence.from_tokens(tokens)

    if method is PerturbMethod.CAPITAL:
        for i in rng.sample(range(n), k):
            tokens[i] = tokens[i].upper()
        return Sentence.from_tokens(tokens)

    if method is PerturbMethod.SYNONYM:
        lex = _require(cfg.lexicons.synonym, "synonym")
        eligible = [i for i, t in enumerate(tokens) if t.lower() in lex.synonyms]
        for i in rng.sample(eligible, min(k, len(eligible))):
            tokens[i] = rng.choice(lex.synonyms[tokens[i].lower()])
        return Sentence.from_tokens(tokens)

    if method is PerturbMethod.SPELL:
        spelling = _require(cfg.lexicons.spelling, "spelling")
        eligible = [i for i, t in enumerate(tokens)
                    if t.lower() in spelling.variants]
        for i in rng.sample(eligible, min(k, len(eligible))):
            tokens[i] = rng.choice(spelling.variants[tokens[i].lower()])
        return Sentence.from_tokens(tokens)

    if method is PerturbMethod.TFIDF:
        table = _require(cfg.lexicons.tfidf, "tf-idf")
        return Sentence.from_tokens(
            _tfidf_replace(tokens, table, cfg.ratio, rng)
        )

    raise PerturbError(f"unhandled method {method}")


def _replace_abbreviations(tokens: list[str], abbrev: AbbrevDict) -> list[str]:
    """Replace every longest-match dictionary phrase; no ratio applies."""
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        match_len = 0
        replacement = None
        for length in range(min(abbrev.max_phrase_len, n - i), 0, -1):
            phrase = " ".join(t.lower() for t in tokens[i:i + length])
            if phrase in abbrev.phrases:
                match_len = length
                replacement = abbrev.phrases[phrase]
                break
        if replacement is not None:
            out.extend(tokenize(replacement))
            i += match_len
        else:
            out.append(tokens[i])
            i += 1
    return out


def _tfidf_replace(tokens: list[str], table: TfIdfTable, ratio: float,
                   rng: random.Random) -> list[str]:
    """Replace low-tf-idf tokens; expected replacement count is ratio * n."""
    n = len(tokens)
    weights = [table.max_score - table.score(t.lower()) for t in tokens]
    total = sum(weights)
    if total <= 0.0:
        # all tokens equally informative; fall back to uniform choice
        weights = [1.0] * n
        total = float(n)
    vocab = list(table.unigram)
    cum = [table.unigram[w] for w in vocab]
    out = list(tokens)
    for i in range(n):
        p = min(1.0, ratio * n * weights[i] / total)
        if rng.random() < p:
            out[i] = _sample_categorical(vocab, cum, rng)
    return out


def _sample_categorical(items: list[str], weights: list[float],
                        rng: random.Random) -> str:
    r = rng.random() * sum(weights)
    acc = 0.0
    for item, w in zip(items, weights):
        acc += w
        if r < acc:
            return item
    return items[-1]


def build_tfidf(pool: UnlabeledPool) -> TfIdfTable:
    """Corpus tf-idf: mean per-sentence term frequency times smoothed idf."""
    if len(pool) == 0:
        raise EmptyPool("cannot build tf-idf from an empty pool")
    n_docs = len(pool)
    df: Counter[str] = Counter()
    tf_sum: Counter[str] = Counter()
    unigram: Counter[str] = Counter()
    for sent in pool.sentences:
        toks = [t.lower() for t in sent.tokens]
        counts = Counter(toks)
        for w, c in counts.items():
            df[w] += 1
            tf_sum[w] += c / len(toks)
        unigram.update(toks)
    scores = {}
    for w in df:
        idf = math.log((1 + n_docs) / (1 + df[w])) + 1.0
        scores[w] = (tf_sum[w] / n_docs) * idf
    total = sum(unigram.values())
    freq = {w: c / total for w, c in unigram.items()}
    return TfIdfTable(scores=scores, unigram=freq)


def _parse_tsv(path):
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 tab-separated fields")
            yield lineno, parts[0], parts[1]


def load_spelling(path) -> SpellingDict:
    variants = {}
    for lineno, word, rest in _parse_tsv(path):
        vs = [v for v in rest.split(",") if v]
        if not vs:
            raise ParseError(f"{path}:{lineno}: no variants")
        variants[word] = vs
    return SpellingDict(variants)


def load_abbrev(path) -> AbbrevDict:
    phrases = {}
    for _lineno, phrase, abbr in _parse_tsv(path):
        phrases[phrase] = abbr
    return AbbrevDict(phrases)


def load_synonyms(path) -> SynonymLexicon:
    synonyms = {}
    for lineno, word, rest in _parse_tsv(path):
        syns = [s for s in rest.split(",") if s]
        if not syns:
            raise ParseError(f"{path}:{lineno}: no synonyms")
        synonyms[word] = syns
    return SynonymLexicon(synonyms)
