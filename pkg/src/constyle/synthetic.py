"""Deterministic toy formality benchmark for desk-scale experiments.

Formal sentences come from a slot grammar; informal counterparts are made
by composing spelling-error injection, abbreviation replacement, and
random capitalization, so a token-substitution model can learn to undo
them. Token counts are preserved, keeping position-wise alignment exact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import ParallelExample, Sentence, UnlabeledPool
from .perturb import (AbbrevDict, Lexicons, PerturbConfig, PerturbMethod,
                      SpellingDict, apply)

_SUBJECTS = ["i", "we", "they", "you", "people", "students", "teachers",
             "parents", "children", "writers"]
_VERBS = ["visit", "enjoy", "describe", "discuss", "examine", "consider",
          "remember", "appreciate", "recommend", "organize", "imagine",
          "prepare", "deliver", "receive", "believe", "support", "measure",
          "explain", "improve", "observe", "collect", "compare", "discover",
          "mention", "practice", "promise", "protect", "provide", "realize",
          "suggest"]
_ADJECTIVES = ["beautiful", "difficult", "important", "interesting",
               "necessary", "popular", "serious", "different", "available",
               "comfortable", "dangerous", "excellent", "expensive",
               "familiar", "favorite", "general", "modern", "natural",
               "original", "peaceful", "personal", "possible", "powerful",
               "practical", "pleasant", "reliable", "separate", "similar",
               "special", "typical"]
_NOUNS = ["library", "museum", "concert", "article", "problem", "question",
          "history", "language", "picture", "station", "mountain", "morning",
          "evening", "message", "project", "program", "chapter", "country",
          "dinner", "garden", "island", "journey", "kitchen", "lecture",
          "market", "moment", "number", "office", "orange", "palace",
          "people", "period", "planet", "poetry", "reason", "record",
          "result", "river", "school", "season", "secret", "silence",
          "soldier", "station", "stomach", "street", "subject", "summer",
          "teacher", "theatre", "ticket", "tongue", "valley", "village",
          "window", "winter", "wisdom", "writer", "yesterday", "holiday"]
_PLACES = ["today", "together", "quietly", "carefully", "regularly",
           "sometimes", "usually", "often", "early", "late"]

ABBREVIATIONS = {
    "you": "u", "are": "r", "your": "ur", "please": "pls", "people": "ppl",
    "because": "bc", "about": "abt", "really": "rly", "thanks": "thx",
    "tomorrow": "tmrw", "before": "b4", "great": "gr8", "see": "c",
    "why": "y", "okay": "k", "love": "luv", "though": "tho", "what": "wut",
    "and": "n",
}


def _misspellings(word: str) -> list[str]:
    """Two deterministic corruptions: swap a letter pair and drop a letter."""
    variants = []
    if len(word) >= 4:
        mid = len(word) // 2
        swapped = word[:mid - 1] + word[mid] + word[mid - 1] + word[mid + 1:]
        if swapped != word:
            variants.append(swapped)
        dropped = word[:mid] + word[mid + 1:]
        if dropped != word:
            variants.append(dropped)
    return variants


def build_spelling_dict() -> SpellingDict:
    variants = {}
    for word in set(_VERBS + _ADJECTIVES + _NOUNS + _PLACES):
        vs = _misspellings(word)
        if vs:
            variants[word] = vs
    return SpellingDict(variants)


def build_abbrev_dict() -> AbbrevDict:
    return AbbrevDict(dict(ABBREVIATIONS))


def formal_sentences(count: int = 3000, seed: int = 0) -> list[Sentence]:
    rng = random.Random(seed)
    seen = set()
    out = []
    while len(out) < count:
        toks = [rng.choice(_SUBJECTS), "should", rng.choice(_VERBS), "the",
                rng.choice(_ADJECTIVES), rng.choice(_NOUNS),
                rng.choice(_PLACES), "."]
        raw = " ".join(toks)
        if raw in seen:
            continue
        seen.add(raw)
        out.append(Sentence(raw))
    return out


def corrupt(sentence: Sentence, rng: random.Random,
            spelling: SpellingDict | None = None,
            abbrev: AbbrevDict | None = None) -> Sentence:
    """Informal twin: spell errors + abbreviations + stray capitals."""
    spelling = spelling or build_spelling_dict()
    abbrev = abbrev or build_abbrev_dict()
    lex = Lexicons(spelling=spelling, abbrev=abbrev)
    s = apply(sentence,
              PerturbConfig(method=PerturbMethod.SPELL, ratio=0.125,
                            lexicons=lex), rng)
    s = apply(s, PerturbConfig(method=PerturbMethod.ABBR, lexicons=lex), rng)
    s = apply(s, PerturbConfig(method=PerturbMethod.CAPITAL, ratio=0.05,
                               lexicons=lex), rng)
    return s


@dataclass
class SyntheticTask:
    labeled: list[ParallelExample]
    unlabeled: UnlabeledPool
    val_sources: list[Sentence]
    val_references: list[list[Sentence]]
    test_sources: list[Sentence]
    test_references: list[list[Sentence]]
    spelling: SpellingDict
    abbrev: AbbrevDict


def build_task(n_formal: int = 3000, n_labeled: int = 100,
               n_unlabeled: int = 2000, n_val: int = 200, n_test: int = 400,
               seed: int = 0) -> SyntheticTask:
    assert n_labeled + n_unlabeled + n_val + n_test <= n_formal
    rng = random.Random(seed)
    spelling = build_spelling_dict()
    abbrev = build_abbrev_dict()
    formal = formal_sentences(n_formal, seed=seed)
    informal = [corrupt(s, rng, spelling, abbrev) for s in formal]

    idx = 0

    def take(n):
        nonlocal idx
        block = list(range(idx, idx + n))
        idx += n
        return block

    lab = take(n_labeled)
    unl = take(n_unlabeled)
    val = take(n_val)
    test = take(n_test)
    return SyntheticTask(
        labeled=[ParallelExample(informal[i], formal[i]) for i in lab],
        unlabeled=UnlabeledPool(tuple(informal[i] for i in unl), "synthetic"),
        val_sources=[informal[i] for i in val],
        val_references=[[formal[i]] for i in val],
        test_sources=[informal[i] for i in test],
        test_references=[[formal[i]] for i in test],
        spelling=spelling,
        abbrev=abbrev,
    )
