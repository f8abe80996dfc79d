"""Corpus loading: parallel pairs, unlabeled pools, multi-reference eval sets.

All files are UTF-8, one sentence per line. Tokenization is plain
whitespace splitting; case is preserved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 50
NUM_REFERENCES = 4


class CorpusError(Exception):
    pass


class LineCountMismatch(CorpusError):
    pass


class EmptyLine(CorpusError):
    pass


class WrongReferenceCount(CorpusError):
    pass


def tokenize(raw: str) -> list[str]:
    """Split on Unicode whitespace; runs of whitespace collapse."""
    return raw.split()


def detokenize(tokens: list[str]) -> str:
    return " ".join(tokens)


@dataclass(frozen=True)
class Sentence:
    raw: str
    tokens: tuple[str, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.tokens is None:
            object.__setattr__(self, "tokens", tuple(tokenize(self.raw)))

    @classmethod
    def from_tokens(cls, tokens) -> "Sentence":
        toks = tuple(tokens)
        return cls(raw=detokenize(list(toks)), tokens=toks)

    def __len__(self) -> int:
        return len(self.tokens)

    def is_empty(self) -> bool:
        return len(self.tokens) == 0


@dataclass(frozen=True)
class ParallelExample:
    source: Sentence
    target: Sentence

    def __post_init__(self):
        if self.source.is_empty() or self.target.is_empty():
            raise CorpusError("parallel example with an empty side")


@dataclass(frozen=True)
class EvalExample:
    source: Sentence
    references: tuple[Sentence, ...]

    def __post_init__(self):
        if len(self.references) != NUM_REFERENCES:
            raise WrongReferenceCount(
                f"expected {NUM_REFERENCES} references, got {len(self.references)}"
            )


@dataclass(frozen=True)
class UnlabeledPool:
    sentences: tuple[Sentence, ...]
    domain_tag: str = ""

    def __len__(self) -> int:
        return len(self.sentences)


def _read_lines(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def _check_nonempty_lines(lines: list[str], path) -> None:
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            raise EmptyLine(f"{path}: line {i} is empty or whitespace-only")


def load_parallel(src_path, tgt_path) -> list[ParallelExample]:
    src_lines = _read_lines(src_path)
    tgt_lines = _read_lines(tgt_path)
    if len(src_lines) != len(tgt_lines):
        raise LineCountMismatch(
            f"{src_path} has {len(src_lines)} lines, {tgt_path} has {len(tgt_lines)}"
        )
    _check_nonempty_lines(src_lines, src_path)
    _check_nonempty_lines(tgt_lines, tgt_path)
    return [
        ParallelExample(Sentence(s), Sentence(t))
        for s, t in zip(src_lines, tgt_lines)
    ]


def load_eval(src_path, ref_paths) -> list[EvalExample]:
    ref_paths = list(ref_paths)
    if len(ref_paths) != NUM_REFERENCES:
        raise WrongReferenceCount(
            f"expected {NUM_REFERENCES} reference files, got {len(ref_paths)}"
        )
    src_lines = _read_lines(src_path)
    ref_lines = [_read_lines(p) for p in ref_paths]
    for p, lines in zip(ref_paths, ref_lines):
        if len(lines) != len(src_lines):
            raise LineCountMismatch(
                f"{src_path} has {len(src_lines)} lines, {p} has {len(lines)}"
            )
    return [
        EvalExample(
            Sentence(src), tuple(Sentence(refs[i]) for refs in ref_lines)
        )
        for i, src in enumerate(src_lines)
    ]


def load_unlabeled(path, domain_tag: str = "",
                   max_tokens: int = DEFAULT_MAX_TOKENS) -> UnlabeledPool:
    """Load one-sentence-per-line unlabeled text, truncating long sentences."""
    sentences = []
    truncated = 0
    for line in _read_lines(path):
        toks = tokenize(line)
        if not toks:
            continue
        if len(toks) > max_tokens:
            toks = toks[:max_tokens]
            truncated += 1
        sentences.append(Sentence.from_tokens(toks))
    if truncated:
        logger.warning("truncated %d sentences to %d tokens in %s",
                       truncated, max_tokens, path)
    return UnlabeledPool(tuple(sentences), domain_tag)


def write_sentences(path, sentences) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(detokenize(list(s.tokens)) + "\n")
