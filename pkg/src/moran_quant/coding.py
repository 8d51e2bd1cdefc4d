"""Combinatorics of the coding space: finite words, prefixes, antichains.

Words are plain tuples of 1-based symbols; the empty tuple is the empty
word.  Alphabet sizes are level-dependent and repeat periodically; they
live in an :class:`Alphabet` so this module stays independent of the
geometric realization.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidWordError, PreconditionError

Word = tuple[int, ...]

EMPTY_WORD: Word = ()

EQUAL = "equal"
PREFIX = "prefix"
EXTENSION = "extension"
INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class Alphabet:
    """Per-level symbol counts, repeating with the given period."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise PreconditionError("alphabet sizes must be positive")

    @property
    def period(self) -> int:
        return len(self.sizes)

    def size(self, level: int) -> int:
        """Number of symbols available at 1-based `level`."""
        if level < 1:
            raise PreconditionError(f"level must be >= 1, got {level}")
        return self.sizes[(level - 1) % len(self.sizes)]


def validate_word(word: Word, alphabet: Alphabet, start_level: int = 1) -> None:
    """Check every symbol against the alphabet; `start_level` shifts suffixes."""
    for i, sym in enumerate(word):
        n = alphabet.size(start_level + i)
        if not 1 <= sym <= n:
            raise InvalidWordError(
                f"symbol {sym} at level {start_level + i} outside 1..{n}"
            )


def concat(sigma: Word, tau: Word, alphabet: Alphabet | None = None) -> Word:
    """Concatenate `sigma` with the suffix `tau` rooted at level len(sigma)+1."""
    if alphabet is not None:
        validate_word(sigma, alphabet)
        validate_word(tau, alphabet, start_level=len(sigma) + 1)
    return tuple(sigma) + tuple(tau)


def truncate(sigma: Word, h: int) -> Word:
    """First `h` symbols of `sigma`; h=0 gives the empty word."""
    if not 0 <= h <= len(sigma):
        raise InvalidWordError(f"truncation length {h} outside 0..{len(sigma)}")
    return tuple(sigma[:h])


def parent(sigma: Word) -> Word:
    """Drop the last symbol (empty word for length-1 input)."""
    if not sigma:
        raise InvalidWordError("the empty word has no parent")
    return tuple(sigma[:-1])


def relation(sigma: Word, tau: Word) -> str:
    """Classify the pair as equal / prefix / extension / incomparable."""
    ls, lt = len(sigma), len(tau)
    if ls == lt:
        return EQUAL if tuple(sigma) == tuple(tau) else INCOMPARABLE
    if ls < lt:
        return PREFIX if tuple(sigma) == tuple(tau[:ls]) else INCOMPARABLE
    return EXTENSION if tuple(sigma[:lt]) == tuple(tau) else INCOMPARABLE


@dataclass(frozen=True)
class AntichainReport:
    """Outcome of a maximality check with an optional counterexample."""

    ok: bool
    comparable_pair: tuple[Word, Word] | None = None
    uncovered: Word | None = None


def is_maximal_antichain(words, alphabet: Alphabet, depth: int) -> AntichainReport:
    """Check pairwise incomparability plus coverage of every depth-`depth` word.

    Coverage at a single finite depth suffices because all members have
    length <= depth.
    """
    members = {tuple(w) for w in words}
    if not members:
        raise PreconditionError("empty word set")
    max_len = max(len(w) for w in members)
    if depth < max_len:
        raise PreconditionError(f"depth {depth} below max word length {max_len}")
    for w in members:
        validate_word(w, alphabet)
        for h in range(len(w)):
            pre = w[:h]
            if pre in members:
                return AntichainReport(False, comparable_pair=(pre, w))

    # Depth-first walk of the full tree; stop a branch on hitting a member.
    stack: list[Word] = [EMPTY_WORD]
    while stack:
        node = stack.pop()
        if node in members:
            continue
        if len(node) == depth:
            return AntichainReport(False, uncovered=node)
        n = alphabet.size(len(node) + 1)
        for sym in range(n, 0, -1):
            stack.append(node + (sym,))
    return AntichainReport(True)


def word_str(word: Word) -> str:
    """Dot-separated serialization; the empty word serializes as ''."""
    return ".".join(str(s) for s in word)


def parse_word(text: str) -> Word:
    """Inverse of :func:`word_str`."""
    if text == "":
        return EMPTY_WORD
    try:
        syms = tuple(int(p) for p in text.split("."))
    except ValueError as exc:
        raise InvalidWordError(f"cannot parse word {text!r}") from exc
    if any(s < 1 for s in syms):
        raise InvalidWordError(f"symbols must be >= 1 in {text!r}")
    return syms
