"""Hierarchical resource keys with wildcards.

Keys are slash-separated chunk sequences. A chunk is a literal token, the
single-chunk wildcard ``*``, or the multi-chunk wildcard ``**`` (zero or
more chunks). Every publisher, subscriber and router names resources with
these keys and nothing else; matching is case-sensitive and byte-wise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

WILD = "*"
DEEP_WILD = "**"


class KeyExprError(ValueError):
    """Base class for key parsing/validation failures."""


class EmptyKey(KeyExprError):
    """The whole expression was empty."""


class EmptyChunk(KeyExprError):
    """A leading, trailing, or doubled slash produced an empty chunk."""


class InvalidChunk(KeyExprError):
    """A chunk mixes literal characters with wildcard characters."""


class NotConcreteKey(KeyExprError):
    """A concrete key was required but the expression holds wildcards."""


@dataclass(frozen=True)
class KeyExpr:
    """A canonical key expression.

    Canonical form never holds two consecutive ``**`` chunks; rendering and
    re-parsing always yields an identical value.
    """

    chunks: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.chunks:
            raise EmptyKey("key expression needs at least one chunk")
        for prev, cur in zip(self.chunks, self.chunks[1:]):
            if prev == DEEP_WILD and cur == DEEP_WILD:
                raise KeyExprError("non-canonical: consecutive '**' chunks")
        for c in self.chunks:
            _check_chunk(c)

    def __str__(self) -> str:
        return "/".join(self.chunks)

    @property
    def is_concrete(self) -> bool:
        return not any(c in (WILD, DEEP_WILD) for c in self.chunks)

    def matches(self, key: "KeyExpr | str") -> bool:
        """True iff `key` (a concrete key) is matched by this expression."""
        k = key if isinstance(key, KeyExpr) else parse_keyexpr(key)
        if not k.is_concrete:
            raise NotConcreteKey(f"'{k}' is not a concrete key")
        return _matches(self.chunks, k.chunks)

    def intersects(self, other: "KeyExpr") -> bool:
        return intersects(self, other)

    def includes(self, other: "KeyExpr") -> bool:
        return includes(self, other)


def _check_chunk(chunk: str) -> None:
    if chunk == "":
        raise EmptyChunk("empty chunk")
    if "/" in chunk:
        raise InvalidChunk(f"chunk {chunk!r} contains '/'")
    if "*" in chunk and chunk not in (WILD, DEEP_WILD):
        raise InvalidChunk(f"chunk {chunk!r} mixes '*' with other characters")


def parse_keyexpr(text: str) -> KeyExpr:
    """Parse `text` into a canonical KeyExpr.

    Consecutive ``**`` chunks collapse to one, so ``a/**/**/b`` parses to
    the same value as ``a/**/b``.
    """
    if text == "":
        raise EmptyKey("empty key expression")
    raw = text.split("/")
    chunks: list[str] = []
    for c in raw:
        if c == "":
            raise EmptyChunk(f"empty chunk in {text!r}")
        if c == DEEP_WILD and chunks and chunks[-1] == DEEP_WILD:
            continue
        _check_chunk(c)
        chunks.append(c)
    return KeyExpr(tuple(chunks))


@lru_cache(maxsize=65536)
def _matches(expr: tuple[str, ...], key: tuple[str, ...]) -> bool:
    if not expr:
        return not key
    head = expr[0]
    if head == DEEP_WILD:
        # '**' absorbs zero chunks, or one chunk and stays in play.
        return _matches(expr[1:], key) or (bool(key) and _matches(expr, key[1:]))
    if not key:
        return False
    if head == WILD or head == key[0]:
        return _matches(expr[1:], key[1:])
    return False


@lru_cache(maxsize=65536)
def _inter(a: tuple[str, ...], b: tuple[str, ...]) -> bool:
    if not a:
        return all(c == DEEP_WILD for c in b)
    if not b:
        return all(c == DEEP_WILD for c in a)
    if a[0] == DEEP_WILD:
        return _inter(a[1:], b) or _inter(a, b[1:])
    if b[0] == DEEP_WILD:
        return _inter(a, b[1:]) or _inter(a[1:], b)
    if a[0] == WILD or b[0] == WILD or a[0] == b[0]:
        return _inter(a[1:], b[1:])
    return False


def intersects(a: KeyExpr, b: KeyExpr) -> bool:
    """True iff some concrete key is matched by both expressions.

    The walk advances both chunk sequences together; a ``**`` on either
    side may absorb the other side's next chunk or step aside. Because
    canonical expressions accept the empty chunk sequence only when they
    are exactly ``**``, and two ``**`` trivially share the key ``x``, the
    walk never reports an intersection witnessed only by the empty key.
    """
    return _inter(a.chunks, b.chunks)


# --- inclusion ---------------------------------------------------------
#
# Inclusion is decided on a nondeterministic automaton per expression:
# position i sits before chunk i, '**' loops in place, and skipping a '**'
# is an epsilon move. L(b) <= L(a) holds iff no word over the combined
# literal alphabet (plus one fresh symbol standing for every unmentioned
# literal) is accepted by b and rejected by a. Keys have at least one
# chunk, so acceptance is only examined after the first symbol; this is
# what makes e.g. '*/**' include '**'.

_OTHER = None  # stands for any literal chunk not named by either side


class _Nfa:
    __slots__ = ("chunks", "n", "closure", "lits")

    def __init__(self, chunks: tuple[str, ...]):
        self.chunks = chunks
        self.n = len(chunks)
        closure = [0] * (self.n + 1)
        for i in range(self.n, -1, -1):
            mask = 1 << i
            if i < self.n and chunks[i] == DEEP_WILD:
                mask |= closure[i + 1]
            closure[i] = mask
        self.closure = closure
        self.lits = frozenset(c for c in chunks if c not in (WILD, DEEP_WILD))

    def start(self) -> int:
        return self.closure[0]

    def accepts(self, mask: int) -> bool:
        return bool(mask >> self.n & 1)

    def step(self, mask: int, symbol: str | None) -> int:
        out = 0
        chunks = self.chunks
        closure = self.closure
        i = 0
        while mask:
            if mask & 1 and i < self.n:
                c = chunks[i]
                if c == DEEP_WILD:
                    out |= closure[i]  # stays in place, then may skip onward
                elif c == WILD or (symbol is not None and c == symbol):
                    out |= closure[i + 1]
            mask >>= 1
            i += 1
        return out


@lru_cache(maxsize=4096)
def _nfa(chunks: tuple[str, ...]) -> _Nfa:
    return _Nfa(chunks)


def includes(a: KeyExpr, b: KeyExpr) -> bool:
    """True iff every concrete key matched by `b` is matched by `a`."""
    if a.chunks == b.chunks:
        return True
    if not _inter(a.chunks, b.chunks):
        return False
    na, nb = _nfa(a.chunks), _nfa(b.chunks)
    symbols: tuple[str | None, ...] = tuple(sorted(na.lits | nb.lits)) + (_OTHER,)
    seen = {(nb.start(), na.start())}
    frontier = [(nb.start(), na.start())]
    while frontier:
        sb, sa = frontier.pop()
        for sym in symbols:
            tb = nb.step(sb, sym)
            if not tb:
                continue
            ta = na.step(sa, sym)
            if nb.accepts(tb) and not na.accepts(ta):
                return False
            pair = (tb, ta)
            if pair not in seen:
                seen.add(pair)
                frontier.append(pair)
    return True


class SampleKind(str, Enum):
    PUT = "put"
    DELETE = "delete"
    QUERY = "query"
    REPLY = "reply"


@dataclass(frozen=True)
class Sample:
    """A timestamped payload flowing on a concrete key."""

    key: KeyExpr
    payload: bytes
    kind: SampleKind
    source: str
    sequence: int
    timestamp: float  # simulated milliseconds

    def __post_init__(self) -> None:
        if not self.key.is_concrete:
            raise NotConcreteKey(f"sample key '{self.key}' holds wildcards")


_counter = itertools.count()


def enumerate_keys(alphabet: tuple[str, ...], max_chunks: int):
    """Yield every concrete key over `alphabet` with 1..max_chunks chunks."""
    for n in range(1, max_chunks + 1):
        for combo in itertools.product(alphabet, repeat=n):
            yield KeyExpr(combo)


def enumerate_exprs(alphabet: tuple[str, ...], max_chunks: int):
    """Yield every canonical key expression over `alphabet` + wildcards."""
    symbols = alphabet + (WILD, DEEP_WILD)
    for n in range(1, max_chunks + 1):
        for combo in itertools.product(symbols, repeat=n):
            if any(x == DEEP_WILD and y == DEEP_WILD for x, y in zip(combo, combo[1:])):
                continue
            yield KeyExpr(combo)
