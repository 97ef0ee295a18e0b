"""Subshifts of finite type: admissible words, cylinders and eventually periodic points.

Words are plain tuples of ints.  Two-sided points are only ever represented as
eventually periodic sequences (left periodic tail, finite core, right periodic
tail), which keeps every operation exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, InadmissibleWord, NotPrimitive, NotPrimitiveError, SpecValidationError

Word = tuple

DEFAULT_BUDGET = 1 << 22


class SubshiftSpec:
    """A subshift of finite type given by a 0/1 transition matrix.

    Parameters
    ----------
    transitions : array_like
        Square 0/1 matrix ``Q``; ``Q[a, b] == 1`` means symbol ``b`` may follow ``a``.
    """

    def __init__(self, transitions):
        Q = np.asarray(transitions)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
            raise SpecValidationError("transition matrix must be square and non-empty", "transitions")
        if not np.all((Q == 0) | (Q == 1)):
            raise SpecValidationError("transition matrix must contain only 0 and 1", "transitions")
        Q = Q.astype(np.int64)
        if np.any(Q.sum(axis=1) == 0) or np.any(Q.sum(axis=0) == 0):
            raise SpecValidationError("every symbol needs a successor and a predecessor", "transitions")
        Q.setflags(write=False)
        self._Q = Q

    @classmethod
    def full(cls, k: int) -> "SubshiftSpec":
        return cls(np.ones((k, k), dtype=np.int64))

    @classmethod
    def golden_mean(cls) -> "SubshiftSpec":
        return cls([[1, 1], [1, 0]])

    @property
    def transitions(self) -> np.ndarray:
        return self._Q

    @property
    def alphabet_size(self) -> int:
        return self._Q.shape[0]

    @property
    def is_full_shift(self) -> bool:
        return bool(np.all(self._Q == 1))

    @cached_property
    def is_primitive(self) -> bool:
        k = self.alphabet_size
        # Wielandt: a primitive k x k matrix has Q^m > 0 for m = (k-1)^2 + 1, and
        # positivity persists for larger powers since no symbol is dead
        m = (k - 1) ** 2 + 1
        P = self._Q > 0
        power = 1
        while power < m and not P.all():
            Pi = P.astype(np.int64)
            P = (Pi @ Pi) > 0
            power *= 2
        return bool(P.all())

    @cached_property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self._Q.astype(float)))))

    def require_primitive(self) -> None:
        if not self.is_primitive:
            raise NotPrimitiveError("operation requires a primitive transition matrix")

    def is_admissible(self, word: Sequence[int]) -> bool:
        k = self.alphabet_size
        if len(word) == 0:
            return False
        if any(not (0 <= s < k) for s in word):
            return False
        Q = self._Q
        return all(Q[a, b] for a, b in zip(word[:-1], word[1:]))

    def check_word(self, word: Sequence[int]) -> Word:
        w = tuple(int(s) for s in word)
        if not self.is_admissible(w):
            raise InadmissibleWord(f"word {w} is not admissible")
        return w

    def to_json(self) -> list:
        return self._Q.tolist()

    def __eq__(self, other):
        return isinstance(other, SubshiftSpec) and np.array_equal(self._Q, other._Q)

    def __hash__(self):
        return hash(self._Q.tobytes())

    def __repr__(self):
        return f"SubshiftSpec({self._Q.tolist()})"


def word_count(sft: SubshiftSpec, n: int) -> int:
    """Number of admissible words of length ``n``: the entry sum of ``Q^(n-1)``.

    Computed with Python integers, so the count is exact for every ``n``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    Q = sft.transitions.tolist()
    k = len(Q)
    v = [1] * k
    for _ in range(n - 1):
        v = [sum(Q[a][b] * v[b] for b in range(k)) for a in range(k)]
    return sum(v)


def _budget_check(sft, n, budget):
    count = word_count(sft, n)
    if budget is not None and count > budget:
        raise BudgetExceeded(count, budget)
    if not sft.is_primitive:
        warnings.warn("transition matrix is not primitive", NotPrimitive, stacklevel=3)
    return count


def enumerate_words(sft: SubshiftSpec, n: int, budget: int | None = DEFAULT_BUDGET) -> Iterator[Word]:
    """Yield every admissible word of length ``n`` exactly once, lexicographically."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _budget_check(sft, n, budget)
    Q = sft.transitions
    k = sft.alphabet_size
    succ = [[b for b in range(k) if Q[a, b]] for a in range(k)]

    def extend(prefix):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in succ[prefix[-1]]:
            prefix.append(b)
            yield from extend(prefix)
            prefix.pop()

    for a in range(k):
        yield from extend([a])


def symbol_dtype(k: int):
    """Smallest unsigned integer type holding symbols ``0..k-1``."""
    return np.uint8 if k <= 256 else np.uint16 if k <= 65536 else np.uint32


def word_array(sft: SubshiftSpec, n: int, budget: int | None = DEFAULT_BUDGET,
               first: Sequence[int] | None = None) -> np.ndarray:
    """All admissible words of length ``n`` as a lexicographically sorted array of :func:`symbol_dtype`.

    ``first`` optionally restricts the first symbol (used to split work by prefix).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _budget_check(sft, n, budget)
    Q = sft.transitions.astype(bool)
    starts = range(sft.alphabet_size) if first is None else first
    dtype = symbol_dtype(sft.alphabet_size)
    words = np.array(sorted(starts), dtype=dtype).reshape(-1, 1)
    for _ in range(n - 1):
        parent, sym = np.nonzero(Q[words[:, -1]])
        words = np.concatenate([words[parent], sym.astype(dtype)[:, None]], axis=1)
    return words


def concat_admissible(sft: SubshiftSpec, I: Sequence[int], J: Sequence[int]) -> bool:
    """True iff the last symbol of ``I`` may be followed by the first symbol of ``J``."""
    if len(I) == 0 or len(J) == 0:
        return True
    return bool(sft.transitions[I[-1], J[0]])


@dataclass(frozen=True)
class Point:
    """Eventually periodic two-sided sequence.

    ``x_i = core[i - start]`` on the core, ``right`` repeats after the core and
    ``left`` repeats before it, aligned so that ``x_{start-1} == left[-1]``.
    """

    left: Word
    core: Word
    right: Word
    start: int = 0

    def __post_init__(self):
        if len(self.left) == 0 or len(self.right) == 0:
            raise ValueError("periodic tails must be non-empty")
        object.__setattr__(self, "left", tuple(int(s) for s in self.left))
        object.__setattr__(self, "core", tuple(int(s) for s in self.core))
        object.__setattr__(self, "right", tuple(int(s) for s in self.right))

    @property
    def end(self) -> int:
        return self.start + len(self.core)

    def __getitem__(self, i: int) -> int:
        if self.start <= i < self.end:
            return self.core[i - self.start]
        if i >= self.end:
            return self.right[(i - self.end) % len(self.right)]
        return self.left[(i - self.start) % len(self.left)]

    def window(self, a: int, b: int) -> Word:
        """Symbols ``x_a .. x_{b-1}``."""
        return tuple(self[i] for i in range(a, b))

    def shift(self, n: int = 1) -> "Point":
        """``T^n`` of the point, ``(T x)_i = x_{i+1}``."""
        return Point(self.left, self.core, self.right, self.start - n)

    def is_admissible(self, sft: SubshiftSpec) -> bool:
        lo = self.start - 2 * len(self.left) - 1
        hi = self.end + 2 * len(self.right) + 1
        return sft.is_admissible(self.window(lo, hi))

    def agrees_from(self, other: "Point", lo: int) -> bool:
        """True iff the points agree on every coordinate ``>= lo``."""
        hi = max(self.end, other.end) + math.lcm(len(self.right), len(other.right))
        return all(self[i] == other[i] for i in range(lo, hi + 1))

    def agrees_upto(self, other: "Point", hi: int) -> bool:
        """True iff the points agree on every coordinate ``<= hi``."""
        lo = min(self.start, other.start) - math.lcm(len(self.left), len(other.left))
        return all(self[i] == other[i] for i in range(lo - 1, hi + 1))


def periodic_point(word: Sequence[int]) -> Point:
    """The periodic point ``p_i = word[i mod len(word)]``."""
    w = tuple(int(s) for s in word)
    return Point(w, (), w, 0)


@dataclass(frozen=True)
class PeriodicPointSym:
    """Periodic point generated by a repeating word whose last symbol can precede its first."""

    repeating_word: Word

    def __post_init__(self):
        object.__setattr__(self, "repeating_word", tuple(int(s) for s in self.repeating_word))
        if len(self.repeating_word) == 0:
            raise ValueError("repeating word must be non-empty")

    @property
    def period(self) -> int:
        return len(self.repeating_word)

    def symbol(self, i: int) -> int:
        return self.repeating_word[i % self.period]

    def point(self) -> Point:
        return periodic_point(self.repeating_word)

    def validate(self, sft: SubshiftSpec) -> None:
        w = self.repeating_word
        if not sft.is_admissible(w + w[:1]):
            raise InadmissibleWord(f"periodic word {w} is not admissible")


@dataclass(frozen=True)
class HomoclinicPointSym:
    """Point equal to ``base`` except on coordinates ``1 .. entry_time-1``.

    The point lies in the local unstable set of ``base`` and its ``entry_time``-th
    image lies in the local stable set of ``T^entry_time(base)``.
    """

    base: PeriodicPointSym
    excursion: Word
    entry_time: int

    def __post_init__(self):
        object.__setattr__(self, "excursion", tuple(int(s) for s in self.excursion))
        if self.entry_time < 1:
            raise ValueError("entry_time must be >= 1")
        if len(self.excursion) != self.entry_time - 1:
            raise ValueError("excursion must occupy coordinates 1 .. entry_time-1")

    def point(self) -> Point:
        p = self.base
        n = self.entry_time
        core = (p.symbol(0),) + self.excursion
        right = tuple(p.symbol(n + j) for j in range(p.period))
        return Point(p.repeating_word, core, right, 0)

    def validate(self, sft: SubshiftSpec) -> None:
        self.base.validate(sft)
        p = self.base
        if all(s == p.symbol(i + 1) for i, s in enumerate(self.excursion)):
            raise ValueError("homoclinic point must differ from the periodic point")
        if not self.point().is_admissible(sft):
            raise InadmissibleWord("homoclinic excursion is not admissible")


def symbolic_distance(x: Point, y: Point) -> float:
    """``2^-m`` with ``m`` the smallest ``|i|`` at which the points differ; 0 if equal."""
    span = max(abs(x.start), abs(x.end), abs(y.start), abs(y.end))
    reach = span + math.lcm(len(x.left), len(y.left)) + math.lcm(len(x.right), len(y.right)) + 1
    for m in range(reach + 1):
        if x[m] != y[m] or x[-m] != y[-m]:
            return 2.0 ** (-m)
    return 0.0
