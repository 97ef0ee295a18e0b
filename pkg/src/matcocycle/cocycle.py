"""Finite-window locally constant matrix cocycles over a subshift of finite type.

The generator at ``x`` reads the window ``x_{o} .. x_{o+w-1}`` where ``w`` is the
window length and ``o`` the window offset (``-(w-1) <= o <= 0``; ``o = 0`` is the
forward window).  Products follow ``A^n(x) = A(T^{n-1} x) ... A(x)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InadmissibleWord, NoConvergence, NotOnStableSet, NotPrimitive, SpecValidationError
from .multilinear import DEG_TOL, MAX_DIM, exterior_power, is_invertible, singular_values
from .symbolic import Point, SubshiftSpec, word_array
from .verdict import FAIL, PASS, StructureVerdict

HOLONOMY_TOL = 1e-10


class CocycleSpec:
    """Locally constant ``GL(d)``-cocycle given by one matrix per admissible window word.

    Parameters
    ----------
    sft : SubshiftSpec
        Base subshift.
    generators : mapping
        Admissible window word (tuple of symbols) to ``d x d`` matrix.
    holder_alpha : float
        Hölder exponent used by the fiber-bunching test, in ``(0, 1]``.
    offset : int
        Window offset ``o``; the generator reads ``x_o .. x_{o+w-1}``.
    """

    def __init__(self, sft: SubshiftSpec, generators: Mapping, holder_alpha: float = 1.0,
                 offset: int = 0):
        if not generators:
            raise SpecValidationError("no generators given", "completeness")
        gens = {}
        for key, M in generators.items():
            word = tuple(int(s) for s in key)
            gens[word] = np.array(M, dtype=float, ndmin=2)
        lengths = {len(w) for w in gens}
        if len(lengths) != 1:
            raise SpecValidationError("window words must all have the same length", "window")
        w = lengths.pop()
        if w < 1:
            raise SpecValidationError("window must be >= 1", "window")
        shapes = {M.shape for M in gens.values()}
        if len(shapes) != 1:
            raise SpecValidationError("generators must share one shape", "shape")
        shape = shapes.pop()
        if len(shape) != 2 or shape[0] != shape[1]:
            raise SpecValidationError("generators must be square", "shape")
        d = shape[0]
        if d > MAX_DIM:
            raise SpecValidationError(f"dimension {d} exceeds the cap {MAX_DIM}", "dimension")
        if not 0 < holder_alpha <= 1:
            raise SpecValidationError("holder_alpha must lie in (0, 1]", "holder_alpha")
        if not -(w - 1) <= offset <= 0:
            raise SpecValidationError("window offset must lie in [-(w-1), 0]", "window")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NotPrimitive)
            admissible = [tuple(int(s) for s in row) for row in word_array(sft, w, budget=None)]
        missing = [u for u in admissible if u not in gens]
        if missing:
            raise SpecValidationError(f"missing generator for admissible window word {missing[0]}", "completeness")
        extra = [u for u in gens if not sft.is_admissible(u)]
        if extra:
            raise SpecValidationError(f"generator given for inadmissible window word {extra[0]}", "admissibility")
        for u, M in gens.items():
            if not np.all(np.isfinite(M)):
                raise SpecValidationError(f"generator {u} has non-finite entries", "finiteness")
            if not is_invertible(M, DEG_TOL):
                raise SpecValidationError(f"generator {u} is not invertible", "invertibility")
        k = sft.alphabet_size
        table = np.full((k ** w, d, d), np.nan)
        for u in admissible:
            table[self._code(u, k)] = gens[u]
        table.setflags(write=False)
        for M in gens.values():
            M.setflags(write=False)
        self.sft = sft
        self.dimension = d
        self.window = w
        self.offset = offset
        self.holder_alpha = float(holder_alpha)
        self._gens = {u: gens[u] for u in admissible}
        self._table = table

    @staticmethod
    def _code(word, k):
        c = 0
        for s in word:
            c = c * k + int(s)
        return c

    @property
    def k(self) -> int:
        return self.sft.alphabet_size

    @property
    def left_ext(self) -> int:
        """Symbols needed before the first letter of a word."""
        return -self.offset

    @property
    def right_ext(self) -> int:
        """Symbols needed after the last letter of a word."""
        return self.window - 1 + self.offset

    @property
    def one_step(self) -> bool:
        return self.window == 1

    @property
    def generators(self) -> dict:
        return dict(self._gens)

    @property
    def generator_table(self) -> np.ndarray:
        """Generators indexed by base-``k`` window code (NaN for inadmissible codes)."""
        return self._table

    def generator(self, window_word: Sequence[int]) -> np.ndarray:
        u = tuple(int(s) for s in window_word)
        if u not in self._gens:
            raise InadmissibleWord(f"window word {u} is not admissible")
        return self._gens[u]

    def matrix_at(self, x: Point) -> np.ndarray:
        """``A(x)``."""
        return self.generator(x.window(self.offset, self.offset + self.window))

    def product_at(self, x: Point, n: int) -> np.ndarray:
        """``A^n(x)`` for ``n >= 0``."""
        M = np.eye(self.dimension)
        for j in range(n):
            M = self.matrix_at(x.shift(j)) @ M
        return M

    def product_along(self, full_word: Sequence[int]) -> np.ndarray:
        """Product of generators along a word that already includes its window extensions."""
        w = self.window
        M = np.eye(self.dimension)
        for j in range(len(full_word) - w + 1):
            M = self.generator(full_word[j:j + w]) @ M
        return M

    def extensions(self, word: Sequence[int]) -> list:
        """All admissible ``(left, right)`` window extensions of ``word`` in lexicographic order."""
        Q = self.sft.transitions
        if self.left_ext > 0:
            lefts = [tuple(int(s) for s in r) for r in word_array(self.sft, self.left_ext, budget=None)
                     if Q[r[-1], word[0]]]
        else:
            lefts = [()]
        if self.right_ext > 0:
            rights = [tuple(int(s) for s in r) for r in word_array(self.sft, self.right_ext, budget=None)
                      if Q[word[-1], r[0]]]
        else:
            rights = [()]
        return [(a, b) for a in lefts for b in rights]

    def to_json(self) -> dict:
        d = {
            "alphabet_size": self.k,
            "transitions": self.sft.to_json(),
            "dimension": self.dimension,
            "window": self.window,
            "holder_alpha": self.holder_alpha,
            "generators": {"".join(str(s) for s in u) if self.k <= 10 else ",".join(str(s) for s in u):
                           M.tolist() for u, M in self._gens.items()},
        }
        if self.offset:
            d["offset"] = self.offset
        return d


@dataclass(frozen=True)
class WordMatrix:
    """Product over a word.

    ``exact`` means the product is constant on the cylinder; otherwise ``matrix``
    is the extension with the largest operator norm.
    """

    word: tuple
    matrix: np.ndarray
    exact: bool
    log_norm_min: float
    log_norm_max: float
    extension: tuple = ((), ())


def evaluate_word(c: CocycleSpec, I: Sequence[int]) -> WordMatrix:
    """Product ``A(T^{n-1} x) ... A(x)`` over the cylinder ``[I]``."""
    I = c.sft.check_word(I)
    best = None
    lo, hi = math.inf, -math.inf
    for left, right in c.extensions(I):
        M = c.product_along(left + I + right)
        ln = math.log(np.linalg.norm(M, 2))
        lo = min(lo, ln)
        if ln > hi:
            hi = ln
            best = (M, (left, right))
    return WordMatrix(I, best[0], c.window == 1, lo, hi, best[1])


@dataclass(frozen=True)
class CylinderNorm:
    log_max: float
    log_min: float
    exact: bool


def norm_over_cylinder(c: CocycleSpec, I: Sequence[int], t: int) -> CylinderNorm:
    """Max and min over the cylinder of ``log ||(A^t)^n(x)||`` (``t = d`` gives ``log|det|``)."""
    I = c.sft.check_word(I)
    d = c.dimension
    if not 1 <= t <= d:
        raise ValueError(f"exterior index must lie in 1..{d}")
    vals = []
    for left, right in c.extensions(I):
        M = c.product_along(left + I + right)
        if t == d:
            vals.append(math.log(abs(np.linalg.det(M))))
        else:
            vals.append(math.log(float(np.prod(singular_values(M)[:t]))))
    return CylinderNorm(max(vals), min(vals), c.window == 1)


def check_fiber_bunched(c: CocycleSpec) -> StructureVerdict:
    """``max ||A|| ||A^{-1}|| < 2^alpha`` over the generators."""
    bound = 2.0 ** c.holder_alpha
    worst_word, worst = None, -math.inf
    for u, M in c.generators.items():
        s = singular_values(M)
        kappa = float(s[0] / s[-1])
        if kappa > worst:
            worst, worst_word = kappa, u
    margin = bound - worst
    return StructureVerdict(
        kind="fiber-bunched",
        verdict=PASS if margin > 0 else FAIL,
        margin=margin,
        witness={"worst_generator": list(worst_word), "condition_number": worst, "bound": bound},
    )


@dataclass(frozen=True)
class HolonomyResult:
    """Truncated holonomy with its convergence certificate.

    ``diffs`` are the successive differences ``||M_{n+1} - M_n||``; ``ratio`` is
    the last observed ratio of consecutive differences and ``tail_bound`` the
    geometric bound on the remaining error.  ``exact`` marks a limit reached
    after finitely many steps, which is what locally constant cocycles give.
    """

    matrix: np.ndarray
    exact: bool
    steps: int
    ratio: float
    tail_bound: float
    diffs: tuple = field(default=())


def _certified_limit(factor_pairs, d, tol, n_max, settle):
    """Iterate ``M_n = Y_n^{-1} X_n`` with ``X_{n+1} = F_x X_n`` and ``Y_{n+1} = F_y Y_n``.

    ``factor_pairs(j)`` returns the pair of factors at step ``j``; after step
    ``settle`` the factors coincide.
    """
    X = np.eye(d)
    Y = np.eye(d)
    M = np.eye(d)
    diffs = []
    for n in range(1, n_max + 1):
        Fx, Fy = factor_pairs(n - 1)
        if Fx is not Fy and not np.array_equal(Fx, Fy):
            X = Fx @ X
            Y = Fy @ Y
            M_new = np.linalg.solve(Y, X)
        else:
            M_new = M
        diffs.append(float(np.linalg.norm(M_new - M, 2)))
        M = M_new
        if len(diffs) >= 2 and n > settle:
            prev, last = diffs[-2], diffs[-1]
            ratio = 0.0 if last == 0 else (last / prev if prev > 0 else math.inf)
            if last <= tol and ratio < 1:
                tail = last * ratio / (1 - ratio)
                return M, n, ratio, tail, tuple(diffs)
    raise NoConvergence(f"holonomy did not settle within {n_max} steps")


def _id_result(d):
    return HolonomyResult(np.eye(d), True, 0, 0.0, 0.0, ())


def stable_holonomy(c: CocycleSpec, x: Point, y: Point, tol: float = HOLONOMY_TOL,
                    n_max: int = 200) -> HolonomyResult:
    """Local stable holonomy ``H^s_{y<-x} = lim A^n(y)^{-1} A^n(x)``.

    ``y`` must agree with ``x`` on every coordinate ``>= 0``.
    """
    if not x.agrees_from(y, 0):
        raise NotOnStableSet("y does not agree with x on the non-negative coordinates")
    d = c.dimension
    if c.offset == 0 or x == y:
        return _id_result(d)
    # windows at T^j coincide once j + offset >= 0
    settle = c.left_ext

    def factors(j):
        return c.matrix_at(x.shift(j)), c.matrix_at(y.shift(j))

    M, steps, ratio, tail, diffs = _certified_limit(factors, d, tol, n_max, settle)
    return HolonomyResult(M, True, steps, ratio, tail, diffs)


def unstable_holonomy(c: CocycleSpec, x: Point, y: Point, tol: float = HOLONOMY_TOL,
                      n_max: int = 200) -> HolonomyResult:
    """Local unstable holonomy.

    ``H^u_{y<-x} = lim A(T^{-1}y) ... A(T^{-n}y) A(T^{-n}x)^{-1} ... A(T^{-1}x)^{-1}``;
    ``y`` must agree with ``x`` on every coordinate ``<= 0``.
    """
    if not x.agrees_upto(y, 0):
        raise NotOnStableSet("y does not agree with x on the non-positive coordinates")
    d = c.dimension
    if c.right_ext <= 1 or x == y:
        return _id_result(d)
    # M_n = Y_n X_n^{-1} with Y_n = A(T^{-1}y)...A(T^{-n}y); its transpose
    # X_n^{-T} Y_n^{T} has the forward form with transposed factors
    settle = c.right_ext - 1

    def factors(j):
        Fx = c.matrix_at(x.shift(-(j + 1)))
        Fy = c.matrix_at(y.shift(-(j + 1)))
        return Fy.T, Fx.T

    Mt, steps, ratio, tail, diffs = _certified_limit(factors, d, tol, n_max, settle)
    return HolonomyResult(Mt.T, True, steps, ratio, tail, diffs)


def global_holonomy(c: CocycleSpec, x: Point, y: Point, n: int, kind: str = "s",
                    tol: float = HOLONOMY_TOL, n_max: int = 200) -> np.ndarray:
    """Holonomy between points that only become local after ``n`` iterates.

    Stable: ``H^s_{y<-x} = A^n(y)^{-1} H^s_{T^n y <- T^n x} A^n(x)``, needing
    ``y_i = x_i`` for ``i >= n``.  Unstable: ``H^u_{y<-x} = A^n(T^{-n} y)
    H^u_{T^{-n} y <- T^{-n} x} A^n(T^{-n} x)^{-1}``, needing ``y_i = x_i`` for ``i <= -n``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if kind == "s":
        inner = stable_holonomy(c, x.shift(n), y.shift(n), tol, n_max).matrix
        return np.linalg.solve(c.product_at(y, n), inner @ c.product_at(x, n))
    if kind == "u":
        xb, yb = x.shift(-n), y.shift(-n)
        inner = unstable_holonomy(c, xb, yb, tol, n_max).matrix
        Ax = c.product_at(xb, n)
        return c.product_at(yb, n) @ inner @ np.linalg.inv(Ax)
    raise ValueError("kind must be 's' or 'u'")
