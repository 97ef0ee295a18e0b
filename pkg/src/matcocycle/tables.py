"""Word tables: log singular values of the cocycle over every admissible word of a fixed length.

The table is the shared engine behind partition functions, spectra, measures and
the structural probes.  Products are accumulated level by level over the prefix
tree of admissible words, one normalised product per exterior power ``t < d``
plus the additive ``log|det|``; then ``log sigma_t = log||A^t|| - log||A^{t-1}||``
stays accurate for badly conditioned products.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cocycle import CocycleSpec
from .errors import BudgetExceeded
from .multilinear import exterior_power
from .symbolic import DEFAULT_BUDGET, symbol_dtype, word_count

BUDGET_ENV = "MATCOCYCLE_BUDGET"
THREADS_ENV = "MATCOCYCLE_THREADS"


def default_budget() -> int:
    value = os.environ.get(BUDGET_ENV)
    return int(value) if value else DEFAULT_BUDGET


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    return max(1, int(value)) if value else (os.cpu_count() or 1)


def tree_logsumexp(values: np.ndarray, log_weights: np.ndarray | None = None) -> float:
    """``log sum exp(values + log_weights)`` by a fixed pairwise reduction.

    The reduction tree depends only on the array length, so the result is
    bit-identical however the values were produced.
    """
    a = np.asarray(values, dtype=float)
    if log_weights is not None:
        a = a + log_weights
    if a.size == 0:
        return -math.inf
    m = float(np.max(a))
    if not math.isfinite(m):
        return m
    a = np.exp(a - m)
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, 0.0)
        a = a[0::2] + a[1::2]
    return m + math.log(a[0])


def _top_singular(M: np.ndarray) -> np.ndarray:
    m = M.shape[-1]
    if m == 1:
        return np.abs(M[..., 0, 0])
    if m == 2:
        fro2 = np.einsum("...ij,...ij->...", M, M)
        det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
        disc = np.sqrt(np.maximum(fro2 * fro2 - 4 * det * det, 0.0))
        return np.sqrt(0.5 * (fro2 + disc))
    return np.linalg.svd(M, compute_uv=False)[..., 0]


def _build_subtree(c: CocycleSpec, L: int, first: int, wedge_gens: list, logdet_gen: np.ndarray):
    """Words of length ``L`` starting with ``first`` and their exterior data."""
    Q = c.sft.transitions.astype(bool)
    k, w = c.k, c.window
    modulus = k ** w
    dtype = symbol_dtype(c.k)
    words = np.array([[first]], dtype=dtype)
    code = np.array([first], dtype=np.int64)
    d = c.dimension
    prods = [np.broadcast_to(np.eye(g.shape[-1]), (1,) + g.shape[1:]).copy() for g in wedge_gens]
    logscale = [np.zeros(1) for _ in wedge_gens]
    logdet = np.zeros(1)
    if w == 1:
        logdet = logdet + logdet_gen[code]
        for t, g in enumerate(wedge_gens):
            prods[t] = g[code].copy()
    for level in range(1, L):
        parent, sym = np.nonzero(Q[words[:, -1]])
        words = np.concatenate([words[parent], sym.astype(dtype)[:, None]], axis=1)
        code = (code[parent] * k + sym) % modulus
        logdet = logdet[parent]
        prods = [P[parent] for P in prods]
        logscale = [s[parent] for s in logscale]
        if level >= w - 1:
            logdet = logdet + logdet_gen[code]
            for t, g in enumerate(wedge_gens):
                P = g[code] @ prods[t]
                scale = np.max(np.abs(P), axis=(1, 2))
                prods[t] = P / scale[:, None, None]
                logscale[t] = logscale[t] + np.log(scale)
    lognorm = np.empty((len(words), d))
    for t in range(len(wedge_gens)):
        lognorm[:, t] = np.log(_top_singular(prods[t])) + logscale[t]
    lognorm[:, d - 1] = logdet
    return words, lognorm


def word_lognorms(c: CocycleSpec, words: np.ndarray) -> np.ndarray:
    """``log||A^t||`` (``t = 1..d``, ``t = d`` is ``log|det|``) along each row of ``words``.

    Rows are full words including window extensions; products are renormalised
    at every step so the small singular values of long products stay accurate.
    """
    words = np.asarray(words, dtype=np.int64)
    S, L = words.shape
    k, w, d = c.k, c.window, c.dimension
    gtab = c.generator_table
    safe = np.where(np.isnan(gtab), 0.0, gtab)
    wedge_gens = [exterior_power(safe, t) for t in range(1, d)]
    with np.errstate(divide="ignore"):
        logdet_gen = np.log(np.abs(np.linalg.det(safe)))
    prods = [np.broadcast_to(np.eye(g.shape[-1]), (S,) + g.shape[1:]).copy() for g in wedge_gens]
    logscale = [np.zeros(S) for _ in wedge_gens]
    logdet = np.zeros(S)
    for j in range(L - w + 1):
        code = np.zeros(S, dtype=np.int64)
        for i in range(w):
            code = code * k + words[:, j + i]
        logdet = logdet + logdet_gen[code]
        for t, g in enumerate(wedge_gens):
            P = g[code] @ prods[t]
            scale = np.max(np.abs(P), axis=(1, 2))
            prods[t] = P / scale[:, None, None]
            logscale[t] = logscale[t] + np.log(scale)
    out = np.empty((S, d))
    for t in range(len(wedge_gens)):
        out[:, t] = np.log(_top_singular(prods[t])) + logscale[t]
    out[:, d - 1] = logdet
    return out


@dataclass
class WordTable:
    """Exterior data for every admissible word of length ``n``.

    Attributes
    ----------
    n : int
        Core word length.
    words : ndarray
        Extended words (core plus window extensions), shape ``(N_ext, n + w - 1)``,
        lexicographically sorted.
    lognorm : ndarray
        ``log||A^t||`` for ``t = 1..d`` per extended word (``t = d`` is ``log|det|``).
    core_index : ndarray
        Core word id of every extended word (cores numbered in lexicographic order).
    n_cores : int
        Number of admissible core words.
    exact : bool
        True when every core has a single extension (window 1).
    """

    n: int
    words: np.ndarray
    lognorm: np.ndarray
    core_index: np.ndarray
    n_cores: int
    exact: bool
    left_ext: int = 0
    memo: dict = field(default_factory=dict, repr=False)

    @property
    def logsv(self) -> np.ndarray:
        """``log sigma_i`` per extended word, shape ``(N_ext, d)``."""
        if "logsv" not in self.memo:
            ls = self.lognorm.copy()
            ls[:, 1:] -= self.lognorm[:, :-1]
            ls.setflags(write=False)
            self.memo["logsv"] = ls
        return self.memo["logsv"]

    @property
    def cores(self) -> np.ndarray:
        """Core words in lexicographic order, shape ``(n_cores, n)``."""
        if self.exact:
            return self.words
        first = np.unique(self.core_index, return_index=True)[1]
        return self.words[first, self.left_ext:self.left_ext + self.n]

    def per_core_max(self, values: np.ndarray) -> np.ndarray:
        """Reduce per-extension values to the per-core maximum."""
        if self.exact:
            return values
        out = np.full(self.n_cores, -np.inf)
        np.maximum.at(out, self.core_index, values)
        return out

    def per_core_min(self, values: np.ndarray) -> np.ndarray:
        if self.exact:
            return values
        out = np.full(self.n_cores, np.inf)
        np.minimum.at(out, self.core_index, values)
        return out

    def log_psi(self, q) -> np.ndarray:
        """Per-core ``log max_{x in [I]} psi^q(A^n(x))``."""
        q = np.asarray(q, dtype=float)
        return self.per_core_max(self.logsv @ q)

    def log_partition(self, q) -> float:
        """``log Z_n(q)`` with the fixed pairwise reduction."""
        q = np.asarray(q, dtype=float)
        if not np.any(q):
            return math.log(self.n_cores)
        return tree_logsumexp(self.log_psi(q))

    def log_wedge_norm(self, t: int) -> np.ndarray:
        """Per-core max of ``log||A^t||``."""
        return self.per_core_max(self.lognorm[:, t - 1])

    def core_codes(self, k: int) -> np.ndarray:
        """Base-``k`` codes of the cores; sorted because the cores are."""
        cores = self.cores.astype(np.int64)
        code = np.zeros(len(cores), dtype=np.int64)
        for j in range(cores.shape[1]):
            code = code * k + cores[:, j]
        return code


def build_table(c: CocycleSpec, n: int, budget: int | None = None, threads: int | None = None) -> WordTable:
    """Build the word table of length ``n``.

    Parameters
    ----------
    c : CocycleSpec
        The cocycle.
    n : int
        Core word length.
    budget : int, optional
        Maximum number of extended words; defaults to the environment override or ``2^22``.
    threads : int, optional
        Worker count; the work is split by first symbol and reassembled in
        order, so results do not depend on it.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    budget = default_budget() if budget is None else budget
    threads = default_threads() if threads is None else max(1, int(threads))
    L = n + c.window - 1
    count = word_count(c.sft, L)
    if count > budget:
        raise BudgetExceeded(count, budget)
    d = c.dimension
    gtab = c.generator_table
    safe = np.where(np.isnan(gtab), 0.0, gtab)
    wedge_gens = [exterior_power(safe, t) for t in range(1, d)]
    with np.errstate(divide="ignore"):
        logdet_gen = np.log(np.abs(np.linalg.det(safe)))
    firsts = list(range(c.k))
    if threads > 1 and c.k > 1:
        with ThreadPoolExecutor(max_workers=min(threads, c.k)) as pool:
            parts = list(pool.map(lambda a: _build_subtree(c, L, a, wedge_gens, logdet_gen), firsts))
    else:
        parts = [_build_subtree(c, L, a, wedge_gens, logdet_gen) for a in firsts]
    words = np.concatenate([p[0] for p in parts])
    lognorm = np.concatenate([p[1] for p in parts])
    if c.window == 1:
        core_index = np.arange(len(words))
        n_cores = len(words)
    else:
        core = words[:, c.left_ext:c.left_ext + n]
        _, core_index = np.unique(core, axis=0, return_inverse=True)
        core_index = core_index.reshape(-1)
        n_cores = int(core_index.max()) + 1
    return WordTable(n, words, lognorm, core_index, n_cores, c.window == 1, c.left_ext)


class TableCache:
    """Memoises word tables per length for one cocycle."""

    def __init__(self, c: CocycleSpec, budget: int | None = None, threads: int | None = None):
        self.c = c
        self.budget = budget
        self.threads = threads
        self._tables: dict[int, WordTable] = {}

    def __call__(self, n: int) -> WordTable:
        if n not in self._tables:
            self._tables[n] = build_table(self.c, n, self.budget, self.threads)
        return self._tables[n]
