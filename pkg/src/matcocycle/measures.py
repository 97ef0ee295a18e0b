"""Markov measures, their entropy and Lyapunov exponents, and the finite-depth variational principle."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cocycle import CocycleSpec
from .errors import BudgetExceeded
from .symbolic import SubshiftSpec
from .tables import WordTable, build_table, default_threads, word_lognorms

STATIONARY_TOL = 1e-12
FD_STEP = 1e-5
ROW_FLOOR = 1e-10


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Left fixed probability vector of an irreducible stochastic matrix."""
    k = P.shape[0]
    A = np.vstack([P.T - np.eye(k), np.ones((1, k))])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True)
class MarkovMeasure:
    """Stationary one-step Markov measure ``(P, pi)`` on a subshift.

    Parameters
    ----------
    stochastic : ndarray
        Row-stochastic ``k x k`` matrix.
    stationary : ndarray
        Probability vector with ``pi P = pi``.
    """

    stochastic: np.ndarray
    stationary: np.ndarray

    def __post_init__(self):
        P = np.array(self.stochastic, dtype=float)
        pi = np.array(self.stationary, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or pi.shape != (P.shape[0],):
            raise ValueError("shape mismatch between P and pi")
        if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("P must be row stochastic")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("pi must be a probability vector")
        if np.max(np.abs(pi @ P - pi)) > STATIONARY_TOL:
            raise ValueError("pi is not stationary for P")
        P.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "stochastic", P)
        object.__setattr__(self, "stationary", pi)

    @classmethod
    def from_stochastic(cls, P) -> "MarkovMeasure":
        P = np.asarray(P, dtype=float)
        P = P / P.sum(axis=1, keepdims=True)
        return cls(P, stationary_vector(P))

    @classmethod
    def bernoulli(cls, weights) -> "MarkovMeasure":
        p = np.asarray(weights, dtype=float)
        p = p / p.sum()
        return cls(np.tile(p, (len(p), 1)), p)

    @classmethod
    def dirac_fixed_point(cls, k: int, symbol: int) -> "MarkovMeasure":
        P = np.eye(k)
        pi = np.zeros(k)
        pi[symbol] = 1.0
        return cls(P, pi)

    @classmethod
    def parry(cls, sft: SubshiftSpec) -> "MarkovMeasure":
        """Measure of maximal entropy of a primitive subshift."""
        Q = sft.transitions.astype(float)
        vals, right = np.linalg.eig(Q)
        i = int(np.argmax(vals.real))
        lam = vals[i].real
        v = np.abs(right[:, i].real)
        vals_l, left = np.linalg.eig(Q.T)
        u = np.abs(left[:, int(np.argmax(vals_l.real))].real)
        P = Q * v[None, :] / (lam * v[:, None])
        P = P / P.sum(axis=1, keepdims=True)
        pi = u * v / np.dot(u, v)
        return cls.from_stochastic(P) if np.max(np.abs(pi @ P - pi)) > STATIONARY_TOL else cls(P, pi)

    def compatible_with(self, sft: SubshiftSpec) -> bool:
        return bool(np.all((self.stochastic == 0) | (sft.transitions == 1)))

    def to_json(self) -> dict:
        return {"stochastic": self.stochastic.tolist(), "stationary": self.stationary.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "MarkovMeasure":
        if "stationary" in data:
            return cls(np.array(data["stochastic"]), np.array(data["stationary"]))
        return cls.from_stochastic(np.array(data["stochastic"]))


def gibbs_bernoulli(scalars, q: float) -> MarkovMeasure:
    """Bernoulli measure with weights ``|a_j|^q / sum_i |a_i|^q``."""
    logs = q * np.log(np.abs(np.asarray(scalars, dtype=float)))
    w = np.exp(logs - logs.max())
    return MarkovMeasure.bernoulli(w / w.sum())


def entropy(m: MarkovMeasure) -> float:
    """Entropy rate ``-sum_ij pi_i P_ij log P_ij``."""
    P, pi = m.stochastic, m.stationary
    mask = P > 0
    return float(-np.sum((pi[:, None] * P * np.log(np.where(mask, P, 1.0)))[mask]))


def _pair_counts(words: np.ndarray, k: int) -> np.ndarray:
    """Per-word counts of each transition ``(a, b)``, flattened to ``a * k + b``."""
    N, L = words.shape
    counts = np.zeros((N, k * k))
    if L > 1:
        codes = words[:, :-1].astype(np.int64) * k + words[:, 1:]
        rows = np.repeat(np.arange(N), L - 1)
        np.add.at(counts, (rows, codes.ravel()), 1.0)
    return counts


class CylinderMasses:
    """Fast Markov cylinder masses for a fixed array of words."""

    def __init__(self, words: np.ndarray, k: int):
        self.k = k
        self.first = words[:, 0].astype(np.int64)
        self.counts = _pair_counts(words, k)

    def log_mass(self, m: MarkovMeasure) -> np.ndarray:
        P, pi = m.stochastic, m.stationary
        with np.errstate(divide="ignore"):
            logP = np.log(P).ravel()
            logpi = np.log(pi)
        used = self.counts > 0
        terms = np.where(used, self.counts * np.where(np.isfinite(logP), logP, 0.0), 0.0)
        out = logpi[self.first] + terms.sum(axis=1)
        dead = np.any(used & ~np.isfinite(logP)[None, :], axis=1)
        out[dead] = -np.inf
        return out

    def mass(self, m: MarkovMeasure) -> np.ndarray:
        return np.exp(self.log_mass(m))


@dataclass(frozen=True)
class ExponentReport:
    """Finite-depth Lyapunov exponents of a Markov measure.

    ``chi`` are decreasing; ``chi_psi_q`` is the integral of ``(1/n) log psi^q``
    when ``q`` is supplied; ``stderr`` is set for the Monte Carlo method.
    """

    chi: np.ndarray
    chi_psi_q: float | None
    n_used: int
    method: str
    stderr: np.ndarray | None = None


def lyapunov_vector(c: CocycleSpec, m: MarkovMeasure, n: int, q=None,
                    budget: int | None = None, samples: int = 20000, seed: int = 0,
                    table: WordTable | None = None) -> ExponentReport:
    """``chi_i = (1/n) sum_I mu[I] log sigma_i(A(I))`` over (extended) cylinders of length ``n``.

    Falls back to Monte Carlo sampling of the chain when the word count exceeds
    the budget.
    """
    if not m.compatible_with(c.sft):
        raise ValueError("measure charges inadmissible transitions")
    try:
        T = table if table is not None else build_table(c, n, budget)
    except BudgetExceeded:
        return _lyapunov_monte_carlo(c, m, n, q, samples, seed)
    mass = CylinderMasses(T.words, c.k).mass(m)
    ls = T.logsv
    finite = mass > 0
    chi = (mass[finite] @ ls[finite]) / n
    chi_q = None if q is None else float(np.dot(chi, np.asarray(q, dtype=float)))
    return ExponentReport(np.asarray(chi), chi_q, n, "exact-cylinder")


def _lyapunov_monte_carlo(c, m, n, q, samples, seed):
    rng = np.random.default_rng(seed)
    k = c.k
    L = n + c.window - 1
    cum = np.cumsum(m.stochastic, axis=1)
    states = rng.choice(k, size=samples, p=m.stationary)
    words = np.empty((samples, L), dtype=np.int64)
    words[:, 0] = states
    for j in range(1, L):
        u = rng.random(samples)
        words[:, j] = np.minimum((u[:, None] > cum[words[:, j - 1]]).sum(axis=1), k - 1)
    ln = word_lognorms(c, words)
    vals = ln.copy()
    vals[:, 1:] -= ln[:, :-1]
    vals /= n
    chi = vals.mean(axis=0)
    err = vals.std(axis=0, ddof=1) / math.sqrt(samples)
    chi_q = None if q is None else float(np.dot(chi, np.asarray(q, dtype=float)))
    return ExponentReport(chi, chi_q, n, "monte-carlo", err)


def block_entropy(m: MarkovMeasure, masses: np.ndarray) -> float:
    """``H_n = -sum_I mu[I] log mu[I]`` from an array of cylinder masses."""
    p = masses[masses > 0]
    return float(-np.sum(p * np.log(p)))


def variational_gap(c: CocycleSpec, m: MarkovMeasure, q, n: int, budget: int | None = None,
                    table: WordTable | None = None) -> float:
    """``(1/n) log Z_n(q) - [H_n(mu)/n + (1/n) sum_I mu[I] log psi^q(A(I))]``.

    Non-negative by the Gibbs inequality since ``psi^q`` is taken at its
    cylinder maximum.
    """
    if not m.compatible_with(c.sft):
        raise ValueError("measure charges inadmissible transitions")
    q = np.asarray(q, dtype=float)
    T = table if table is not None else build_table(c, n, budget)
    cores = T.cores
    mass = CylinderMasses(cores, c.k).mass(m)
    psi = T.log_psi(q)
    live = mass > 0
    H = block_entropy(m, mass)
    chi_q = float(mass[live] @ psi[live])
    return T.log_partition(q) / n - (H + chi_q) / n


def _project_row(v: np.ndarray, floor: float) -> np.ndarray:
    """Euclidean projection onto ``{p : p >= floor, sum p = 1}``."""
    m = len(v)
    if m == 1:
        return np.ones(1)
    u = v - floor
    budget = 1.0 - m * floor
    s = np.sort(u)[::-1]
    css = np.cumsum(s) - budget
    idx = np.nonzero(s - css / np.arange(1, m + 1) > 0)[0][-1]
    theta = css[idx] / (idx + 1)
    return np.maximum(u - theta, 0.0) + floor


class _Objective:
    """``h_mu + (1/n) sum_I mu[I] log psi^q(A(I))`` as a function of the free transition entries."""

    def __init__(self, c: CocycleSpec, q, n: int, table: WordTable):
        self.k = c.k
        self.n = n
        self.support = c.sft.transitions.astype(bool)
        self.zero_q = not np.any(q)
        if not self.zero_q:
            self.cyl = CylinderMasses(table.cores, c.k)
            self.psi = table.log_psi(np.asarray(q, dtype=float))

    def measure(self, P: np.ndarray) -> MarkovMeasure:
        return MarkovMeasure.from_stochastic(P)

    def __call__(self, P: np.ndarray) -> float:
        m = self.measure(P)
        val = entropy(m)
        if not self.zero_q:
            mass = self.cyl.mass(m)
            live = mass > 0
            val += float(mass[live] @ self.psi[live]) / self.n
        return val


def _ascend(obj: _Objective, P0: np.ndarray, max_iter: int, floor: float):
    k = obj.k
    sup = obj.support
    P = P0.copy()
    f = obj(P)
    step = 1.0
    for _ in range(max_iter):
        g = np.zeros_like(P)
        for a in range(k):
            for b in np.nonzero(sup[a])[0]:
                h = FD_STEP
                Pp = P.copy()
                Pm = P.copy()
                Pp[a, b] += h
                if P[a, b] - h >= floor:
                    Pm[a, b] -= h
                    g[a, b] = (obj(Pp) - obj(Pm)) / (2 * h)
                else:
                    g[a, b] = (obj(Pp) - f) / h
        improved = False
        while step > 1e-12:
            cand = P.copy()
            for a in range(k):
                cols = np.nonzero(sup[a])[0]
                cand[a, cols] = _project_row(P[a, cols] + step * g[a, cols], floor)
            fc = obj(cand)
            if fc > f + 1e-4 * np.sum(g * (cand - P)) and fc > f:
                P, gain, f = cand, fc - f, fc
                improved = True
                step *= 2.0
                break
            step *= 0.5
        if not improved or gain < 1e-15:
            break
    return P, f


def maximize_variational(c: CocycleSpec, q, n: int, restarts: int = 20, seed: int = 0,
                         max_iter: int = 500, threads: int | None = None,
                         budget: int | None = None, table: WordTable | None = None):
    """Search Markov measures for ``max h_mu + (1/n) int log psi^q``.

    Projected gradient ascent on the rows of the transition matrix with
    finite-difference gradients, started from the uniform chain and from
    seeded Dirichlet draws.  The entropy rate ``h_mu`` never exceeds
    ``H_n(mu)/n``, so the returned objective is a certified lower bound for
    ``(1/n) log Z_n(q)``.

    Returns
    -------
    (MarkovMeasure, float)
        Best measure and its objective value.
    """
    c.sft.require_primitive()
    q = np.atleast_1d(np.asarray(q, dtype=float))
    T = table if table is not None else build_table(c, n, budget)
    obj = _Objective(c, q, n, T)
    k = c.k
    sup = c.sft.transitions.astype(bool)
    children = np.random.SeedSequence(seed).spawn(max(restarts, 1))

    def start(i):
        P = np.zeros((k, k))
        if i == 0:
            P[sup] = 1.0
        else:
            rng = np.random.default_rng(children[i])
            for a in range(k):
                cols = np.nonzero(sup[a])[0]
                P[a, cols] = rng.dirichlet(np.ones(len(cols)))
        P = P / P.sum(axis=1, keepdims=True)
        for a in range(k):
            cols = np.nonzero(sup[a])[0]
            P[a, cols] = _project_row(P[a, cols], ROW_FLOOR)
        return _ascend(obj, P, max_iter, ROW_FLOOR)

    idx = list(range(max(restarts, 1)))
    threads = default_threads() if threads is None else max(1, threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(start, idx))
    else:
        results = [start(i) for i in idx]
    best_P, best_f = results[0]
    for P, f in results[1:]:
        if f > best_f or (f == best_f and tuple(P.ravel()) < tuple(best_P.ravel())):
            best_P, best_f = P, f
    return obj.measure(best_P), float(best_f)
