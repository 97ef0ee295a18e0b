"""Partition functions and topological pressure of singular value potentials."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cocycle import CocycleSpec
from .errors import InvariantViolation
from .symbolic import SubshiftSpec
from .tables import TableCache, build_table


def partition_function(c: CocycleSpec, q, n: int, budget: int | None = None,
                       threads: int | None = None) -> float:
    """``log Z_n(q) = log sum_{I in L_n} max_{x in [I]} psi^q(A^n(x))``.

    Raises
    ------
    NotPrimitiveError
        If the transition matrix is not primitive.
    BudgetExceeded
        If the number of words exceeds the budget.
    """
    c.sft.require_primitive()
    return build_table(c, n, budget, threads).log_partition(_as_q(c, q))


def _as_q(c: CocycleSpec, q) -> np.ndarray:
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if q.shape != (c.dimension,):
        raise ValueError(f"q must have {c.dimension} entries")
    if not np.all(np.isfinite(q)):
        raise ValueError("q must be finite")
    return q


def log_spectral_radius(sft: SubshiftSpec) -> float:
    """``log rho(Q)``; exact when all row sums agree (e.g. full shifts)."""
    rows = sft.transitions.sum(axis=1)
    if np.all(rows == rows[0]):
        return math.log(int(rows[0]))
    return math.log(sft.spectral_radius)


def is_det_direction(q) -> bool:
    q = np.asarray(q, dtype=float)
    return bool(np.all(q == q[0]))


def det_direction_log_partition(c: CocycleSpec, s: float, n: int) -> float:
    """``log Z_n`` for ``q = (s/d, ..., s/d)`` by the additive transfer matrix.

    ``Z_n = 1^T (DQ)^{n-1} D 1`` with ``D = diag(|det A_a|^{s/d})``; one-step cocycles only.
    """
    if c.window != 1:
        raise ValueError("transfer-matrix evaluation needs a one-step cocycle")
    d = c.dimension
    logw = np.array([(s / d) * math.log(abs(np.linalg.det(c.generator((a,))))) for a in range(c.k)])
    Q = c.sft.transitions.astype(float)
    v = np.exp(logw - logw.max())
    log_scale = float(logw.max())
    for _ in range(n - 1):
        v = np.exp(logw) * (Q @ v)
        m = v.max()
        v = v / m
        log_scale += math.log(m)
    return log_scale + math.log(v.sum())


def det_direction_pressure(c: CocycleSpec, s: float) -> float:
    """Limit pressure ``log rho(DQ)`` for the determinant direction (one-step cocycles)."""
    if c.window != 1:
        raise ValueError("transfer-matrix evaluation needs a one-step cocycle")
    d = c.dimension
    w = np.array([abs(np.linalg.det(c.generator((a,)))) ** (s / d) for a in range(c.k)])
    M = w[:, None] * c.sft.transitions.astype(float)
    return math.log(float(np.max(np.abs(np.linalg.eigvals(M)))))


def qm_bracket_constant(c: CocycleSpec, q, log_c: float, k: int) -> float:
    """``log C_2`` with ``psi^q(IKJ) >= C_2 psi^q(I) psi^q(J)`` for connectors of length ``k``.

    ``log_c`` is the simultaneous constant ``min_i ||A^i(IKJ)|| / (||A^i(I)|| ||A^i(J)||)``
    from the quasi-multiplicativity probe.  Negative increments ``t_i`` are
    handled by the upper bound ``||A^i(K)||`` over all connectors.
    """
    q = _as_q(c, q)
    d = c.dimension
    t = q - np.append(q[1:], 0.0)
    if k == 0:
        upper = np.zeros(d)
        det_lo = det_hi = 0.0
    else:
        T = build_table(c, k, budget=None)
        upper = np.array([float(np.max(T.log_wedge_norm(i))) for i in range(1, d + 1)])
        logdet = T.lognorm[:, d - 1]
        det_lo, det_hi = float(np.min(logdet)), float(np.max(logdet))
    total = 0.0
    for i in range(1, d):
        ti = t[i - 1]
        total += ti * log_c if ti >= 0 else ti * upper[i - 1]
    qd = q[d - 1]
    total += qd * (det_lo if qd >= 0 else det_hi)
    return total


@dataclass
class PressureEstimate:
    """Finite-depth pressure values with their brackets and diagnostics.

    ``values`` holds ``(n, (1/n) log Z_n(q))``.  ``point_estimate`` is the value
    at ``n_max``, replaced by the exact transfer-matrix limit when ``q`` admits
    one (``q = 0`` or a determinant direction of a one-step cocycle).
    ``ratio_estimate`` is ``log Z_{n_max} - log Z_{n_max - 1}``.
    """

    q: np.ndarray
    n_max: int
    values: list
    point_estimate: float
    superadditive_lower: float | None = None
    gap_k: int | None = None
    qm_constant_log: float | None = None
    exact: float | None = None
    ratio_estimate: float | None = None
    aitken: float | None = None
    monotone_decreasing: bool = False
    log_z: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "q": [float(v) for v in self.q],
            "n_max": self.n_max,
            "values": [[int(n), float(v)] for n, v in self.values],
            "point_estimate": float(self.point_estimate),
            "superadditive_lower": self.superadditive_lower,
            "gap_k": self.gap_k,
            "qm_constant_log": self.qm_constant_log,
            "exact": self.exact,
            "ratio_estimate": self.ratio_estimate,
            "aitken": self.aitken,
            "monotone_decreasing": self.monotone_decreasing,
        }


def _aitken(x):
    if len(x) < 3:
        return None
    a, b, c = x[-3:]
    den = c - 2 * b + a
    if den == 0:
        return float(c)
    return float(c - (c - b) ** 2 / den)


def estimate_pressure(c: CocycleSpec, q, n_max: int, n_min: int = 1,
                      qm_constant_log: float | None = None, gap_k: int | None = None,
                      budget: int | None = None, threads: int | None = None,
                      cache: TableCache | None = None) -> PressureEstimate:
    """Estimate ``P(q) = lim (1/n) log Z_n(q)``.

    Parameters
    ----------
    c : CocycleSpec
    q : array_like
        Exponent vector.
    n_max : int
        Deepest word length.
    n_min : int
        Shallowest word length in the sequence.
    qm_constant_log, gap_k : float, int, optional
        ``log C_2`` and connector length from a quasi-multiplicativity probe.
        When given, ``a_n = log Z_n + log C_2`` is checked to satisfy
        ``a_{n+m+k} >= a_n + a_m`` on every computed triple and the lower
        bracket ``sup_n a_n / (n + k)`` is attached.

    Raises
    ------
    InvariantViolation
        If the superadditivity check fails.
    """
    c.sft.require_primitive()
    q = _as_q(c, q)
    if cache is None:
        cache = TableCache(c, budget, threads)
    ns = list(range(max(1, n_min), n_max + 1))
    logz = {n: cache(n).log_partition(q) for n in ns}
    if not np.any(q) and c.sft.is_full_shift:
        # Z_n(0) = k^n exactly
        values = [(n, math.log(c.k)) for n in ns]
    else:
        values = [(n, logz[n] / n) for n in ns]
    seq = [v for _, v in values]
    est = PressureEstimate(q=q, n_max=n_max, values=values, point_estimate=seq[-1],
                           log_z=[(n, logz[n]) for n in ns])
    if n_max - 1 in logz:
        est.ratio_estimate = logz[n_max] - logz[n_max - 1]
    est.aitken = _aitken(seq)
    est.monotone_decreasing = all(b <= a + 1e-12 for a, b in zip(seq, seq[1:]))
    if not np.any(q):
        est.exact = log_spectral_radius(c.sft)
    elif c.window == 1 and is_det_direction(q):
        est.exact = det_direction_pressure(c, q[0] * c.dimension)
    if est.exact is not None:
        est.point_estimate = est.exact
    if qm_constant_log is not None:
        if gap_k is None:
            raise ValueError("gap_k is required with qm_constant_log")
        a = {n: logz[n] + qm_constant_log for n in ns}
        for n in ns:
            for m in ns:
                if n + m + gap_k in a and a[n + m + gap_k] < a[n] + a[m] - 1e-9:
                    raise InvariantViolation(
                        f"superadditivity fails at (n, m, k) = ({n}, {m}, {gap_k})")
        est.superadditive_lower = max(a[n] / (n + gap_k) for n in ns)
        est.gap_k = gap_k
        est.qm_constant_log = qm_constant_log
    return est


@dataclass(frozen=True)
class DistortionReport:
    constant: float
    per_n: tuple


def bounded_distortion_constant(c: CocycleSpec, t: int, n_max: int,
                                budget: int | None = None) -> DistortionReport:
    """Largest ratio between max and min of ``||(A^t)^n||`` over the window extensions of a word."""
    per_n = []
    for n in range(1, n_max + 1):
        if c.window == 1:
            per_n.append(1.0)
            continue
        T = build_table(c, n, budget)
        v = T.lognorm[:, t - 1]
        spread = T.per_core_max(v) - T.per_core_min(v)
        per_n.append(float(math.exp(np.max(spread))))
    running = list(np.maximum.accumulate(per_n))
    return DistortionReport(float(running[-1]), tuple(float(r) for r in running))
