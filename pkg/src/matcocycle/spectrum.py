"""Lyapunov spectrum domain, Legendre-transform entropy spectrum and the brute-force level-set oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull

from .cocycle import CocycleSpec
from .errors import EmptyLevelSet, TargetOutsideDomain
from .measures import entropy, lyapunov_vector, maximize_variational
from .tables import WordTable, build_table, tree_logsumexp

Q_MAX = 20.0
INTERIOR_MARGIN = 1e-3
Q_TOL = 1e-6
AFFINE_TOL = 1e-9


class _Hull:
    """Convex hull of a point cloud, possibly of lower affine dimension."""

    def __init__(self, points: np.ndarray):
        pts = np.unique(np.asarray(points, dtype=float), axis=0)
        self.origin = pts.mean(axis=0)
        centered = pts - self.origin
        scale = max(1.0, float(np.max(np.abs(pts))))
        if len(pts) > 1:
            _, s, vt = np.linalg.svd(centered, full_matrices=False)
            rank = int(np.sum(s > AFFINE_TOL * scale * max(1.0, math.sqrt(len(pts)))))
        else:
            rank, vt = 0, np.zeros((0, pts.shape[1]))
        self.rank = rank
        self.basis = vt[:rank]
        self.dim = pts.shape[1]
        coords = centered @ self.basis.T
        if rank == 0:
            self.vertices = pts[:1]
        elif rank == 1:
            lo, hi = int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))
            self.interval = (float(coords[lo, 0]), float(coords[hi, 0]))
            self.vertices = pts[[lo, hi]]
        else:
            self.qhull = ConvexHull(coords)
            self.vertices = pts[np.sort(self.qhull.vertices)]
        self.scale = scale

    def depth(self, alpha) -> float:
        """Signed distance from ``alpha`` to the relative boundary (positive inside)."""
        a = np.asarray(alpha, dtype=float) - self.origin
        y = self.basis @ a
        off = float(np.linalg.norm(a - self.basis.T @ y))
        if off > AFFINE_TOL * self.scale:
            return -off
        if self.rank == 0:
            return 0.0
        if self.rank == 1:
            lo, hi = self.interval
            return min(y[0] - lo, hi - y[0])
        eq = self.qhull.equations
        return float(-np.max(eq[:, :-1] @ y + eq[:, -1]))

    @property
    def diameter(self) -> float:
        V = self.vertices
        if len(V) < 2:
            return 0.0
        diff = V[:, None, :] - V[None, :, :]
        return float(np.max(np.linalg.norm(diff, axis=-1)))


@dataclass
class SpectrumEstimate:
    """Convex hull of the finite-time Lyapunov vectors ``(1/n) log sigma(A(I))``."""

    hull_vertices: np.ndarray
    n: int
    hull: _Hull = field(repr=False)

    @property
    def affine_dim(self) -> int:
        return self.hull.rank

    @property
    def diameter(self) -> float:
        return self.hull.diameter

    def depth(self, alpha) -> float:
        return self.hull.depth(alpha)

    def contains(self, alpha, margin: float = 0.0) -> bool:
        return self.hull.depth(alpha) > margin if margin > 0 else self.hull.depth(alpha) >= -AFFINE_TOL


def _representatives(T: WordTable) -> np.ndarray:
    """Per core, the extension with the largest operator norm."""
    if T.exact:
        return np.arange(len(T.words))
    order = np.lexsort((-T.lognorm[:, 0], T.core_index))
    first = np.ones(len(order), dtype=bool)
    first[1:] = T.core_index[order][1:] != T.core_index[order][:-1]
    return order[first]


def lyapunov_points(T: WordTable) -> np.ndarray:
    return T.logsv[_representatives(T)] / T.n


def grouped_log_singular_values(T: WordTable):
    """Distinct rows of ``log sigma`` (to 1e-9) over the cores of a one-step table, with multiplicities."""
    if "grouped" not in T.memo:
        ls = T.logsv
        keys = np.round(ls * 1e9).astype(np.int64)
        if keys.shape[1] == 1:
            _, first, counts = np.unique(keys[:, 0], return_index=True, return_counts=True)
        else:
            order = np.lexsort(keys.T[::-1])
            sk = keys[order]
            start = np.ones(len(sk), dtype=bool)
            start[1:] = np.any(sk[1:] != sk[:-1], axis=1)
            idx = np.nonzero(start)[0]
            first = order[idx]
            counts = np.diff(np.append(idx, len(sk)))
        T.memo["grouped"] = (ls[first], counts)
    return T.memo["grouped"]


def estimate_spectrum_domain(c: CocycleSpec, n: int, budget: int | None = None,
                             table: WordTable | None = None) -> SpectrumEstimate:
    """Hull of the depth-``n`` Lyapunov vectors over all admissible words."""
    T = table if table is not None else build_table(c, n, budget)
    if T.exact:
        pts = grouped_log_singular_values(T)[0] / T.n
    else:
        pts = lyapunov_points(T)
    hull = _Hull(pts)
    return SpectrumEstimate(hull.vertices, n, hull)


@dataclass
class SpectrumPoint:
    """Entropy value at a target Lyapunov vector.

    ``entropy`` is ``None`` for an empty level set.  ``method`` is ``duality``,
    ``oracle`` or ``measure-sup``.
    """

    alpha: np.ndarray
    entropy: float | None
    q_star: np.ndarray | None
    method: str
    n: int
    flags: tuple = ()
    count: int | None = None
    eps: float | None = None

    @property
    def is_empty(self) -> bool:
        return self.entropy is None


class _Potential:
    """``q -> (1/n) log Z_n(q)`` with exact grouping of equal Lyapunov vectors."""

    def __init__(self, T: WordTable):
        self.n = T.n
        if T.exact:
            self.x, counts = grouped_log_singular_values(T)
            self.logw = np.log(counts.astype(float))
            self.T = None
        else:
            self.T = T

    def value(self, q) -> float:
        q = np.asarray(q, dtype=float)
        if self.T is not None:
            return self.T.log_partition(q) / self.n
        return tree_logsumexp(self.x @ q, self.logw) / self.n

    def gradient(self, q) -> np.ndarray:
        """Gibbs average of ``(1/n) log sigma`` (exact for one-step cocycles)."""
        q = np.asarray(q, dtype=float)
        if self.T is not None:
            T = self.T
            ls = T.logsv
            rep = _representatives(T)
            x, logw = ls[rep], np.zeros(len(rep))
        else:
            x, logw = self.x, self.logw
        e = x @ q + logw
        w = np.exp(e - e.max())
        return (w @ x) / w.sum() / self.n


def _minimize_dual(pot: _Potential, alpha: np.ndarray, B: np.ndarray, qmax: float, seed: int,
                   starts: int):
    r = B.shape[1]

    def F(y):
        return pot.value(B @ y) - float(np.dot(B @ y, alpha))

    rng = np.random.default_rng(seed)
    inits = [np.zeros(r)] + [rng.uniform(-qmax / 4, qmax / 4, r) for _ in range(starts - 1 if r > 1 else 0)]
    best_y, best_f = None, math.inf
    for y in inits:
        y = y.copy()
        f = F(y)
        for _ in range(100):
            y_old = y.copy()
            for i in range(r):
                def line(s, i=i):
                    z = y.copy()
                    z[i] = s
                    return F(z)
                res = minimize_scalar(line, bounds=(-qmax, qmax), method="bounded",
                                      options={"xatol": Q_TOL * 0.1})
                if res.fun <= F(y):
                    y[i] = res.x
            f = F(y)
            if np.max(np.abs(y - y_old)) < Q_TOL:
                break
        # polish with projected gradient steps
        step = 1.0
        for _ in range(200):
            g = B.T @ (pot.gradient(B @ y) - alpha)
            if np.max(np.abs(g)) < 1e-13:
                break
            moved = False
            while step > 1e-14:
                cand = np.clip(y - step * g, -qmax, qmax)
                fc = F(cand)
                if fc < f:
                    y, f, moved = cand, fc, True
                    step *= 2.0
                    break
                step *= 0.5
            if not moved:
                break
        if f < best_f:
            best_y, best_f = y, f
    return best_y, best_f


def legendre_entropy(c: CocycleSpec, alpha, n_max: int, q_max: float = Q_MAX,
                     margin: float = INTERIOR_MARGIN, seed: int = 0, starts: int = 4,
                     budget: int | None = None, table: WordTable | None = None,
                     domain: SpectrumEstimate | None = None) -> SpectrumPoint:
    """``inf_q (1/n) log Z_n(q) - <q, alpha>`` over the box ``[-q_max, q_max]^d``.

    Raises
    ------
    TargetOutsideDomain
        If ``alpha`` lies outside the closed hull of depth-``n`` Lyapunov vectors.
        Targets within ``margin`` of the boundary are computed and flagged
        ``boundary_target``; a minimiser on the box is flagged ``boundary_hit``.
    """
    c.sft.require_primitive()
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.shape != (c.dimension,):
        raise ValueError(f"alpha must have {c.dimension} entries")
    T = table if table is not None else build_table(c, n_max, budget)
    dom = domain if domain is not None else estimate_spectrum_domain(c, n_max, table=T)
    depth = dom.depth(alpha)
    if depth < -AFFINE_TOL:
        raise TargetOutsideDomain(f"target {alpha.tolist()} lies outside the spectrum hull")
    flags = []
    if depth <= margin:
        flags.append("boundary_target")
    d = c.dimension
    B = np.eye(d) if dom.affine_dim == d else dom.hull.basis.T
    if B.shape[1] == 0:
        q_star = np.zeros(d)
        value = _Potential(T).value(q_star)
    else:
        y, value = _minimize_dual(_Potential(T), alpha, B, q_max, seed, starts)
        q_star = B @ y
        if np.any(np.abs(y) >= q_max - 1e-6):
            flags.append("boundary_hit")
    return SpectrumPoint(alpha, max(float(value), 0.0), q_star, "duality", n_max, tuple(flags))


@dataclass
class LevelSetEntropy:
    """Counting value ``(1/n) log #{I : |(1/n) log sigma_i(A(I)) - alpha_i| < eps}``."""

    count: int
    n: int
    eps: float

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    @property
    def value(self) -> float:
        if self.count == 0:
            raise EmptyLevelSet("no word realises the target")
        return math.log(self.count) / self.n


def default_eps(domain: SpectrumEstimate) -> float:
    return 2.0 * domain.diameter / domain.n


def level_set_entropy_oracle(c: CocycleSpec, alpha, n: int, eps: float | None = None,
                             budget: int | None = None, table: WordTable | None = None) -> LevelSetEntropy:
    """Brute-force count of length-``n`` words whose Lyapunov vector is ``eps``-close to ``alpha``."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    T = table if table is not None else build_table(c, n, budget)
    if eps is None:
        eps = default_eps(estimate_spectrum_domain(c, n, table=T))
    pts = lyapunov_points(T)
    hit = np.all(np.abs(pts - alpha) < eps, axis=1)
    return LevelSetEntropy(int(np.count_nonzero(hit)), n, float(eps))


def measure_lower_bound(c: CocycleSpec, point: SpectrumPoint, n: int, restarts: int = 4,
                        seed: int = 0, threads: int | None = None) -> SpectrumPoint:
    """Entropy of the best Markov measure for the dual multiplier ``q*``.

    The Markov measure maximising ``h_mu + <q*, chi_n(mu)>`` is the Lagrangian
    solution of the entropy maximisation under ``chi_n(mu) = alpha``; its entropy
    is reported together with the mismatch ``max_i |chi_i - alpha_i|``.
    """
    m, _ = maximize_variational(c, point.q_star, n, restarts=restarts, seed=seed, threads=threads)
    chi = lyapunov_vector(c, m, n).chi
    mismatch = float(np.max(np.abs(chi - point.alpha)))
    flags = (f"chi_mismatch={mismatch:.3e}",)
    return SpectrumPoint(point.alpha, entropy(m), point.q_star, "measure-sup", n, flags)


def spectrum_curve(c: CocycleSpec, targets, n: int, q_max: float = Q_MAX, seed: int = 0,
                   with_oracle: bool = True, with_measure: bool = False, measure_n: int | None = None,
                   eps: float | None = None, budget: int | None = None,
                   threads: int | None = None) -> list:
    """Duality values (and optionally oracle counts and measure bounds) for a list of targets.

    Targets outside the hull produce an empty ``duality`` point flagged ``outside``.
    """
    T = build_table(c, n, budget, threads)
    dom = estimate_spectrum_domain(c, n, table=T)
    if eps is None:
        eps = default_eps(dom)
    out = []
    for alpha in targets:
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        try:
            pt = legendre_entropy(c, alpha, n, q_max=q_max, seed=seed, table=T, domain=dom)
        except TargetOutsideDomain:
            out.append(SpectrumPoint(alpha, None, None, "duality", n, ("outside",)))
            continue
        out.append(pt)
        if with_oracle:
            o = level_set_entropy_oracle(c, alpha, n, eps, table=T)
            out.append(SpectrumPoint(alpha, None if o.is_empty else o.value, None, "oracle", n,
                                     (), o.count, eps))
        if with_measure:
            out.append(measure_lower_bound(c, pt, measure_n or min(n, 10), seed=seed, threads=threads))
    return out


def auto_targets(domain: SpectrumEstimate, count: int) -> list:
    """Evenly spaced targets along the principal axis of the hull, inside the margin."""
    hull = domain.hull
    if hull.rank == 0:
        return [hull.origin.copy()]
    u = hull.basis[0]
    V = hull.vertices - hull.origin
    proj = V @ u
    lo, hi = float(proj.min()), float(proj.max())
    ts = np.linspace(lo, hi, count + 2)[1:-1]
    return [hull.origin + t * u for t in ts]
