"""Exterior powers, singular values, singular value potentials and cone geometry.

Every potential is returned in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NegativeS, ResolutionTooCoarse, SingularMatrix

MAX_DIM = 6
DEG_TOL = 1e-10
CONE_RESOLUTION = 1e-3


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if A.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {A.shape[0]} exceeds the cap {MAX_DIM}")
    return A


def singular_values(A) -> np.ndarray:
    """Singular values in decreasing order."""
    A = _as_matrix(A)
    return np.linalg.svd(A, compute_uv=False)


def is_invertible(A, tol: float = DEG_TOL) -> bool:
    """``|det A| > tol * ||A||^d``."""
    A = _as_matrix(A)
    d = A.shape[0]
    nrm = np.linalg.norm(A, 2)
    return bool(nrm > 0 and abs(np.linalg.det(A)) > tol * nrm ** d)


@lru_cache(maxsize=None)
def subsets(d: int, t: int) -> tuple:
    """Lexicographically ordered ``t``-subsets of ``range(d)``: the exterior basis."""
    return tuple(combinations(range(d), t))


def exterior_power(A, t: int) -> np.ndarray:
    """``t``-th exterior power: the matrix of ``t x t`` minors in lexicographic subset order.

    Works on a single matrix or on a stack of shape ``(..., d, d)``.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[-1]
    if not 1 <= t <= d:
        raise ValueError(f"exterior index must lie in 1..{d}")
    if t == 1:
        return A.copy()
    S = np.array(subsets(d, t))
    m = len(S)
    # minors[..., a, b] = det A[S[a]][:, S[b]]
    sub = A[..., S[:, None, :, None], S[None, :, None, :]]
    out = np.linalg.det(sub)
    return out.reshape(A.shape[:-2] + (m, m))


def exterior_dim(d: int, t: int) -> int:
    return math.comb(d, t)


def log_singular_values(A) -> np.ndarray:
    """Logs of the singular values; ``-inf`` where a singular value vanishes."""
    s = singular_values(A)
    with np.errstate(divide="ignore"):
        return np.log(s)


def q_to_t(q) -> np.ndarray:
    """Increments ``t_i = q_i - q_{i+1}`` with ``q_{d+1} = 0``."""
    q = np.asarray(q, dtype=float)
    return q - np.append(q[1:], 0.0)


def log_psi_q(A, q) -> float:
    """``log psi^q(A) = sum_i q_i log sigma_i(A)``."""
    q = np.asarray(q, dtype=float)
    A = _as_matrix(A)
    if q.shape != (A.shape[0],):
        raise ValueError("q must have one entry per dimension")
    ls = log_singular_values(A)
    mask = q != 0
    if np.any(np.isneginf(ls[mask])):
        if np.any(q[mask & np.isneginf(ls)] < 0):
            raise SingularMatrix("negative exponent on a vanishing singular value")
        return -math.inf
    return float(np.dot(q[mask], ls[mask]))


def log_psi_q_exterior(A, q) -> float:
    """Same potential through exterior norms: ``sum_{i<d} t_i log||A^i|| + q_d log|det A|``."""
    A = _as_matrix(A)
    d = A.shape[0]
    t = q_to_t(q)
    total = 0.0
    for i in range(1, d):
        if t[i - 1] != 0:
            total += t[i - 1] * math.log(np.linalg.norm(exterior_power(A, i), 2))
    if t[d - 1] != 0:
        total += t[d - 1] * math.log(abs(np.linalg.det(A)))
    return total


def phi_s_exponents(s: float, d: int) -> np.ndarray:
    """Exponent vector ``(1,..,1, s-m, 0,..,0)`` turning ``psi^q`` into ``phi^s`` for ``0 <= s <= d``."""
    if s < 0:
        raise NegativeS(f"s = {s} is negative")
    if s > d:
        raise ValueError("embedding only defined for s <= d")
    m = min(int(math.floor(s)), d)
    q = np.zeros(d)
    q[:m] = 1.0
    if m < d:
        q[m] = s - m
    return q


def phi_s(A, s: float) -> float:
    """Log of the singular value function ``phi^s``; ``(s/d) log|det A|`` once ``s >= d``."""
    if s < 0:
        raise NegativeS(f"s = {s} is negative")
    A = _as_matrix(A)
    d = A.shape[0]
    if s >= d:
        return (s / d) * math.log(abs(np.linalg.det(A)))
    return log_psi_q(A, phi_s_exponents(s, d))


def projective_angle(u, v) -> float:
    """Angle between the lines spanned by ``u`` and ``v``, in ``[0, pi/2]``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = abs(np.dot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    s = np.linalg.norm(np.outer(u, v) - np.outer(v, u)) / (math.sqrt(2) * np.linalg.norm(u) * np.linalg.norm(v))
    return float(math.atan2(s, c))


@dataclass(frozen=True)
class Cone:
    """Projective cone ``{v : angle(v, center) <= radius}``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        nrm = np.linalg.norm(c)
        if nrm == 0:
            raise ValueError("cone center must be non-zero")
        if not 0 < self.radius < math.pi / 2:
            raise ValueError("cone radius must lie in (0, pi/2)")
        object.__setattr__(self, "center", c / nrm)

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, v) -> bool:
        return projective_angle(v, self.center) <= self.radius


@dataclass(frozen=True)
class ConeCheck:
    """Outcome of a cone-image test; ``slack`` is ``radius(dst)`` minus the worst image angle."""

    contained: bool
    slack: float
    method: str


def _line_angle(v) -> np.ndarray:
    return np.arctan2(v[..., 1], v[..., 0])


def _wrap_half(a):
    # wrap an angle difference into (-pi/2, pi/2]
    return -((-np.asarray(a) + math.pi / 2) % math.pi - math.pi / 2)


def planar_cone_slack(As, src: Cone, dst: Cone) -> np.ndarray:
    """Exact angular slack of ``A(src)`` inside ``dst`` for a stack of invertible 2x2 matrices.

    A projective map of the circle of lines is a monotone bijection, so the image
    of the arc ``src`` is the arc between the images of its endpoints traversed in
    the orientation given by the sign of the determinant.
    """
    As = np.asarray(As, dtype=float).reshape(-1, 2, 2)
    c = _line_angle(src.center)
    b1 = np.array([math.cos(c - src.radius), math.sin(c - src.radius)])
    b2 = np.array([math.cos(c + src.radius), math.sin(c + src.radius)])
    g1 = _line_angle(As @ b1)
    g2 = _line_angle(As @ b2)
    det = np.linalg.det(As)
    span = np.where(det > 0, (g2 - g1) % math.pi, (g1 - g2) % math.pi)
    start = _wrap_half(g1 - _line_angle(dst.center))
    lo = np.where(det > 0, start, start - span)
    hi = np.where(det > 0, start + span, start)
    worst = np.maximum(np.abs(lo), np.abs(hi))
    # an image arc running past +-pi/2 has left the chart; its worst angle is pi/2
    worst = np.where((hi > math.pi / 2) | (lo < -math.pi / 2), math.pi / 2, worst)
    return dst.radius - worst


def _orthonormal_complement(c: np.ndarray) -> np.ndarray:
    m = len(c)
    Q, _ = np.linalg.qr(np.column_stack([c, np.eye(m)]))
    return Q[:, 1:m]


def _sampled_slack(A: np.ndarray, src: Cone, dst: Cone, h: float) -> ConeCheck:
    U = _orthonormal_complement(src.center)
    rs = math.sin(src.radius)
    count = max(8, int(math.ceil(2 * math.pi * rs / h)))
    phi = np.arange(count) * (2 * math.pi / count)
    B = (math.cos(src.radius) * src.center[:, None]
         + rs * (U[:, 0:1] * np.cos(phi) + U[:, 1:2] * np.sin(phi)))
    img = A @ B
    img = img / np.linalg.norm(img, axis=0)
    cosang = np.clip(np.abs(dst.center @ img), 0.0, 1.0)
    worst = float(np.max(np.arccos(cosang)))
    slack = dst.radius - worst
    if slack <= 0:
        return ConeCheck(False, slack, "sampled")
    # boundary points are within chord h/2 of a sample; bound the image angle drift
    sv = singular_values(A)
    ratio = sv[0] * (h / 2) / sv[-1]
    margin = math.pi / 2 if ratio >= 1 else math.asin(ratio)
    if slack > margin:
        return ConeCheck(True, slack - margin, "sampled")
    raise ResolutionTooCoarse(
        f"sampled slack {slack:.3g} does not exceed the Lipschitz margin {margin:.3g}")


def _slemma_feasible(A: np.ndarray, src: Cone, tau2: float, v2: np.ndarray) -> bool:
    m = len(v2)
    F1 = np.outer(src.center, src.center) - math.cos(src.radius) ** 2 * np.eye(m)
    F2 = A.T @ (np.outer(v2, v2) - math.cos(tau2) ** 2 * np.eye(m)) @ A
    upper = float(src.center @ F2 @ src.center) / math.sin(src.radius) ** 2
    if upper <= 0:
        return False
    res = minimize_scalar(lambda lam: -np.linalg.eigvalsh(F2 - lam * F1)[0],
                          bounds=(0.0, upper), method="bounded",
                          options={"xatol": 1e-12 * max(upper, 1.0)})
    return -res.fun > 0


def slemma_slack(A, src: Cone, dst: Cone, tol: float = 1e-10) -> float:
    """Angular slack via the S-lemma and bisection on the target radius.

    ``A(C1)`` lies inside the open cone of radius ``r`` iff some ``lam >= 0``
    makes ``F2(r) - lam F1`` positive definite.
    """
    A = np.asarray(A, dtype=float)
    lo, hi = 0.0, math.pi / 2
    if not _slemma_feasible(A, src, hi - 1e-12, dst.center):
        return dst.radius - math.pi / 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _slemma_feasible(A, src, mid, dst.center):
            hi = mid
        else:
            lo = mid
    return dst.radius - hi


def cone_image_contained(A, src: Cone, dst: Cone, h: float = CONE_RESOLUTION,
                         method: str = "auto") -> ConeCheck:
    """Decide whether ``A`` maps ``src`` into the interior of ``dst``.

    Parameters
    ----------
    A : array_like
        Invertible ``m x m`` matrix.
    src, dst : Cone
        Cones in ``R^m``.
    h : float
        Boundary sampling resolution (radians) for the sampled method.
    method : {"auto", "exact", "sampled", "slemma"}
        ``auto`` uses the exact arc computation for ``m = 2``, boundary
        sampling with a Lipschitz margin for ``m = 3`` and the S-lemma above.

    Returns
    -------
    ConeCheck
        Verdict and worst-case angular slack.
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if src.dim != m or dst.dim != m:
        raise ValueError("cone dimensions do not match the matrix")
    if m == 1:
        return ConeCheck(True, dst.radius, "exact")
    if method == "auto":
        method = "exact" if m == 2 else ("sampled" if m == 3 else "slemma")
    if method == "exact":
        if m != 2:
            raise ValueError("exact arc computation needs m = 2")
        slack = float(planar_cone_slack(A, src, dst)[0])
        return ConeCheck(slack > 0, slack, "exact")
    if method == "sampled":
        if m > 3:
            raise ValueError("boundary sampling is only offered for m <= 3")
        if m == 2:
            slack = float(planar_cone_slack(A, src, dst)[0])
            return ConeCheck(slack > 0, slack, "exact")
        return _sampled_slack(A, src, dst, h)
    if method == "slemma":
        slack = slemma_slack(A, src, dst)
        return ConeCheck(slack > 0, slack, "slemma")
    raise ValueError(f"unknown method {method!r}")


def projective_lipschitz_estimate(A, samples: int = 256, seed: int = 0) -> float:
    """Sampled estimate of the projective Lipschitz constant of ``A``.

    Only an estimate: the true constant is a supremum over all pairs of lines.
    """
    A = np.asarray(A, dtype=float)
    rng = np.random.default_rng(seed)
    m = A.shape[0]
    best = 0.0
    for _ in range(samples):
        u = rng.standard_normal(m)
        v = u + 1e-6 * rng.standard_normal(m)
        d0 = projective_angle(u, v)
        if d0 > 0:
            best = max(best, projective_angle(A @ u, A @ v) / d0)
    return best
