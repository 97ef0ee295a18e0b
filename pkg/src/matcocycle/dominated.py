"""Induced dominated subsystems: loop letters with cone certificates and their pressure.

Each admissible core word ``I`` of length ``n`` is wrapped into a letter
``prefix + I + suffix`` whose prefix leaves the periodic point ``p`` and whose
suffix returns to it.  The letter matrix is the loop product
``H^s A^L(omega) H^u``; for one-step cocycles both holonomies are the identity,
so it is the plain product along the letter.  A letter is accepted once its
matrix maps the cone of radius ``tau2`` around the leading eigendirection of
``A^{per}(p)`` (in every exterior power ``t < d``) into the cone of radius
``tau1`` around the same direction, which makes the cone field invariant and
the induced one-step cocycle over the full shift on the letters dominated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cocycle import CocycleSpec
from .errors import InvariantViolation, SearchExhausted
from .measures import MarkovMeasure, block_entropy, entropy, lyapunov_vector
from .multilinear import Cone, cone_image_contained, exterior_power, planar_cone_slack
from .pressure import PressureEstimate, estimate_pressure
from .structure import check_typical, periodic_matrix
from .symbolic import HomoclinicPointSym, PeriodicPointSym, SubshiftSpec, word_array, word_count
from .tables import build_table, default_threads

TAU1 = 0.1
TAU2 = 0.3
DEFAULT_K0 = 6


def cone_centers(c: CocycleSpec, p: PeriodicPointSym) -> dict:
    """Leading eigendirection of ``(A^{per}(p))^t`` for ``t = 1..d-1``."""
    P = periodic_matrix(c, p)
    centers = {}
    for t in range(1, c.dimension):
        ev, V = np.linalg.eig(exterior_power(P, t))
        i = int(np.argmax(np.abs(ev)))
        v = np.real(V[:, i])
        centers[t] = v / np.linalg.norm(v)
    return centers


@dataclass
class Letter:
    """One induced letter: ``prefix + core + suffix`` and its loop matrix."""

    core: tuple
    prefix: tuple
    suffix: tuple
    matrix: np.ndarray
    slack: float

    @property
    def word(self) -> tuple:
        return self.prefix + self.core + self.suffix

    @property
    def m1(self) -> int:
        return len(self.prefix)

    @property
    def m2(self) -> int:
        return len(self.suffix)


def _cone_slacks(mats: np.ndarray, centers: dict, tau1: float, tau2: float, d: int) -> np.ndarray:
    """Minimum over ``t`` of the angular slack of ``B^t(C(v_t, tau2))`` inside ``C(v_t, tau1)``."""
    out = np.full(len(mats), np.inf)
    for t in range(1, d):
        v = centers[t]
        src, dst = Cone(v, tau2), Cone(v, tau1)
        W = mats if t == 1 else exterior_power(mats, t)
        if W.shape[-1] == 2:
            s = planar_cone_slack(W, src, dst)
        else:
            s = np.array([cone_image_contained(M, src, dst).slack for M in W])
        out = np.minimum(out, s)
    return out


class _Connectors:
    """Products over the admissible connector words of each length."""

    def __init__(self, c: CocycleSpec, K0: int):
        self.c = c
        self.words = {}
        self.mats = {}
        d = c.dimension
        for m in range(0, K0 + 1):
            if m == 0:
                self.words[0] = np.zeros((1, 0), dtype=np.uint8)
                self.mats[0] = np.eye(d)[None]
                continue
            W = word_array(c.sft, m, budget=None)
            M = np.broadcast_to(np.eye(d), (len(W), d, d)).copy()
            for j in range(m):
                M = c.generator_table[W[:, j].astype(np.int64)] @ M
            self.words[m] = W
            self.mats[m] = M


def _search(c: CocycleSpec, conn: _Connectors, p0: int, I: tuple, AI: np.ndarray, centers: dict,
            tau1: float, tau2: float, K0: int, min_len: int):
    Q = c.sft.transitions.astype(bool)
    d = c.dimension
    for total in range(2 * min_len, 2 * K0 + 1):
        for m1 in range(max(min_len, total - K0), min(K0, total - min_len) + 1):
            m2 = total - m1
            Pw, Pm = conn.words[m1], conn.mats[m1]
            Sw, Sm = conn.words[m2], conn.mats[m2]
            if m1 > 0:
                keep = (Pw[:, 0] == p0) & Q[Pw[:, -1], I[0]]
                Pw, Pm = Pw[keep], Pm[keep]
            if m2 > 0:
                keep = Q[I[-1], Sw[:, 0]] & Q[Sw[:, -1], p0]
                Sw, Sm = Sw[keep], Sm[keep]
            if len(Pw) == 0 or len(Sw) == 0:
                continue
            # prefix-major lexicographic order of candidates
            B = Sm[None, :, :, :] @ (AI @ Pm)[:, None, :, :]
            B = B.reshape(-1, d, d)
            slack = _cone_slacks(B, centers, tau1, tau2, d)
            ok = np.nonzero(slack > 0)[0]
            if len(ok):
                j = int(ok[0])
                a, b = divmod(j, len(Sw))
                return Letter(I, tuple(int(s) for s in Pw[a]), tuple(int(s) for s in Sw[b]),
                              B[j].copy(), float(slack[j]))
    return None


def _check_setting(c: CocycleSpec, p: PeriodicPointSym, z: HomoclinicPointSym | None):
    if c.window != 1:
        raise ValueError("induced subsystems are built for one-step cocycles")
    p.validate(c.sft)
    if z is not None:
        v = check_typical(c, p, z)
        if not v.passed:
            raise InvariantViolation(f"(p, z) is not typical: {v.verdict}")


def find_loop_for_word(c: CocycleSpec, p: PeriodicPointSym, z: HomoclinicPointSym | None, I,
                       tau1: float = TAU1, tau2: float = TAU2, K0: int = DEFAULT_K0) -> Letter:
    """First letter (shortest connectors, then lexicographic) around ``I`` passing the cone test.

    Connectors have lengths ``1 <= m_i <= K0``; on a full shift empty
    connectors are also allowed and tried first.

    Raises
    ------
    SearchExhausted
        If no connector pair up to ``K0`` certifies the cone condition.
    """
    _check_setting(c, p, z)
    I = c.sft.check_word(I)
    centers = cone_centers(c, p)
    conn = _Connectors(c, K0)
    min_len = 0 if c.sft.is_full_shift else 1
    AI = c.product_along(I)
    letter = _search(c, conn, p.symbol(0), I, AI, centers, tau1, tau2, K0, min_len)
    if letter is None:
        raise SearchExhausted([I], K0)
    return letter


@dataclass
class InducedCocycle:
    """Induced alphabet with loop matrices; ``spec`` is the one-step cocycle over the full shift on the letters."""

    n: int
    K0: int
    letters: list
    tau1: float
    tau2: float
    centers: dict
    base_period: tuple
    spec: CocycleSpec = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.letters)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([len(L.word) for L in self.letters])

    def verify_cones(self) -> float:
        """Re-run the cone certificate on every letter; returns the smallest slack."""
        mats = np.array([L.matrix for L in self.letters])
        d = mats.shape[-1]
        slack = _cone_slacks(mats, self.centers, self.tau1, self.tau2, d)
        worst = float(np.min(slack))
        if worst <= 0:
            bad = int(np.argmin(slack))
            raise InvariantViolation(f"letter {self.letters[bad].word} fails the cone condition")
        return worst

    def to_json(self) -> dict:
        data = self.spec.to_json()
        data["induced"] = {
            "n": self.n,
            "K0": self.K0,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "base_period": list(self.base_period),
            "centers": {str(t): v.tolist() for t, v in self.centers.items()},
            "letters": [{"core": list(L.core), "prefix": list(L.prefix), "suffix": list(L.suffix)}
                        for L in self.letters],
        }
        return data

    @classmethod
    def from_json(cls, data: dict, spec: CocycleSpec) -> "InducedCocycle":
        meta = data["induced"]
        letters = []
        for a, entry in enumerate(meta["letters"]):
            letters.append(Letter(tuple(entry["core"]), tuple(entry["prefix"]), tuple(entry["suffix"]),
                                  np.array(spec.generator((a,))), 0.0))
        centers = {int(t): np.array(v, dtype=float) for t, v in meta["centers"].items()}
        ic = cls(int(meta["n"]), int(meta["K0"]), letters, float(meta["tau1"]), float(meta["tau2"]),
                 centers, tuple(meta["base_period"]), spec)
        mats = np.array([L.matrix for L in letters])
        slack = _cone_slacks(mats, centers, ic.tau1, ic.tau2, spec.dimension)
        for L, s in zip(letters, slack):
            L.slack = float(s)
        ic.verify_cones()
        return ic


def build_induced(c: CocycleSpec, p: PeriodicPointSym, z: HomoclinicPointSym | None, n: int,
                  tau1: float = TAU1, tau2: float = TAU2, K0: int = DEFAULT_K0,
                  threads: int | None = None) -> InducedCocycle:
    """One letter per admissible core word of length ``n``.

    Raises
    ------
    SearchExhausted
        Listing every core word without a certified letter.
    InvariantViolation
        If the alphabet exceeds ``#(L_n u ... u L_{n+2K0})``.
    """
    _check_setting(c, p, z)
    centers = cone_centers(c, p)
    conn = _Connectors(c, K0)
    min_len = 0 if c.sft.is_full_shift else 1
    cores = build_table(c, n).cores
    p0 = p.symbol(0)

    def run(chunk):
        out = []
        for row in chunk:
            I = tuple(int(s) for s in row)
            out.append(_search(c, conn, p0, I, c.product_along(I), centers, tau1, tau2, K0, min_len))
        return out

    threads = default_threads() if threads is None else max(1, threads)
    chunks = np.array_split(cores, max(1, min(threads, len(cores))))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(ch) for ch in chunks]
    letters = [L for part in parts for L in part]
    failed = [tuple(int(s) for s in row) for row, L in zip(cores, letters) if L is None]
    if failed:
        raise SearchExhausted(failed, K0)
    bound = sum(word_count(c.sft, n + ell) for ell in range(0, 2 * K0 + 1))
    if len(letters) > bound:
        raise InvariantViolation("induced alphabet exceeds the counting bound")
    spec = CocycleSpec(SubshiftSpec.full(len(letters)), {(a,): L.matrix for a, L in enumerate(letters)},
                       c.holder_alpha)
    return InducedCocycle(n, K0, letters, tau1, tau2, centers, p.repeating_word, spec)


def almost_additivity_constants(ic: InducedCocycle) -> np.ndarray:
    """``log kappa_t = min_{a,b} log ||B^t(ab)|| - log ||B^t(a)|| - log ||B^t(b)||`` for ``t < d``."""
    c = ic.spec
    d = c.dimension
    T1 = build_table(c, 1, budget=None)
    T2 = build_table(c, 2, budget=None)
    N = ic.size
    out = np.empty(d - 1)
    for t in range(1, d):
        l1 = T1.lognorm[:, t - 1]
        l2 = T2.lognorm[:, t - 1].reshape(N, N)
        out[t - 1] = float(np.min(l2 - l1[:, None] - l1[None, :]))
    return out


def induced_pressure(ic: InducedCocycle, q, k_max: int = 2, budget: int | None = None) -> PressureEstimate:
    """``(1/k) log sum_{I_1..I_k} psi^q(B(I_1 ... I_k))`` for ``k <= k_max``.

    The almost-additivity constant ``kappa`` fitted on letter pairs gives
    ``log Z_{k+m} >= log Z_k + log Z_m + log C_2`` with
    ``log C_2 = sum_{t_i > 0, i < d} t_i log kappa_i``; this is checked on every
    computed triple and the superadditive lower bracket is attached.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    d = ic.spec.dimension
    t = q - np.append(q[1:], 0.0)
    log_kappa = almost_additivity_constants(ic) if ic.size ** 2 <= (budget or 1 << 22) else None
    log_c2 = None
    if log_kappa is not None:
        log_c2 = float(sum(t[i - 1] * log_kappa[i - 1] for i in range(1, d) if t[i - 1] > 0))
    return estimate_pressure(ic.spec, q, k_max, qm_constant_log=log_c2,
                             gap_k=0 if log_c2 is not None else None, budget=budget)


@dataclass
class ComparisonRow:
    n: int
    alphabet_size: int
    max_connector: int
    induced: float
    direct: float

    @property
    def difference(self) -> float:
        return abs(self.induced - self.direct)

    def to_json(self) -> dict:
        return {"n": self.n, "alphabet_size": self.alphabet_size, "max_connector": self.max_connector,
                "induced": self.induced, "direct": self.direct, "difference": self.difference}


def pressure_comparison(c: CocycleSpec, p: PeriodicPointSym, z: HomoclinicPointSym | None, q, n_list,
                        tau1: float = TAU1, tau2: float = TAU2, K0: int = DEFAULT_K0, k_max: int = 2,
                        n_ref: int | None = None, threads: int | None = None) -> list:
    """``(1/n) P_{n,D}`` of the induced system next to the direct estimate ``P_hat``.

    ``P_hat`` is the pressure estimate of ``c`` at depth ``n_ref``, by default
    ``k_max * max(n_list)``: the deepest word length reached by the induced
    sums, so with empty connectors both sides run over the same words.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    n_ref = k_max * max(n_list) if n_ref is None else n_ref
    direct = estimate_pressure(c, q, n_ref, n_min=n_ref).point_estimate
    rows = []
    for n in n_list:
        ic = build_induced(c, p, z, n, tau1, tau2, K0, threads)
        est = induced_pressure(ic, q, k_max)
        conn = max(max(L.m1, L.m2) for L in ic.letters)
        rows.append(ComparisonRow(n, ic.size, conn, est.values[-1][1] / n, direct))
    return rows


@dataclass
class TransferReport:
    """Entropy and exponent bookkeeping between an induced measure and its pushed-forward measure.

    ``mean_length`` is ``E[L]``, the expected letter length; the pushed measure
    spreads each letter over its ``L`` positions.  Abramov's formula gives
    ``h_nu = h_mu / E[L]`` and ``chi_nu = chi_mu / E[L]`` when the letters form a
    uniquely decodable code (``prefix_free`` certifies this).
    """

    h_mu: float
    mean_length: float
    h_nu_abramov: float
    h_nu_block: float | None
    chi_mu: float
    chi_nu_abramov: float
    prefix_free: bool
    checks: dict


def _pushed_block_masses(ic: InducedCocycle, mu: MarkovMeasure, depth: int, cap: int = 200000) -> dict | None:
    """Cylinder masses of length ``depth`` of the pushed-forward measure, or ``None`` past ``cap`` paths."""
    words = [L.word for L in ic.letters]
    P, pi = mu.stochastic, mu.stationary
    EL = float(pi @ np.array([len(w) for w in words]))
    masses: dict = {}
    paths = 0

    def extend(seq, last, prob, start):
        nonlocal paths
        paths += 1
        if paths > cap:
            raise OverflowError
        if len(seq) - start >= depth:
            key = tuple(seq[start:start + depth])
            masses[key] = masses.get(key, 0.0) + prob
            return
        for b in np.nonzero(P[last] > 0)[0]:
            extend(seq + list(words[b]), b, prob * P[last, b], start)

    try:
        for a in np.nonzero(pi > 0)[0]:
            for j in range(len(words[a])):
                extend(list(words[a]), a, pi[a] / EL, j)
    except OverflowError:
        return None
    return masses


def entropy_exponent_transfer(ic: InducedCocycle, mu: MarkovMeasure, n: int, q=None,
                              k: int = 1, depth: int | None = None) -> TransferReport:
    """Compare ``h_mu``, ``chi_mu`` on the letters with the pushed measure ``nu`` on the base.

    The inequalities ``n h_nu <= h_mu <= (n + 2K0) h_nu + ((n + 2K0)/n) log(2K0 + 1)``,
    ``n chi_nu <= chi_mu`` and ``chi_mu <= (n + 2K0) chi_nu`` are evaluated with
    the Abramov values; the exponent ones are stated for a non-negative
    exponent.  ``depth`` additionally computes block estimates for ``nu``.
    """
    d = ic.spec.dimension
    q = np.ones(1) if q is None else np.atleast_1d(np.asarray(q, dtype=float))
    if q.shape != (d,):
        q = np.concatenate([q, np.zeros(d - len(q))])[:d]
    h_mu = entropy(mu)
    EL = float(mu.stationary @ ic.lengths)
    chi_mu = lyapunov_vector(ic.spec, mu, k, q).chi_psi_q
    h_nu = h_mu / EL
    chi_nu = chi_mu / EL
    words = [L.word for L in ic.letters]
    prefix_free = not any(a != b and b[:len(a)] == a for a in words for b in words)
    h_block = None
    if depth is not None and depth >= 2:
        upper = _pushed_block_masses(ic, mu, depth)
        lower = _pushed_block_masses(ic, mu, depth - 1)
        if upper is not None and lower is not None:
            pu = np.array(list(upper.values()))
            pl = np.array(list(lower.values()))
            h_block = block_entropy(mu, pu) - block_entropy(mu, pl)
    K0 = ic.K0
    tol = 1e-9
    checks = {
        "entropy_lower": n * h_nu <= h_mu + tol,
        "entropy_upper": h_mu <= (n + 2 * K0) * h_nu + (n + 2 * K0) / n * math.log(2 * K0 + 1) + tol,
        "exponent_lower": n * chi_nu <= chi_mu + tol if chi_mu >= 0 else None,
        "exponent_upper": chi_mu <= (n + 2 * K0) * chi_nu + tol if chi_mu >= 0 else None,
    }
    return TransferReport(h_mu, EL, h_nu, h_block, chi_mu, chi_nu, prefix_free, checks)
