"""Structural checks: pinching, twisting, typicality, quasi-multiplicativity and domination.

Every verdict is empirical and carries its margin and witness.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .cocycle import CocycleSpec, check_fiber_bunched, stable_holonomy, unstable_holonomy
from .errors import BudgetExceeded, CombinatorialBudget
from .multilinear import exterior_power
from .symbolic import HomoclinicPointSym, PeriodicPointSym
from .tables import build_table
from .verdict import FAIL, INCONCLUSIVE, PASS, StructureVerdict

GAP_TOL = 1e-8
LIN_TOL = 1e-8
COMBINATORIAL_CAP = 10 ** 6
QM_SLOPE = -0.05
QM_R2 = 0.9
DOMINATION_SLOPE = -1e-3
DOMINATION_R2 = 0.9

__all__ = [
    "check_fiber_bunched", "periodic_matrix", "check_pinching", "homoclinic_loop_matrix",
    "twisting_from_matrices", "check_twisting", "check_typical", "probe_quasi_multiplicativity",
    "check_domination", "exterior_cocycle",
]


def periodic_matrix(c: CocycleSpec, p: PeriodicPointSym) -> np.ndarray:
    """``A^{per(p)}(p)``."""
    p.validate(c.sft)
    return c.product_at(p.point(), p.period)


def _modulus_gap(M: np.ndarray):
    ev = np.linalg.eigvals(M)
    mod = np.sort(np.abs(ev))[::-1]
    if len(mod) < 2:
        return 1.0, ev
    gaps = (mod[:-1] - mod[1:]) / mod[:-1]
    return float(np.min(gaps)), ev


def check_pinching(c: CocycleSpec, p: PeriodicPointSym, gap_tol: float = GAP_TOL) -> StructureVerdict:
    """Simple eigenvalues of pairwise distinct modulus for ``A^{per}(p)`` and its exterior powers ``t < d``."""
    P = periodic_matrix(c, p)
    d = c.dimension
    margin = 1.0
    witness = {"period_word": list(p.repeating_word), "eigenvalues": {}}
    worst_t = None
    for t in range(1, max(d, 2)):
        gap, ev = _modulus_gap(exterior_power(P, t))
        witness["eigenvalues"][str(t)] = sorted(ev.tolist(), key=lambda z: -abs(z))
        if gap < margin:
            margin, worst_t = gap, t
    witness["worst_power"] = worst_t
    return StructureVerdict("pinching", PASS if margin > gap_tol else FAIL, margin, witness, gap_tol)


def homoclinic_loop_matrix(c: CocycleSpec, p: PeriodicPointSym, z: HomoclinicPointSym,
                           t: int = 1) -> np.ndarray:
    """Loop matrix ``A^n(p)^{-1} H^s_{T^n p <- T^n z} A^n(z) H^u_{z <- p}`` at exterior power ``t``.

    Each factor maps between the fibres along the loop, so the composite acts on
    the fibre over ``p``.
    """
    if z.base != p:
        raise ValueError("homoclinic point must be based at p")
    z.validate(c.sft)
    n = z.entry_time
    P, Z = p.point(), z.point()
    Hu = unstable_holonomy(c, P, Z).matrix
    Hs = stable_holonomy(c, Z.shift(n), P.shift(n)).matrix
    An_z = c.product_at(Z, n)
    An_p = c.product_at(P, n)
    factors = [np.linalg.inv(An_p), Hs, An_z, Hu]
    if t == 1:
        return factors[0] @ factors[1] @ factors[2] @ factors[3]
    W = [exterior_power(F, t) for F in factors]
    return W[0] @ W[1] @ W[2] @ W[3]


def _eigenbasis(M: np.ndarray):
    ev, V = np.linalg.eig(M)
    order = np.argsort(-np.abs(ev), kind="stable")
    ev, V = ev[order], V[:, order]
    return ev, V


def twisting_from_matrices(P: np.ndarray, H: np.ndarray, lin_tol: float = LIN_TOL,
                           cap: int = COMBINATORIAL_CAP, gap_tol: float = GAP_TOL,
                           kind: str = "twisting") -> StructureVerdict:
    """Twisting test for a pinching matrix ``P`` and loop matrix ``H`` acting on the same space.

    For every ``I, J`` with ``|I| + |J| = dim`` the columns
    ``{H v_i / |H v_i|}_{i in I} u {v_j}_{j in J}`` must have smallest singular
    value above ``lin_tol``.  Smaller index sets inherit independence (and a
    larger smallest singular value) from these maximal ones.
    """
    D = P.shape[0]
    gap, _ = _modulus_gap(P)
    if gap <= gap_tol:
        return StructureVerdict(kind, INCONCLUSIVE, gap, {"reason": "eigenvalue moduli not separated"}, lin_tol)
    ev, V = _eigenbasis(P)
    if np.max(np.abs(V.imag)) > 0 or np.max(np.abs(ev.imag)) > 0:
        V = V.real
    V = V.real / np.linalg.norm(V.real, axis=0)
    HV = H @ V
    HV = HV / np.linalg.norm(HV, axis=0)
    total = math.comb(2 * D, D)
    if total > cap:
        raise CombinatorialBudget(f"{total} index-set pairs exceed the cap {cap}")
    worst, worst_pair = math.inf, None
    for s in range(D + 1):
        Is = list(combinations(range(D), s))
        Js = list(combinations(range(D), D - s))
        chunk = max(1, 200000 // max(1, len(Js)))
        for start in range(0, len(Is), chunk):
            block = Is[start:start + chunk]
            mats = np.empty((len(block) * len(Js), D, D))
            r = 0
            for I in block:
                A = HV[:, list(I)]
                for J in Js:
                    mats[r, :, :s] = A
                    mats[r, :, s:] = V[:, list(J)]
                    r += 1
            smin = np.linalg.svd(mats, compute_uv=False)[:, -1]
            j = int(np.argmin(smin))
            if smin[j] < worst:
                worst = float(smin[j])
                worst_pair = ([int(i) for i in block[j // len(Js)]], [int(i) for i in Js[j % len(Js)]])
    witness = {"worst_I": worst_pair[0], "worst_J": worst_pair[1], "min_singular_value": worst,
               "pairs_checked": total}
    return StructureVerdict(kind, PASS if worst > lin_tol else FAIL, worst, witness, lin_tol)


def check_twisting(c: CocycleSpec, p: PeriodicPointSym, z: HomoclinicPointSym, t: int = 1,
                   lin_tol: float = LIN_TOL, cap: int = COMBINATORIAL_CAP) -> StructureVerdict:
    """Twisting of the loop matrix against the eigenbasis of ``A^{per}(p)`` at exterior power ``t``."""
    P = exterior_power(periodic_matrix(c, p), t)
    H = homoclinic_loop_matrix(c, p, z, t)
    v = twisting_from_matrices(P, H, lin_tol, cap)
    v.witness["power"] = t
    return v


def check_typical(c: CocycleSpec, p: PeriodicPointSym, z: HomoclinicPointSym,
                  gap_tol: float = GAP_TOL, lin_tol: float = LIN_TOL) -> StructureVerdict:
    """Pinching and twisting at every exterior power ``1 <= t <= d-1``."""
    d = c.dimension
    pin = check_pinching(c, p, gap_tol)
    witness = {"pinching": pin.to_json(), "twisting": []}
    if d == 1:
        return StructureVerdict("typical", PASS, pin.margin, witness, lin_tol)
    margin = pin.margin
    verdict = pin.verdict
    for t in range(1, d):
        tw = check_twisting(c, p, z, t, lin_tol)
        witness["twisting"].append(tw.to_json())
        margin = min(margin, tw.margin)
        if tw.verdict == FAIL or verdict == FAIL:
            verdict = FAIL
        elif tw.verdict == INCONCLUSIVE:
            verdict = INCONCLUSIVE
    return StructureVerdict("typical", verdict, margin, witness, lin_tol)


def _fit(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2:
        return 0.0, 0.0, float(ys[0]) if len(ys) else 0.0
    A = np.column_stack([xs, np.ones_like(xs)])
    (slope, icpt), *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - A @ np.array([slope, icpt])
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 0.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), r2, float(icpt)


def _codes(words: np.ndarray, k: int) -> np.ndarray:
    code = np.zeros(len(words), dtype=np.int64)
    for j in range(words.shape[1]):
        code = code * k + words[:, j].astype(np.int64)
    return code


def probe_quasi_multiplicativity(c: CocycleSpec, n_pairs: int, k_max: int,
                                 budget: int | None = None, slope_tol: float = QM_SLOPE,
                                 r2_tol: float = QM_R2) -> StructureVerdict:
    """Empirical simultaneous quasi-multiplicativity.

    For each connector length ``k <= k_max`` and depth ``m <= n_pairs`` computes
    ``c_k(m) = min_{|I|,|J| <= m} max_{K in L_k} min_i ||A^i(IKJ)|| / (||A^i(I)|| ||A^i(J)||)``
    (cylinder maxima throughout) and fits ``log c_k(m)`` against ``m``.  A
    decaying fit (slope below ``slope_tol`` with R^2 above ``r2_tol``) for every
    feasible ``k`` is a fail; a non-decaying positive floor for some ``k`` is a pass.
    """
    k_alpha = c.k
    d = c.dimension
    idx = list(range(1, d)) if d > 1 else [1]
    tables = {}

    def table(n):
        if n not in tables:
            T = build_table(c, n, budget)
            cores = T.cores
            ln = np.column_stack([T.log_wedge_norm(i) for i in idx])
            tables[n] = (cores, _codes(cores, k_alpha), ln)
        return tables[n]

    per_k = {}
    witness_pairs = {}
    for k in range(0, k_max + 1):
        best = {}
        feasible = True
        for a in range(1, n_pairs + 1):
            for b in range(1, n_pairs + 1):
                Ia, Ic, Iln = table(a)
                Ja, Jc, Jln = table(b)
                Kc = np.zeros(1, dtype=np.int64) if k == 0 else table(k)[1]
                total = a + k + b
                count = len(Ic) * len(Kc) * len(Jc)
                if budget is not None and count > budget:
                    raise BudgetExceeded(count, budget)
                Wc_sorted, Wln = table(total)[1], table(total)[2]
                code = ((Ic[:, None, None] * k_alpha ** k + Kc[None, :, None]) * k_alpha ** b
                        + Jc[None, None, :])
                pos = np.searchsorted(Wc_sorted, code)
                pos_c = np.minimum(pos, len(Wc_sorted) - 1)
                # codes of a fixed length are unique, so a hit means IKJ is admissible
                ok = Wc_sorted[pos_c] == code
                ratio = Wln[pos_c] - Iln[:, None, None, :] - Jln[None, None, :, :]
                r = np.where(ok, ratio.min(axis=-1), -np.inf)
                over_k = r.max(axis=1)
                worst = float(over_k.min())
                if not math.isfinite(worst):
                    feasible = False
                wi, wj = np.unravel_index(int(np.argmin(over_k)), over_k.shape)
                best[(a, b)] = (worst, [int(s) for s in Ia[wi]], [int(s) for s in Ja[wj]])
        if not feasible:
            per_k[k] = None
            continue
        seq, wit = [], []
        for m in range(1, n_pairs + 1):
            cands = [best[(a, b)] for a in range(1, m + 1) for b in range(1, m + 1)]
            w = min(cands, key=lambda v: v[0])
            seq.append(w[0])
            wit.append({"I": w[1], "J": w[2]})
        per_k[k] = seq
        witness_pairs[k] = wit
    ms = list(range(1, n_pairs + 1))
    report = {"thresholds": {"slope": slope_tol, "r2": r2_tol}, "log_c": {}, "fits": {}}
    bounded, decaying = [], []
    for k, seq in per_k.items():
        if seq is None:
            report["log_c"][str(k)] = None
            continue
        slope, r2, _ = _fit(ms, seq)
        half = ms[len(ms) // 2:]
        tail_slope = _fit(half, seq[len(ms) // 2:])[0] if len(half) >= 2 else slope
        report["log_c"][str(k)] = seq
        report["fits"][str(k)] = {"slope": slope, "r2": r2, "tail_slope": tail_slope}
        if slope < slope_tol and r2 > r2_tol:
            decaying.append(k)
        elif tail_slope >= slope_tol:
            bounded.append(k)
    if bounded:
        k_best = max(bounded, key=lambda k: per_k[k][-1])
        report["k"] = k_best
        report["log_c_floor"] = per_k[k_best][-1]
        return StructureVerdict("qm", PASS, math.exp(per_k[k_best][-1]), report, 0.0)
    feasible_ks = [k for k, s in per_k.items() if s is not None]
    if feasible_ks and len(decaying) == len(feasible_ks):
        k_w = max(decaying, key=lambda k: per_k[k][-1])
        report["k"] = k_w
        report["witness_pair"] = witness_pairs[k_w][-1]
        return StructureVerdict("qm", FAIL, report["fits"][str(k_w)]["slope"], report, slope_tol)
    return StructureVerdict("qm", INCONCLUSIVE, 0.0, report, slope_tol)


def check_domination(c: CocycleSpec, i: int, n_max: int, budget: int | None = None,
                     slope_tol: float = DOMINATION_SLOPE, r2_tol: float = DOMINATION_R2) -> StructureVerdict:
    """Uniform exponential gap ``g_n = max_I sigma_{i+1}(A(I)) / sigma_i(A(I)) <= C tau^n``.

    Fits ``log g_n`` against ``n``; passes when the slope and the slope over the
    second half of the range are both below ``slope_tol`` and the fit has
    ``R^2 > r2_tol``.  The witness carries ``tau = exp(slope)`` and ``C``.
    """
    d = c.dimension
    if not 1 <= i <= d - 1:
        raise ValueError(f"domination index must lie in 1..{d - 1}")
    logs, worst_words = [], []
    for n in range(1, n_max + 1):
        T = build_table(c, n, budget)
        ls = T.logsv
        gap = ls[:, i] - ls[:, i - 1]
        j = int(np.argmax(gap))
        logs.append(float(gap[j]))
        worst_words.append([int(s) for s in T.words[j]])
    ns = list(range(1, n_max + 1))
    slope, r2, _ = _fit(ns, logs)
    half = ns[len(ns) // 2:]
    tail = _fit(half, logs[len(ns) // 2:])[0] if len(half) >= 2 else slope
    tau = math.exp(slope)
    C = max(math.exp(g - n * slope) for n, g in zip(ns, logs))
    witness = {"index": i, "tau": tau, "C": C, "log_g": logs, "r2": r2, "tail_slope": tail,
               "worst_word": worst_words[-1]}
    ok = slope < slope_tol and tail < slope_tol and r2 > r2_tol
    return StructureVerdict(f"dominated-index-{i}", PASS if ok else FAIL, -slope, witness, -slope_tol)


def exterior_cocycle(c: CocycleSpec, t: int) -> CocycleSpec:
    """The cocycle ``A^t`` on the same base."""
    gens = {u: exterior_power(M, t) for u, M in c.generators.items()}
    return CocycleSpec(c.sft, gens, c.holder_alpha, c.offset)
