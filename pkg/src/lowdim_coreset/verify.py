"""Coreset certification.

In 1-d the cost of a coreset and of the data are both piecewise affine in
the center(s), with pieces delimited by a finite set of transition points.
On a piece the relative error ``(f_P - f_S) / f_P`` is a ratio of affine
functions and therefore monotone, so its supremum is attained at a piece
endpoint or approached at infinity.  The exact auditors enumerate those
endpoints.  Elsewhere only seeded search (a lower bound) is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CenterSet, WeightedPointSet, cost, fast_cost, relative_error
from .oned import Sorted1D

DEFAULT_ARRANGEMENT_CAP = 2000
_CHUNK = 1 << 20
# candidates re-evaluated with compensated sums before the witness is chosen
_RECHECK = 32


class AuditCapExceeded(ValueError):
    """The exact arrangement audit was asked to handle too many points."""


@dataclass
class AuditReport:
    max_rel_error: float
    witness_centers: CenterSet | None
    method: str
    evaluations: int
    seed: int | None = None
    at_infinity: bool = False
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        witness = None if self.witness_centers is None else self.witness_centers.centers.tolist()
        out = {
            "method": self.method,
            "max_rel_error": self.max_rel_error,
            "witness": witness,
            "evaluations": self.evaluations,
            "seed": self.seed,
        }
        if self.at_infinity:
            out["at_infinity"] = True
        out.update(self.extra)
        return out


def _ratio(fp: np.ndarray, fs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(fp - fs) / fp
    r = np.where(fp > 0, r, np.where(np.isclose(fs, 0.0, atol=1e-300), 0.0, np.inf))
    return r


def _weight_limit(P: WeightedPointSet, S: WeightedPointSet) -> float:
    """Relative error as every center runs off to infinity."""
    wp = P.total_weight
    return abs(wp - S.total_weight) / wp


def _finalize(P, S, cands: np.ndarray, ratios: np.ndarray, method: str, evaluations: int,
              limit: float = 0.0, extra: dict | None = None) -> AuditReport:
    """Pick the witness among the top candidates using compensated costs."""
    extra = extra or {}
    if cands.shape[0] == 0:
        return AuditReport(limit, None, method, evaluations, at_infinity=True, extra=extra)
    top = np.argsort(-ratios, kind="stable")[:_RECHECK]
    best_val, best_c = -1.0, None
    for t in top:
        C = CenterSet(cands[t].reshape(-1, 1))
        val = relative_error(cost(P, C), cost(S, C))
        if best_c is None or val > best_val or (val == best_val and tuple(cands[t]) < tuple(best_c)):
            best_val, best_c = val, cands[t]
    if limit > best_val:
        return AuditReport(limit, None, method, evaluations, at_infinity=True, extra=extra)
    return AuditReport(best_val, CenterSet(np.asarray(best_c).reshape(-1, 1)), method, evaluations, extra=extra)


def _check_1d(P: WeightedPointSet, S: WeightedPointSet) -> None:
    if P.dim != 1 or S.dim != 1:
        raise ValueError("exact 1-d audits need 1-d inputs")
    if len(P) == 0:
        raise ValueError("empty data set")


def audit_1d_1median(P: WeightedPointSet, S: WeightedPointSet, window: tuple[float, float] | None = None) -> AuditReport:
    """Exact ``sup_c |f_P(c) - f_S(c)| / f_P(c)`` for one center on the line."""
    _check_1d(P, S)
    sp, ss = Sorted1D.from_points(P), Sorted1D.from_points(S)
    cands = np.unique(np.concatenate([sp.coords, ss.coords]))
    limit = _weight_limit(P, S)
    if window is not None:
        lo, hi = window
        cands = np.unique(np.concatenate([cands[(cands >= lo) & (cands <= hi)], [lo, hi]]))
        limit = 0.0
    fp = sp.cost_one(cands)
    fs = ss.cost_one(cands)
    ratios = _ratio(fp, fs)
    return _finalize(P, S, cands.reshape(-1, 1), ratios, "exact-k1", cands.shape[0] + 2, limit)


def fixed0_candidates(P: WeightedPointSet, S: WeightedPointSet) -> np.ndarray:
    """Transition points of ``c -> cost(., {0, c})`` for both sets, plus 0."""
    u = np.concatenate([P.coords(), S.coords()])
    return np.unique(np.concatenate([u, 2.0 * u, [0.0]]))


def audit_1d_2median_fixed0(P: WeightedPointSet, S: WeightedPointSet,
                            window: tuple[float, float] | None = None) -> AuditReport:
    """Exact supremum of the relative error of ``c -> cost(., {0, c})``.

    Beyond the extreme candidates every point is served by the center at 0,
    so both functions are constant there and no limit term is needed.
    """
    _check_1d(P, S)
    sp, ss = Sorted1D.from_points(P), Sorted1D.from_points(S)
    cands = fixed0_candidates(P, S)
    if window is not None:
        lo, hi = window
        cands = np.unique(np.concatenate([cands[(cands >= lo) & (cands <= hi)], [lo, hi]]))
    fp = sp.cost_two(0.0, cands)
    fs = ss.cost_two(0.0, cands)
    ratios = _ratio(fp, fs)
    return _pair_finalize(P, S, np.zeros_like(cands), cands, ratios, "exact-k2-fixed", cands.shape[0])


def _pair_finalize(P, S, a: np.ndarray, b: np.ndarray, ratios: np.ndarray, method: str,
                   evaluations: int, limit: float = 0.0, limit_witness=None, extra=None) -> AuditReport:
    extra = extra or {}
    top = np.argsort(-ratios, kind="stable")[:_RECHECK]
    best_val, best = -1.0, None
    for t in top:
        pair = (float(min(a[t], b[t])), float(max(a[t], b[t])))
        C = CenterSet(np.array(pair).reshape(-1, 1))
        val = relative_error(cost(P, C), cost(S, C))
        if best is None or val > best_val or (val == best_val and pair < best):
            best_val, best = val, pair
    if limit_witness is not None and limit_witness.max_rel_error > best_val:
        return AuditReport(limit_witness.max_rel_error, limit_witness.witness_centers, method, evaluations,
                           at_infinity=limit_witness.at_infinity,
                           extra={**extra, "attained_by": "single-center boundary"})
    if limit > best_val:
        return AuditReport(limit, None, method, evaluations, at_infinity=True, extra=extra)
    return AuditReport(best_val, CenterSet(np.array(best).reshape(-1, 1)), method, evaluations, extra=extra)


def audit_1d_2median(P: WeightedPointSet, S: WeightedPointSet, cap: int = DEFAULT_ARRANGEMENT_CAP) -> AuditReport:
    """Exact supremum over two free centers on the line.

    The relative error is a ratio of affine functions on every cell of the
    arrangement ``{c1 = u}, {c2 = u}, {c1 + c2 = 2u}`` for ``u`` in
    ``P u S``; vertices of the arrangement in ``c1 <= c2`` are enumerated.
    Unbounded cells contribute either the single-center audit (one center
    escaping to infinity) or the total-weight limit (both escaping).
    """
    _check_1d(P, S)
    if len(P) + len(S) > cap:
        raise AuditCapExceeded(
            f"|P| + |S| = {len(P) + len(S)} exceeds the arrangement cap {cap}; use the stochastic auditor")
    sp, ss = Sorted1D.from_points(P), Sorted1D.from_points(S)
    u = np.unique(np.concatenate([P.coords(), S.coords()]))
    m = u.shape[0]
    best_r = -1.0
    best_pairs: list[tuple[float, float, float]] = []
    evaluations = 0

    def consume(a: np.ndarray, b: np.ndarray) -> None:
        nonlocal best_r, evaluations
        if a.size == 0:
            return
        r = _ratio(sp.cost_two(a, b), ss.cost_two(a, b))
        evaluations += a.size
        top = np.argsort(-r, kind="stable")[:_RECHECK]
        for t in top:
            best_pairs.append((float(r[t]), float(a[t]), float(b[t])))

    # grid vertices (u_i, u_j) with i <= j
    rows_per = max(1, _CHUNK // max(m, 1))
    for s in range(0, m, rows_per):
        ii, jj = np.meshgrid(np.arange(s, min(s + rows_per, m)), np.arange(m), indexing="ij")
        mask = ii <= jj
        consume(u[ii[mask]], u[jj[mask]])
    # vertices on diagonal lines c1 + c2 = 2u crossed by c1 = u' or c2 = u'
    for s in range(0, m, rows_per):
        uu, vv = np.meshgrid(u[s:s + rows_per], u, indexing="ij")
        other = 2.0 * uu - vv
        a = np.minimum(vv, other).ravel()
        b = np.maximum(vv, other).ravel()
        consume(a, b)
    single = audit_1d_1median(P, S)
    limit = _weight_limit(P, S)
    best_pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    top = best_pairs[:_RECHECK]
    a = np.array([t[1] for t in top])
    b = np.array([t[2] for t in top])
    ratios = np.array([t[0] for t in top])
    return _pair_finalize(P, S, a, b, ratios, "exact-k2", evaluations + single.evaluations,
                          limit=limit, limit_witness=single)


# -- stochastic search --------------------------------------------------------


def _rel(fp: float, fs: float) -> float:
    if fp <= 0:
        return 0.0 if fs == 0 else math.inf
    return abs(fp - fs) / fp


def audit_stochastic(P: WeightedPointSet, S: WeightedPointSet, k: int, z: float = 1.0, budget: int = 2000,
                     seed: int = 0, initial_centers: list | None = None) -> AuditReport:
    """Seeded multistart local search for a large relative error.

    The result is a lower bound on the true supremum.  Starts are random
    data points, coreset points and uniform draws from the bounding box;
    each start is refined by coordinate moves with a shrinking step.
    ``initial_centers`` are evaluated first and reported in
    ``extra['seeded_errors']``.
    """
    if P.dim != S.dim:
        raise ValueError("dimension mismatch")
    rng = np.random.default_rng(seed)
    d = P.dim
    pts, w = P.points, P.weights
    spts, sw = S.points, S.weights
    lo = np.minimum(pts.min(axis=0), spts.min(axis=0)) if len(S) else pts.min(axis=0)
    hi = np.maximum(pts.max(axis=0), spts.max(axis=0)) if len(S) else pts.max(axis=0)
    span = float(np.max(hi - lo)) or 1.0
    evals = 0

    def err(C: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        return _rel(fast_cost(pts, w, C, z), fast_cost(spts, sw, C, z) if len(S) else 0.0)

    best_val, best_C = -1.0, None
    seeded = []
    for C0 in initial_centers or []:
        C0 = C0.centers if isinstance(C0, CenterSet) else np.asarray(C0, dtype=float).reshape(-1, d)
        val = relative_error(cost(P, CenterSet(C0), z), cost(S, CenterSet(C0), z))
        seeded.append(val)
        evals += 1
        if val > best_val:
            best_val, best_C = val, C0.copy()

    def random_start() -> np.ndarray:
        kind = rng.integers(3)
        if kind == 0:
            return pts[rng.integers(len(P), size=k)].copy()
        if kind == 1 and len(S):
            return spts[rng.integers(len(S), size=k)].copy()
        return lo + (hi - lo) * rng.random((k, d))

    while evals < budget:
        C = random_start()
        val = err(C)
        step = 0.25 * span
        while step > 1e-9 * span and evals < budget:
            improved = False
            for ci in range(k):
                for axis in range(d):
                    for sgn in (1.0, -1.0):
                        trial = C.copy()
                        trial[ci, axis] += sgn * step
                        tv = err(trial)
                        if tv > val:
                            C, val, improved = trial, tv, True
                            break
                    if evals >= budget:
                        break
            if not improved:
                step /= 2.0
        if val > best_val:
            exact = relative_error(cost(P, CenterSet(C), z), cost(S, CenterSet(C), z))
            if exact > best_val:
                best_val, best_C = exact, C.copy()
    witness = None if best_C is None else CenterSet(best_C)
    return AuditReport(max(best_val, 0.0), witness, "stochastic", evals, seed=seed,
                       extra={"seeded_errors": seeded} if initial_centers else {})


# -- mixed coresets ---------------------------------------------------------


@dataclass
class MixedCheckReport:
    worst_ratio: float
    witness: np.ndarray | None
    samples: int
    seed: int
    per_radius: dict

    def to_json(self) -> dict:
        return {
            "worst_ratio": self.worst_ratio,
            "witness": None if self.witness is None else self.witness.tolist(),
            "samples": self.samples,
            "seed": self.seed,
            "per_radius": {repr(float(r)): v for r, v in self.per_radius.items()},
        }


def default_radii(count: int = 11) -> np.ndarray:
    return np.logspace(-4, 6, count, base=2.0)


def _costs_z(points: np.ndarray, weights: np.ndarray, centers: np.ndarray, z: float) -> np.ndarray:
    """Single-center cost ``sum w ||p - c||^z`` for every row of ``centers``."""
    out = np.empty(centers.shape[0])
    step = max(1, _CHUNK // max(points.shape[0], 1))
    sq_p = np.einsum("ij,ij->i", points, points)
    for s in range(0, centers.shape[0], step):
        c = centers[s:s + step]
        d2 = sq_p[None, :] - 2.0 * c @ points.T + np.einsum("ij,ij->i", c, c)[:, None]
        d2 = np.maximum(d2, 0.0)
        out[s:s + step] = (d2 ** (z / 2.0)) @ weights
    return out


def check_mixed_coreset(P: WeightedPointSet, S: WeightedPointSet, eps: float, z: float = 1.0,
                        radii=None, samples: int = 10_000, seed: int = 0) -> MixedCheckReport:
    """Worst ``|cost_z(S, c) - cost_z(P, c)| / (eps * max(1, ||c||)^z * |P|)`` over sampled centers.

    ``samples`` centers are split evenly over ``radii``; at each radius the
    directions are uniform on the sphere.  ``|P|`` is the total weight.
    """
    if P.dim != S.dim:
        raise ValueError("dimension mismatch")
    norms = np.linalg.norm(P.points, axis=1)
    if np.any(norms > 1 + 1e-12):
        raise ValueError("mixed coresets are defined for data inside the unit ball")
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    rng = np.random.default_rng(seed)
    per = max(1, samples // len(radii))
    W = P.total_weight
    worst, witness = 0.0, None
    per_radius = {}
    for r in radii:
        g = rng.standard_normal((per, P.dim))
        c = r * g / np.linalg.norm(g, axis=1, keepdims=True)
        cp = _costs_z(P.points, P.weights, c, z)
        cs = _costs_z(S.points, S.weights, c, z) if len(S) else np.zeros(per)
        ratio = np.abs(cs - cp) / (eps * max(1.0, r) ** z * W)
        j = int(np.argmax(ratio))
        per_radius[float(r)] = float(ratio[j])
        if ratio[j] > worst:
            worst, witness = float(ratio[j]), c[j]
    return MixedCheckReport(worst, witness, per * len(radii), seed, per_radius)
