"""Hard instances for coreset lower bounds and the closed-form quantities
that certify them.

Two families live here.  The 1-d interval instance is a union of intervals
whose lengths grow by 4 and densities shrink by 16; its 2-median cost with
one center pinned at 0 is locally quadratic, so no small coreset can follow
it.  The subspace instances place unit basis vectors in far apart affine
subspaces of R^{d+1}; three center families and an adversarial query expose
coresets that keep too few points per subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CenterSet, WeightedPointSet, cost
from .oned import Sorted1D

# relative tolerance for certificate identities
IDENTITY_RTOL = 1e-9


# -- interval instance ---------------------------------------------------------


@dataclass(frozen=True)
class Interval1DInstance:
    eps: float
    eps_eff: float
    left: np.ndarray
    right: np.ndarray
    density: np.ndarray
    counts: np.ndarray
    points: WeightedPointSet

    @property
    def n_intervals(self) -> int:
        return len(self.left)

    @property
    def masses(self) -> np.ndarray:
        return self.density * (self.right - self.left)

    @property
    def span(self) -> float:
        return float(self.right[-1])

    def interval_of(self, x: np.ndarray) -> np.ndarray:
        """Interval index of each coordinate (-1 outside every interval)."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.right, x, side="left")
        ok = (idx < self.n_intervals) & (x >= 0)
        return np.where(ok, np.minimum(idx, self.n_intervals - 1), -1)

    def params(self) -> dict:
        return {"eps": self.eps, "eps_eff": self.eps_eff, "intervals": self.n_intervals,
                "points_per_interval": int(self.counts[0])}


def interval_count(eps: float) -> int:
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    # tolerate 1/eps landing a hair above an integer
    return max(1, math.ceil(1.0 / eps - 1e-9))


def interval_endpoints(n_intervals: int) -> tuple[np.ndarray, np.ndarray]:
    i = np.arange(1, n_intervals + 1, dtype=float)
    right = (4.0 ** i - 1.0) / 3.0
    left = (4.0 ** (i - 1) - 1.0) / 3.0
    return left, right


def gen_interval_instance(eps: float, m0: int = 64) -> Interval1DInstance:
    """Midpoint-rule discretization with ``m0`` points per interval.

    Each point in interval i carries weight ``(1/4)^(i-1) / m0`` so that the
    interval mass matches the continuous measure exactly.
    """
    if m0 < 4:
        raise ValueError("need at least 4 points per interval")
    K = interval_count(eps)
    left, right = interval_endpoints(K)
    i = np.arange(K, dtype=float)
    density = 16.0 ** -i
    masses = 4.0 ** -i
    frac = (np.arange(m0) + 0.5) / m0
    coords = left[:, None] + (right - left)[:, None] * frac[None, :]
    weights = np.repeat(masses / m0, m0)
    P = WeightedPointSet(coords.reshape(-1, 1), weights)
    return Interval1DInstance(eps, 1.0 / K, left, right, density, np.full(K, m0), P)


def _overlaps(inst: Interval1DInstance, a: np.ndarray, b: np.ndarray):
    lo = np.clip(a[:, None], inst.left[None, :], inst.right[None, :])
    hi = np.clip(b[:, None], inst.left[None, :], inst.right[None, :])
    return lo, np.maximum(hi, lo)


def measure(inst: Interval1DInstance, a, b) -> np.ndarray:
    """Continuous mass of ``[a, b]``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    lo, hi = _overlaps(inst, a, b)
    return ((hi - lo) * inst.density).sum(axis=1)


def _linear_part(inst, a, b, c, sign):
    # sum over intervals of int_{[a,b]} sign * (c - p) dlambda, kept in
    # product form so huge coordinates do not cancel
    lo, hi = _overlaps(inst, a, b)
    mid = 0.5 * (lo + hi)
    return (inst.density * (hi - lo) * sign * (c[:, None] - mid)).sum(axis=1)


def continuous_cost(inst: Interval1DInstance, c) -> np.ndarray:
    """Cost of the continuous measure against centers ``{0, c}``."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    zero = np.zeros_like(c)
    inf = np.full_like(c, np.inf)
    cp = np.maximum(c, 0.0)
    # all mass sits on [0, inf), so c <= 0 leaves every point at 0
    near0 = _linear_part(inst, zero, cp / 2, zero, -1.0)
    between = _linear_part(inst, cp / 2, cp, cp, 1.0)
    beyond = _linear_part(inst, cp, inf, cp, -1.0)
    return near0 + between + beyond


def continuous_derivative(inst: Interval1DInstance, c) -> np.ndarray:
    """``lambda[c/2, c] - lambda[c, inf)`` for ``c > 0``."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return measure(inst, c / 2, c) - measure(inst, c, np.full_like(c, np.inf))


def discrete_cost_fixed0(P: WeightedPointSet, c) -> np.ndarray:
    s1 = Sorted1D.from_points(P)
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return s1.cost_two(np.zeros_like(c), c)


@dataclass
class FeatureReport:
    bound: float
    max_cost: float
    argmax: float
    bound_ok: bool
    curvature: list[dict] = field(default_factory=list)
    curvature_ok: bool = True
    derivative: list[dict] = field(default_factory=list)
    derivative_ok: bool = True

    @property
    def ok(self) -> bool:
        return self.bound_ok and self.curvature_ok and self.derivative_ok

    def to_json(self) -> dict:
        return {"bound": self.bound, "max_cost": self.max_cost, "argmax": self.argmax,
                "bound_ok": self.bound_ok, "curvature_ok": self.curvature_ok,
                "derivative_ok": self.derivative_ok, "curvature": self.curvature,
                "derivative": self.derivative}


def feature_audit(inst: Interval1DInstance, grid: int = 1_000_000, fd_points: int = 9,
                  curvature_rtol: float = 0.01, derivative_rtol: float = 1e-6) -> FeatureReport:
    """Check the three analytic features of the interval instance.

    The cost bound is checked on the realized points over a grid (half
    uniform, half geometric, since intervals span many scales) plus every
    breakpoint.  Curvature and slope are checked on the continuous measure.
    """
    span = inst.span
    half = grid // 2
    g = np.concatenate([np.linspace(-span, 2 * span, grid - half),
                        np.geomspace(1e-6, 2 * span, half)])
    x = inst.points.coords()
    cand = np.concatenate([g, x, 2 * x])
    s1 = Sorted1D.from_points(inst.points)
    vals = np.empty(cand.size)
    step = 200_000
    for s in range(0, cand.size, step):
        cc = cand[s:s + step]
        vals[s:s + step] = s1.cost_two(np.zeros_like(cc), cc)
    j = int(np.argmax(vals))
    bound = 2.0 / inst.eps_eff
    rep = FeatureReport(bound, float(vals[j]), float(cand[j]), bool(vals[j] <= bound))

    for i in range(inst.n_intervals):
        l, r = inst.left[i], inst.right[i]
        h = 0.01 * (r - l)
        cs = np.linspace(l + (r - l) / 3 + h, r - h, fd_points)
        f0 = continuous_cost(inst, cs)
        fp = continuous_cost(inst, cs + h)
        fm = continuous_cost(inst, cs - h)
        f2 = (fp - 2 * f0 + fm) / h ** 2
        expect = 1.5 * inst.density[i]
        dev = float(np.max(np.abs(f2 / expect - 1)))
        rep.curvature.append({"interval": i + 1, "expected": expect,
                              "measured": float(np.median(f2)), "max_rel_dev": dev})
        if not dev <= curvature_rtol:
            rep.curvature_ok = False

    samples = np.concatenate([inst.right, 0.5 * (inst.left + inst.right) + inst.right / 6])
    for c in samples:
        h = 1e-7 * max(1.0, c)
        fd = (continuous_cost(inst, c + h) - continuous_cost(inst, c - h))[0] / (2 * h)
        formula = float(continuous_derivative(inst, c)[0])
        # the slope can vanish inside an interval; measure error against the
        # local interval mass instead
        i = int(inst.interval_of(np.array([c]))[0])
        scale = max(abs(formula), float(inst.masses[max(i, 0)]))
        rel = abs(fd - formula) / scale
        rep.derivative.append({"c": float(c), "formula": formula, "finite_difference": float(fd), "rel_err": rel})
        if not rel <= derivative_rtol:
            rep.derivative_ok = False
    return rep


def drop_interval(inst: Interval1DInstance, index: int) -> WeightedPointSet:
    """The instance minus interval ``index`` (0-based), reweighted to the full mass."""
    x = inst.points.coords()
    keep = inst.interval_of(x) != index
    w = inst.points.weights[keep]
    w = w * (inst.points.total_weight / math.fsum(w))
    return WeightedPointSet(inst.points.points[keep], w)


def uniform_subsample(P: WeightedPointSet, size: int, seed: int = 0) -> WeightedPointSet:
    """``size`` points drawn without replacement, each weighted ``W / size``."""
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(P), size=size, replace=False))
    return WeightedPointSet(P.points[idx], np.full(size, P.total_weight / size))


def missed_intervals(inst: Interval1DInstance, S: WeightedPointSet) -> list[int]:
    """Intervals whose open interior holds no point of ``S``."""
    x = S.coords()
    hit = set()
    for i in range(inst.n_intervals):
        if np.any((x > inst.left[i]) & (x < inst.right[i])):
            hit.add(i)
    return [i for i in range(inst.n_intervals) if i not in hit]


# -- k copies and the query family --------------------------------------------


def default_copy_offset(inst: Interval1DInstance) -> float:
    return 10.0 * inst.span


def gen_k_copies(inst: Interval1DInstance, k: int, L: float | None = None) -> WeightedPointSet:
    """``k/2`` copies of the instance shifted by multiples of ``L``."""
    if k < 2 or k % 2:
        raise ValueError("k must be a positive even number")
    if L is None:
        L = default_copy_offset(inst)
    if L <= inst.span:
        raise ValueError("offset L must exceed the instance span")
    x = inst.points.coords()
    shifts = L * np.arange(k // 2)
    coords = (x[None, :] + shifts[:, None]).reshape(-1, 1)
    w = np.tile(inst.points.weights, k // 2)
    return WeightedPointSet(coords, w)


def query_family_Q(inst: Interval1DInstance, k: int, t: float, chosen: dict[int, int],
                   L: float | None = None) -> CenterSet:
    """Centers ``Q(t)`` for copies of the instance.

    ``chosen`` maps a copy index to the interval (both 0-based) whose
    interior the coreset misses; those copies get three centers
    ``{l_first, l + t (r - l), r}``, the others only ``l_first``.
    """
    if not 1 / 3 - 1e-12 <= t <= 1 + 1e-12:
        raise ValueError("t must lie in [1/3, 1]")
    if k < 2 or k % 2:
        raise ValueError("k must be a positive even number")
    if L is None:
        L = default_copy_offset(inst)
    copies = k // 2
    centers = []
    for i in range(copies):
        base = i * L
        centers.append(base + inst.left[0])
        if i in chosen:
            j = chosen[i]
            if not 0 <= j < inst.n_intervals:
                raise ValueError(f"interval index {j} out of range")
            l, r = inst.left[j], inst.right[j]
            centers += [base + l + t * (r - l), base + r]
    for i in chosen:
        if not 0 <= i < copies:
            raise ValueError(f"copy index {i} out of range")
    if len(centers) > k:
        raise ValueError(f"query uses {len(centers)} centers but k = {k}")
    return CenterSet(np.array(centers).reshape(-1, 1))


# -- subspace instances ---------------------------------------------------------


@dataclass(frozen=True)
class SubspaceInstance:
    k: int
    d: int
    z: float
    L: float
    variant: str
    groups: int
    per_group: int
    points: WeightedPointSet

    def anchor(self, j: int) -> np.ndarray:
        """``j L e_0`` for a 1-based subspace index."""
        a = np.zeros(self.d + 1)
        a[0] = j * self.L
        return a

    def params(self) -> dict:
        return {"k": self.k, "d": self.d, "z": self.z, "L": self.L, "variant": self.variant,
                "groups": self.groups, "per_group": self.per_group}


def default_separation(k: int, d: int, z: float) -> float:
    return 1e6 * k * d * max(1.0, 2.0 ** z)


def gen_subspace_instance(k: int, d: int, variant: str = "main", z: float = 2.0,
                          L: float | None = None) -> SubspaceInstance:
    if variant == "main":
        if k < 2 or k % 2 or d < 2 or d % 2:
            raise ValueError("main variant needs even k >= 2 and even d >= 2")
        groups, per = k // 2, d // 2
    elif variant == "appendix":
        if k < 1 or d < 1:
            raise ValueError("k and d must be positive")
        groups, per = k, d
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if L is None:
        L = default_separation(k, d, z)
    pts = np.zeros((groups * per, d + 1))
    for j in range(groups):
        rows = slice(j * per, (j + 1) * per)
        pts[rows, 0] = (j + 1) * L
        pts[rows, 1:] = np.eye(per, d)
    return SubspaceInstance(k, d, float(z), float(L), variant, groups, per, WeightedPointSet(pts))


@dataclass(frozen=True)
class CoresetPartition:
    """A candidate coreset split by nearest subspace."""
    S: WeightedPointSet
    group: np.ndarray      # 1-based subspace index per point
    delta: np.ndarray      # offset along e_0 from the subspace
    tilde: np.ndarray      # coordinates 1..d
    members: tuple[np.ndarray, ...]
    small: tuple[int, ...]  # the index set I (1-based)
    threshold: float

    def is_small(self, j: int) -> bool:
        return j in self.small


def partition_coreset(inst: SubspaceInstance, S: WeightedPointSet, threshold: float | None = None) -> CoresetPartition:
    """Assign coreset points to nearest subspaces; ``I`` holds groups with at most ``threshold`` points."""
    if S.dim != inst.d + 1:
        raise ValueError("coreset dimension must be d + 1")
    if threshold is None:
        threshold = inst.d / 4
    if len(S):
        x0 = S.points[:, 0]
        j = np.clip(np.rint(x0 / inst.L), 1, inst.groups).astype(np.int64)
        delta = x0 - j * inst.L
        tilde = S.points[:, 1:].copy()
    else:
        j = np.zeros(0, dtype=np.int64)
        delta = np.zeros(0)
        tilde = np.zeros((0, inst.d))
    members = tuple(np.flatnonzero(j == g) for g in range(1, inst.groups + 1))
    small = tuple(g for g in range(1, inst.groups + 1) if members[g - 1].size <= threshold)
    return CoresetPartition(S, j, delta, tilde, members, small, float(threshold))


def _require_main(inst: SubspaceInstance) -> None:
    if inst.variant != "main":
        raise ValueError("center families are defined on the main variant")


def _default_direction(inst: SubspaceInstance) -> np.ndarray:
    v = np.zeros(inst.d)
    v[inst.d // 2] = 1.0
    return v


def orthogonal_direction(inst: SubspaceInstance, vectors: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to ``e_1..e_{d/2}`` and to every row of ``vectors``."""
    half = inst.d // 2
    M = np.asarray(vectors, dtype=float).reshape(-1, inst.d)[:, half:]
    target = np.zeros(inst.d - half)
    target[0] = 1.0
    if M.shape[0]:
        # project e_{d/2+1} off the row space; fall back to any null vector
        coef, *_ = np.linalg.lstsq(M.T, target, rcond=None)
        x = target - M.T @ coef
        if np.linalg.norm(x) < 1e-8:
            _, sv, vt = np.linalg.svd(M)
            rank = int(np.sum(sv > 1e-10 * max(sv.max(initial=0.0), 1.0)))
            if rank >= vt.shape[0]:
                raise ValueError("no direction orthogonal to the coreset points exists")
            x = vt[rank]
    else:
        x = target
    out = np.zeros(inst.d)
    out[half:] = x / np.linalg.norm(x)
    return out


def _center(inst: SubspaceInstance, j: int, v: np.ndarray) -> np.ndarray:
    c = inst.anchor(j)
    c[1:] = v
    return c


def centers_C1(inst: SubspaceInstance, part: CoresetPartition) -> CenterSet:
    """Two copies of a unit offset per subspace, orthogonal to the coreset points in small groups."""
    _require_main(inst)
    rows = []
    for j in range(1, inst.groups + 1):
        if part.is_small(j):
            v = orthogonal_direction(inst, part.tilde[part.members[j - 1]])
        else:
            v = _default_direction(inst)
        c = _center(inst, j, v)
        rows += [c, c]
    return CenterSet(np.array(rows))


def _c2_sides(w, tilde, delta, z, v):
    base = (tilde ** 2).sum(axis=1) + 1.0 + delta ** 2
    proj = np.abs(tilde @ v)
    lhs = math.fsum(w * (base - 2 * proj) ** (z / 2))
    t = len(w)
    rhs = math.fsum(w * base ** (z / 2)) - min(1.0, z / 2) * 2 * math.fsum(
        w * base ** (z / 2 - 1) * np.linalg.norm(tilde, axis=1)) / math.sqrt(t)
    return lhs, rhs


def _antipodal_search(w, tilde, delta, z, restarts, rng):
    d = tilde.shape[1]
    base = (tilde ** 2).sum(axis=1) + 1.0 + delta ** 2
    a = w * base ** (z / 2 - 1)
    starts = [row / n for row, n in zip(tilde, np.linalg.norm(tilde, axis=1)) if n > 0]
    while len(starts) < restarts:
        g = rng.standard_normal(d)
        starts.append(g / np.linalg.norm(g))
    best, best_val = None, math.inf
    for v in starts[:max(restarts, 1)]:
        for _ in range(100):
            s = np.sign(tilde @ v)
            s[s == 0] = 1.0
            u = (a * s) @ tilde
            nu = np.linalg.norm(u)
            if nu == 0:
                break
            u /= nu
            if np.allclose(u, v, atol=1e-14):
                break
            v = u
        val = math.fsum(w * (base - 2 * np.abs(tilde @ v)) ** (z / 2))
        if val < best_val:
            best, best_val = v, val
    return best


@dataclass
class C2Report:
    checks: list[dict]
    all_hold: bool


def centers_C2(inst: SubspaceInstance, part: CoresetPartition, z: float | None = None,
               restarts: int = 64, seed: int = 0) -> tuple[CenterSet, C2Report]:
    """Antipodal unit pairs for small groups, validated against the small-set inequality."""
    _require_main(inst)
    z = inst.z if z is None else float(z)
    rng = np.random.default_rng(seed)
    rows, checks = [], []
    for j in range(1, inst.groups + 1):
        if not part.is_small(j):
            c = _center(inst, j, _default_direction(inst))
            rows += [c, c]
            continue
        idx = part.members[j - 1]
        if idx.size == 0:
            v = np.zeros(inst.d)
            v[0] = 1.0
        else:
            w = part.S.weights[idx]
            v = _antipodal_search(w, part.tilde[idx], part.delta[idx], z, restarts, rng)
            lhs, rhs = _c2_sides(w, part.tilde[idx], part.delta[idx], z, v)
            holds = lhs <= rhs * (1 + 1e-12) + 1e-12
            checks.append({"group": j, "lhs": lhs, "rhs": rhs, "holds": bool(holds)})
            if not holds:
                raise RuntimeError(f"no antipodal pair satisfying the small-set bound found for group {j}")
        rows += [_center(inst, j, v), _center(inst, j, -v)]
    return CenterSet(np.array(rows)), C2Report(checks, all(c["holds"] for c in checks))


@dataclass(frozen=True)
class HadamardBasis:
    m: int
    vectors: np.ndarray

    def padded(self, d: int) -> np.ndarray:
        if d < self.m:
            raise ValueError("cannot pad to a smaller dimension")
        out = np.zeros((self.m, d))
        out[:, :self.m] = self.vectors
        return out


def sylvester(m: int) -> np.ndarray:
    """Integer ``+-1`` Sylvester matrix of order ``m``."""
    if m < 1 or m & (m - 1):
        raise ValueError("m must be a power of two")
    H = np.ones((1, 1), dtype=np.int64)
    while H.shape[0] < m:
        H = np.block([[H, H], [H, -H]])
    return H


def hadamard(m: int) -> HadamardBasis:
    return HadamardBasis(m, sylvester(m) / math.sqrt(m))


def hadamard_order(d: int) -> int:
    """Largest power of two not exceeding ``d``."""
    if d < 1:
        raise ValueError("d must be positive")
    return 1 << (d.bit_length() - 1)


def centers_C3(inst: SubspaceInstance, part: CoresetPartition, ell: int) -> CenterSet:
    """``+-h_ell`` pairs for small groups (1-based ``ell``), default copies elsewhere."""
    _require_main(inst)
    m = hadamard_order(inst.d)
    if not 1 <= ell <= m:
        raise ValueError(f"ell must lie in [1, {m}]")
    h = hadamard(m).padded(inst.d)[ell - 1]
    rows = []
    for j in range(1, inst.groups + 1):
        if part.is_small(j):
            rows += [_center(inst, j, h), _center(inst, j, -h)]
        else:
            c = _center(inst, j, _default_direction(inst))
            rows += [c, c]
    return CenterSet(np.array(rows))


def cost_C1_expected(inst: SubspaceInstance, z: float | None = None) -> float:
    z = inst.z if z is None else z
    return inst.k * inst.d / 4 * 2.0 ** (z / 2)


def cost_C3_expected(inst: SubspaceInstance, n_small: int) -> float:
    """Closed form at ``z = 2``."""
    m = hadamard_order(inst.d)
    return inst.k * inst.d / 2 - inst.d * n_small / math.sqrt(m)


def cost_to_basis_bound(d: int, k: int, z: float) -> float:
    """Lower bound on ``sum_{i <= d/2} min_l ||e_i - c_l||^z`` over antipodal unit families."""
    return 2.0 ** (z / 2 - 1) * d - 2.0 ** (z / 2) * max(1.0, z / 2) * math.sqrt(k * d / 2)


def cost_to_basis(d: int, centers: np.ndarray, z: float) -> float:
    E = np.eye(d)[: d // 2]
    diff = E[:, None, :] - np.asarray(centers)[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)
    return math.fsum(dist ** z)


# -- adversarial query against subset coresets ----------------------------------


@dataclass
class GapReport:
    cost_P_Q: float
    cost_S_Q: float
    gap: float
    formula_gap: float
    v_norms: np.ndarray
    skipped: list[int]
    cost_P_anchor: float
    cost_S_anchor: float

    @property
    def rel_error(self) -> float:
        return abs(self.gap) / self.cost_P_Q

    @property
    def formula_ok(self) -> bool:
        return abs(self.gap - self.formula_gap) <= IDENTITY_RTOL * max(1.0, abs(self.cost_P_Q))

    def to_json(self) -> dict:
        return {"cost_P_Q": self.cost_P_Q, "cost_S_Q": self.cost_S_Q, "gap": self.gap,
                "formula_gap": self.formula_gap, "rel_error": self.rel_error,
                "v_norms": [float(x) for x in self.v_norms], "skipped": self.skipped,
                "cost_P_anchor": self.cost_P_anchor, "cost_S_anchor": self.cost_S_anchor,
                "formula_ok": self.formula_ok}


def subset_weights(inst: SubspaceInstance, coreset: WeightedPointSet) -> np.ndarray:
    """Per ``(group, basis index)`` weights of a weighted subset of the instance."""
    if coreset.dim != inst.d + 1:
        raise ValueError("coreset dimension must be d + 1")
    W = np.zeros((inst.groups, inst.per_group))
    for p, w in zip(coreset.points, coreset.weights):
        j = int(round(p[0] / inst.L))
        i = int(np.argmax(p[1:]))
        if not (1 <= j <= inst.groups and i < inst.per_group):
            raise ValueError("coreset point is not an instance point")
        expect = inst.anchor(j)
        expect[i + 1] = 1.0
        if not np.array_equal(p, expect):
            raise ValueError("coreset point is not an instance point")
        W[j - 1, i] += w
    return W


def adversarial_query_subset(inst: SubspaceInstance, coreset: WeightedPointSet) -> tuple[CenterSet, GapReport]:
    """Queries ``q_j = v_j / ||v_j|| + j L e_0`` exposing a subset coreset at ``z = 2``."""
    if inst.variant != "appendix":
        raise ValueError("adversarial subset query is defined on the appendix variant")
    W = subset_weights(inst, coreset)
    V = W - 1.0
    norms = np.linalg.norm(V, axis=1)
    rows, skipped = [], []
    for j in range(1, inst.groups + 1):
        q = inst.anchor(j)
        if norms[j - 1] > 0:
            q[1:inst.per_group + 1] = V[j - 1] / norms[j - 1]
        else:
            skipped.append(j)
        rows.append(q)
    Q = CenterSet(np.array(rows))
    anchors = CenterSet(np.array([inst.anchor(j) for j in range(1, inst.groups + 1)]))
    cP = cost(inst.points, Q, 2.0)
    cS = cost(coreset, Q, 2.0)
    total_w = math.fsum(W.ravel())
    formula = 2 * inst.groups * inst.d - 2 * total_w + 2 * math.fsum(norms)
    rep = GapReport(cP, cS, cP - cS, formula, norms, skipped,
                    cost(inst.points, anchors, 2.0), cost(coreset, anchors, 2.0))
    return Q, rep


def keep_fraction_coreset(inst: SubspaceInstance, keep: float = 0.8) -> WeightedPointSet:
    """First ``keep`` share of each group's points, weights ``1 / keep``."""
    count = keep * inst.per_group
    kept = int(round(count))
    if abs(kept - count) > 1e-9 or kept < 1:
        raise ValueError("keep * d must be a positive integer")
    idx = np.concatenate([np.arange(j * inst.per_group, j * inst.per_group + kept) for j in range(inst.groups)])
    return WeightedPointSet(inst.points.points[idx], np.full(idx.size, 1.0 / keep))


# -- inequality ledger ----------------------------------------------------------


@dataclass
class LedgerEntry:
    name: str
    kind: str          # identity | bound | coreset-implied | constant
    lhs: float
    rhs: float
    relation: str      # ==, <=, >=

    @property
    def holds(self) -> bool:
        tol = IDENTITY_RTOL * max(1.0, abs(self.lhs), abs(self.rhs))
        if self.relation == "==":
            return abs(self.lhs - self.rhs) <= tol
        if self.relation == "<=":
            return self.lhs <= self.rhs + tol
        return self.lhs >= self.rhs - tol

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind, "lhs": self.lhs, "rhs": self.rhs,
                "relation": self.relation, "holds": self.holds}


@dataclass
class InequalityLedger:
    z: float
    eps: float
    small: tuple[int, ...]
    entries: list[LedgerEntry]

    def failures(self, kinds=None) -> list[LedgerEntry]:
        return [e for e in self.entries if (kinds is None or e.kind in kinds) and not e.holds]

    def to_json(self) -> dict:
        return {"z": self.z, "eps": self.eps, "small_groups": list(self.small),
                "entries": [e.to_json() for e in self.entries]}


def threshold_t(z: float) -> float:
    q = (z / 2) ** 2
    return 4 * max(1.0, q) / min(1.0, q)


def lb_inequality_ledger(inst: SubspaceInstance, S: WeightedPointSet, z: float | None = None,
                         eps: float = 0.0, threshold: float | None = None, seed: int = 0) -> InequalityLedger:
    """Evaluate the labelled quantities of the subspace lower-bound argument for a candidate coreset."""
    _require_main(inst)
    z = inst.z if z is None else float(z)
    part = partition_coreset(inst, S, threshold)
    k, d = inst.k, inst.d
    m = hadamard_order(d)
    w = S.weights
    base = (part.tilde ** 2).sum(axis=1) + 1.0 + part.delta ** 2
    in_small = np.isin(part.group, part.small)
    n_small = len(part.small)
    norms = np.linalg.norm(part.tilde, axis=1)
    size_of = np.array([part.members[j - 1].size for j in part.group]) if len(S) else np.zeros(0)
    E: list[LedgerEntry] = []

    C1 = centers_C1(inst, part)
    C2, _ = centers_C2(inst, part, z=z, seed=seed)
    cP1, cS1 = cost(inst.points, C1, z), cost(S, C1, z)
    cP2, cS2 = cost(inst.points, C2, z), cost(S, C2, z)
    big = ~in_small
    # offset of each big-group point to its default center c_j
    cdef = _default_direction(inst)

    if z == 2:
        inner = np.array([np.dot(np.concatenate([[part.delta[i]], part.tilde[i]]),
                                 -np.concatenate([[0.0], cdef])) for i in range(len(S))])
        kappa = 2 * math.fsum(w[big] * inner[big]) if len(S) else 0.0
        A = math.fsum(w * base)
        E.append(LedgerEntry("cost(P,C1) = kd/2", "identity", cP1, k * d / 2, "=="))
        E.append(LedgerEntry("cost(S,C1) = A + kappa", "identity", cS1, A + kappa, "=="))
        E.append(LedgerEntry("weight-constraints lower", "coreset-implied", (1 - eps) * k * d / 2, A + kappa, "<="))
        E.append(LedgerEntry("weight-constraints upper", "coreset-implied", A + kappa, (1 + eps) * k * d / 2, "<="))
        E.append(LedgerEntry("cost(P,C2) >= kd/2 - sqrt(d)|I|", "bound", cP2, k * d / 2 - math.sqrt(d) * n_small, ">="))
        smallsum = math.fsum(w[in_small] * norms[in_small] * 2 / np.sqrt(np.maximum(size_of[in_small], 1)))
        E.append(LedgerEntry("cost(S,C2) <= A - small-set gain + kappa", "bound", cS2, A - smallsum + kappa, "<="))
        lhs_size = math.fsum(w[in_small] * norms[in_small]) / math.sqrt(d)
        E.append(LedgerEntry("size-constraint", "coreset-implied", lhs_size, (n_small * math.sqrt(d) + eps * k * d) / 4, "<="))
        for ell in range(1, m + 1):
            C3 = centers_C3(inst, part, ell)
            h = hadamard(m).padded(d)[ell - 1]
            proj = np.abs(part.tilde @ h)
            E.append(LedgerEntry(f"cost(P,C3[{ell}]) = kd/2 - d|I|/sqrt(m)", "identity",
                                 cost(inst.points, C3, 2.0), cost_C3_expected(inst, n_small), "=="))
            E.append(LedgerEntry(f"cost(S,C3[{ell}]) = A - 2 sum <w p, h> + kappa", "identity",
                                 cost(S, C3, 2.0), A - 2 * math.fsum(w[in_small] * proj[in_small]) + kappa, "=="))
        E.append(LedgerEntry("small-group mass lower bound", "coreset-implied", math.fsum(w[in_small] * norms[in_small]),
                             (d * n_small - eps * k * d * math.sqrt(d)) / 2, ">="))
        E.append(LedgerEntry("|I| <= 3 eps k sqrt(d)", "coreset-implied", n_small, 3 * eps * k * math.sqrt(d), "<="))
    else:
        q = z / 2
        lo, hi = min(1.0, q), max(1.0, q)
        dist_big = np.linalg.norm(part.tilde - cdef, axis=1) ** 2 + part.delta ** 2
        kappa = math.fsum(w[big] * dist_big[big] ** q) if len(S) else 0.0
        A = math.fsum(w[in_small] * base[in_small] ** q)
        scale = 2.0 ** q
        t = threshold_t(z)
        E.append(LedgerEntry("cost(P,C1) = (kd/4) 2^(z/2)", "identity", cP1, cost_C1_expected(inst, z), "=="))
        E.append(LedgerEntry("cost(S,C1) = A_I + kappa", "identity", cS1, A + kappa, "=="))
        E.append(LedgerEntry("weight-constraints lower", "coreset-implied", (1 - eps) * k * d / 4 * scale, A + kappa, "<="))
        E.append(LedgerEntry("weight-constraints upper", "coreset-implied", A + kappa, (1 + eps) * k * d / 4 * scale, "<="))
        E.append(LedgerEntry("cost(P,C2) lower bound", "bound", cP2, scale * (k * d / 4 - hi * math.sqrt(d) * n_small), ">="))
        gain_terms = w * base ** (q - 1) * norms
        gain = lo * math.fsum(2 * gain_terms[in_small] / np.sqrt(np.maximum(size_of[in_small], 1)))
        E.append(LedgerEntry("cost(S,C2) upper bound", "bound", cS2, A - gain + kappa, "<="))
        E.append(LedgerEntry("size-constraint", "coreset-implied", lo * math.fsum(gain_terms[in_small]) / math.sqrt(d),
                             (hi * n_small * math.sqrt(d) * scale + eps * k * d / 2 * scale) / (2 * t), "<="))
        for ell in range(1, m + 1):
            C3 = centers_C3(inst, part, ell)
            h = hadamard(m).padded(d)[ell - 1]
            proj = np.abs(part.tilde @ h)
            E.append(LedgerEntry(f"cost(P,C3[{ell}]) upper bound", "bound", cost(inst.points, C3, z),
                                 scale * (k * d / 4 - d * n_small / 2 * lo / math.sqrt(m)), "<="))
            E.append(LedgerEntry(f"cost(S,C3[{ell}]) lower bound", "bound", cost(S, C3, z),
                                 A - 2 * hi * math.fsum((w * proj * base ** (q - 1))[in_small]) + kappa, ">="))
        E.append(LedgerEntry("small-group gain lower bound", "coreset-implied", 2 * hi * math.fsum(gain_terms[in_small]),
                             scale * (d * n_small / 2 * lo - eps * k * d * math.sqrt(d) / 2), ">="))
        E.append(LedgerEntry("|I| <= 4 eps k sqrt(d) / min(1, z/2)", "coreset-implied", n_small,
                             4 * eps * k * math.sqrt(d) / lo, "<="))
        E.append(LedgerEntry("threshold t", "constant", t, 4 * max(1.0, q * q) / min(1.0, q * q), "=="))
    return InequalityLedger(z, eps, part.small, E)


# -- certificates ------------------------------------------------------------------


def interval_certificate(inst: Interval1DInstance) -> dict:
    return {
        "variant": "interval",
        "params": inst.params(),
        "intervals": [{"l": float(l), "r": float(r), "density": float(mu)}
                      for l, r, mu in zip(inst.left, inst.right, inst.density)],
        "expected_costs": {"max_fixed0_cost_bound": 2.0 / inst.eps_eff,
                           "total_weight": 4.0 / 3.0 * (1 - 4.0 ** -inst.n_intervals)},
        "expected_gaps": {},
    }


def subspace_certificate(inst: SubspaceInstance) -> dict:
    """Certificate for the instance against the empty candidate coreset.

    For the appendix variant the adversarial query is also evaluated for
    the 80%-kept coreset when ``d`` allows it.
    """
    cert = {"variant": f"subspace-{inst.variant}", "params": inst.params(),
            "queries": {}, "expected_costs": {}, "expected_gaps": {}}
    if inst.variant == "main":
        empty = WeightedPointSet(np.zeros((0, inst.d + 1)))
        part = partition_coreset(inst, empty)
        C1 = centers_C1(inst, part)
        cert["queries"]["C1"] = C1.centers.tolist()
        cert["expected_costs"]["C1"] = cost_C1_expected(inst)
        if inst.z == 2:
            C3 = centers_C3(inst, part, 1)
            cert["queries"]["C3"] = C3.centers.tolist()
            cert["expected_costs"]["C3"] = cost_C3_expected(inst, len(part.small))
    else:
        anchors = np.array([inst.anchor(j) for j in range(1, inst.groups + 1)])
        cert["queries"]["anchor"] = anchors.tolist()
        cert["expected_costs"]["anchor"] = float(inst.groups * inst.d)
        if (0.8 * inst.d) % 1 == 0:
            S = keep_fraction_coreset(inst, 0.8)
            Q, rep = adversarial_query_subset(inst, S)
            cert["queries"]["adversarial"] = Q.centers.tolist()
            cert["expected_costs"]["adversarial"] = rep.cost_P_Q
            cert["expected_gaps"]["adversarial"] = {
                "coreset": "keep-0.8", "gap": rep.formula_gap,
                "rel_error": 1 / (2 * math.sqrt(inst.d))}
    return cert
