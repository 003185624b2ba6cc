"""Mixed coresets for (1, z)-clustering in the unit ball by repeated
low-discrepancy halving.

Points are lifted to ``phi(p) = (|p|^2 / 2, p / sqrt(2), 1/2)`` so that the
squared distance to a rescaled center becomes an inner product with
``psi(c')``.  A balanced sign coloring with small signed tensor sums over the
lifted points then controls the change in every cost when one color class is
dropped and the other reweighted.  The coloring here is a greedy pair walk
with local refinement; its quality is measured, not guaranteed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import WeightedPointSet
from .verify import check_mixed_coreset, default_radii

SQRT_HALF = math.sqrt(0.5)
DEFAULT_ORDER_CAP = 3
# target size constant in ceil(c_h * sqrt(d) / eps)
DEFAULT_SIZE_CONSTANT = 8.0


# -- lifting -------------------------------------------------------------------


@dataclass(frozen=True)
class LiftedPoint:
    raw: np.ndarray
    lifted: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.lifted))


def lift_phi_many(points) -> np.ndarray:
    """Row-wise ``phi`` for an ``(n, d)`` array of points in the unit ball."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    sq = np.einsum("ij,ij->i", X, X)
    if np.any(sq > 1 + 1e-12):
        raise ValueError("points must lie in the unit ball")
    return np.column_stack([0.5 * sq, SQRT_HALF * X, np.full(X.shape[0], 0.5)])


def lift_phi(p) -> LiftedPoint:
    p = np.asarray(p, dtype=float).ravel()
    return LiftedPoint(p.copy(), lift_phi_many(p[None, :])[0])


def unlift(lifted) -> np.ndarray:
    """Recover raw coordinates from lifted rows."""
    L = np.asarray(lifted, dtype=float)
    return L[..., 1:-1] / SQRT_HALF


def lift_psi(c_prime, r: float) -> np.ndarray:
    """``psi(c') = (1 / (8 r^2), -c' / (sqrt(2) r), 2 |c'|^2)`` for ``|c'| <= 1/4``, ``r >= 1``."""
    c = np.asarray(c_prime, dtype=float).ravel()
    if r < 1:
        raise ValueError("r must be at least 1")
    sq = float(c @ c)
    if sq > 1 / 16 + 1e-12:
        raise ValueError("c' must lie in the ball of radius 1/4")
    return np.concatenate([[1.0 / (8 * r * r)], -c * (math.sqrt(2) / (2 * r)), [2.0 * sq]])


# -- tensor discrepancy -------------------------------------------------------------


def _signed_power_sum(V: np.ndarray, signs: np.ndarray, q: np.ndarray, l: int) -> np.ndarray:
    """``sum_p s_p <v_p, q>^l`` for each row of ``q``."""
    return ((V @ q.T) ** l).T @ signs


def tensor_disc_estimate(points, signs, l: int, probes: int = 256, seed: int = 0,
                         iters: int = 50) -> float:
    """Lower estimate of ``max_{|q|=1} |sum_p s_p <v_p, q>^l|``.

    Exact for ``l = 1`` (vector norm) and ``l = 2`` (spectral radius of the
    signed second-moment matrix); otherwise seeded random probes followed by
    shifted power iterations from the best probes.
    """
    if l < 1:
        raise ValueError("order must be positive")
    V = np.atleast_2d(np.asarray(points, dtype=float))
    s = np.asarray(signs, dtype=float)
    if l == 1:
        return float(np.linalg.norm(s @ V))
    if l == 2:
        M = (V * s[:, None]).T @ V
        return float(np.max(np.abs(np.linalg.eigvalsh(M))))
    rng = np.random.default_rng(seed)
    D = V.shape[1]
    Q = rng.standard_normal((probes, D))
    # data directions are natural candidates too
    nv = np.linalg.norm(V, axis=1)
    Q = np.vstack([Q, V[nv > 0][: probes]])
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    vals = _signed_power_sum(V, s, Q, l)
    order = np.argsort(-np.abs(vals))[: min(8, len(vals))]
    best = float(np.max(np.abs(vals)))
    shift = l * float(np.abs(s) @ nv ** l)
    for q0 in Q[order]:
        q = q0.copy()
        g = float(_signed_power_sum(V, s, q[None, :], l)[0])
        for _ in range(iters):
            sign = 1.0 if g >= 0 else -1.0
            grad = l * ((V @ q) ** (l - 1) * s) @ V
            nq = sign * grad + shift * q
            nq /= np.linalg.norm(nq)
            ng = float(_signed_power_sum(V, s, nq[None, :], l)[0])
            if abs(ng) <= abs(g) * (1 + 1e-12):
                break
            q, g = nq, ng
        best = max(best, abs(g))
    return best


# -- coloring ---------------------------------------------------------------------


@dataclass
class SignColoring:
    signs: np.ndarray
    achieved_norms: dict[int, float]
    potential: float
    initial_potential: float
    seed: int

    @property
    def balance(self) -> int:
        return int(abs(self.signs.sum()))


def _bisection_order(X: np.ndarray) -> np.ndarray:
    """Leaf order of a recursive median split on the widest coordinate."""
    out = []
    stack = [np.arange(X.shape[0])]
    while stack:
        idx = stack.pop()
        if idx.size <= 2:
            out.append(idx)
            continue
        sub = X[idx]
        axis = int(np.argmax(sub.max(axis=0) - sub.min(axis=0)))
        # stable sort keeps ties deterministic
        srt = idx[np.argsort(sub[:, axis], kind="stable")]
        half = srt.size // 2
        # keep halves even so pairs never straddle a split
        half += half % 2
        stack.append(srt[half:])
        stack.append(srt[:half])
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def tensor_features(lifted: np.ndarray, order_cap: int) -> np.ndarray:
    """Flattened tensor powers of each row, each order scaled to comparable size."""
    V = np.atleast_2d(lifted)
    blocks = []
    cur = np.ones((V.shape[0], 1))
    for _ in range(order_cap):
        cur = (cur[:, :, None] * V[:, None, :]).reshape(V.shape[0], -1)
        scale = math.sqrt(max(float(np.einsum("ij,ij->", cur, cur)), 1e-300))
        blocks.append(cur / scale)
    return np.hstack(blocks)


def random_balanced_signs(n: int, rng: np.random.Generator) -> np.ndarray:
    s = np.ones(n)
    s[: n // 2] = -1.0
    if n % 2:
        s[-1] = rng.choice([-1.0, 1.0])
    return rng.permutation(s)


def _potential(F: np.ndarray, s: np.ndarray) -> float:
    t = s @ F
    return float(t @ t)


def color(points, order_cap: int = DEFAULT_ORDER_CAP, seed: int = 0,
          refine_passes: int = 4) -> SignColoring:
    """Balanced sign coloring with small signed tensor sums.

    ``points`` are lifted vectors (rows).  Points are paired along a
    recursive bisection order and each pair receives opposite signs, which
    fixes the balance.  Pair orientations are chosen greedily against the
    running signed sum of tensor features, then improved by single pair
    flips.  The result is never worse than a seeded random balanced coloring.
    """
    V = np.atleast_2d(np.asarray(points, dtype=float))
    n = V.shape[0]
    if n == 0:
        raise ValueError("cannot color an empty set")
    rng = np.random.default_rng(seed)
    F = tensor_features(V, order_cap)
    init = random_balanced_signs(n, rng)
    init_pot = _potential(F, init)

    order = _bisection_order(V)
    pairs = order[: n - n % 2].reshape(-1, 2)
    U = F[pairs[:, 0]] - F[pairs[:, 1]]
    T = np.zeros(F.shape[1])
    orient = np.empty(len(pairs))
    for i, u in enumerate(U):
        o = -1.0 if T @ u > 0 else 1.0
        orient[i] = o
        T += o * u
    # single flips: flipping pair i changes |T|^2 by 4 |u|^2 - 4 o <T, u>
    unorm = np.einsum("ij,ij->i", U, U)
    for _ in range(refine_passes * max(1, len(pairs))):
        if not len(pairs):
            break
        gain = orient * (U @ T) - unorm
        i = int(np.argmax(gain))
        if gain[i] <= 1e-15 * max(1.0, T @ T):
            break
        T -= 2 * orient[i] * U[i]
        orient[i] = -orient[i]
    s = np.zeros(n)
    s[pairs[:, 0]] = orient
    s[pairs[:, 1]] = -orient
    if n % 2:
        last = order[-1]
        s[last] = -1.0 if T @ F[last] > 0 else 1.0
    pot = _potential(F, s)
    if init_pot < pot:
        s, pot = init, init_pot
    norms = {l: tensor_disc_estimate(V, s, l, seed=seed) for l in range(1, order_cap + 1)}
    return SignColoring(s, norms, pot, init_pot, seed)


def random_order1_median(lifted: np.ndarray, count: int = 32, seed: int = 0) -> float:
    """Median order-1 norm over ``count`` seeded random balanced colorings."""
    rng = np.random.default_rng(seed)
    vals = [float(np.linalg.norm(random_balanced_signs(len(lifted), rng) @ lifted)) for _ in range(count)]
    return float(np.median(vals))


# -- halving ------------------------------------------------------------------------


def halve(P: WeightedPointSet, signs) -> tuple[WeightedPointSet, np.ndarray]:
    """Keep the color class of size ``floor(n/2)`` (the ``+1`` class on ties).

    Survivor weights are scaled by ``W / W_kept`` so total weight is preserved;
    with equal weights and even ``n`` this is exactly doubling.  Returns the
    new set and the survivor indices.
    """
    s = np.asarray(signs)
    n = len(P)
    if n < 2:
        raise ValueError("need at least two points to halve")
    if s.shape != (n,) or abs(int(s.sum())) > 1:
        raise ValueError("coloring must be balanced")
    plus = np.flatnonzero(s > 0)
    minus = np.flatnonzero(s < 0)
    keep = plus if plus.size == n // 2 else minus
    wk = P.weights[keep]
    factor = math.fsum(P.weights) / math.fsum(wk)
    return WeightedPointSet(P.points[keep], wk * factor), keep


# -- mixed coreset ------------------------------------------------------------------


@dataclass
class RoundLog:
    size_before: int
    size_after: int
    order1: float
    random_median: float
    drift: float
    drift_bound: float
    norms: dict

    def to_json(self) -> dict:
        return {"size_before": self.size_before, "size_after": self.size_after, "order1": self.order1,
                "random_median": self.random_median, "drift": self.drift,
                "drift_bound": self.drift_bound, "norms": {str(k): v for k, v in self.norms.items()}}


@dataclass
class MixedCoreset:
    subset: WeightedPointSet
    indices: np.ndarray
    eps: float
    z: float
    target: int
    rounds: int
    empirical_violation: float | None
    log: list[RoundLog] = field(default_factory=list)
    check: object = None

    @property
    def size(self) -> int:
        return len(self.subset)


def target_size(d: int, eps: float, c_h: float = DEFAULT_SIZE_CONSTANT) -> int:
    return math.ceil(c_h * math.sqrt(d) / eps)


def mixed_coreset(P: WeightedPointSet, eps: float, z: float = 1.0, seed: int = 0,
                  c_h: float = DEFAULT_SIZE_CONSTANT, order_cap: int = DEFAULT_ORDER_CAP,
                  check: bool = True, samples: int = 10_000, radii=None,
                  baseline_colorings: int = 32) -> MixedCoreset:
    """Halve ``P`` until at most ``ceil(c_h sqrt(d) / eps)`` points remain."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if z < 1:
        raise ValueError("z must be >= 1")
    norms = np.linalg.norm(P.points, axis=1)
    if np.any(norms > 1 + 1e-12):
        raise ValueError("mixed coresets are defined for data inside the unit ball")
    target = target_size(P.dim, eps, c_h)
    cur = P
    idx = np.arange(len(P))
    log: list[RoundLog] = []
    r = 0
    while len(cur) > target and len(cur) >= 2:
        lifted = lift_phi_many(cur.points)
        col = color(lifted, order_cap, seed + r)
        med = random_order1_median(lifted, baseline_colorings, seed + 10_000 + r)
        new, keep = halve(cur, col.signs)
        before = cur.weights @ cur.points
        after = new.weights @ new.points
        drift = float(np.linalg.norm(before - after))
        # with equal weights w the drift is w * |sum s p| <= w sqrt(2) |sum s phi|
        w = float(cur.weights.max())
        bound = w * math.sqrt(2) * col.achieved_norms[1] if len(cur) % 2 == 0 else math.inf
        log.append(RoundLog(len(cur), len(new), col.achieved_norms[1], med, drift, bound, col.achieved_norms))
        cur, idx = new, idx[keep]
        r += 1
    report = None
    violation = None
    if check:
        report = check_mixed_coreset(P, cur, eps, z, default_radii() if radii is None else radii, samples, seed)
        violation = report.worst_ratio
    return MixedCoreset(cur, idx, eps, z, target, r, violation, log, report)


# -- class discrepancy ------------------------------------------------------------------


def _signed_cost(X: np.ndarray, s: np.ndarray, C: np.ndarray, z: float) -> np.ndarray:
    d2 = (np.einsum("ij,ij->i", X, X)[None, :] - 2 * C @ X.T + np.einsum("ij,ij->i", C, C)[:, None])
    return (np.maximum(d2, 0.0) ** (z / 2)) @ s


def class_discrepancy_estimate(P, sigma, r: float, z: float = 1.0, samples: int = 2000,
                               seed: int = 0, ascent_steps: int = 30) -> float:
    """Lower estimate of ``max_{|c| <= r} |sum s_p |p - c|^z| / n`` by sampling plus local ascent."""
    X = np.atleast_2d(P.points if isinstance(P, WeightedPointSet) else np.asarray(P, dtype=float))
    s = np.asarray(sigma, dtype=float)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    C = g * (r * rng.random(samples) ** (1 / d))[:, None]
    C = np.vstack([C, np.zeros((1, d))])
    vals = np.abs(_signed_cost(X, s, C, z))
    best_i = np.argsort(-vals)[:8]
    best = float(vals.max())
    for c0 in C[best_i]:
        c = c0.copy()
        step = 0.1 * r
        v = float(abs(_signed_cost(X, s, c[None, :], z)[0]))
        for _ in range(ascent_steps):
            cand = c[None, :] + step * np.vstack([np.eye(d), -np.eye(d)])
            nrm = np.linalg.norm(cand, axis=1)
            cand[nrm > r] *= (r / nrm[nrm > r])[:, None]
            cv = np.abs(_signed_cost(X, s, cand, z))
            j = int(np.argmax(cv))
            if cv[j] > v:
                c, v = cand[j], float(cv[j])
            else:
                step /= 2
        best = max(best, v)
    return best / n
