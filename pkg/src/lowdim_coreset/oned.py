"""One-dimensional machinery: prefix-sum point sets, buckets and blocks,
the greedy bucket coresets and an exact weighted k-median solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CenterSet, WeightedPointSet, cost

# block buckets err by at most eps' * cost and endpoint buckets by at most
# 2 eps' * cost, so running at eps / 2 keeps the audited error under eps
ALG1_CALIBRATION = 2.0


class Sorted1D:
    """Sorted 1-d weighted points with prefix sums of ``w`` and ``w * x``.

    Coordinates are stored shifted by ``ref`` (the weighted mean) before the
    prefix sums are formed, which keeps the cancellation in range queries
    proportional to the spread of the data rather than its offset.
    """

    def __init__(self, coords, weights=None, *, drop_zero: bool = True):
        x = np.asarray(coords, dtype=float).reshape(-1)
        w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        if w.shape != x.shape:
            raise ValueError("coords and weights differ in length")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if drop_zero:
            keep = w > 0
            x, w = x[keep], w[keep]
        order = np.argsort(x, kind="stable")
        self.coords = x[order]
        self.weights = w[order]
        self.coords.setflags(write=False)
        self.weights.setflags(write=False)
        n = self.coords.shape[0]
        self.ref = float(np.dot(self.weights, self.coords) / self.weights.sum()) if n else 0.0
        self._shifted = self.coords - self.ref
        self.prefix_w = np.concatenate(([0.0], np.cumsum(self.weights)))
        self.prefix_wx = np.concatenate(([0.0], np.cumsum(self.weights * self._shifted)))

    @classmethod
    def from_points(cls, P: WeightedPointSet) -> "Sorted1D":
        return cls(P.coords(), P.weights)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def total_weight(self) -> float:
        return float(self.prefix_w[-1])

    def to_points(self) -> WeightedPointSet:
        return WeightedPointSet(self.coords.reshape(-1, 1), self.weights)

    # -- vectorised range queries ------------------------------------------

    def range_cost(self, i, j, t) -> np.ndarray:
        """``sum w |x - t|`` over sorted index ranges ``[i, j)``, broadcast over inputs."""
        i = np.asarray(i)
        j = np.asarray(j)
        ts = np.asarray(t, dtype=float) - self.ref
        k = np.clip(np.searchsorted(self._shifted, ts, side="left"), i, j)
        W, X = self.prefix_w, self.prefix_wx
        left = ts * (W[k] - W[i]) - (X[k] - X[i])
        right = (X[j] - X[k]) - ts * (W[j] - W[k])
        return left + right

    def cost_one(self, c) -> np.ndarray:
        """1-median cost at each entry of ``c``."""
        return self.range_cost(0, len(self), c)

    def cost_two(self, a, b) -> np.ndarray:
        """2-median cost at center pairs ``(a, b)`` (any order)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        mid = (lo + hi) / 2.0 - self.ref
        split = np.searchsorted(self._shifted, mid, side="right")
        return self.range_cost(0, split, lo) + self.range_cost(split, len(self), hi)

    def cost_at_points(self) -> np.ndarray:
        """1-median cost evaluated at every data point."""
        return self.cost_one(self.coords)


@dataclass(frozen=True)
class Bucket:
    lo: int
    hi: int
    N: float
    L: float
    mu: float
    delta: float


def bucket_delta(s1: Sorted1D, lo, hi) -> np.ndarray:
    """Cumulative error ``sum w |x - mean|`` of inclusive index ranges (vectorised)."""
    lo = np.asarray(lo)
    hi1 = np.asarray(hi) + 1
    W = s1.prefix_w[hi1] - s1.prefix_w[lo]
    mu_shift = (s1.prefix_wx[hi1] - s1.prefix_wx[lo]) / W
    return np.maximum(s1.range_cost(lo, hi1, mu_shift + s1.ref), 0.0)


def _direct_stats(s1: Sorted1D, lo: int, hi: int) -> tuple[float, float, float]:
    """``(N, mu, delta)`` of an inclusive range by direct compensated sums."""
    x = s1.coords[lo:hi + 1]
    w = s1.weights[lo:hi + 1]
    N = math.fsum(w)
    # shift by the first coordinate so the mean keeps the precision of the spread
    mu = float(x[0]) + math.fsum(w * (x - x[0])) / N
    mu = min(max(mu, float(x[0])), float(x[-1]))
    return N, mu, math.fsum(w * np.abs(x - mu))


def bucket_stats(s1: Sorted1D, lo: int, hi: int) -> Bucket:
    if not 0 <= lo <= hi < len(s1):
        raise ValueError(f"empty or out-of-range bucket [{lo}, {hi}] for n={len(s1)}")
    N, mu, delta = _direct_stats(s1, lo, hi)
    return Bucket(lo, hi, N, float(s1.coords[hi] - s1.coords[lo]), mu, delta)


def _median_index(s1: Sorted1D) -> int:
    half = s1.total_weight / 2.0
    return int(np.searchsorted(s1.prefix_w[1:], half, side="left"))


def weighted_median(s1: Sorted1D) -> float:
    """Smallest coordinate whose cumulative weight reaches half the total."""
    if len(s1) == 0:
        raise ValueError("weighted median of an empty set")
    return float(s1.coords[_median_index(s1)])


def _grow_right(s1: Sorted1D, start: int, stop: int, thr: float) -> int:
    """Largest ``end`` in ``[start, stop]`` with ``delta(start..end) <= thr``.

    Relies on delta being monotone under extension of a bucket.
    """
    end, step = start, 1
    while end + step <= stop and bucket_delta(s1, start, end + step) <= thr:
        end += step
        step *= 2
    step //= 2
    while step >= 1:
        if end + step <= stop and bucket_delta(s1, start, end + step) <= thr:
            end += step
        step //= 2
    return end


def _grow_left(s1: Sorted1D, stop: int, end: int, thr: float) -> int:
    """Smallest ``start`` in ``[stop, end]`` with ``delta(start..end) <= thr``."""
    start, step = end, 1
    while start - step >= stop and bucket_delta(s1, start - step, end) <= thr:
        start -= step
        step *= 2
    step //= 2
    while step >= 1:
        if start - step >= stop and bucket_delta(s1, start - step, end) <= thr:
            start -= step
        step //= 2
    return start


def _shrink(s1: Sorted1D, lo: int, hi: int, thr: float, keep: str) -> int:
    """Exact fallback when prefix-sum rounding let a bucket exceed ``thr``.

    Binary search on directly summed delta; ``keep`` names the fixed end.
    Returns the new free end.
    """
    a, b = (lo, hi) if keep == "lo" else (hi, lo)
    good, bad = a, b
    while abs(bad - good) > 1:
        mid = (good + bad) // 2
        rng = (a, mid) if keep == "lo" else (mid, a)
        if _direct_stats(s1, *rng)[2] <= thr:
            good = mid
        else:
            bad = mid
    return good


def greedy_buckets(s1: Sorted1D, lo: int, hi: int, thr: float, direction: str = "right") -> list[Bucket]:
    """Split ``[lo, hi]`` into maximal consecutive buckets with ``delta <= thr``."""
    out: list[Bucket] = []
    if direction == "right":
        start = lo
        while start <= hi:
            end = _grow_right(s1, start, hi, thr)
            b = bucket_stats(s1, start, end)
            if b.delta > thr and end > start:
                end = _shrink(s1, start, end, thr, "lo")
                b = bucket_stats(s1, start, end)
            out.append(b)
            start = end + 1
    elif direction == "left":
        end = hi
        while end >= lo:
            start = _grow_left(s1, lo, end, thr)
            b = bucket_stats(s1, start, end)
            if b.delta > thr and end > start:
                start = _shrink(s1, start, end, thr, "hi")
                b = bucket_stats(s1, start, end)
            out.append(b)
            end = start - 1
        out.reverse()
    else:
        raise ValueError("direction must be 'right' or 'left'")
    return out


def _buckets_to_points(buckets: list[Bucket]) -> WeightedPointSet:
    return WeightedPointSet(np.array([[b.mu] for b in buckets]).reshape(-1, 1), [b.N for b in buckets])


def _distinct(s1: Sorted1D) -> WeightedPointSet:
    xs, inv = np.unique(s1.coords, return_inverse=True)
    ws = np.bincount(inv, weights=s1.weights)
    return WeightedPointSet(xs.reshape(-1, 1), ws)


# -- exact k-median ----------------------------------------------------------


def _cluster_cost(s1: Sorted1D, i, j) -> tuple[np.ndarray, np.ndarray]:
    """Cost and median index of clusters ``[i, j)`` (j > i), vectorised."""
    i = np.asarray(i)
    j = np.asarray(j)
    half = (s1.prefix_w[i] + s1.prefix_w[j]) / 2.0
    m = np.searchsorted(s1.prefix_w, half, side="left") - 1
    m = np.clip(m, i, j - 1)
    return s1.range_cost(i, j, s1.coords[m]), m


def _dp_full(s1: Sorted1D, k: int) -> tuple[np.ndarray, np.ndarray]:
    n = len(s1)
    prev = np.full(n + 1, np.inf)
    prev[0] = 0.0
    cuts = np.zeros((k + 1, n + 1), dtype=np.int64)
    for layer in range(1, k + 1):
        cur = np.full(n + 1, np.inf)
        cur[0] = 0.0
        for j in range(1, n + 1):
            i = np.arange(0, j)
            vals = prev[i] + _cluster_cost(s1, i, j)[0]
            a = int(np.argmin(vals))
            cur[j], cuts[layer, j] = vals[a], a
        prev = cur
    return prev, cuts


def _dp_divide(s1: Sorted1D, k: int) -> tuple[np.ndarray, np.ndarray]:
    # the 1-d median cluster cost satisfies the quadrangle inequality, so the
    # optimal cut position is monotone in j
    n = len(s1)
    prev = np.full(n + 1, np.inf)
    prev[0] = 0.0
    cuts = np.zeros((k + 1, n + 1), dtype=np.int64)
    for layer in range(1, k + 1):
        cur = np.full(n + 1, np.inf)
        cur[0] = 0.0
        stack = [(1, n, 0, n - 1)]
        while stack:
            jl, jr, ol, orr = stack.pop()
            if jl > jr:
                continue
            jm = (jl + jr) // 2
            i = np.arange(ol, min(orr, jm - 1) + 1)
            vals = prev[i] + _cluster_cost(s1, i, jm)[0]
            a = int(np.argmin(vals))
            best = int(i[a])
            cur[jm], cuts[layer, jm] = vals[a], best
            stack.append((jl, jm - 1, ol, best))
            stack.append((jm + 1, jr, best, orr))
        prev = cur
    return prev, cuts


def exact_kmedian_1d(s1: Sorted1D, k: int, method: str = "auto") -> tuple[float, CenterSet]:
    """Optimal weighted 1-d k-median by interval dynamic programming.

    Returns ``(OPT, centers)`` where OPT is recomputed as the compensated
    cost at the returned centers.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if len(s1) == 0:
        raise ValueError("empty input")
    distinct = np.unique(s1.coords)
    if k >= distinct.shape[0]:
        return 0.0, CenterSet(distinct.reshape(-1, 1))
    n = len(s1)
    if method == "auto":
        method = "full" if n <= 400 else "divide"
    solver = {"full": _dp_full, "divide": _dp_divide}[method]
    _, cuts = solver(s1, k)
    bounds = []
    j = n
    for layer in range(k, 0, -1):
        i = int(cuts[layer, j])
        bounds.append((i, j))
        j = i
    centers = []
    for i, j in reversed(bounds):
        if j > i:
            centers.append(float(s1.coords[_cluster_cost(s1, i, j)[1]]))
    C = CenterSet(np.array(centers).reshape(-1, 1))
    return cost(s1.to_points(), C), C


# -- coresets ----------------------------------------------------------------


def baseline_threshold(k: int, eps: float, opt: float) -> float:
    # only buckets holding a center or a cluster boundary err, at most 2k - 1
    # of them, each by at most its delta
    return eps * opt / (2 * k - 1)


def baseline_coreset(s1: Sorted1D, k: int, eps: float, opt: float | None = None) -> WeightedPointSet:
    """Greedy maximal buckets with ``delta <= eps * OPT / (2k - 1)``, collapsed to their means."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if k < 1:
        raise ValueError("k must be positive")
    if len(s1) == 0:
        raise ValueError("empty input")
    if opt is None:
        opt, _ = exact_kmedian_1d(s1, k)
    if opt <= 0:
        return _distinct(s1)
    thr = baseline_threshold(k, eps, opt)
    return _buckets_to_points(greedy_buckets(s1, 0, len(s1) - 1, thr))


@dataclass(frozen=True)
class Block:
    index: int
    side: str
    lo: int
    hi: int
    band: tuple[float, float]
    buckets: tuple[Bucket, ...] = ()


@dataclass
class Coreset1DResult:
    coreset: WeightedPointSet
    eps: float
    eps_internal: float
    opt: float
    endpoint_buckets: list[Bucket] = field(default_factory=list)
    blocks: list[Block] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.coreset)


def _endpoint_ranges(s1: Sorted1D, eps: float, med: int) -> tuple[int, int]:
    """Index bounds ``(a, b)`` so that ``[0, a)`` and ``(b, n-1]`` are the endpoint sets."""
    budget = eps * s1.total_weight
    # tolerate rounding in the prefix sums when weights are integral
    tol = 1e-9 * s1.total_weight
    a = int(np.searchsorted(s1.prefix_w[1:], budget + tol, side="right"))
    suffix = s1.total_weight - s1.prefix_w[:-1]
    b = int(np.searchsorted(-suffix, -(budget + tol), side="left")) - 1
    a = min(a, med)
    b = max(b, med)
    return a, b


def _band_indices(f: np.ndarray, opt: float) -> np.ndarray:
    ratio = f / opt
    idx = np.floor(np.log2(np.maximum(ratio, 1.0))).astype(np.int64)
    # repair log2 rounding against exact half-open bands
    idx = np.where(np.ldexp(1.0, idx) > ratio, idx - 1, idx)
    idx = np.where(np.ldexp(1.0, idx + 1) <= ratio, idx + 1, idx)
    return np.maximum(idx, 0)


def block_partition(s1: Sorted1D, opt: float, eps: float | None = None) -> list[Block]:
    """Blocks of points whose 1-median cost lies in ``[2^i OPT, 2^(i+1) OPT)``.

    With ``eps`` given the endpoint sets of weight ``eps * W`` on each side
    are excluded first.  Left-side blocks are listed left to right, then
    right-side blocks left to right.
    """
    n = len(s1)
    if n and opt == 0 and s1.coords[0] == s1.coords[-1]:
        return [Block(0, "left", 0, n - 1, (0.0, 0.0))]
    if not opt > 0:
        raise ValueError("OPT must be positive")
    med = _median_index(s1)
    if eps is None:
        a, b = 0, n - 1
    else:
        a, b = _endpoint_ranges(s1, eps, med)
    f = s1.cost_at_points()
    bands = _band_indices(f, opt)
    # float noise must not break contiguity: band index is nonincreasing
    # towards the median from either side
    left = bands[a:med + 1]
    left = np.maximum.accumulate(left[::-1])[::-1] if left.size else left
    right = bands[med + 1:b + 1]
    right = np.maximum.accumulate(right) if right.size else right
    blocks: list[Block] = []
    for side, arr, offset in (("left", left, a), ("right", right, med + 1)):
        start = 0
        while start < arr.size:
            stop = start
            while stop + 1 < arr.size and arr[stop + 1] == arr[start]:
                stop += 1
            i = int(arr[start])
            blocks.append(Block(i, side, offset + start, offset + stop, (2.0 ** i * opt, 2.0 ** (i + 1) * opt)))
            start = stop + 1
    return blocks


def coreset_1d_1median_detailed(s1: Sorted1D, eps: float,
                                calibration: float = ALG1_CALIBRATION) -> Coreset1DResult:
    """Adaptive bucket coreset for 1-d 1-median with per-block error budgets."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if len(s1) == 0:
        raise ValueError("empty input")
    e = eps / calibration
    med = _median_index(s1)
    opt = float(s1.cost_one(s1.coords[med]))
    if not opt > 0 or s1.coords[0] == s1.coords[-1]:
        return Coreset1DResult(_distinct(s1), eps, e, 0.0)
    n = len(s1)
    a, b = _endpoint_ranges(s1, e, med)
    endpoints = []
    if a > 0:
        endpoints.append(bucket_stats(s1, 0, a - 1))
    if b < n - 1:
        endpoints.append(bucket_stats(s1, b + 1, n - 1))
    blocks = []
    for blk in block_partition(s1, opt, e):
        thr = e * blk.band[0]
        direction = "right" if blk.side == "left" else "left"
        buckets = greedy_buckets(s1, blk.lo, blk.hi, thr, direction)
        blocks.append(Block(blk.index, blk.side, blk.lo, blk.hi, blk.band, tuple(buckets)))
    all_buckets = endpoints[:1] if a > 0 else []
    for blk in blocks:
        all_buckets.extend(blk.buckets)
    if b < n - 1:
        all_buckets.append(endpoints[-1])
    return Coreset1DResult(_buckets_to_points(all_buckets), eps, e, opt, endpoints, blocks)


def coreset_1d_1median(s1: Sorted1D, eps: float) -> WeightedPointSet:
    return coreset_1d_1median_detailed(s1, eps).coreset


def size_law_ratio(size: int, eps: float) -> float:
    """``size / (eps^{-1/2} log2(1/eps))``."""
    return size / (eps ** -0.5 * math.log2(1.0 / eps))
