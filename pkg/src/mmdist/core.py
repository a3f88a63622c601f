"""Finite metric measure spaces: distances, masses, distortions, Ky Fan metric,
isomorphism testing and the Lipschitz order.

Conventions used throughout the package:

* a metric space is an n x n matrix of genuine distances (symmetric, zero
  diagonal, positive off the diagonal, triangle inequality within 1e-12);
* a measure is a length-n vector of nonnegative masses summing to 1 within
  1e-12 (never silently renormalized);
* a pair set is a frozenset of (i, j) index pairs;
* the distortion of the empty pair set is float("inf") -- IEEE infinity with
  its native saturating arithmetic -- while the diagonal distortion of the
  empty set is 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InstanceTooLargeError, ValidationError

VALIDATION_ATOL = 1e-12
DERIVED_ATOL = 1e-9

PairSet = frozenset


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MetricSpace:
    """Finite metric space given by its full distance matrix."""

    dist: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        dist = np.asarray(self.dist, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ValidationError("distance matrix must be square")
        n = dist.shape[0]
        if n == 0:
            raise ValidationError("a metric space needs at least one point")
        if not np.all(np.isfinite(dist)):
            raise ValidationError("distances must be finite")
        if np.max(np.abs(np.diagonal(dist))) > VALIDATION_ATOL:
            raise ValidationError("diagonal of the distance matrix must be zero")
        if np.max(np.abs(dist - dist.T)) > VALIDATION_ATOL:
            raise ValidationError("distance matrix must be symmetric")
        off = dist[~np.eye(n, dtype=bool)]
        if off.size and np.min(off) <= VALIDATION_ATOL:
            raise ValidationError("distinct points must be at positive distance")
        # d(i,k) <= d(i,j) + d(j,k) for all triples, vectorized.
        slack = dist[:, None, :] - (dist[:, :, None] + dist[None, :, :])
        if np.max(slack) > VALIDATION_ATOL:
            raise ValidationError("triangle inequality violated")
        object.__setattr__(self, "dist", _freeze(dist))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != n:
                raise ValidationError("labels length must match point count")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def diameter(self) -> float:
        return float(np.max(self.dist))


@dataclass(frozen=True)
class ProductMetricSpace(MetricSpace):
    """l1 product of two metric spaces; remembers the factor sizes so that
    flat indices can be mapped back to index pairs."""

    shape: tuple[int, int] = (0, 0)

    def flat(self, i: int, j: int) -> int:
        return i * self.shape[1] + j

    def unflat(self, k: int) -> tuple[int, int]:
        return divmod(k, self.shape[1])


@dataclass(frozen=True)
class MMSpace:
    """Metric measure space: a metric space plus a probability mass vector."""

    space: MetricSpace
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.ndim != 1 or mass.shape[0] != self.space.n:
            raise ValidationError("mass vector length must match point count")
        if np.any(mass < 0):
            raise ValidationError("masses must be nonnegative")
        if abs(float(mass.sum()) - 1.0) > VALIDATION_ATOL:
            raise ValidationError("masses must sum to 1 (input is never renormalized)")
        object.__setattr__(self, "mass", _freeze(mass))

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def dist(self) -> np.ndarray:
        return self.space.dist

    @property
    def support(self) -> frozenset[int]:
        return support(self.mass)


def _dist_of(obj) -> np.ndarray:
    return obj.dist if isinstance(obj, MetricSpace) else obj.space.dist


def _check_pairs(pairs, n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=len(pairs))
    cols = np.fromiter((p[1] for p in pairs), dtype=np.int64, count=len(pairs))
    if len(pairs) and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= m):
        raise ValidationError("pair set contains indices out of range")
    return rows, cols


def distortion(pairs, x, y) -> float:
    """Largest discrepancy |d_X(i,i') - d_Y(j,j')| over pairs of members.

    Empty set -> infinity; singletons -> 0.
    """
    dx, dy = _dist_of(x), _dist_of(y)
    items = sorted(pairs)
    if not items:
        return math.inf
    rows, cols = _check_pairs(items, dx.shape[0], dy.shape[0])
    diff = np.abs(dx[np.ix_(rows, rows)] - dy[np.ix_(cols, cols)])
    return float(diff.max())


def diagonal_distortion(pairs, x) -> float:
    """Largest distance d_X(i, j) over (i, j) in the set; 0 for the empty set."""
    dx = _dist_of(x)
    items = sorted(pairs)
    if not items:
        return 0.0
    rows, cols = _check_pairs(items, dx.shape[0], dx.shape[0])
    return float(dx[rows, cols].max())


def product_space(x, y) -> ProductMetricSpace:
    """l1 product metric on the pair grid: d((i,j),(i',j')) = d_X + d_Y."""
    dx, dy = _dist_of(x), _dist_of(y)
    n, m = dx.shape[0], dy.shape[0]
    dist = (dx[:, None, :, None] + dy[None, :, None, :]).reshape(n * m, n * m)
    return ProductMetricSpace(dist=dist, shape=(n, m))


def enlargement(pairs, t: float, prod: ProductMetricSpace):
    """Open t-enlargement of a pair set under the l1 product metric.

    Returns the set itself plus every pair at strict distance < t from some
    member; for t > 0 that is exactly the strict enlargement (members are at
    distance 0), and at the t = 0 breakpoint the set is returned unchanged.
    The empty set enlarges to the empty set for any t >= 0.
    """
    if t < 0:
        raise ValidationError("enlargement radius must be nonnegative")
    if not isinstance(prod, ProductMetricSpace):
        raise ValidationError("enlargement needs the product space built by product_space")
    if not pairs:
        return frozenset()
    n, m = prod.shape
    items = sorted(pairs)
    _check_pairs(items, n, m)
    flat = np.array([prod.flat(i, j) for i, j in items], dtype=np.int64)
    near = prod.dist[:, flat].min(axis=1) < t
    return frozenset(pairs) | frozenset(prod.unflat(int(k)) for k in np.flatnonzero(near))


def pushforward(mu, point_map, size: int | None = None) -> np.ndarray:
    """Mass vector of the image measure: out[j] = sum of mu[i] over map(i)=j."""
    mu = np.asarray(mu, dtype=float)
    fmap = np.asarray(point_map, dtype=np.int64)
    if fmap.shape != mu.shape:
        raise ValidationError("point map must assign a target to every point")
    if size is None:
        size = int(fmap.max()) + 1 if fmap.size else 0
    if fmap.size and (fmap.min() < 0 or fmap.max() >= size):
        raise ValidationError("point map target out of range")
    return np.bincount(fmap, weights=mu, minlength=size)


def support(mu) -> frozenset[int]:
    """Indices carrying strictly positive mass."""
    return frozenset(int(i) for i in np.flatnonzero(np.asarray(mu, dtype=float) > 0.0))


def ky_fan(f, g, mu) -> float:
    """Least eps >= 0 with mu({|f - g| > eps}) <= eps.

    mu(|f-g| > eps) is a right-continuous nonincreasing step function, so the
    minimum of max(eps, tail mass) is attained either at a jump value v or at
    the plateau height mass(> v); evaluating max(v, mass(> v)) at every jump
    (plus 0) covers both cases exactly.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if not (f.shape == g.shape == mu.shape):
        raise ValidationError("ky_fan arguments must share one index set")
    diff = np.abs(f - g)
    best = math.inf
    for v in np.unique(np.concatenate(([0.0], diff))):
        tail = float(mu[diff > v].sum())
        best = min(best, max(float(v), tail))
    return best


def pairwise_distortion_matrix(x, y) -> np.ndarray:
    """(n*m) x (n*m) matrix of |d_X(i,i') - d_Y(j,j')| over flattened pairs."""
    dx, dy = _dist_of(x), _dist_of(y)
    n, m = dx.shape[0], dy.shape[0]
    return np.abs(dx[:, None, :, None] - dy[None, :, None, :]).reshape(n * m, n * m)


def mm_isomorphic(x: MMSpace, y: MMSpace, atol: float = DERIVED_ATOL):
    """Decide whether a measure-preserving isometry between supports exists.

    Returns (flag, witness) where witness maps support indices of x to support
    indices of y.  Zero-mass points are ignored on both sides.
    """
    sx = sorted(x.support)
    sy = sorted(y.support)
    if len(sx) != len(sy):
        return False, None
    if np.max(np.abs(np.sort(x.mass[sx]) - np.sort(y.mass[sy]))) > atol:
        return False, None
    dx = x.dist[np.ix_(sx, sx)]
    dy = y.dist[np.ix_(sy, sy)]
    k = len(sx)
    assigned: list[int] = []
    used = [False] * k

    def extend(pos: int) -> bool:
        if pos == k:
            return True
        for c in range(k):
            if used[c]:
                continue
            if abs(x.mass[sx[pos]] - y.mass[sy[c]]) > atol:
                continue
            ok = True
            for prev in range(pos):
                if abs(dx[pos, prev] - dy[c, assigned[prev]]) > atol:
                    ok = False
                    break
            if ok:
                used[c] = True
                assigned.append(c)
                if extend(pos + 1):
                    return True
                assigned.pop()
                used[c] = False
        return False

    if extend(0):
        return True, {sx[i]: sy[assigned[i]] for i in range(k)}
    return False, None


def dominates(x: MMSpace, y: MMSpace, atol: float = DERIVED_ATOL, budget: int = 1_000_000):
    """Decide the Lipschitz order: does some 1-Lipschitz map on supp(x) push
    the mass of x exactly onto the mass of y?

    Exhaustive search with pruning over the |Y|^|supp X| candidate maps;
    raises InstanceTooLargeError beyond the budget.
    """
    sx = sorted(x.support)
    ny = y.n
    if ny ** len(sx) > budget:
        raise InstanceTooLargeError(
            f"{ny}^{len(sx)} candidate maps exceed budget {budget}",
            required=ny ** len(sx), budget=budget)
    dx = x.dist
    dy = y.dist
    acc = np.zeros(ny)
    chosen: list[int] = []

    def extend(pos: int) -> bool:
        if pos == len(sx):
            return bool(np.max(np.abs(acc - y.mass)) <= atol)
        i = sx[pos]
        for j in range(ny):
            if acc[j] + x.mass[i] > y.mass[j] + atol:
                continue
            ok = True
            for prev in range(pos):
                if dy[j, chosen[prev]] > dx[i, sx[prev]] + atol:
                    ok = False
                    break
            if ok:
                acc[j] += x.mass[i]
                chosen.append(j)
                if extend(pos + 1):
                    return True
                chosen.pop()
                acc[j] -= x.mass[i]
        return False

    if extend(0):
        return True, {sx[i]: chosen[i] for i in range(len(sx))}
    return False, None


def all_point_maps(n_from: int, n_to: int):
    """Iterate every map {0..n_from-1} -> {0..n_to-1} (for small-scale tests)."""
    return itertools.product(range(n_to), repeat=n_from)
