"""Hot numeric kernels: bipartite max-flow and bitmask subset scans.

Every kernel exists twice:

* a loop-style implementation compiled with ``numba.njit`` (the default), and
* a pure-numpy fallback (``*_py`` / vectorized) used when numba is missing or
  when the environment variable ``MMDIST_NO_NUMBA=1`` is set.

Both variants are exported so tests and ``bench/bench_kernels.py`` can compare
them directly.  All kernels are deterministic: fixed edge ordering in the flow,
ascending subset order in the scans.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("MMDIST_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled via MMDIST_NO_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

# Residual capacities below this are treated as saturated; keeps float
# round-off from generating useless augmenting paths.
_FLOW_EPS = 1e-15


def _ek_max_flow_impl(supply, demand, allowed):
    """Edmonds-Karp max flow on the bipartite transport network.

    Source -> row i with capacity supply[i], column j -> sink with capacity
    demand[j], row i -> column j with capacity 2.0 (never binding, total mass
    is 1) wherever allowed[i, j].  Returns (flow value, row x col flow matrix).
    """
    n = supply.shape[0]
    m = demand.shape[0]
    nv = n + m + 2
    src = n + m
    snk = n + m + 1
    cap = np.zeros((nv, nv))
    for i in range(n):
        cap[src, i] = supply[i]
    for j in range(m):
        cap[n + j, snk] = demand[j]
    for i in range(n):
        for j in range(m):
            if allowed[i, j]:
                cap[i, n + j] = 2.0
    parent = np.empty(nv, dtype=np.int64)
    queue = np.empty(nv, dtype=np.int64)
    total = 0.0
    while True:
        for v in range(nv):
            parent[v] = -2
        parent[src] = -1
        queue[0] = src
        head = 0
        tail = 1
        found = False
        while head < tail and not found:
            u = queue[head]
            head += 1
            for v in range(nv):
                if parent[v] == -2 and cap[u, v] > _FLOW_EPS:
                    parent[v] = u
                    if v == snk:
                        found = True
                        break
                    queue[tail] = v
                    tail += 1
        if not found:
            break
        bottleneck = 1e300
        v = snk
        while v != src:
            u = parent[v]
            if cap[u, v] < bottleneck:
                bottleneck = cap[u, v]
            v = u
        v = snk
        while v != src:
            u = parent[v]
            cap[u, v] -= bottleneck
            cap[v, u] += bottleneck
            v = u
        total += bottleneck
    flow = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            if allowed[i, j]:
                f = 2.0 - cap[i, n + j]
                if f > 0.0:
                    flow[i, j] = f
    return total, flow


def _prohorov_scan_impl(levels, dist, mu, nu):
    """min over distance levels b of max(b, G(b)) where
    G(b) = max over subsets A of nu(A) - mu({x : d(x, A) <= b}).

    levels must be sorted ascending and contain 0.  Exact subset scan via
    lowbit dynamic programming over all 2^n bitmasks.
    """
    n = mu.shape[0]
    size = 1 << n
    nu_a = np.zeros(size)
    mu_a = np.zeros(size)
    for mask in range(1, size):
        low = mask & (-mask)
        b = 0
        while (1 << b) != low:
            b += 1
        rest = mask ^ low
        nu_a[mask] = nu_a[rest] + nu[b]
        mu_a[mask] = mu_a[rest] + mu[b]
    ball = np.zeros(n, dtype=np.int64)
    nmask = np.zeros(size, dtype=np.int64)
    best = 1e300
    for li in range(levels.shape[0]):
        b_val = levels[li]
        if b_val >= best:
            break
        for i in range(n):
            msk = 0
            for j in range(n):
                if dist[j, i] <= b_val:
                    msk |= 1 << j
            ball[i] = msk
        gap = 0.0
        for mask in range(1, size):
            low = mask & (-mask)
            b = 0
            while (1 << b) != low:
                b += 1
            nmask[mask] = nmask[mask ^ low] | ball[b]
            g = nu_a[mask] - mu_a[nmask[mask]]
            if g > gap:
                gap = g
        cand = b_val if b_val > gap else gap
        if cand < best:
            best = cand
    return best


def _violator_scan_impl(pair_eps, w):
    """min over violator sets D of max(eps*(kept), mass(D)).

    pair_eps[a, b] is the epsilon forced when atoms a and b are both kept
    (may be negative; clipping at 0 is implicit).  w holds atom masses.
    """
    k = w.shape[0]
    size = 1 << k
    wsum = np.zeros(size)
    mx = np.zeros(size)
    total = 0.0
    for a in range(k):
        total += w[a]
    for mask in range(1, size):
        low = mask & (-mask)
        b = 0
        while (1 << b) != low:
            b += 1
        rest = mask ^ low
        wsum[mask] = wsum[rest] + w[b]
        d = mx[rest]
        r = rest
        while r != 0:
            lr = r & (-r)
            c = 0
            while (1 << c) != lr:
                c += 1
            if pair_eps[b, c] > d:
                d = pair_eps[b, c]
            r ^= lr
        mx[mask] = d
    best = 1e300
    for kept in range(size):
        viol = total - wsum[kept]
        cand = mx[kept] if mx[kept] > viol else viol
        if cand < best:
            best = cand
    return best


if NUMBA_ENABLED:
    ek_max_flow = njit(cache=True)(_ek_max_flow_impl)
    prohorov_scan = njit(cache=True)(_prohorov_scan_impl)
    violator_scan = njit(cache=True)(_violator_scan_impl)
else:
    ek_max_flow = _ek_max_flow_impl
    prohorov_scan = _prohorov_scan_impl
    violator_scan = _violator_scan_impl

# Plain-python bindings, always available for cross-checking / benchmarking.
ek_max_flow_py = _ek_max_flow_impl


def _box_subset_scan_impl(q, mu, nu, n, m):
    """min over nonempty S of max(distortion(S), 1 - max coupling mass on S).

    q is the (n*m) x (n*m) pairwise distortion matrix; subsets are bitmasks
    over the n*m candidate pairs, scanned in ascending distortion order so the
    loop can stop as soon as no subset can improve the incumbent.
    """
    nm = n * m
    size = 1 << nm
    dis = np.zeros(size)
    for mask in range(1, size):
        low = mask & (-mask)
        b = 0
        while (1 << b) != low:
            b += 1
        rest = mask ^ low
        d = dis[rest]
        r = rest
        while r != 0:
            lr = r & (-r)
            c = 0
            while (1 << c) != lr:
                c += 1
            if q[b, c] > d:
                d = q[b, c]
            r ^= lr
        dis[mask] = d
    order = np.argsort(dis, kind="mergesort")
    allowed = np.zeros((n, m), dtype=np.bool_)
    best = 1e300
    for oi in range(size):
        mask = order[oi]
        if mask == 0:
            continue
        d = dis[mask]
        if d >= best:
            break
        for i in range(n):
            for j in range(m):
                allowed[i, j] = ((mask >> (i * m + j)) & 1) == 1
        fv, _ = ek_max_flow(mu, nu, allowed)
        cand = d
        if 1.0 - fv > cand:
            cand = 1.0 - fv
        if cand < best:
            best = cand
    return best


def _box_subset_scan_numpy(q, mu, nu, n, m):
    """Vectorized-DP fallback for the box subset scan (flows stay in python)."""
    nm = n * m
    size = 1 << nm
    masks = np.arange(size, dtype=np.int64)
    dis = np.zeros(size)
    for a in range(nm):
        in_a = (masks >> a) & 1 == 1
        for b in range(a + 1, nm):
            if q[a, b] <= 0.0:
                continue
            sel = in_a & ((masks >> b) & 1 == 1)
            dis[sel] = np.maximum(dis[sel], q[a, b])
    order = np.argsort(dis, kind="mergesort")
    best = np.inf
    for mask in order:
        if mask == 0:
            continue
        d = dis[mask]
        if d >= best:
            break
        allowed = ((mask >> np.arange(nm)) & 1).astype(bool).reshape(n, m)
        fv, _ = ek_max_flow_py(mu, nu, allowed)
        best = min(best, max(d, 1.0 - fv))
    return float(best)


def _prohorov_scan_numpy(levels, dist, mu, nu):
    """Vectorized fallback for the Prohorov subset scan."""
    n = len(mu)
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    bit = [(masks >> b) & 1 == 1 for b in range(n)]
    nu_a = np.zeros(size)
    mu_a = np.zeros(size)
    for b in range(n):
        nu_a[bit[b]] += nu[b]
        mu_a[bit[b]] += mu[b]
    powers = 1 << np.arange(n, dtype=np.int64)
    best = np.inf
    for b_val in levels:
        if b_val >= best:
            break
        close = dist <= b_val
        ball = [int(powers[close[:, i]].sum()) for i in range(n)]
        nmask = np.zeros(size, dtype=np.int64)
        for b in range(n):
            nmask[bit[b]] |= ball[b]
        gap = float(np.max(nu_a - mu_a[nmask]))
        best = min(best, max(float(b_val), gap))
    return float(best)


def _violator_scan_numpy(pair_eps, w):
    """Vectorized fallback for the violator-set scan."""
    k = len(w)
    size = 1 << k
    masks = np.arange(size, dtype=np.int64)
    wsum = np.zeros(size)
    mx = np.zeros(size)
    for a in range(k):
        in_a = (masks >> a) & 1 == 1
        wsum[in_a] += w[a]
        for b in range(a + 1, k):
            if pair_eps[a, b] <= 0.0:
                continue
            sel = in_a & ((masks >> b) & 1 == 1)
            mx[sel] = np.maximum(mx[sel], pair_eps[a, b])
    total = float(np.sum(w))
    return float(np.min(np.maximum(mx, total - wsum)))


if NUMBA_ENABLED:
    box_subset_scan = njit(cache=True)(_box_subset_scan_impl)
else:
    box_subset_scan = _box_subset_scan_numpy

box_subset_scan_py = _box_subset_scan_numpy
prohorov_scan_py = _prohorov_scan_numpy
violator_scan_py = _violator_scan_numpy


def warmup():
    """Trigger JIT compilation of every kernel on toy inputs."""
    mu = np.array([0.5, 0.5])
    nu = np.array([1.0])
    allowed = np.ones((2, 1), dtype=np.bool_)
    ek_max_flow(mu, nu, allowed)
    dist = np.array([[0.0, 1.0], [1.0, 0.0]])
    prohorov_scan(np.array([0.0, 1.0]), dist, mu, mu)
    violator_scan(np.zeros((2, 2)), mu)
    q = np.zeros((2, 2))
    box_subset_scan(q, mu, nu, 2, 1)
