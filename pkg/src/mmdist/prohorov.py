"""Prohorov distance between two measures on one finite metric space:
by definition (subset enumeration) and via the coupling representation
min over (coupling, set) of max(diagonal distortion, uncovered mass).
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .core import MetricSpace, MMSpace, VALIDATION_ATOL, diagonal_distortion
from .errors import InstanceTooLargeError, ValidationError
from .transport import Coupling, max_mass_on

SUBSET_BUDGET = 16


def _check_prob(vec, n: int) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (n,):
        raise ValidationError("measure must assign a mass to every point")
    if np.any(vec < 0):
        raise ValidationError("masses must be nonnegative")
    if abs(float(vec.sum()) - 1.0) > VALIDATION_ATOL:
        raise ValidationError("masses must sum to 1")
    return vec


def _levels(dist: np.ndarray) -> np.ndarray:
    return np.unique(np.concatenate(([0.0], dist.ravel())))


def prohorov_bruteforce(mu, nu, space: MetricSpace, subset_budget: int = SUBSET_BUDGET) -> float:
    """Prohorov distance straight from the definition.

    Between consecutive distance levels the open enlargement U_eps(A) is the
    constant closed sublevel neighborhood, so the least feasible eps equals
    min over levels b of max(b, G(b)) with
    G(b) = max over all 2^n subsets A of nu(A) - mu({x : d(x, A) <= b}).
    Exact for n <= subset_budget.
    """
    n = space.n
    if n > subset_budget:
        raise InstanceTooLargeError(
            f"subset scan over 2^{n} sets exceeds budget 2^{subset_budget}",
            required=n, budget=subset_budget)
    mu = _check_prob(mu, n)
    nu = _check_prob(nu, n)
    return float(_kernels.prohorov_scan(_levels(space.dist), np.asarray(space.dist), mu, nu))


def coupling_diagonal_distortion(p: Coupling, space: MetricSpace) -> tuple[float, frozenset]:
    """min over pair sets S of max(diagonal distortion of S, 1 - p(S)) for a
    fixed joint measure p on the square of one space.

    For a threshold t the best admissible set is the full sublevel set
    {d <= t}, so scanning t over the distance values (plus 0) is exact.
    Returns the value and the minimizing sublevel set.
    """
    n = space.n
    if p.shape != (n, n):
        raise ValidationError("joint measure must live on the square of the space")
    dist = np.asarray(space.dist)
    best = None
    for t in _levels(dist):
        inside = dist <= t
        value = max(float(t), 1.0 - float(p.matrix[inside].sum()))
        if best is None or value < best[0] - 1e-15:
            ii, jj = np.nonzero(inside)
            best = (value, float(t), frozenset(zip(ii.tolist(), jj.tolist())))
        if t >= best[0]:
            break
    value, _, pairs = best
    return value, pairs


def prohorov_strassen(mu, nu, space: MetricSpace) -> tuple[float, Coupling, frozenset]:
    """Prohorov distance via the coupling representation, with witnesses.

    Scans thresholds t over {0} union the distance values; for each t the
    sublevel set S_t = {d <= t} is the largest set of diagonal distortion <= t
    and its best coupling mass is a max-flow value.  Returns the optimum with
    the witnessing coupling and sublevel set; the reported value is recomputed
    from the witnesses themselves.
    """
    n = space.n
    mu = _check_prob(mu, n)
    nu = _check_prob(nu, n)
    xm = MMSpace(space, mu)
    ym = MMSpace(space, nu)
    dist = np.asarray(space.dist)
    best_t = None
    best_val = np.inf
    for t in _levels(dist):
        if t >= best_val:
            break
        mask = dist <= t
        fv, _ = _kernels.ek_max_flow(mu, nu, mask)
        value = max(float(t), 1.0 - float(fv))
        if value < best_val - 1e-15:
            best_val = value
            best_t = float(t)
    inside = dist <= best_t
    ii, jj = np.nonzero(inside)
    pairs = frozenset(zip(ii.tolist(), jj.tolist()))
    _, coupling = max_mass_on(pairs, xm, ym)
    value = max(diagonal_distortion(pairs, space), 1.0 - coupling.mass_on(pairs))
    return float(value), coupling, pairs
