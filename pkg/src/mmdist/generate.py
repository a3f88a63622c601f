"""Deterministic corpus generators: random Euclidean clouds with Dirichlet
masses, and uniform-mass graph metrics (line, cycle, hypercube).

Randomness always flows through numpy's default_rng (PCG64) seeded with a
64-bit integer, so corpora are reproducible across runs and platforms.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import MetricSpace, MMSpace
from .errors import ValidationError


def _uniform(n: int) -> np.ndarray:
    mass = np.full(n, 1.0 / n)
    mass[-1] = 1.0 - mass[:-1].sum()
    return mass


def random_space(n: int, seed: int | np.random.Generator = 0, dim: int = 3,
                 uniform_mass: bool = False) -> MMSpace:
    """Euclidean point cloud in the unit box with Dirichlet(1,...,1) masses."""
    if n < 1:
        raise ValidationError("need at least one point")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    while True:
        pts = rng.random((n, dim))
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        np.fill_diagonal(dist, 0.0)
        off = dist[~np.eye(n, dtype=bool)]
        if not off.size or off.min() > 1e-6:
            break
    if uniform_mass:
        mass = _uniform(n)
    else:
        mass = rng.dirichlet(np.ones(n))
        mass[-1] = 1.0 - mass[:-1].sum()
    return MMSpace(MetricSpace(dist), mass)


def line_space(n: int) -> MMSpace:
    """Path metric d(i, j) = |i - j| with uniform mass."""
    if n < 1:
        raise ValidationError("need at least one point")
    idx = np.arange(n, dtype=float)
    return MMSpace(MetricSpace(np.abs(idx[:, None] - idx[None, :])), _uniform(n))


def cycle_space(n: int) -> MMSpace:
    """Cycle-graph metric d(i, j) = min(|i-j|, n-|i-j|) with uniform mass."""
    if n < 1:
        raise ValidationError("need at least one point")
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    return MMSpace(MetricSpace(np.minimum(gap, n - gap).astype(float)), _uniform(n))


def cube_space(k: int) -> MMSpace:
    """Hamming metric on the k-dimensional hypercube (2^k points), uniform mass."""
    if k < 1:
        raise ValidationError("cube dimension must be at least 1")
    if k > 6:
        raise ValidationError("cube dimension capped at 6 (desk scale)")
    pts = np.array(list(itertools.product((0, 1), repeat=k)), dtype=float)
    dist = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
    return MMSpace(MetricSpace(dist), _uniform(1 << k))


GENERATORS = {
    "random": lambda n, seed: random_space(n, seed),
    "line": lambda n, seed: line_space(n),
    "cycle": lambda n, seed: cycle_space(n),
    "cube": lambda n, seed: cube_space(n),
}


def generate(kind: str, n: int, seed: int = 0) -> MMSpace:
    if kind not in GENERATORS:
        raise ValidationError(f"unknown generator kind {kind!r}")
    return GENERATORS[kind](n, seed)


def random_measure(n: int, rng: np.random.Generator) -> np.ndarray:
    mass = rng.dirichlet(np.ones(n))
    mass[-1] = 1.0 - mass[:-1].sum()
    return mass


def exhaustive_uniform_spaces(max_n: int = 3, values=(1.0, 2.0, 3.0),
                              labeled: bool = True) -> list[MMSpace]:
    """Every uniform-mass space with at most max_n points and distances drawn
    from the given value set (triangle-violating assignments skipped).

    With labeled=True all labelings are kept, so the list contains isomorphic
    relabelings -- useful when testing nondegeneracy both ways.
    """
    if max_n > 3:
        raise ValidationError("exhaustive corpus implemented for n <= 3")
    out = [MMSpace(MetricSpace(np.zeros((1, 1))), np.ones(1))]
    seen = set()
    for d in values:
        out.append(MMSpace(MetricSpace(np.array([[0.0, d], [d, 0.0]])), _uniform(2)))
    if max_n >= 3:
        for d01, d02, d12 in itertools.product(values, repeat=3):
            trio = np.array([[0.0, d01, d02], [d01, 0.0, d12], [d02, d12, 0.0]])
            if (d01 > d02 + d12 + 1e-12 or d02 > d01 + d12 + 1e-12
                    or d12 > d01 + d02 + 1e-12):
                continue
            if not labeled:
                key = tuple(sorted((d01, d02, d12)))
                if key in seen:
                    continue
                seen.add(key)
            out.append(MMSpace(MetricSpace(trio), _uniform(3)))
    return out
