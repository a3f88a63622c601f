"""The coupling polytope: validation, canonical couplings, maximum mass on a
pair set via max flow, gluing, product measures, and certified grid traversal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import DERIVED_ATOL, MMSpace
from .errors import InstanceTooLargeError, MarginalMismatchError, ValidationError

COUPLING_ATOL = 1e-9


def _clean(matrix: np.ndarray) -> np.ndarray:
    """Zero out f.p. dust in [-1e-12, 0) so couplings stay formally nonnegative."""
    out = np.array(matrix, dtype=float)
    tiny = (out < 0) & (out > -1e-12)
    out[tiny] = 0.0
    return out


@dataclass(frozen=True)
class Coupling:
    """Joint probability matrix with prescribed row and column marginals."""

    matrix: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def __post_init__(self):
        matrix = _clean(self.matrix)
        row = np.asarray(self.row_marginal, dtype=float)
        col = np.asarray(self.col_marginal, dtype=float)
        if matrix.shape != (row.shape[0], col.shape[0]):
            raise ValidationError("coupling shape must match its marginals")
        if np.any(matrix < 0):
            raise ValidationError("coupling entries must be nonnegative")
        if np.max(np.abs(matrix.sum(axis=1) - row)) > COUPLING_ATOL:
            raise ValidationError("row sums do not match the first marginal")
        if np.max(np.abs(matrix.sum(axis=0) - col)) > COUPLING_ATOL:
            raise ValidationError("column sums do not match the second marginal")
        for name, arr in (("matrix", matrix), ("row_marginal", row), ("col_marginal", col)):
            arr = np.array(arr, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_matrix(cls, matrix) -> "Coupling":
        """Treat any nonnegative matrix of total mass 1 as a coupling of its
        own marginals (any joint measure is one)."""
        matrix = _clean(np.asarray(matrix, dtype=float))
        return cls(matrix, matrix.sum(axis=1), matrix.sum(axis=0))

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def mass_on(self, pairs) -> float:
        if not pairs:
            return 0.0
        rows = [p[0] for p in pairs]
        cols = [p[1] for p in pairs]
        return float(self.matrix[rows, cols].sum())

    def support_pairs(self) -> frozenset:
        i, j = np.nonzero(self.matrix > 0)
        return frozenset(zip(i.tolist(), j.tolist()))

    def transpose(self) -> "Coupling":
        return Coupling(self.matrix.T, self.col_marginal, self.row_marginal)


@dataclass(frozen=True)
class TriCoupling:
    """Three-way joint measure produced by gluing two couplings along the
    shared middle marginal."""

    tensor: np.ndarray
    row_marginal: np.ndarray
    mid_marginal: np.ndarray
    col_marginal: np.ndarray

    def __post_init__(self):
        tensor = np.asarray(self.tensor, dtype=float)
        if tensor.ndim != 3:
            raise ValidationError("tri-coupling tensor must be 3-dimensional")
        tensor = np.array(tensor)
        tensor.setflags(write=False)
        object.__setattr__(self, "tensor", tensor)

    def marginal_12(self) -> np.ndarray:
        return self.tensor.sum(axis=2)

    def marginal_23(self) -> np.ndarray:
        return self.tensor.sum(axis=0)


def independent_coupling(x: MMSpace, y: MMSpace) -> Coupling:
    """Product coupling m_X (x) m_Y, the canonical feasible point."""
    return Coupling(np.outer(x.mass, y.mass), x.mass, y.mass)


def diagonal_coupling(x: MMSpace) -> Coupling:
    """Identity coupling of a space with itself."""
    return Coupling(np.diag(x.mass), x.mass, x.mass)


def _pairs_to_mask(pairs, n: int, m: int) -> np.ndarray:
    mask = np.zeros((n, m), dtype=np.bool_)
    for i, j in pairs:
        if not (0 <= i < n and 0 <= j < m):
            raise ValidationError("pair set contains indices out of range")
        mask[i, j] = True
    return mask


def _northwest(supply: np.ndarray, demand: np.ndarray) -> np.ndarray:
    """Deterministic northwest-corner routing of matched supplies/demands."""
    n, m = supply.shape[0], demand.shape[0]
    out = np.zeros((n, m))
    r = supply.copy()
    c = demand.copy()
    i = j = 0
    while i < n and j < m:
        step = min(r[i], c[j])
        if step > 0:
            out[i, j] += step
            r[i] -= step
            c[j] -= step
        if r[i] <= 1e-15:
            i += 1
        elif c[j] <= 1e-15:
            j += 1
        else:
            # can only happen through rounding; drain the smaller side
            if r[i] <= c[j]:
                i += 1
            else:
                j += 1
    return out


def max_mass_on(pairs, x: MMSpace, y: MMSpace) -> tuple[float, Coupling]:
    """Largest coupling mass a pair set can carry, with a witnessing coupling.

    Solved exactly as a max-flow problem (source -> rows with capacities m_X,
    row -> column edges only on the pair set, columns -> sink with m_Y); the
    residual mass is routed by the northwest-corner rule to complete a full
    coupling.
    """
    mask = _pairs_to_mask(pairs, x.n, y.n)
    value, flow = _kernels.ek_max_flow(np.asarray(x.mass), np.asarray(y.mass), mask)
    residual_rows = np.maximum(x.mass - flow.sum(axis=1), 0.0)
    residual_cols = np.maximum(y.mass - flow.sum(axis=0), 0.0)
    matrix = flow + _northwest(residual_rows, residual_cols)
    coupling = Coupling(matrix, x.mass, y.mass)
    return float(coupling.mass_on(pairs)), coupling


def glue(pxy: Coupling, pyz: Coupling) -> TriCoupling:
    """Glue two couplings that share their middle marginal.

    tensor[i, j, k] = pxy[i, j] * pyz[j, k] / mid[j] on the support of the
    shared marginal, 0 where the middle coordinate carries no mass.
    """
    mid_left = pxy.matrix.sum(axis=0)
    mid_right = pyz.matrix.sum(axis=1)
    if mid_left.shape != mid_right.shape or np.max(np.abs(mid_left - mid_right)) > COUPLING_ATOL:
        raise MarginalMismatchError("column marginal of pxy must equal row marginal of pyz")
    mid = mid_right
    scale = np.where(mid > 0, mid, 1.0)
    tensor = pxy.matrix[:, :, None] * pyz.matrix[None, :, :] / scale[None, :, None]
    tri = TriCoupling(tensor, pxy.matrix.sum(axis=1), mid, pyz.matrix.sum(axis=0))
    if np.max(np.abs(tri.marginal_12() - pxy.matrix)) > COUPLING_ATOL:
        raise MarginalMismatchError("glued tensor fails to reproduce pxy")
    if np.max(np.abs(tri.marginal_23() - pyz.matrix)) > COUPLING_ATOL:
        raise MarginalMismatchError("glued tensor fails to reproduce pyz")
    return tri


def project_13(tri: TriCoupling) -> Coupling:
    """Marginal of a tri-coupling on its outer coordinates."""
    return Coupling(tri.tensor.sum(axis=1), tri.row_marginal, tri.col_marginal)


def product_measure(p: Coupling) -> np.ndarray:
    """pi (x) pi as a flat mass vector over (X x Y) x (X x Y) in row-major
    pair-of-flattened-pairs order."""
    flat = p.matrix.ravel()
    return np.outer(flat, flat).ravel()


def _free_cells(row: np.ndarray, col: np.ndarray) -> list[tuple[int, int, float]]:
    """Free coordinates of the transportation polytope: all cells outside the
    last row/column whose upper bound min(row_i, col_j) is positive."""
    n, m = row.shape[0], col.shape[0]
    cells = []
    for i in range(n - 1):
        for j in range(m - 1):
            ub = min(row[i], col[j])
            if ub > 1e-15:
                cells.append((i, j, float(ub)))
    return cells


def _complete_from_free(g: np.ndarray, cells, row: np.ndarray, col: np.ndarray) -> np.ndarray:
    """Fill the determined entries of a coupling from its free-cell values."""
    n, m = row.shape[0], col.shape[0]
    matrix = np.zeros((n, m))
    for (i, j, _), v in zip(cells, g):
        matrix[i, j] = v
    matrix[: n - 1, m - 1] = row[: n - 1] - matrix[: n - 1, : m - 1].sum(axis=1)
    matrix[n - 1, :] = col - matrix[: n - 1, :].sum(axis=0)
    return matrix


def _nearest_coupling_l1(g: np.ndarray, cells, row: np.ndarray, col: np.ndarray):
    """Coupling whose free-cell values are L1-closest to the target g.

    Returns (matrix, achieved L1 distance).  Solved as a small LP (scipy
    HiGHS); used to project grid cells back onto the polytope.
    """
    from scipy.optimize import linprog

    n, m = row.shape[0], col.shape[0]
    nm = n * m
    d = len(cells)
    # variables: x (nm couplings entries), u (d absolute-value helpers)
    c_vec = np.concatenate([np.zeros(nm), np.ones(d)])
    a_eq = np.zeros((n + m, nm + d))
    b_eq = np.concatenate([row, col])
    for i in range(n):
        a_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j:nm:m] = 1.0
    a_ub = np.zeros((2 * d, nm + d))
    b_ub = np.zeros(2 * d)
    for k, (i, j, _) in enumerate(cells):
        a_ub[2 * k, i * m + j] = 1.0
        a_ub[2 * k, nm + k] = -1.0
        b_ub[2 * k] = g[k]
        a_ub[2 * k + 1, i * m + j] = -1.0
        a_ub[2 * k + 1, nm + k] = -1.0
        b_ub[2 * k + 1] = -g[k]
    res = linprog(c_vec, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=[(0, None)] * nm + [(0, None)] * d, method="highs")
    if not res.success:
        raise ValidationError(f"feasibility projection LP failed: {res.message}")
    return res.x[:nm].reshape(n, m), float(res.fun)


def coupling_grid(x: MMSpace, y: MMSpace, step: float, dim_budget: int = 4,
                  max_cells: int = 2_000_000) -> list[Coupling]:
    """Finite net of couplings covering the whole polytope within total
    variation <= step.

    The polytope is parameterized by its free cells (equivalently, by cycle
    directions off a basic solution); the free block is covered by axis cells
    of width eta = step / (2 D), and each cell is projected back to a feasible
    coupling.  Changing the free block by delta in L1 moves the full matrix by
    at most 4*delta in L1, i.e. 2*delta in total variation, which gives the
    covering radius 2*D*eta = step.
    """
    if step <= 0:
        raise ValidationError("grid step must be positive")
    row = np.asarray(x.mass)
    col = np.asarray(y.mass)
    cells = _free_cells(row, col)
    dim = len(cells)
    if dim == 0:
        return [Coupling(_clean(_complete_from_free(np.zeros(0), cells, row, col)), row, col)]
    if dim > dim_budget:
        raise InstanceTooLargeError(
            f"coupling polytope dimension {dim} exceeds budget {dim_budget}",
            required=dim, budget=dim_budget)
    eta = step / (2.0 * dim)
    axes = []
    for _, _, ub in cells:
        k = max(1, int(np.ceil(ub / eta)))
        width = ub / k
        # endpoint-inclusive lattice: covers with radius width/2 per axis and
        # puts the polytope vertices themselves on the net
        axes.append([c * width for c in range(k + 1)])
    total = 1
    for a in axes:
        total *= len(a)
    if total > max_cells:
        raise InstanceTooLargeError(
            f"grid would need {total} cells (cap {max_cells}); increase step",
            required=total, budget=max_cells)
    radius = sum(ub / max(1, int(np.ceil(ub / eta))) for _, _, ub in cells) / 2.0
    out = []
    for point in itertools.product(*axes):
        g = np.array(point)
        direct = _complete_from_free(g, cells, row, col)
        if direct.min() >= -1e-12:
            out.append(Coupling(direct, row, col))
            continue
        matrix, achieved = _nearest_coupling_l1(g, cells, row, col)
        if achieved > radius + 1e-9:
            continue  # no coupling has its free block inside this cell
        out.append(Coupling(matrix, row, col))
    return out


def _cycle_moves(n: int, m: int):
    for i, i2 in itertools.combinations(range(n), 2):
        for j, j2 in itertools.combinations(range(m), 2):
            yield i, i2, j, j2


def local_search(objective, start: Coupling, budget: int = 50, seed: int | None = None) -> Coupling:
    """Greedy descent over the coupling polytope along cycle directions.

    Moves mass around 2x2 cycles (i,j),(i,j'),(i',j),(i',j') with step-size
    halving; first-improvement, deterministic for a given seed.  The result
    never has a larger objective than the start.
    """
    n, m = start.shape
    matrix = np.array(start.matrix)
    current = objective(start)
    moves = list(_cycle_moves(n, m))
    if seed is not None:
        rng = np.random.default_rng(seed)
        rng.shuffle(moves)
    for _ in range(budget):
        improved = False
        for i, i2, j, j2 in moves:
            for sign in (1.0, -1.0):
                # sign +1 raises (i,j) and (i2,j2), lowers (i,j2) and (i2,j)
                room = min(matrix[i, j2], matrix[i2, j]) if sign > 0 else min(matrix[i, j], matrix[i2, j2])
                if room <= 1e-13:
                    continue
                t = room
                while t > 1e-13:
                    trial = matrix.copy()
                    trial[i, j] += sign * t
                    trial[i2, j2] += sign * t
                    trial[i, j2] -= sign * t
                    trial[i2, j] -= sign * t
                    cand = Coupling(trial, start.row_marginal, start.col_marginal)
                    val = objective(cand)
                    if val < current - 1e-15:
                        matrix = np.array(cand.matrix)
                        current = val
                        improved = True
                        break
                    t /= 2.0
        if not improved:
            break
    return Coupling(matrix, start.row_marginal, start.col_marginal)


def random_coupling(x: MMSpace, y: MMSpace, rng: np.random.Generator) -> Coupling:
    """Random coupling with the exact prescribed marginals: a convex mix of
    northwest-corner vertices taken under random row/column permutations."""
    n, m = x.n, y.n
    k = rng.integers(2, 5)
    weights = rng.dirichlet(np.ones(k))
    matrix = np.zeros((n, m))
    for w in weights:
        pr = rng.permutation(n)
        pc = rng.permutation(m)
        vertex = _northwest(np.asarray(x.mass)[pr], np.asarray(y.mass)[pc])
        matrix[np.ix_(pr, pc)] += w * vertex
    return Coupling(matrix, x.mass, y.mass)


def couplings_close(p: Coupling, q: Coupling, atol: float = DERIVED_ATOL) -> bool:
    return p.shape == q.shape and float(np.max(np.abs(p.matrix - q.matrix))) <= atol


def total_variation(p: Coupling, q: Coupling) -> float:
    """TV distance between two couplings on the same grid (sup-over-sets form)."""
    return 0.5 * float(np.abs(p.matrix - q.matrix).sum())
