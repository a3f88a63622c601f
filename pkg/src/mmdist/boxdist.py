"""Box distance via the coupling representation: exact threshold/clique/flow
scan, distortion of a fixed coupling, heuristic upper bounds, and pair-set
composition for triangle-inequality experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (DERIVED_ATOL, MMSpace, distortion, mm_isomorphic,
                   pairwise_distortion_matrix)
from .errors import InstanceTooLargeError, ValidationError
from .transport import Coupling, independent_coupling, max_mass_on

BRUTEFORCE_MAX_CELLS = 12
CLIQUE_BUDGET = 1_000_000


@dataclass(frozen=True)
class BoxCertificate:
    """Optimal (coupling, pair set, threshold) triple witnessing a box value."""

    value: float
    coupling: Coupling
    pairset: frozenset
    threshold: float
    exact: bool = True

    def __post_init__(self):
        mass = self.coupling.mass_on(self.pairset)
        if abs(self.value - max(self.threshold, 1.0 - mass)) > DERIVED_ATOL:
            raise ValidationError("certificate value does not match its witnesses")

    def reevaluate(self, x: MMSpace, y: MMSpace) -> float:
        """Recompute the certified value from the stored witnesses."""
        dis = distortion(self.pairset, x, y)
        if dis > self.threshold + DERIVED_ATOL:
            raise ValidationError("certificate pair set exceeds its threshold")
        return max(self.threshold, 1.0 - self.coupling.mass_on(self.pairset))


def maximal_cliques(neighbor_masks: list[int], budget: int = CLIQUE_BUDGET) -> list[int]:
    """All maximal cliques of a graph on <= 64ish nodes given as bitmask
    adjacency (self-bits excluded).  Pivoting Bron-Kerbosch, deterministic
    (ascending vertex order, lowest-index pivot among the most covering).
    """
    n = len(neighbor_masks)
    out: list[int] = []
    calls = 0

    def expand(r: int, p: int, x: int):
        nonlocal calls
        calls += 1
        if calls > budget:
            raise InstanceTooLargeError(
                f"clique enumeration exceeded {budget} expansions", budget=budget)
        if p == 0 and x == 0:
            out.append(r)
            return
        pux = p | x
        pivot, best = -1, -1
        m = pux
        while m:
            low = m & (-m)
            u = low.bit_length() - 1
            cnt = (p & neighbor_masks[u]).bit_count()
            if cnt > best:
                best, pivot = cnt, u
            m ^= low
        cand = p & ~neighbor_masks[pivot]
        while cand:
            low = cand & (-cand)
            v = low.bit_length() - 1
            expand(r | low, p & neighbor_masks[v], x & neighbor_masks[v])
            p &= ~low
            x |= low
            cand ^= low

    expand(0, (1 << n) - 1, 0)
    return out


def _mask_bits(mask: int):
    while mask:
        low = mask & (-mask)
        yield low.bit_length() - 1
        mask ^= low


def _atom_thresholds(q: np.ndarray) -> np.ndarray:
    return np.unique(np.concatenate(([0.0], q.ravel())))


def _neighbor_masks(q: np.ndarray, t: float) -> list[int]:
    n = q.shape[0]
    masks = []
    for a in range(n):
        m = 0
        for b in range(n):
            if b != a and q[a, b] <= t:
                m |= 1 << b
        masks.append(m)
    return masks


def coupling_distortion(p: Coupling, x: MMSpace, y: MMSpace, mode: str = "exact",
                        clique_budget: int = CLIQUE_BUDGET) -> tuple[float, frozenset]:
    """min over pair sets S of max(distortion(S), 1 - p(S)) for a fixed
    coupling p, together with the minimizing set.

    Exact mode enumerates, per distortion threshold t, the maximal cliques of
    the compatibility graph on the support atoms of p (edge iff pairwise
    distortion <= t) and takes the heaviest one.  Heuristic mode greedily
    grows a compatible set by descending mass and only certifies an upper
    bound.
    """
    if mode not in ("exact", "heuristic"):
        raise ValidationError("mode must be 'exact' or 'heuristic'")
    if p.shape != (x.n, y.n):
        raise ValidationError("coupling shape does not match the two spaces")
    atoms = sorted(p.support_pairs())
    q_full = pairwise_distortion_matrix(x, y)
    flat = [i * y.n + j for i, j in atoms]
    q = q_full[np.ix_(flat, flat)]
    w = np.array([p.matrix[i, j] for i, j in atoms])
    best_val = np.inf
    best_set: tuple | None = None
    for t in _atom_thresholds(q):
        if t >= best_val:
            break
        if mode == "exact":
            nb = _neighbor_masks(q, float(t))
            masses = []
            for clique in maximal_cliques(nb, clique_budget):
                masses.append((float(w[list(_mask_bits(clique))].sum()), clique))
            mass, clique = max(masses, key=lambda mc: (mc[0], -mc[1]))
        else:
            order = sorted(range(len(atoms)), key=lambda a: (-w[a], a))
            chosen: list[int] = []
            for a in order:
                if all(q[a, b] <= t for b in chosen):
                    chosen.append(a)
            mass = float(w[chosen].sum())
            clique = 0
            for a in chosen:
                clique |= 1 << a
        value = max(float(t), 1.0 - mass)
        if value < best_val - 1e-15:
            best_val = value
            best_set = (float(t), clique)
    t, clique = best_set
    pairs = frozenset(atoms[a] for a in _mask_bits(clique))
    return max(t, 1.0 - p.mass_on(pairs)), pairs


def _canonical_order(x: MMSpace, y: MMSpace) -> bool:
    """True when (x, y) is already in canonical orientation.  Computing every
    symmetric quantity in one fixed orientation makes symmetry bit-exact."""
    kx = (x.n, x.dist.tobytes(), np.asarray(x.mass).tobytes())
    ky = (y.n, y.dist.tobytes(), np.asarray(y.mass).tobytes())
    return kx <= ky


def _transpose_certificate(cert: BoxCertificate) -> BoxCertificate:
    return BoxCertificate(
        value=cert.value,
        coupling=cert.coupling.transpose(),
        pairset=frozenset((j, i) for i, j in cert.pairset),
        threshold=cert.threshold,
        exact=cert.exact)


def box_distance(x: MMSpace, y: MMSpace, mode: str = "auto",
                 clique_budget: int = CLIQUE_BUDGET) -> BoxCertificate:
    """Box distance with an optimality certificate.

    Exact mode: min over thresholds t of max(t, 1 - M(t)), where M(t) is the
    best max-flow mass over maximal cliques of the t-compatibility graph on
    all positive-mass pairs.  The objective max(t, 1 - M(t)) only changes at
    pairwise-distortion values, so the scan is exact.  Heuristic mode
    alternates between the best pair set for the current coupling and the best
    coupling for the current pair set; any such pair certifies an upper bound.
    'auto' tries exact and falls back to heuristic when the clique budget is
    exhausted.
    """
    if mode not in ("exact", "heuristic", "auto"):
        raise ValidationError("mode must be 'exact', 'heuristic' or 'auto'")
    if not _canonical_order(x, y):
        return _transpose_certificate(box_distance(y, x, mode=mode, clique_budget=clique_budget))
    if mode == "heuristic":
        return _box_heuristic(x, y)
    try:
        return _box_exact(x, y, clique_budget)
    except InstanceTooLargeError:
        if mode == "exact":
            raise
        return _box_heuristic(x, y)


def _box_exact(x: MMSpace, y: MMSpace, clique_budget: int) -> BoxCertificate:
    atoms = [(i, j) for i in sorted(x.support) for j in sorted(y.support)]
    q_full = pairwise_distortion_matrix(x, y)
    flat = [i * y.n + j for i, j in atoms]
    q = q_full[np.ix_(flat, flat)]
    mu = np.asarray(x.mass)
    nu = np.asarray(y.mass)
    best_val = np.inf
    best: tuple | None = None
    for t in _atom_thresholds(q):
        if t >= best_val:
            break
        nb = _neighbor_masks(q, float(t))
        level_mass = -1.0
        level_clique = None
        for clique in maximal_cliques(nb, clique_budget):
            members = list(_mask_bits(clique))
            rows = {atoms[a][0] for a in members}
            cols = {atoms[a][1] for a in members}
            cap = min(float(mu[sorted(rows)].sum()), float(nu[sorted(cols)].sum()))
            if max(float(t), 1.0 - cap) >= best_val:
                continue  # even full saturation cannot beat the incumbent
            allowed = np.zeros((x.n, y.n), dtype=np.bool_)
            for a in members:
                allowed[atoms[a]] = True
            fv, _ = _kernels.ek_max_flow(mu, nu, allowed)
            key = sorted(atoms[a] for a in members)
            if fv > level_mass + 1e-15 or (abs(fv - level_mass) <= 1e-15 and
                                           (level_clique is None or key < level_clique[1])):
                level_mass = float(fv)
                level_clique = (clique, key)
        value = max(float(t), 1.0 - level_mass)
        if value < best_val - 1e-15:
            best_val = value
            best = (float(t), level_clique[0])
    t, clique = best
    pairs = frozenset(atoms[a] for a in _mask_bits(clique))
    _, coupling = max_mass_on(pairs, x, y)
    value = max(t, 1.0 - coupling.mass_on(pairs))
    return BoxCertificate(value=value, coupling=coupling, pairset=pairs,
                          threshold=t, exact=True)


def _box_heuristic(x: MMSpace, y: MMSpace, rounds: int = 5) -> BoxCertificate:
    coupling = independent_coupling(x, y)
    best: BoxCertificate | None = None
    for _ in range(rounds):
        small = len(coupling.support_pairs()) <= 18
        _, pairs = coupling_distortion(coupling, x, y,
                                       mode="exact" if small else "heuristic")
        _, coupling = max_mass_on(pairs, x, y)
        value = max(distortion(pairs, x, y), 1.0 - coupling.mass_on(pairs))
        threshold = distortion(pairs, x, y)
        cert = BoxCertificate(value=value, coupling=coupling, pairset=pairs,
                              threshold=threshold, exact=False)
        if best is None or cert.value < best.value - 1e-15:
            best = cert
        else:
            break
    return best


def box_bruteforce(x: MMSpace, y: MMSpace, max_cells: int = BRUTEFORCE_MAX_CELLS) -> float:
    """Independent oracle: min over all nonempty subsets S of the pair grid of
    max(distortion(S), 1 - max coupling mass on S).  Only for testing."""
    if x.n * y.n > max_cells:
        raise InstanceTooLargeError(
            f"{x.n * y.n} cells exceed the bruteforce cap {max_cells}",
            required=x.n * y.n, budget=max_cells)
    if not _canonical_order(x, y):
        return box_bruteforce(y, x, max_cells=max_cells)
    q = pairwise_distortion_matrix(x, y)
    return float(_kernels.box_subset_scan(q, np.asarray(x.mass), np.asarray(y.mass),
                                          x.n, y.n))


def compose_pairsets(s_xy, t_yz) -> frozenset:
    """Relational composition: pairs (i, k) joined through a common middle
    index j with (i, j) in S and (j, k) in T."""
    by_mid: dict[int, list[int]] = {}
    for j, k in t_yz:
        by_mid.setdefault(j, []).append(k)
    out = set()
    for i, j in s_xy:
        for k in by_mid.get(j, ()):
            out.add((i, k))
    return frozenset(out)


def box_is_zero(x: MMSpace, y: MMSpace, atol: float = DERIVED_ATOL) -> bool:
    """Exact box distance <= atol, cross-checked against mm-isomorphism.

    When zero, the optimal coupling's support induces the isometry (each
    support row matches a single column); the extracted map is verified.
    """
    cert = box_distance(x, y, mode="exact")
    zero = cert.value <= atol
    iso, _ = mm_isomorphic(x, y)
    if zero != iso:
        raise RuntimeError("internal inconsistency: box==0 disagrees with mm-isomorphism")
    if zero:
        fmap = {}
        for i in sorted(x.support):
            j = int(np.argmax(cert.coupling.matrix[i]))
            fmap[i] = j
        for i, i2 in ((a, b) for a in fmap for b in fmap):
            if abs(x.dist[i, i2] - y.dist[fmap[i], fmap[i2]]) > 1e-6:
                raise RuntimeError("support of the optimal coupling is not an isometry")
    return zero
