"""Executable invariant suites: metric axioms, oracle equivalences, the
continuity and enlargement inequalities, composition/gluing inequalities,
cross-metric comparisons and nondegeneracy.

Each check returns a CheckResult; the CLI `check` command and the acceptance
tests drive the same functions (the acceptance tests at the sizes pinned
there, the CLI at a configurable scale).  Failures carry the offending
instances verbatim as document JSON.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .boxdist import box_bruteforce, box_distance, box_is_zero, compose_pairsets
from .core import (MMSpace, distortion, diagonal_distortion, enlargement,
                   ky_fan, mm_isomorphic, product_space)
from .documents import dumps_document, space_to_document
from .eurandom import EurBudget, eurandom_distortion, eurandom_is_zero
from .generate import exhaustive_uniform_spaces, random_measure, random_space
from .observable import dconc_bounds, random_lipschitz
from .prohorov import coupling_diagonal_distortion, prohorov_bruteforce, prohorov_strassen
from .transport import Coupling, glue, max_mass_on, product_measure, project_13, random_coupling

TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    failures: list[str] = field(default_factory=list)


class _Recorder:
    """Collects worst slack and counterexamples for one check."""

    def __init__(self, name: str):
        self.name = name
        self.count = 0
        self.worst = -np.inf
        self.failures: list[str] = []

    def require(self, slack: float, *instances: MMSpace, note: str = ""):
        """slack <= 0 means the assertion holds; positive slack is a violation."""
        self.count += 1
        self.worst = max(self.worst, slack)
        if slack > 0 and len(self.failures) < 3:
            parts = [f"violation by {slack:.3e} {note}".strip()]
            for k, inst in enumerate(instances):
                parts.append(dumps_document(space_to_document(inst, f"instance-{k}")))
            self.failures.append("\n".join(parts))

    def result(self) -> CheckResult:
        return CheckResult(self.name, not self.failures,
                           f"{self.count} draws, worst slack {self.worst:+.3e}",
                           self.failures)


def _random_pairset(rng: np.random.Generator, n: int, m: int, allow_empty: bool = False):
    total = n * m
    k = int(rng.integers(0 if allow_empty else 1, total + 1))
    flat = rng.choice(total, size=k, replace=False)
    return frozenset((int(v) // m, int(v) % m) for v in flat)


def _random_joint(rng: np.random.Generator, n: int, m: int) -> Coupling:
    matrix = rng.random((n, m)) + 1e-3
    matrix /= matrix.sum()
    return Coupling.from_matrix(matrix)


def _flat_measure(p: Coupling) -> np.ndarray:
    return np.asarray(p.matrix).ravel()


# ---------------------------------------------------------------------------
# axiom suite
# ---------------------------------------------------------------------------

def check_prohorov_metric_axioms(seed: int = 0, draws: int = 100, tol: float = TOL) -> CheckResult:
    rec = _Recorder("prohorov: symmetry, triangle, identity, <=1")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(2, 6))
        x = random_space(n, rng)
        mu, nu, la = (random_measure(n, rng) for _ in range(3))
        d_mn = prohorov_strassen(mu, nu, x.space)[0]
        d_nm = prohorov_strassen(nu, mu, x.space)[0]
        d_ml = prohorov_strassen(mu, la, x.space)[0]
        d_nl = prohorov_strassen(nu, la, x.space)[0]
        rec.require(abs(d_mn - d_nm) - tol, x, note="(symmetry)")
        rec.require(d_ml - (d_mn + d_nl) - tol, x, note="(triangle)")
        rec.require(prohorov_strassen(mu, mu, x.space)[0] - tol, x, note="(identity)")
        rec.require(d_mn - 1.0 - tol, x, note="(<=1)")
    return rec.result()


def check_strassen_equivalence(seed: int = 0, draws: int = 200, max_n: int = 8,
                               tol: float = TOL) -> CheckResult:
    rec = _Recorder("prohorov: coupling representation == subset-scan definition")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(2, max_n + 1))
        x = random_space(n, rng)
        mu = random_measure(n, rng)
        nu = random_measure(n, rng)
        via_coupling = prohorov_strassen(mu, nu, x.space)[0]
        via_subsets = prohorov_bruteforce(mu, nu, x.space)
        rec.require(abs(via_coupling - via_subsets) - tol, x)
    return rec.result()


def check_prohorov_witnesses(seed: int = 0, draws: int = 60, tol: float = TOL) -> CheckResult:
    rec = _Recorder("prohorov: reported value equals its own witnesses")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(2, 7))
        x = random_space(n, rng)
        mu = random_measure(n, rng)
        nu = random_measure(n, rng)
        value, coupling, pairs = prohorov_strassen(mu, nu, x.space)
        again = max(diagonal_distortion(pairs, x.space), 1.0 - coupling.mass_on(pairs))
        rec.require(abs(value - again) - tol, x)
    return rec.result()


def check_box_oracle(seed: int = 0, draws: int = 100, tol: float = TOL) -> CheckResult:
    rec = _Recorder("box: threshold/clique/flow scan == subset bruteforce")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        x = random_space(n, rng)
        y = random_space(m, rng)
        exact = box_distance(x, y, mode="exact").value
        brute = box_bruteforce(x, y)
        rec.require(abs(exact - brute) - tol, x, y)
    return rec.result()


def check_box_metric_axioms(seed: int = 0, draws: int = 100, max_n: int = 4,
                            tol: float = TOL) -> CheckResult:
    rec = _Recorder("box: exact symmetry and triangle inequality")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        sizes = [int(rng.integers(1, max_n + 1)) for _ in range(3)]
        x, y, z = (random_space(k, rng) for k in sizes)
        d_xy = box_distance(x, y, mode="exact").value
        d_yx = box_distance(y, x, mode="exact").value
        d_yz = box_distance(y, z, mode="exact").value
        d_xz = box_distance(x, z, mode="exact").value
        rec.require(abs(d_xy - d_yx), x, y, note="(symmetry, exact)")
        rec.require(d_xz - (d_xy + d_yz) - tol, x, y, z, note="(triangle)")
    return rec.result()


def check_box_nondegeneracy(tol: float = TOL) -> CheckResult:
    rec = _Recorder("box: zero iff mm-isomorphic (exhaustive corpus n<=3)")
    corpus = exhaustive_uniform_spaces(max_n=3, labeled=True)
    for x, y in itertools.combinations_with_replacement(corpus, 2):
        agrees = box_is_zero(x, y, atol=tol) == mm_isomorphic(x, y)[0]
        rec.require(0.0 if agrees else 1.0, x, y)
    return rec.result()


def check_ky_fan_axioms(seed: int = 0, draws: int = 150, tol: float = TOL) -> CheckResult:
    rec = _Recorder("ky fan: pseudo-metric axioms")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(2, 7))
        mu = random_measure(n, rng)
        f, g, h = (rng.uniform(-2, 2, size=n) for _ in range(3))
        rec.require(ky_fan(f, f, mu) - tol, note="(identity)")
        rec.require(abs(ky_fan(f, g, mu) - ky_fan(g, f, mu)) - tol, note="(symmetry)")
        rec.require(ky_fan(f, h, mu) - (ky_fan(f, g, mu) + ky_fan(g, h, mu)) - 1e-12,
                    note="(triangle)")
    return rec.result()


def _transport_vertices(row: np.ndarray, col: np.ndarray):
    """All basic feasible solutions of the transportation polytope, by
    enumerating cell bases of size n+m-1 and solving the marginal equations."""
    n, m = len(row), len(col)
    cells = list(itertools.product(range(n), range(m)))
    k = n + m - 1
    rhs = np.concatenate([row, col[:-1]])
    # the last column equation is redundant given the row equations
    for basis in itertools.combinations(cells, k):
        a = np.zeros((k, k))
        for idx, (i, j) in enumerate(basis):
            a[i, idx] = 1.0
            if j < m - 1:
                a[n + j, idx] = 1.0
        try:
            sol = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError:
            continue
        if np.all(sol >= -1e-10):
            matrix = np.zeros((n, m))
            for idx, (i, j) in enumerate(basis):
                matrix[i, j] = max(sol[idx], 0.0)
            if (np.max(np.abs(matrix.sum(axis=1) - row)) < 1e-8
                    and np.max(np.abs(matrix.sum(axis=0) - col)) < 1e-8):
                yield matrix


def check_max_mass_flow_vs_lp(seed: int = 0, draws: int = 60, tol: float = TOL) -> CheckResult:
    rec = _Recorder("max mass on a pair set: flow == vertex-enumeration LP oracle")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        x = random_space(n, rng)
        y = random_space(m, rng)
        pairs = _random_pairset(rng, n, m, allow_empty=True)
        flow_val, coupling = max_mass_on(pairs, x, y)
        best = 0.0
        for matrix in _transport_vertices(np.asarray(x.mass), np.asarray(y.mass)):
            best = max(best, sum(matrix[i, j] for i, j in pairs))
        rec.require(abs(flow_val - best) - tol, x, y)
        cap_rows = sum(x.mass[i] for i in {i for i, _ in pairs})
        cap_cols = sum(y.mass[j] for j in {j for _, j in pairs})
        rec.require(flow_val - min(cap_rows, cap_cols) - tol if pairs else -1.0, x, y,
                    note="(feasibility cap)")
    return rec.result()


# ---------------------------------------------------------------------------
# lemma suite
# ---------------------------------------------------------------------------

def check_enlargement_diagonal(seed: int = 0, draws: int = 200, tol: float = TOL) -> CheckResult:
    rec = _Recorder("diagonal distortion of an enlargement grows at most by t")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(2, 6))
        x = random_space(n, rng)
        prod = product_space(x.space, x.space)
        pairs = _random_pairset(rng, n, n)
        t = 0.1 * int(rng.integers(0, 21))
        grown = enlargement(pairs, t, prod)
        rec.require(diagonal_distortion(grown, x.space)
                    - (diagonal_distortion(pairs, x.space) + t) - tol, x)
    return rec.result()


def check_enlargement_offdiagonal(seed: int = 0, draws: int = 200, tol: float = TOL) -> CheckResult:
    rec = _Recorder("distortion of an enlargement grows at most by 2t")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(2, 5))
        x = random_space(n, rng)
        y = random_space(m, rng)
        prod = product_space(x.space, y.space)
        pairs = _random_pairset(rng, n, m)
        t = 0.1 * int(rng.integers(0, 21))
        grown = enlargement(pairs, t, prod)
        rec.require(distortion(grown, x, y) - (distortion(pairs, x, y) + 2 * t) - tol, x, y)
    return rec.result()


def check_diag_distortion_continuity(seed: int = 0, draws: int = 200,
                                     tol: float = TOL) -> CheckResult:
    rec = _Recorder("|disD(p) - disD(p')| <= prohorov(p, p') on the l1 square")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(2, 5))
        x = random_space(n, rng)
        p = _random_joint(rng, n, n)
        q = _random_joint(rng, n, n)
        prod = product_space(x.space, x.space)
        d_p = prohorov_strassen(_flat_measure(p), _flat_measure(q), prod)[0]
        v_p = coupling_diagonal_distortion(p, x.space)[0]
        v_q = coupling_diagonal_distortion(q, x.space)[0]
        rec.require(abs(v_p - v_q) - d_p - tol, x)
    return rec.result()


def check_distortion_continuity(seed: int = 0, draws: int = 200, tol: float = TOL) -> CheckResult:
    rec = _Recorder("|dis(p) - dis(p')| <= 2 prohorov(p, p') on the l1 product "
                    "(also the observable upper bound at its literal level)")
    rng = np.random.default_rng(seed)
    from .boxdist import coupling_distortion
    for _ in range(draws):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(2, 5))
        x = random_space(n, rng)
        y = random_space(m, rng)
        p = _random_joint(rng, n, m)
        q = _random_joint(rng, n, m)
        prod = product_space(x.space, y.space)
        d_p = prohorov_strassen(_flat_measure(p), _flat_measure(q), prod)[0]
        v_p = coupling_distortion(p, x, y)[0]
        v_q = coupling_distortion(q, x, y)[0]
        rec.require(abs(v_p - v_q) - 2.0 * d_p - tol, x, y)
    return rec.result()


def check_ky_fan_measure_change(seed: int = 0, draws: int = 200, tol: float = TOL) -> CheckResult:
    rec = _Recorder("|kf_mu(f,g) - kf_nu(f,g)| <= 2 prohorov(mu, nu) for 1-Lipschitz f, g")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(2, 7))
        x = random_space(n, rng)
        f = random_lipschitz(x.space, rng)
        g = random_lipschitz(x.space, rng)
        mu = random_measure(n, rng)
        nu = random_measure(n, rng)
        d_p = prohorov_strassen(mu, nu, x.space)[0]
        rec.require(abs(ky_fan(f, g, mu) - ky_fan(f, g, nu)) - 2.0 * d_p - tol, x)
    return rec.result()


def check_eurandom_continuity(seed: int = 0, draws: int = 200, tol: float = TOL) -> CheckResult:
    rec = _Recorder("|eur(p) - eur(p')| <= prohorov(pXp, p'Xp') on the l1 fourth power")
    rng = np.random.default_rng(seed)
    for i in range(draws):
        n, m = (2, 2) if i % 4 else (2, 3)
        x = random_space(n, rng)
        y = random_space(m, rng)
        p = _random_joint(rng, n, m)
        q = _random_joint(rng, n, m)
        prod_xy = product_space(x.space, y.space)
        prod4 = product_space(prod_xy, prod_xy)
        d_p = prohorov_strassen(product_measure(p), product_measure(q), prod4)[0]
        v_p = eurandom_distortion(p, x, y)[0]
        v_q = eurandom_distortion(q, x, y)[0]
        rec.require(abs(v_p - v_q) - d_p - tol, x, y)
    return rec.result()


def check_composition(seed: int = 0, draws: int = 100, tol: float = TOL) -> CheckResult:
    rec = _Recorder("composition: distortion subadditive, glued mass lower bound")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        sizes = [int(rng.integers(2, 5)) for _ in range(3)]
        x, y, z = (random_space(k, rng) for k in sizes)
        s = _random_pairset(rng, x.n, y.n)
        t = _random_pairset(rng, y.n, z.n)
        comp = compose_pairsets(s, t)
        if comp:
            rec.require(distortion(comp, x, z)
                        - (distortion(s, x, y) + distortion(t, y, z)) - tol, x, y, z)
        pxy = random_coupling(x, y, rng)
        pyz = random_coupling(y, z, rng)
        pxz = project_13(glue(pxy, pyz))
        rec.require((pxy.mass_on(s) + pyz.mass_on(t) - 1.0) - pxz.mass_on(comp) - tol,
                    x, y, z, note="(glued mass)")
    return rec.result()


def check_cross_metric(seed: int = 0, draws: int = 50, tol: float = TOL) -> CheckResult:
    rec = _Recorder("eur(box coupling) <= 2 box, observable upper <= box")
    rng = np.random.default_rng(seed)
    for _ in range(draws):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        x = random_space(n, rng)
        y = random_space(m, rng)
        cert = box_distance(x, y, mode="exact")
        eur_val = eurandom_distortion(cert.coupling, x, y)[0]
        rec.require(eur_val - 2.0 * cert.value - tol, x, y, note="(eur <= 2 box)")
        conc = dconc_bounds(x, y)
        rec.require(conc.upper - cert.value - tol, x, y, note="(dconc <= box)")
    return rec.result()


def check_eurandom_nondegeneracy(pair_limit: int | None = None, tol: float = TOL) -> CheckResult:
    rec = _Recorder("eurandom: certified zero iff mm-isomorphic (uniform corpus n<=3)")
    corpus = exhaustive_uniform_spaces(max_n=3, labeled=False)
    budget = EurBudget()
    pairs = list(itertools.combinations_with_replacement(corpus, 2))
    if pair_limit is not None:
        pairs = pairs[:pair_limit]
    for x, y in pairs:
        agrees = eurandom_is_zero(x, y, budget) == mm_isomorphic(x, y)[0]
        rec.require(0.0 if agrees else 1.0, x, y)
    return rec.result()


def check_observable_nondegeneracy(tol: float = TOL) -> CheckResult:
    rec = _Recorder("observable: certified bracket contains 0 iff mm-isomorphic "
                    "(corpus pairs with polytope dimension <= 2)")
    corpus = exhaustive_uniform_spaces(max_n=3, labeled=False)
    for x, y in itertools.combinations_with_replacement(corpus, 2):
        if (len(x.support) - 1) * (len(y.support) - 1) > 2:
            continue
        bounds = dconc_bounds(x, y)
        contains_zero = bounds.lower <= tol
        rec.require(0.0 if contains_zero == mm_isomorphic(x, y)[0] else 1.0, x, y)
    return rec.result()


AXIOM_CHECKS = [
    check_prohorov_metric_axioms,
    check_strassen_equivalence,
    check_prohorov_witnesses,
    check_box_oracle,
    check_box_metric_axioms,
    check_box_nondegeneracy,
    check_ky_fan_axioms,
    check_max_mass_flow_vs_lp,
]

LEMMA_CHECKS = [
    check_enlargement_diagonal,
    check_enlargement_offdiagonal,
    check_diag_distortion_continuity,
    check_distortion_continuity,
    check_ky_fan_measure_change,
    check_eurandom_continuity,
    check_composition,
    check_cross_metric,
    check_eurandom_nondegeneracy,
    check_observable_nondegeneracy,
]


def run_suite(suite: str, seed: int = 0, scale: float = 1.0,
              tol: float = TOL) -> list[CheckResult]:
    """Run a named suite.  scale multiplies every draw count (CLI default 1)."""
    selected = {"axioms": AXIOM_CHECKS, "lemmas": LEMMA_CHECKS,
                "all": AXIOM_CHECKS + LEMMA_CHECKS}.get(suite)
    if selected is None:
        raise ValueError(f"unknown suite {suite!r}")
    results = []
    for fn in selected:
        kwargs = {"tol": tol}
        params = fn.__code__.co_varnames[:fn.__code__.co_argcount]
        if "seed" in params:
            kwargs["seed"] = seed
        if "draws" in params:
            default = fn.__defaults__[list(params).index("draws") - (len(params) - len(fn.__defaults__))]
            kwargs["draws"] = max(1, int(default * scale))
        if "pair_limit" in params and scale < 1.0:
            kwargs["pair_limit"] = 30
        results.append(fn(**kwargs))
    return results
