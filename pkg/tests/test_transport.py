import numpy as np
import pytest

from mmdist import (Coupling, InstanceTooLargeError, MarginalMismatchError,
                    ValidationError, coupling_grid, diagonal_coupling, glue,
                    independent_coupling, local_search, max_mass_on,
                    product_measure, project_13, random_coupling, total_variation)
from mmdist.checks import check_max_mass_flow_vs_lp
from mmdist.generate import random_space


class TestCouplingType:
    def test_rejects_wrong_marginals(self, x2):
        with pytest.raises(ValidationError):
            Coupling(np.full((2, 2), 0.25), [0.7, 0.3], [0.5, 0.5])

    def test_rejects_negative_entries(self):
        with pytest.raises(ValidationError):
            Coupling(np.array([[0.6, -0.1], [0.2, 0.3]]), [0.5, 0.5], [0.8, 0.2])

    def test_from_matrix_uses_own_marginals(self):
        p = Coupling.from_matrix([[0.1, 0.2], [0.3, 0.4]])
        assert np.allclose(p.row_marginal, [0.3, 0.7])
        assert np.allclose(p.col_marginal, [0.4, 0.6])


class TestCanonicalCouplings:
    def test_independent_with_point(self, x2, p1):
        p = independent_coupling(x2, p1)
        assert np.allclose(p.matrix, [[0.5], [0.5]])

    def test_independent_uniform_square(self, x2):
        assert np.allclose(independent_coupling(x2, x2).matrix, 0.25)

    def test_unique_coupling_to_point(self, x2q, p1):
        # the polytope against a one-point space is a single coupling
        p = independent_coupling(x2q, p1)
        assert np.allclose(p.matrix, [[0.75], [0.25]])

    def test_diagonal(self, x2, p1):
        assert np.allclose(diagonal_coupling(x2).matrix, np.diag([0.5, 0.5]))
        assert np.allclose(diagonal_coupling(p1).matrix, [[1.0]])
        assert diagonal_coupling(x2).support_pairs() == frozenset({(0, 0), (1, 1)})


class TestMaxMassOn:
    def test_full_grid_carries_everything(self, x2, x2q):
        pairs = {(i, j) for i in range(2) for j in range(2)}
        value, _ = max_mass_on(pairs, x2, x2q)
        assert abs(value - 1.0) < 1e-12

    def test_empty_set_carries_nothing(self, x2, x2q):
        value, coupling = max_mass_on(frozenset(), x2, x2q)
        assert value == 0.0
        assert np.allclose(coupling.matrix.sum(), 1.0)

    def test_single_cell_uniform(self, x2):
        value, coupling = max_mass_on({(0, 1)}, x2, x2)
        assert abs(value - 0.5) < 1e-12
        assert abs(coupling.matrix[0, 1] - 0.5) < 1e-12

    def test_monotone_in_the_set(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
            x, y = random_space(n, rng), random_space(m, rng)
            cells = [(i, j) for i in range(n) for j in range(m)]
            rng.shuffle(cells)
            prev = 0.0
            for k in range(0, len(cells), 3):
                value, _ = max_mass_on(frozenset(cells[:k + 1]), x, y)
                assert value >= prev - 1e-12
                prev = value

    def test_agrees_with_vertex_lp_oracle(self):
        assert check_max_mass_flow_vs_lp(seed=31, draws=40).passed


class TestGlue:
    def test_diagonal_with_diagonal(self, x2):
        tri = glue(diagonal_coupling(x2), diagonal_coupling(x2))
        expect = np.zeros((2, 2, 2))
        expect[0, 0, 0] = expect[1, 1, 1] = 0.5
        assert np.allclose(tri.tensor, expect)
        assert np.allclose(project_13(tri).matrix, diagonal_coupling(x2).matrix)

    def test_independent_glues_to_independent(self, x2, x2q, p1):
        tri = glue(independent_coupling(x2, x2q), independent_coupling(x2q, p1))
        proj = project_13(tri)
        assert np.allclose(proj.matrix, np.outer(x2.mass, p1.mass))

    def test_marginal_identities_random(self):
        rng = np.random.default_rng(22)
        for _ in range(40):
            nx, ny, nz = (int(rng.integers(1, 5)) for _ in range(3))
            x, y, z = random_space(nx, rng), random_space(ny, rng), random_space(nz, rng)
            pxy = random_coupling(x, y, rng)
            pyz = random_coupling(y, z, rng)
            tri = glue(pxy, pyz)
            assert np.max(np.abs(tri.marginal_12() - pxy.matrix)) < 1e-9
            assert np.max(np.abs(tri.marginal_23() - pyz.matrix)) < 1e-9
            proj = project_13(tri)
            assert np.max(np.abs(proj.matrix.sum(axis=1) - x.mass)) < 1e-9
            assert np.max(np.abs(proj.matrix.sum(axis=0) - z.mass)) < 1e-9

    def test_mismatched_middle_marginal_raises(self, x2, x2q, p1):
        with pytest.raises(MarginalMismatchError):
            glue(independent_coupling(x2, x2q), independent_coupling(x2, p1))


class TestProductMeasure:
    def test_total_mass_one(self, x2, x2q):
        w = product_measure(independent_coupling(x2, x2q))
        assert abs(w.sum() - 1.0) < 1e-12

    def test_diagonal_square(self, x2):
        w = product_measure(diagonal_coupling(x2))
        assert np.count_nonzero(w) == 4
        assert np.allclose(w[w > 0], 0.25)

    def test_independent_uniform(self, x2):
        w = product_measure(independent_coupling(x2, x2))
        assert np.allclose(w, 1.0 / 16.0)

    def test_partial_sum_recovers_the_coupling(self):
        rng = np.random.default_rng(23)
        x, y = random_space(3, rng), random_space(2, rng)
        p = random_coupling(x, y, rng)
        w = product_measure(p).reshape(6, 6)
        assert np.allclose(w.sum(axis=1), p.matrix.ravel(), atol=1e-12)


class TestCouplingGrid:
    def test_point_target_gives_the_unique_coupling(self, x2q, p1):
        net = coupling_grid(x2q, p1, step=0.3)
        assert len(net) == 1
        assert np.allclose(net[0].matrix, [[0.75], [0.25]])

    def test_uniform_square_quarter_step_contains_vertices(self, x2):
        net = coupling_grid(x2, x2, step=0.25)
        mats = [m.matrix for m in net]
        assert any(np.allclose(m, np.diag([0.5, 0.5]), atol=1e-9) for m in mats)
        assert any(np.allclose(m, np.array([[0, 0.5], [0.5, 0]]), atol=1e-9) for m in mats)

    def test_members_are_valid_couplings(self):
        rng = np.random.default_rng(24)
        x, y = random_space(2, rng), random_space(3, rng)
        for member in coupling_grid(x, y, step=0.25):
            assert np.max(np.abs(member.matrix.sum(axis=1) - x.mass)) < 1e-9
            assert np.max(np.abs(member.matrix.sum(axis=0) - y.mass)) < 1e-9

    def test_net_covers_random_couplings(self):
        rng = np.random.default_rng(25)
        for _ in range(8):
            n, m = int(rng.integers(2, 4)), int(rng.integers(2, 3))
            x, y = random_space(n, rng), random_space(m, rng)
            step = 0.2
            try:
                net = coupling_grid(x, y, step=step)
            except InstanceTooLargeError:
                continue
            for _ in range(40):
                p = random_coupling(x, y, rng)
                assert min(total_variation(p, q) for q in net) <= step + 1e-9

    def test_dimension_budget(self):
        rng = np.random.default_rng(26)
        x, y = random_space(4, rng), random_space(4, rng)
        with pytest.raises(InstanceTooLargeError):
            coupling_grid(x, y, step=0.25, dim_budget=4)


class TestLocalSearch:
    def test_constant_objective_returns_start(self, x2):
        start = independent_coupling(x2, x2)
        out = local_search(lambda c: 1.0, start, budget=5)
        assert np.allclose(out.matrix, start.matrix)

    def test_reaches_diagonal_vertex(self, x2):
        start = independent_coupling(x2, x2)
        out = local_search(lambda c: 1.0 - c.matrix[0, 0] - c.matrix[1, 1], start)
        assert abs(1.0 - out.matrix[0, 0] - out.matrix[1, 1]) < 1e-9
        assert np.allclose(out.matrix, np.diag([0.5, 0.5]), atol=1e-9)

    def test_never_worse_and_stays_feasible(self):
        rng = np.random.default_rng(27)
        for _ in range(10):
            x, y = random_space(3, rng), random_space(3, rng)
            start = random_coupling(x, y, rng)
            target = random_coupling(x, y, rng)

            def objective(c):
                return float(np.abs(c.matrix - target.matrix).sum())

            out = local_search(objective, start, budget=20, seed=3)
            assert objective(out) <= objective(start) + 1e-12
            assert np.max(np.abs(out.matrix.sum(axis=1) - x.mass)) < 1e-9
            assert np.max(np.abs(out.matrix.sum(axis=0) - y.mass)) < 1e-9
