import numpy as np
import pytest

from mmdist import (Coupling, InstanceTooLargeError, MetricSpace,
                    coupling_diagonal_distortion, diagonal_coupling,
                    diagonal_distortion, independent_coupling,
                    prohorov_bruteforce, prohorov_strassen)
from mmdist.checks import (check_diag_distortion_continuity,
                           check_prohorov_metric_axioms,
                           check_prohorov_witnesses, check_strassen_equivalence)
from mmdist.generate import random_space


class TestHandValues:
    def test_equal_measures(self, x2):
        assert prohorov_strassen(x2.mass, x2.mass, x2.space)[0] == 0.0
        assert prohorov_bruteforce(x2.mass, x2.mass, x2.space) == 0.0

    def test_two_atoms_at_distance_03(self):
        space = MetricSpace([[0.0, 0.3], [0.3, 0.0]])
        for fn in (lambda m, n: prohorov_strassen(m, n, space)[0],
                   lambda m, n: prohorov_bruteforce(m, n, space)):
            assert abs(fn([1.0, 0.0], [0.0, 1.0]) - 0.3) < 1e-12

    def test_mass_swap_on_unit_pair(self, x2):
        value, coupling, pairs = prohorov_strassen([0.75, 0.25], [0.25, 0.75], x2.space)
        assert abs(value - 0.5) < 1e-12
        assert abs(prohorov_bruteforce([0.75, 0.25], [0.25, 0.75], x2.space) - 0.5) < 1e-12
        # witness: diagonal sublevel set at threshold 0 with mass 1/2
        assert pairs == frozenset({(0, 0), (1, 1)})
        assert abs(coupling.mass_on(pairs) - 0.5) < 1e-12


class TestOracleEquivalence:
    def test_matches_bruteforce(self):
        assert check_strassen_equivalence(seed=41, draws=80).passed

    def test_metric_axioms(self):
        assert check_prohorov_metric_axioms(seed=41, draws=60).passed

    def test_value_reproducible_from_witnesses(self):
        assert check_prohorov_witnesses(seed=41, draws=40).passed

    def test_subset_budget(self):
        space = random_space(2, 0).space
        with pytest.raises(InstanceTooLargeError):
            prohorov_bruteforce([0.5, 0.5], [0.5, 0.5], space, subset_budget=1)


class TestCouplingDiagonalDistortion:
    def test_diagonal_coupling_is_zero(self, x2):
        value, pairs = coupling_diagonal_distortion(diagonal_coupling(x2), x2.space)
        assert value == 0.0
        assert {(0, 0), (1, 1)} <= pairs

    def test_independent_uniform_pair(self, x2):
        value, pairs = coupling_diagonal_distortion(independent_coupling(x2, x2), x2.space)
        assert abs(value - 0.5) < 1e-12

    def test_bounded_by_one_and_diameter(self):
        rng = np.random.default_rng(42)
        for _ in range(40):
            n = int(rng.integers(2, 6))
            x = random_space(n, rng)
            matrix = rng.random((n, n))
            p = Coupling.from_matrix(matrix / matrix.sum())
            value, pairs = coupling_diagonal_distortion(p, x.space)
            assert value <= max(1.0, x.space.diameter) + 1e-12
            # the returned witness reproduces the value
            assert abs(max(diagonal_distortion(pairs, x.space), 1.0 - p.mass_on(pairs))
                       - value) < 1e-12

    def test_continuity_in_the_coupling(self):
        assert check_diag_distortion_continuity(seed=42, draws=80).passed
