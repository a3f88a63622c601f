import numpy as np
import pytest

from mmdist import (InstanceTooLargeError, MetricSpace, MMSpace,
                    box_bruteforce, box_distance, box_is_zero, compose_pairsets,
                    coupling_distortion, diagonal_coupling, distortion,
                    independent_coupling, max_mass_on, mm_isomorphic)
from mmdist.checks import (check_box_metric_axioms, check_box_nondegeneracy,
                           check_box_oracle, check_composition,
                           check_distortion_continuity)
from mmdist.generate import random_space


class TestCouplingDistortion:
    def test_diagonal_coupling_is_zero(self, x2):
        value, pairs = coupling_distortion(diagonal_coupling(x2), x2, x2)
        assert value == 0.0
        assert pairs == frozenset({(0, 0), (1, 1)})

    def test_independent_uniform_square(self, x2):
        value, pairs = coupling_distortion(independent_coupling(x2, x2), x2, x2)
        assert abs(value - 0.5) < 1e-12
        assert pairs in (frozenset({(0, 0), (1, 1)}), frozenset({(0, 1), (1, 0)}))

    def test_unique_coupling_to_point(self, x2, p1):
        value, _ = coupling_distortion(independent_coupling(x2, p1), x2, p1)
        assert abs(value - 0.5) < 1e-12

    def test_heuristic_upper_bounds_exact(self):
        rng = np.random.default_rng(51)
        for _ in range(30):
            n, m = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            x, y = random_space(n, rng), random_space(m, rng)
            p = independent_coupling(x, y)
            exact, _ = coupling_distortion(p, x, y, mode="exact")
            rough, _ = coupling_distortion(p, x, y, mode="heuristic")
            assert rough >= exact - 1e-12


class TestBoxDistance:
    def test_zero_against_itself(self):
        rng = np.random.default_rng(52)
        for _ in range(10):
            x = random_space(int(rng.integers(1, 5)), rng)
            cert = box_distance(x, x, mode="exact")
            assert cert.value <= 1e-12

    def test_uniform_pair_against_point(self, x2, p1):
        cert = box_distance(x2, p1, mode="exact")
        assert abs(cert.value - 0.5) < 1e-12
        assert abs(box_bruteforce(x2, p1) - 0.5) < 1e-12

    def test_skewed_pair_against_point(self, x2q, p1):
        cert = box_distance(x2q, p1, mode="exact")
        assert abs(cert.value - 0.25) < 1e-12
        assert abs(box_bruteforce(x2q, p1) - 0.25) < 1e-12

    def test_oracle_equivalence(self):
        assert check_box_oracle(seed=52, draws=50).passed

    def test_metric_axioms(self):
        assert check_box_metric_axioms(seed=52, draws=40).passed

    def test_bruteforce_symmetric(self):
        rng = np.random.default_rng(53)
        for _ in range(20):
            x = random_space(int(rng.integers(1, 4)), rng)
            y = random_space(int(rng.integers(1, 4)), rng)
            assert box_bruteforce(x, y) == box_bruteforce(y, x)

    def test_nondegeneracy_on_exhaustive_corpus(self):
        assert check_box_nondegeneracy().passed

    def test_certificate_self_consistency(self):
        rng = np.random.default_rng(54)
        for _ in range(25):
            x = random_space(int(rng.integers(1, 4)), rng)
            y = random_space(int(rng.integers(1, 4)), rng)
            cert = box_distance(x, y, mode="exact")
            assert abs(cert.reevaluate(x, y) - cert.value) < 1e-9
            assert distortion(cert.pairset, x, y) <= cert.threshold + 1e-9

    def test_heuristic_is_an_upper_bound(self):
        rng = np.random.default_rng(55)
        for _ in range(25):
            x = random_space(int(rng.integers(1, 4)), rng)
            y = random_space(int(rng.integers(1, 4)), rng)
            exact = box_distance(x, y, mode="exact")
            rough = box_distance(x, y, mode="heuristic")
            assert not rough.exact
            assert rough.value >= exact.value - 1e-12

    def test_trivial_certificates_bound_from_above(self):
        rng = np.random.default_rng(56)
        for _ in range(25):
            x = random_space(int(rng.integers(1, 5)), rng)
            y = random_space(int(rng.integers(1, 5)), rng)
            value = box_distance(x, y, mode="exact").value
            everything = frozenset((i, j) for i in range(x.n) for j in range(y.n))
            full_cert = distortion(everything, x, y)
            best_single = min(
                max(0.0, 1.0 - max_mass_on({(i, j)}, x, y)[0])
                for i in range(x.n) for j in range(y.n))
            assert value <= min(full_cert, best_single) + 1e-9

    def test_exact_mode_budget_raises_auto_downgrades(self):
        rng = np.random.default_rng(57)
        x, y = random_space(4, rng), random_space(4, rng)
        with pytest.raises(InstanceTooLargeError):
            box_distance(x, y, mode="exact", clique_budget=3)
        cert = box_distance(x, y, mode="auto", clique_budget=3)
        assert not cert.exact
        assert cert.value >= box_distance(x, y, mode="exact").value - 1e-12

    def test_bruteforce_cell_cap(self):
        rng = np.random.default_rng(58)
        with pytest.raises(InstanceTooLargeError):
            box_bruteforce(random_space(4, rng), random_space(4, rng))

    def test_continuity_in_the_coupling(self):
        assert check_distortion_continuity(seed=58, draws=80).passed


class TestComposition:
    def test_compose_with_diagonal_is_projection_compatible(self, x2):
        s = frozenset({(0, 1), (1, 1)})
        diag = frozenset({(0, 0), (1, 1)})
        assert compose_pairsets(s, diag) == s

    def test_compose_with_empty(self):
        assert compose_pairsets(frozenset(), frozenset({(0, 0)})) == frozenset()

    def test_subadditivity_and_glued_mass(self):
        assert check_composition(seed=59, draws=60).passed


class TestBoxIsZero:
    def test_relabeled_copy(self):
        rng = np.random.default_rng(60)
        x = random_space(3, rng)
        perm = rng.permutation(3)
        y = MMSpace(MetricSpace(x.dist[np.ix_(perm, perm)]), x.mass[perm])
        assert box_is_zero(x, y)
        assert mm_isomorphic(x, y)[0]

    def test_separates_distinct_spaces(self, x2, x2q, p1):
        assert not box_is_zero(x2, p1)
        assert not box_is_zero(x2, x2q)
