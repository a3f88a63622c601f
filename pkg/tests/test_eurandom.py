import numpy as np
import pytest

from mmdist import (Coupling, EurBudget, MetricSpace, MMSpace,
                    UncertifiedInstanceError, diagonal_coupling, eurandom_distance,
                    eurandom_distortion, eurandom_is_zero, independent_coupling,
                    total_variation)
from mmdist.checks import (check_cross_metric, check_eurandom_continuity,
                           check_eurandom_nondegeneracy)
from mmdist.eurandom import EurEvaluator
from mmdist.generate import random_space
from mmdist.transport import local_search, random_coupling


class TestFixedCouplingValue:
    def test_diagonal_is_zero(self, x2):
        value, eps = eurandom_distortion(diagonal_coupling(x2), x2, x2)
        assert value == 0.0

    def test_independent_uniform_square(self, x2):
        value, eps = eurandom_distortion(independent_coupling(x2, x2), x2, x2)
        assert abs(value - 0.5) < 1e-12

    def test_unique_coupling_skewed_pair_to_point(self, x2q, p1):
        value, eps = eurandom_distortion(independent_coupling(x2q, p1), x2q, p1)
        assert abs(value - 0.375) < 1e-12

    def test_epsilon_is_feasible(self):
        # max(eps, tail(eps)) evaluated at the returned eps equals the value
        rng = np.random.default_rng(61)
        for _ in range(30):
            n, m = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            x, y = random_space(n, rng), random_space(m, rng)
            p = random_coupling(x, y, rng)
            value, eps = eurandom_distortion(p, x, y)
            ev = EurEvaluator(x, y)
            w = np.outer(p.matrix.ravel(), p.matrix.ravel()).ravel()
            tail = float(w[ev.q.ravel() > eps].sum())
            assert abs(max(eps, tail) - value) < 1e-12


class TestGlobalMinimization:
    def test_zero_against_itself(self):
        rng = np.random.default_rng(62)
        for _ in range(6):
            x = random_space(int(rng.integers(1, 4)), rng)
            cert = eurandom_distance(x, x)
            assert cert.upper <= 1e-9
            assert cert.certified_error is not None

    def test_hand_values_exact(self, x2, x2q, p1):
        cert = eurandom_distance(x2, p1)
        assert abs(cert.upper - 0.5) < 1e-12 and cert.certified_error == 0.0
        cert = eurandom_distance(x2q, p1)
        assert abs(cert.upper - 0.375) < 1e-12 and cert.certified_error == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(63)
        for _ in range(8):
            x = random_space(int(rng.integers(1, 4)), rng)
            y = random_space(int(rng.integers(1, 4)), rng)
            a = eurandom_distance(x, y)
            b = eurandom_distance(y, x)
            assert a.upper == b.upper
            assert np.allclose(a.coupling.matrix, b.coupling.matrix.T)

    def test_bracket_contains_sampled_values(self):
        rng = np.random.default_rng(64)
        for _ in range(5):
            n, m = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            x, y = random_space(n, rng), random_space(m, rng)
            cert = eurandom_distance(x, y, EurBudget(gap=0.03))
            lower = cert.upper - cert.certified_error
            for _ in range(200):
                p = random_coupling(x, y, rng)
                value, _ = eurandom_distortion(p, x, y)
                assert value >= lower - 1e-9

    def test_heuristic_beyond_budget(self):
        rng = np.random.default_rng(65)
        x, y = random_space(4, rng), random_space(4, rng)
        cert = eurandom_distance(x, y, EurBudget(dim=2))
        assert cert.certified_error is None
        best, _ = eurandom_distortion(cert.coupling, x, y)
        assert abs(best - cert.upper) < 1e-12


class TestContinuityAndCertification:
    def test_prohorov_continuity_of_the_product(self):
        assert check_eurandom_continuity(seed=66, draws=80).passed

    def test_tv_perturbation_moves_value_at_most_twice(self):
        rng = np.random.default_rng(67)
        for _ in range(60):
            n, m = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            x, y = random_space(n, rng), random_space(m, rng)
            p = random_coupling(x, y, rng)
            q = local_search(lambda c: float(np.abs(c.matrix - p.matrix).sum()),
                             random_coupling(x, y, rng), budget=3)
            delta = total_variation(p, q)
            vp, _ = eurandom_distortion(p, x, y)
            vq, _ = eurandom_distortion(q, x, y)
            assert abs(vp - vq) <= 2.0 * delta + 1e-9

    def test_twice_box_upper_bound(self):
        assert check_cross_metric(seed=67, draws=30).passed


class TestZeroDecision:
    def test_isomorphic_pair(self, x2):
        perm = MMSpace(MetricSpace(x2.dist[np.ix_([1, 0], [1, 0])]), x2.mass[[1, 0]])
        assert eurandom_is_zero(x2, perm)

    def test_point_vs_pair(self, x2, p1):
        assert not eurandom_is_zero(x2, p1)

    def test_mass_skew_detected(self, x2, x2q):
        assert not eurandom_is_zero(x2, x2q)

    def test_dimension_guard(self):
        rng = np.random.default_rng(68)
        x, y = random_space(4, rng), random_space(4, rng)
        with pytest.raises(UncertifiedInstanceError):
            eurandom_is_zero(x, y, EurBudget(dim=2))

    def test_nondegeneracy_on_exhaustive_corpus(self):
        assert check_eurandom_nondegeneracy().passed
