import numpy as np
import pytest

from _helpers import EXAMPLE_COUNTS, draw, random_lambdas, random_theta
from _oracles import mle_from_counts
from pvcompare import em
from pvcompare.exceptions import BoundaryEstimate, NotConverged, PVCompareError
from pvcompare.model import VerificationTable


@pytest.fixture(scope="module")
def example():
    return VerificationTable.from_counts(EXAMPLE_COUNTS)


@pytest.fixture(scope="module")
def fit_example(example):
    return em.run_em(example)


class TestWorkedExample:
    def test_matches_closed_form(self, fit_example):
        np.testing.assert_allclose(fit_example.theta_hat.as_array(), mle_from_counts(EXAMPLE_COUNTS),
                                   rtol=1e-7)

    def test_published_estimates(self, fit_example):
        np.testing.assert_allclose(fit_example.theta_hat.eta, [0.507, 0.961, 0.334, 0.966], atol=6e-4)

    def test_iteration_counts(self, example):
        # regression values for the complete-data log-likelihood stopping rule
        assert em.run_em(example, delta=1e-12).iterations == 216
        assert em.run_em(example, delta=1e-10).iterations == 186

    def test_trajectory_monotone(self, fit_example):
        assert np.all(np.diff(fit_example.loglik_trajectory) >= -1e-9)

    def test_start_invariance(self, example, fit_example):
        other = em.run_em(example, d0=tuple(0.9 * c for c in example.c))
        np.testing.assert_allclose(other.theta_hat.as_array(), fit_example.theta_hat.as_array(),
                                   rtol=1e-6)

    def test_fixed_point(self, example, fit_example):
        mapped = em.em_map(example, fit_example.theta_hat)
        np.testing.assert_allclose(mapped.as_array(), fit_example.theta_hat.as_array(), atol=1e-7)

    def test_swap_symmetry(self, fit_example):
        a11, a10, a01, a00, b11, b10, b01, b00, c11, c10, c01, c00 = EXAMPLE_COUNTS
        swapped = VerificationTable.from_counts(
            (a11, a01, a10, a00, b11, b01, b10, b00, c11, c01, c10, c00))
        eta = em.run_em(swapped).theta_hat.eta
        np.testing.assert_allclose(eta, fit_example.theta_hat.eta[[2, 3, 0, 1]], rtol=1e-7)


class TestEdgeCases:
    def test_no_unverified_single_iteration(self):
        t = VerificationTable.from_counts((31, 5, 3, 1, 25, 10, 19, 55, 0, 0, 0, 0))
        res = em.run_em(t)
        assert res.iterations == 1
        assert res.theta_hat.ppv1 == pytest.approx(36 / 71)

    def test_not_converged(self, example):
        with pytest.raises(NotConverged):
            em.run_em(example, max_iter=3)
        res = em.run_em(example, max_iter=3, raise_on_failure=False)
        assert not res.converged and res.iterations == 3

    def test_boundary(self):
        t = VerificationTable.from_counts((0, 0, 3, 1, 25, 10, 19, 55, 22, 6, 65, 346))
        with pytest.raises(BoundaryEstimate):
            em.run_em(t)

    def test_bad_start(self, example):
        with pytest.raises(ValueError):
            em.run_em(example, d0=(0, 0, 0, 1000))

    def test_e_step_bounds(self, example, fit_example):
        d = em.e_step(example, fit_example.theta_hat)
        assert all(0 <= dk <= ck for dk, ck in zip(d, example.c))

    def test_e_step_closed_form(self, example, fit_example):
        d = em.e_step(example, fit_example.theta_hat)
        expected = [c * a / (a + b) for a, b, c in zip(example.a, example.b, example.c)]
        np.testing.assert_allclose(d, expected, rtol=1e-6)


class TestMonotonicity:
    def test_random_scenarios(self):
        rng = np.random.default_rng(17)
        done = 0
        while done < 100:
            t = draw(rng, random_theta(rng), random_lambdas(rng), int(rng.integers(100, 2000)))
            try:
                res = em.run_em(t, delta=1e-10, raise_on_failure=False)
            except PVCompareError:
                continue
            done += 1
            tr = np.array(res.loglik_trajectory)
            assert np.all(np.diff(tr) >= -1e-9 * np.abs(tr).max())
