"""Inversion machinery on exact stub surrogates: fast and GP-independent."""

import math

import numpy as np
import pytest

from gpinverse import (
    ConfigurationError,
    DomainError,
    GaussianPrior,
    InverseProblem,
    high_probability_region,
    laplace_approximation,
    ls_functional,
    map_gaussian_prior,
    map_multistart,
    nls_profile,
)


def _forrester(x):
    return (6.0 * x[0] - 2.0) ** 2 * math.sin(12.0 * x[0] - 4.0)


def _mixed1d(x):
    return (
        math.exp(-((x[0] - 2.0) ** 2) / 2.0)
        + 0.9 * math.exp(-((x[0] + 5.0) ** 2) / 20.0)
        + 0.1 * math.cos(2.0 * x[0])
    )


@pytest.fixture
def forrester_problem(function_surrogate):
    return InverseProblem(
        surrogate=function_surrogate(_forrester),
        observed=-6.02,
        obs_variance=0.72,
        bounds=((0.0, 1.0),),
    )


@pytest.fixture
def mixed1d_problem(function_surrogate):
    return InverseProblem(
        surrogate=function_surrogate(_mixed1d),
        observed=0.63,
        obs_variance=0.0016,
        bounds=((-10.0, 10.0),),
    )


class TestFunctionals:
    def test_ls_zero_at_exact_match(self, function_surrogate):
        prob = InverseProblem(
            surrogate=function_surrogate(lambda x: 0.63),
            observed=0.63,
            obs_variance=1.0,
            bounds=((0.0, 1.0),),
        )
        assert ls_functional(prob, [0.5]) == 0.0
        assert nls_profile(prob, [0.5]) == 1.0

    def test_ls_squared_misfit_arithmetic(self, function_surrogate):
        prob = InverseProblem(
            surrogate=function_surrogate(lambda x: 0.8),
            observed=0.63,
            obs_variance=1.0,
            bounds=((0.0, 1.0),),
        )
        assert ls_functional(prob, [0.1]) == pytest.approx(0.0289, rel=1e-12)

    def test_nls_at_two_sigma_squared(self, function_surrogate):
        s2 = 0.37
        prob = InverseProblem(
            surrogate=function_surrogate(lambda x: 1.0),
            observed=1.0 + math.sqrt(2.0 * s2),
            obs_variance=s2,
            bounds=((0.0, 1.0),),
        )
        # LS = 2 sigma^2 exactly, so NLS = e^-1
        assert nls_profile(prob, [0.5]) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_out_of_bounds_rejected(self, forrester_problem):
        with pytest.raises(DomainError):
            ls_functional(forrester_problem, [1.2])

    def test_ls_nls_order_anticorrespondence(self, function_surrogate):
        prob = InverseProblem(
            surrogate=function_surrogate(_forrester),
            observed=2.0,
            obs_variance=0.5,
            bounds=((0.0, 1.0),),
        )
        rng = np.random.default_rng(17)
        for _ in range(1000):
            x1, x2 = rng.random(2)
            ls1, ls2 = ls_functional(prob, [x1]), ls_functional(prob, [x2])
            n1, n2 = nls_profile(prob, [x1]), nls_profile(prob, [x2])
            assert (ls1 < ls2) == (n1 > n2) or ls1 == ls2

    def test_invalid_obs_variance(self, function_surrogate):
        with pytest.raises(ConfigurationError):
            InverseProblem(
                surrogate=function_surrogate(_forrester),
                observed=0.0,
                obs_variance=0.0,
                bounds=((0.0, 1.0),),
            )


class TestMapMultistart:
    def test_forrester_single_cluster_at_reference_map(self, forrester_problem):
        summary = map_multistart(forrester_problem, n_starts=16, max_iter=400, seed=0)
        best = summary.map_clusters[0]
        assert abs(best.x[0] - 0.76) <= 0.02
        assert best.ls_residual <= 1e-9
        near_zero = [c for c in summary.map_clusters if c.ls_residual <= 1e-9]
        assert len(near_zero) == 1
        assert not summary.multimodal

    def test_mixed1d_finds_at_least_three_clusters(self, mixed1d_problem):
        summary = map_multistart(mixed1d_problem, n_starts=24, max_iter=400, seed=0)
        near_zero = [c for c in summary.map_clusters if c.ls_residual <= 1e-9]
        assert len(near_zero) >= 3
        assert summary.multimodal

    def test_rosenbrock_observation_reaches_ls_zero(self, function_surrogate):
        # level set of the synthesized observation is curved; the optimizer
        # must land on it exactly
        def rosen(x):
            return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

        prob = InverseProblem(
            surrogate=function_surrogate(rosen),
            observed=rosen([-1.5, -0.6]),
            obs_variance=2500.0,
            bounds=((-2.0, 2.0), (-1.0, 2.0)),
        )
        summary = map_multistart(prob, n_starts=32, max_iter=400, seed=0)
        assert summary.map_clusters[0].ls_residual <= 1e-6
        dists = [
            float(np.linalg.norm(c.x - np.array([-1.5, -0.6])))
            for c in summary.map_clusters
            if c.ls_residual <= 1e-6
        ]
        assert min(dists) <= 0.25  # the target lies on the recovered level set

    def test_reported_maps_are_stationary_or_flagged(self, mixed1d_problem):
        summary = map_multistart(mixed1d_problem, n_starts=16, max_iter=400, seed=1)
        for c in summary.map_clusters:
            assert c.grad_norm < 1e-3 or c.on_bound

    def test_start_order_invariance(self, mixed1d_problem):
        a = map_multistart(mixed1d_problem, n_starts=16, max_iter=400, seed=4)
        b = map_multistart(mixed1d_problem, n_starts=16, max_iter=400, seed=4)
        ax = sorted(round(float(c.x[0]), 3) for c in a.map_clusters)
        bx = sorted(round(float(c.x[0]), 3) for c in b.map_clusters)
        assert ax == bx

    def test_cluster_set_invariant_under_endpoint_permutation(self, mixed1d_problem):
        # clustering happens on the objective-sorted endpoint list, so the
        # order starts were launched in cannot move the cluster set
        from gpinverse.inversion import _cluster_endpoints, _ls_unchecked

        rng = np.random.default_rng(2)
        starts = rng.uniform(-10, 10, size=(20, 1))
        from scipy.optimize import minimize

        endpoints = np.array(
            [
                np.clip(
                    minimize(
                        lambda p: _ls_unchecked(mixed1d_problem, p),
                        s,
                        method="L-BFGS-B",
                        bounds=[(-10.0, 10.0)],
                        options={"maxiter": 400},
                    ).x,
                    -10.0,
                    10.0,
                )
                for s in starts
            ]
        )
        objs = np.array([_ls_unchecked(mixed1d_problem, e) for e in endpoints])

        def cluster_positions(order):
            clusters = _cluster_endpoints(
                endpoints[order],
                objs[order],
                objs[order],
                mixed1d_problem,
                lambda p: _ls_unchecked(mixed1d_problem, p),
            )
            return np.sort([float(c.x[0]) for c in clusters])

        base = cluster_positions(np.arange(20))
        for perm_seed in range(3):
            perm = np.random.default_rng(perm_seed).permutation(20)
            got = cluster_positions(perm)
            assert got.shape == base.shape
            np.testing.assert_allclose(got, base, atol=1e-3)


class TestGaussianPrior:
    def _linear_problem(self, function_surrogate, obs_variance, prior):
        return InverseProblem(
            surrogate=function_surrogate(lambda x: x[0]),
            observed=1.0,
            obs_variance=obs_variance,
            bounds=((-4.0, 4.0),),
            prior=prior,
        )

    def test_closed_form_ridge_solution(self, function_surrogate):
        # f(x) = x, observed 1, unit noise, standard normal prior: MAP = 1/2
        prob = self._linear_problem(
            function_surrogate, 1.0, GaussianPrior(mean=[0.0], cov=[[1.0]])
        )
        summary = map_gaussian_prior(prob, n_starts=8, max_iter=200, seed=0)
        assert summary.map_clusters[0].x[0] == pytest.approx(0.5, abs=1e-6)

    def test_diffuse_prior_recovers_uniform_map(self, function_surrogate):
        diffuse = self._linear_problem(
            function_surrogate, 1.0, GaussianPrior(mean=[0.0], cov=[[1e8]])
        )
        summary = map_gaussian_prior(diffuse, n_starts=8, max_iter=400, seed=0)
        assert summary.map_clusters[0].x[0] == pytest.approx(1.0, abs=1e-2)

    def test_tight_likelihood_off_prior_dominates_when_flat(self, function_surrogate):
        flat_likelihood = self._linear_problem(
            function_surrogate, 1e10, GaussianPrior(mean=[0.3], cov=[[1.0]])
        )
        summary = map_gaussian_prior(flat_likelihood, n_starts=8, max_iter=400, seed=0)
        assert summary.map_clusters[0].x[0] == pytest.approx(0.3, abs=1e-3)

    def test_singular_prior_covariance_rejected(self, function_surrogate):
        prob = self._linear_problem(
            function_surrogate, 1.0, GaussianPrior(mean=[0.0], cov=[[0.0]])
        )
        with pytest.raises(ConfigurationError):
            map_gaussian_prior(prob, n_starts=2, seed=0)

    def test_uniform_problem_rejected(self, forrester_problem):
        with pytest.raises(ConfigurationError):
            map_gaussian_prior(forrester_problem, n_starts=2, seed=0)


class TestLaplace:
    def test_recovers_exact_gaussian_width(self, function_surrogate):
        # linear surrogate makes -log NLS exactly quadratic with curvature
        # 1/sigma_g^2
        sigma_g = 0.17
        slope = math.sqrt(0.5) / sigma_g  # obs_variance 0.5
        prob = InverseProblem(
            surrogate=function_surrogate(lambda x: slope * (x[0] - 0.3)),
            observed=0.0,
            obs_variance=0.5,
            bounds=((-3.0, 3.0),),
        )
        res = laplace_approximation(prob, [0.3])
        assert not res.degenerate
        assert res.cov[0, 0] == pytest.approx(sigma_g**2, rel=0.01)
        lo, hi = res.intervals[0]
        assert lo == pytest.approx(0.3 - 1.96 * sigma_g, abs=1e-3)
        assert hi == pytest.approx(0.3 + 1.96 * sigma_g, abs=1e-3)

    def test_interval_contains_map(self, forrester_problem):
        summary = map_multistart(forrester_problem, n_starts=16, seed=0)
        x_map = summary.map_clusters[0].x
        res = laplace_approximation(forrester_problem, x_map)
        assert not res.degenerate
        lo, hi = res.intervals[0]
        assert lo <= x_map[0] <= hi

    def test_flat_direction_yields_degeneracy_signal(self, function_surrogate):
        # constant-in-y surrogate: the 2D misfit has a flat direction
        prob = InverseProblem(
            surrogate=function_surrogate(lambda x: x[0]),
            observed=0.2,
            obs_variance=0.3,
            bounds=((-1.0, 1.0), (-1.0, 1.0)),
        )
        res = laplace_approximation(prob, [0.2, 0.0])
        assert res.degenerate
        assert res.intervals is None

    def test_nonstationary_point_rejected(self, forrester_problem):
        from gpinverse import InferenceError

        with pytest.raises(InferenceError, match="not stationary"):
            laplace_approximation(forrester_problem, [0.4])


class TestHighProbabilityRegion:
    def test_forrester_interval_matches_reference_range(self, forrester_problem):
        regions = high_probability_region(forrester_problem, 0.95, 2048)
        assert len(regions) == 1
        lo, hi = regions[0]
        assert lo == pytest.approx(0.735, abs=0.01)
        assert hi == pytest.approx(0.78, abs=0.01)

    def test_mixed1d_union_within_reduced_domain(self, mixed1d_problem):
        regions = high_probability_region(mixed1d_problem, 0.95, 2048)
        assert len(regions) >= 3
        assert all(-7.6 <= lo and hi <= 5.1 for lo, hi in regions)

    def test_near_zero_threshold_covers_domain(self, forrester_problem):
        # any threshold below the profile minimum keeps every grid cell
        regions = high_probability_region(forrester_problem, 1e-200, 256)
        assert len(regions) == 1
        lo, hi = regions[0]
        assert lo == pytest.approx(0.0, abs=1e-9)
        assert hi == pytest.approx(1.0, abs=1e-9)

    def test_regions_shrink_with_threshold(self, mixed1d_problem):
        loose = high_probability_region(mixed1d_problem, 0.5, 1024)
        tight = high_probability_region(mixed1d_problem, 0.95, 1024)
        for lo_t, hi_t in tight:
            assert any(lo_l <= lo_t and hi_t <= hi_l for lo_l, hi_l in loose)

    def test_2d_regions_are_boxes_inside_bounds(self, function_surrogate):
        prob = InverseProblem(
            surrogate=function_surrogate(lambda x: x[0] ** 2 + x[1] ** 2),
            observed=0.25,
            obs_variance=0.05,
            bounds=((-1.0, 1.0), (-1.0, 1.0)),
        )
        boxes = high_probability_region(prob, 0.9, 64)
        assert boxes
        for (xlo, xhi), (ylo, yhi) in boxes:
            assert -1 <= xlo <= xhi <= 1
            assert -1 <= ylo <= yhi <= 1

    def test_threshold_validation(self, forrester_problem):
        with pytest.raises(ConfigurationError):
            high_probability_region(forrester_problem, 1.5, 128)
        with pytest.raises(ConfigurationError):
            high_probability_region(forrester_problem, 0.9, 32)
