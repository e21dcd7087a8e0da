import logging
from math import log10

import numpy as np
import pytest

from estimation.exceptions import ConfigurationError, DomainError, NumericalError
from estimation.state_space import (
    MSD_FLOOR,
    GaussianBelief,
    LinearStateSpace,
    MeeConfig,
    NonlinearStateSpace,
    StateTrajectory,
    clamp_psd,
    gaussian_kernel,
    msd,
    msd_components,
    predict,
    solve_regularized,
    whitening_factor,
)

from .conftest import random_pd


class TestPredict:
    def test_identity_model_keeps_belief(self):
        model = LinearStateSpace(np.eye(3), np.eye(3), np.zeros((3, 3)), np.eye(3))
        belief = GaussianBelief([1.0, 2.0, 3.0], np.eye(3))

        predicted = predict(belief, model)

        assert np.array_equal(predicted.mean, belief.mean)
        assert np.array_equal(predicted.cov, belief.cov)

    def test_constant_acceleration_mean(self, ca_model):
        model = ca_model.replace(Q=np.zeros((3, 3)))
        belief = GaussianBelief([1.0, 1.0, 1.0], np.zeros((3, 3)))

        predicted = predict(belief, model)

        assert predicted.mean == pytest.approx([1.105, 1.1, 1.0])

    def test_additive_covariance(self):
        model = LinearStateSpace(np.eye(2), np.eye(2), np.eye(2), np.eye(2))

        predicted = predict(GaussianBelief([0.0, 0.0], np.eye(2)), model)

        assert np.allclose(predicted.cov, 2 * np.eye(2))

    def test_random_inputs_stay_symmetric_psd(self, generator):
        for _ in range(20):
            n = generator.integers(1, 6)
            model = LinearStateSpace(
                generator.normal(size=(n, n)),
                np.eye(n),
                random_pd(generator, n, floor=0.0),
                np.eye(n),
            )
            belief = GaussianBelief(np.zeros(n), random_pd(generator, n, floor=0.0))

            predicted = predict(belief, model).validate()

            assert np.array_equal(predicted.cov, predicted.cov.T)

    def test_dimension_mismatch(self, ca_model):
        with pytest.raises(ConfigurationError):
            predict(GaussianBelief([0.0, 0.0], np.eye(2)), ca_model)


class TestGaussianKernel:
    @pytest.mark.parametrize(
        "e,sigma,expected",
        [(0.0, 1.0, 0.3989422804), (1.0, 1.0, 0.2419707245)],
    )
    def test_closed_form(self, e, sigma, expected):
        assert gaussian_kernel(e, sigma) == pytest.approx(expected, abs=1e-10)

    def test_scale_identity(self):
        assert gaussian_kernel(3.0, 3.0) == pytest.approx(gaussian_kernel(1.0, 1.0) / 3)

    def test_even_function(self, generator):
        errors = generator.normal(scale=5.0, size=50)
        assert np.allclose(gaussian_kernel(errors, 0.7), gaussian_kernel(-errors, 0.7))

    def test_returns_float_for_scalars(self):
        assert isinstance(gaussian_kernel(0.5, 2.0), float)

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_non_positive_sigma(self, sigma):
        with pytest.raises(DomainError):
            gaussian_kernel(1.0, sigma)


class TestMsd:
    def test_unit_error_is_zero_db(self):
        assert msd([1.0, 0.0], [0.0, 0.0]) == pytest.approx(0.0)

    def test_pythagorean_error(self):
        assert msd([3.0, 4.0, 0.0], [0.0, 0.0, 0.0]) == pytest.approx(10 * log10(25))

    def test_zero_error_hits_floor(self):
        assert msd([1.0, 2.0], [1.0, 2.0]) == pytest.approx(10 * log10(MSD_FLOOR))
        assert msd([1.0, 2.0], [1.0, 2.0]) == pytest.approx(-3000.0)

    def test_translation_covariant(self, generator):
        x, estimate, shift = generator.normal(size=(3, 4))
        assert msd(x + shift, estimate + shift) == pytest.approx(msd(x, estimate))

    def test_components(self):
        components = msd_components([3.0, 1.0, 0.0], [0.0, 0.0, 0.0])
        assert components == pytest.approx([10 * log10(9), 0.0, -3000.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            msd([1.0, 2.0], [1.0])


class TestWhiteningFactor:
    def test_identity(self):
        assert np.allclose(whitening_factor(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(whitening_factor(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]))

    def test_reconstruction(self):
        P = np.array([[2.0, 1.0], [1.0, 2.0]])
        W = whitening_factor(P)

        assert np.allclose(W @ P @ W.T, np.eye(2), atol=1e-10)
        assert np.allclose(W, np.tril(W))

    @pytest.mark.parametrize("n", [1, 2, 4, 7, 10])
    def test_random_pd(self, generator, n):
        P = random_pd(generator, n)
        W = whitening_factor(P)
        assert np.allclose(W @ P @ W.T, np.eye(n), atol=1e-8)

    def test_semidefinite_needs_jitter(self, caplog):
        with caplog.at_level(logging.DEBUG, logger="estimation.state_space"):
            W = whitening_factor(np.zeros((2, 2)))

        assert np.all(np.isfinite(W))
        assert "jitter" in caplog.text

    def test_indefinite_matrix(self):
        with pytest.raises(NumericalError) as error:
            whitening_factor(np.diag([1.0, -1.0]))

        assert error.value.diagnostics["min_eigenvalue"] == pytest.approx(-1.0)
        assert "min_eigenvalue" in str(error.value)


class TestLinearStateSpace:
    def test_dimensions(self, ca_model):
        assert (ca_model.n, ca_model.m) == (3, 2)

    def test_matrices_are_read_only(self, ca_model):
        with pytest.raises(ValueError):
            ca_model.F[0, 0] = 2.0

    @pytest.mark.parametrize(
        "changes",
        [
            {"H": np.eye(3, 2)},
            {"Q": np.eye(2)},
            {"R": np.zeros((2, 2))},
            {"Q": np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])},
            {"Q": -np.eye(3)},
        ],
    )
    def test_invalid_models(self, ca_model, changes):
        with pytest.raises(ConfigurationError):
            ca_model.replace(**changes)


class TestNonlinearStateSpace:
    def test_from_linear_matches_model(self, ca_model):
        model = NonlinearStateSpace.from_linear(ca_model)
        x = np.array([1.0, -2.0, 0.5])

        assert np.allclose(model.f(x), ca_model.F @ x)
        assert np.allclose(model.h(x), ca_model.H @ x)
        assert np.array_equal(model.transition_at(x), ca_model.F)
        assert model.m == 2
        model.check_jacobians(x)

    def test_wrong_jacobian_is_detected(self, ca_model):
        model = NonlinearStateSpace.from_linear(ca_model)
        broken = model.replace(jac_f=lambda x: np.eye(3))

        with pytest.raises(ConfigurationError):
            broken.check_jacobians(np.ones(3))

    def test_sensors_alternate(self, ca_model):
        model = NonlinearStateSpace.from_linear(ca_model)
        second = model.sensors[0]
        model = model.replace(sensors=(model.sensors[0], second))

        assert model.sensor_at(0) is model.sensors[0]
        assert model.sensor_at(3) is model.sensors[1]


class TestMeeConfig:
    def test_defaults(self):
        cfg = MeeConfig()
        assert (cfg.sigma, cfg.tau, cfg.max_iter) == (0.9, 1e-6, 100)
        assert cfg.iteration_cap == 100

    def test_arm_runs_one_iteration(self):
        assert MeeConfig(mode="arm").iteration_cap == 1

    @pytest.mark.parametrize(
        "changes",
        [
            {"sigma": 0.0},
            {"tau": -1e-6},
            {"max_iter": 0},
            {"max_iter": 2.5},
            {"jitter": -1.0},
            {"forgetting": 0.0},
            {"forgetting": 1.5},
            {"mode": "newton"},
        ],
    )
    def test_invalid_values(self, changes):
        with pytest.raises(DomainError):
            MeeConfig(**changes)


class TestGaussianBelief:
    def test_asymmetric_covariance(self):
        belief = GaussianBelief([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(NumericalError):
            belief.validate()

    def test_indefinite_covariance(self):
        with pytest.raises(NumericalError):
            GaussianBelief([0.0, 0.0], np.diag([1.0, -1.0])).validate()

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            GaussianBelief([0.0, 0.0], np.eye(3))


class TestStateTrajectory:
    def test_lengths_must_match(self):
        with pytest.raises(ConfigurationError):
            StateTrajectory(np.zeros((3, 2)), [np.zeros(1)] * 2)

    def test_checksum_depends_on_measurements(self):
        first = StateTrajectory(np.zeros((2, 1)), [[1.0], [2.0]])
        same = StateTrajectory(np.ones((2, 1)), [[1.0], [2.0]])
        other = StateTrajectory(np.zeros((2, 1)), [[1.0], [2.5]])

        assert first.checksum() == same.checksum()
        assert first.checksum() != other.checksum()
        assert first.horizon == 2


class TestNumericalHelpers:
    def test_solve_is_scale_invariant(self, generator):
        A = random_pd(generator, 3)
        b = generator.normal(size=(3, 2))

        assert np.allclose(
            solve_regularized(1e-9 * A, 1e-9 * b, 1e-10),
            solve_regularized(A, b, 1e-10),
        )

    def test_singular_system(self):
        with pytest.raises(NumericalError):
            solve_regularized(np.array([[1.0, 1.0], [1.0, 1.0]]), np.eye(2))

    def test_zero_system(self):
        with pytest.raises(NumericalError):
            solve_regularized(np.zeros((2, 2)), np.eye(2))

    def test_clamp_keeps_psd_matrix(self):
        matrix = np.diag([1.0, 0.0])
        assert clamp_psd(matrix) is matrix

    def test_clamp_zeroes_negative_eigenvalues(self, caplog):
        with caplog.at_level(logging.WARNING):
            clamped = clamp_psd(np.diag([2.0, -1.0]))

        assert np.allclose(clamped, np.diag([2.0, 0.0]))
        assert "autovalores negativos zerados" in caplog.text
