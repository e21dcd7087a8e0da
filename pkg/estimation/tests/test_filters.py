import logging

import numpy as np
import pytest

from estimation.filters import (
    build_forward_regression,
    correntropy_weights,
    forward_pass,
    kf_update,
    mcc_update,
    mee_update,
    weight_matrices,
)
from estimation.state_space import (
    GaussianBelief,
    LinearStateSpace,
    MeeConfig,
    NonlinearStateSpace,
    gaussian_kernel,
    predict,
    whitening_factor,
)

from .conftest import random_pd, scalar_model, stationarity_roots


class TestKfUpdate:
    def test_scalar_example(self, unit_belief):
        step = kf_update(unit_belief, [2.0], scalar_model())

        assert step.posterior.mean == pytest.approx([1.0])
        assert step.posterior.cov == pytest.approx([[0.5]])
        assert (step.iterations, step.converged) == (1, True)

    def test_uninformative_measurement(self):
        prior = GaussianBelief([1.0, -1.0], np.eye(2))
        model = LinearStateSpace(np.eye(2), np.eye(2), np.eye(2), 1e12 * np.eye(2))

        step = kf_update(prior, [50.0, 50.0], model)

        assert np.allclose(step.posterior.mean, prior.mean, rtol=1e-6, atol=1e-6)
        assert np.allclose(step.posterior.cov, prior.cov, rtol=1e-6)

    def test_exact_measurement(self):
        prior = GaussianBelief([1.0, -1.0], np.eye(2))
        model = LinearStateSpace(np.eye(2), np.eye(2), np.eye(2), 1e-12 * np.eye(2))

        step = kf_update(prior, [3.0, 4.0], model)

        assert np.allclose(step.posterior.mean, [3.0, 4.0], atol=1e-6)

    def test_zero_innovation_keeps_mean(self, ca_model):
        prior = GaussianBelief([1.0, 2.0, 3.0], np.eye(3))
        step = kf_update(prior, ca_model.H @ prior.mean, ca_model)
        assert np.array_equal(step.posterior.mean, prior.mean)


class TestMccUpdate:
    def test_scalar_gain(self, unit_belief):
        step = mcc_update(unit_belief, [1.0], scalar_model(), sigma=1.0)

        weight = gaussian_kernel(1.0, 1.0)
        assert step.gain[0, 0] == pytest.approx(weight / (1 + weight), rel=1e-8)
        assert step.gain[0, 0] == pytest.approx(0.19482, abs=1e-5)

    def test_zero_innovation_keeps_mean(self, ca_model):
        prior = GaussianBelief([1.0, 2.0, 3.0], np.eye(3))
        step = mcc_update(prior, ca_model.H @ prior.mean, ca_model, sigma=2.0)
        assert np.array_equal(step.posterior.mean, prior.mean)

    def test_flat_kernel_is_kalman_with_scaled_noise(self, generator):
        model = LinearStateSpace(
            np.eye(2), generator.normal(size=(2, 2)), np.eye(2), random_pd(generator, 2)
        )
        prior = GaussianBelief(generator.normal(size=2), random_pd(generator, 2))
        y = generator.normal(size=2)

        whitened = whitening_factor(model.R) @ (y - model.H @ prior.mean)
        weight = gaussian_kernel(np.linalg.norm(whitened), 1e8)
        scaled = model.replace(R=model.R / weight)

        step = mcc_update(prior, y, model, sigma=1e8)
        oracle = kf_update(prior, y, scaled)

        assert np.allclose(step.gain, oracle.gain, rtol=1e-6, atol=0)
        assert np.allclose(step.posterior.mean, oracle.posterior.mean, rtol=1e-6)

    def test_posterior_uses_joseph_form(self, unit_belief):
        step = mcc_update(unit_belief, [1.0], scalar_model(), sigma=1.0)
        gain = step.gain[0, 0]
        expected = (1 - gain) ** 2 + gain**2
        assert step.posterior.cov[0, 0] == pytest.approx(expected)

    def test_gross_component_gets_no_gain(self, ca_model):
        prior = GaussianBelief([0.0, 0.0, 0.0], 0.01 * np.eye(3))

        step = mcc_update(prior, [0.1, 30.0], ca_model, sigma=2.0)

        weight = gaussian_kernel(1.0, 2.0)
        assert np.allclose(step.gain[:, 1], 0.0, atol=1e-12)
        assert step.gain[0, 0] == pytest.approx(weight / (1 + weight))
        assert step.posterior.mean[1] == pytest.approx(0.0, abs=1e-12)

    def test_all_components_rejected_falls_back_to_kalman(self, ca_model, caplog):
        prior = GaussianBelief([0.0, 0.0, 0.0], 0.01 * np.eye(3))
        y = [30.0, -30.0]

        with caplog.at_level(logging.DEBUG, logger="estimation.filters"):
            step = mcc_update(prior, y, ca_model, sigma=2.0)

        oracle = kf_update(prior, y, ca_model)
        assert np.allclose(step.gain, oracle.gain)
        assert np.allclose(step.posterior.mean, oracle.posterior.mean)
        assert "passo de Kalman" in caplog.text


class TestCorrentropyWeights:
    def test_per_component(self):
        weights, informative = correntropy_weights([0.0, 1.0], 1.0)

        assert weights == pytest.approx(
            [gaussian_kernel(0.0, 1.0), gaussian_kernel(1.0, 1.0)]
        )
        assert informative

    @pytest.mark.parametrize("whitened", [[100.0], [-40.0, 300.0]])
    def test_below_floor(self, whitened):
        _, informative = correntropy_weights(whitened, 2.0)
        assert not informative

    def test_floor_is_relative_to_kernel_peak(self):
        _, informative = correntropy_weights([6.0], 1.0)
        assert informative


class TestForwardRegression:
    def test_scalar_layout(self):
        pred = GaussianBelief([0.5], [[1.0]])
        reg = build_forward_regression(pred, [2.0], scalar_model(), [0.0], sigma=1.0)

        assert np.allclose(reg.Z, [[1.0], [1.0]])
        assert np.allclose(reg.d, [2.0, 0.5])
        assert np.allclose(reg.e, [2.0, 0.5])

    def test_zero_residual(self, ca_model):
        pred = GaussianBelief([1.0, 2.0, 3.0], np.eye(3))
        y = ca_model.H @ pred.mean

        reg = build_forward_regression(pred, y, ca_model, pred.mean, sigma=0.9)

        G = gaussian_kernel(0.0, 0.9)
        assert np.allclose(reg.e, 0.0)
        assert np.allclose(reg.Phi, G)
        assert np.allclose(reg.Psi, 5 * G * np.eye(5))

    def test_weight_matrices_structure(self, generator):
        e = generator.normal(scale=3.0, size=6)
        Psi, Phi, Omega = weight_matrices(e, 0.9)

        assert np.allclose(Phi, Phi.T)
        assert np.allclose(np.diag(Phi), gaussian_kernel(0.0, 0.9))
        assert np.allclose(Psi, np.diag(np.diag(Psi)))
        assert np.all(np.diag(Psi) > 0)
        assert np.all(np.diag(Psi) >= Phi.sum(axis=1) - np.diag(Phi))
        assert np.linalg.eigvalsh(Omega).min() >= -1e-10

    def test_blocks(self, ca_model):
        pred = GaussianBelief([1.0, 2.0, 3.0], np.eye(3))
        reg = build_forward_regression(pred, [0.0, 0.0], ca_model, pred.mean, 0.9)

        assert reg.omega_y.shape == (2, 2)
        assert reg.omega_yx.shape == (2, 3)
        assert reg.omega_xy.shape == (3, 2)
        assert reg.omega_x.shape == (3, 3)


class TestMeeUpdate:
    def test_zero_innovation(self, ca_model):
        pred = GaussianBelief([1.0, 2.0, 3.0], np.eye(3))

        step = mee_update(pred, ca_model.H @ pred.mean, ca_model, MeeConfig())

        assert np.array_equal(step.posterior.mean, pred.mean)
        assert (step.iterations, step.converged) == (1, True)

    def test_flat_kernel_converges_quickly(self, generator, ca_model):
        pred = GaussianBelief(generator.normal(size=3), random_pd(generator, 3))
        y = generator.normal(size=2)
        step = mee_update(pred, y, ca_model, MeeConfig(sigma=1e8))
        assert step.iterations <= 2
        assert step.converged

    def test_flat_kernel_is_generalized_least_squares(self, generator, ca_model):
        pred = GaussianBelief(generator.normal(size=3), random_pd(generator, 3))
        y = generator.normal(size=2)

        step = mee_update(pred, y, ca_model, MeeConfig(sigma=1e8))

        reg = build_forward_regression(pred, y, ca_model, pred.mean, 1e8)
        size = reg.d.size
        weight = np.eye(size) + np.ones((size, size)) / size
        normal = reg.Z.T @ weight @ reg.Z
        expected = np.linalg.solve(normal, reg.Z.T @ weight @ reg.d)
        assert np.allclose(step.posterior.mean, expected, rtol=1e-6)

    def test_matches_stationarity_oracle(self):
        generator = np.random.default_rng(7)
        model = scalar_model()
        cfg = MeeConfig(sigma=1.0, tau=1e-10, max_iter=1000)

        for _ in range(100):
            prior = GaussianBelief([generator.normal()], [[generator.uniform(0.2, 2)]])
            pred = predict(prior, model)
            y = pred.mean + generator.uniform(-6, 6, size=1)

            step = mee_update(pred, y, model, cfg)

            z = (1.0, 1 / np.sqrt(pred.cov[0, 0]))
            d = (y[0], z[1] * pred.mean[0])
            roots = stationarity_roots(d, z, 1.0, pred.mean[0])
            assert step.converged
            assert np.min(np.abs(roots - step.posterior.mean[0])) <= 2e-4

    def test_arm_is_single_fpi_iteration(self, generator, ca_model):
        pred = GaussianBelief(generator.normal(size=3), random_pd(generator, 3))
        y = generator.normal(size=2)

        arm = mee_update(pred, y, ca_model, MeeConfig(mode="arm"))
        single = mee_update(pred, y, ca_model, MeeConfig(max_iter=1))

        assert np.array_equal(arm.posterior.mean, single.posterior.mean)
        assert np.array_equal(arm.gain, single.gain)
        assert arm.converged and arm.iterations == 1

    def test_iterations_grow_as_tolerance_tightens(self):
        pred = GaussianBelief([2.0], [[4.0]])
        taus = [10.0**-k for k in range(1, 9)]

        steps = [
            mee_update(pred, [3.0], scalar_model(), MeeConfig(sigma=0.9, tau=tau))
            for tau in taus
        ]

        counts = [step.iterations for step in steps]
        assert all(step.converged for step in steps)
        assert counts == sorted(counts)
        assert counts[0] < counts[-1] < 100

    def test_iteration_cap_flags_non_convergence(self, unit_belief):
        cfg = MeeConfig(sigma=0.5, tau=1e-15, max_iter=1)
        step = mee_update(unit_belief, [3.0], scalar_model(), cfg)

        assert step.iterations == 1
        assert not step.converged

    def test_posterior_covariance_is_psd(self, generator, ca_model):
        for _ in range(10):
            pred = GaussianBelief(generator.normal(size=3), random_pd(generator, 3))
            y = generator.standard_cauchy(size=2)
            step = mee_update(pred, y, ca_model, MeeConfig())
            step.posterior.validate()


class TestForwardPass:
    def test_alignment(self, random_system):
        model, measurements, prior = random_system(horizon=10)

        forward = forward_pass(model, measurements, prior, kf_update)

        assert forward.horizon == 10
        assert len(forward.transitions) == 9
        assert np.allclose(forward.predicted[0].mean, predict(prior, model).mean)
        assert forward.means.shape == (10, 2)
        for belief in forward.filtered:
            belief.validate()

    def test_linearized_model_matches_linear(self, random_system):
        model, measurements, prior = random_system(horizon=20)
        cfg = MeeConfig(sigma=2.0)

        linear = forward_pass(model, measurements, prior, mee_update, cfg=cfg)
        wrapped = forward_pass(
            NonlinearStateSpace.from_linear(model),
            measurements,
            prior,
            mee_update,
            cfg=cfg,
        )

        assert np.allclose(linear.means, wrapped.means, rtol=1e-10, atol=1e-10)

    def test_non_convergence_is_logged_once(self, random_system, caplog):
        model, measurements, prior = random_system(horizon=5)
        cfg = MeeConfig(sigma=0.3, tau=1e-15, max_iter=1)

        with caplog.at_level(logging.WARNING, logger="estimation.filters"):
            forward_pass(model, measurements, prior, mee_update, cfg=cfg)

        warnings = [r for r in caplog.records if r.levelno == logging.WARNING]
        assert len(warnings) == 1
        assert "sem convergência" in warnings[0].getMessage()

