"""Atualizações de medição da passagem direta: KF, MCKF e filtro MEE.

As três atualizações recebem um ``model`` com atributos ``H`` e ``R``; para
modelos não lineares, ``forward_pass`` entrega a linearização do passo.
"""
import logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from estimation.exceptions import NumericalError
from estimation.state_space import (
    GaussianBelief,
    LinearStateSpace,
    gaussian_kernel,
    matrix_diagnostics,
    relative_change,
    solve_regularized,
    symmetrize,
    whitening_factor,
)

logger = logging.getLogger(__name__)

Linearization = namedtuple("Linearization", ["H", "R"])

MCC_WEIGHT_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class ForwardRegression:
    d: np.ndarray
    Z: np.ndarray
    e: np.ndarray
    Psi: np.ndarray
    Phi: np.ndarray
    Omega: np.ndarray
    measurement_whitener: np.ndarray
    state_whitener: np.ndarray

    @property
    def m(self):
        return self.measurement_whitener.shape[0]

    @property
    def omega_y(self):
        return self.Omega[: self.m, : self.m]

    @property
    def omega_yx(self):
        return self.Omega[: self.m, self.m :]

    @property
    def omega_xy(self):
        return self.Omega[self.m :, : self.m]

    @property
    def omega_x(self):
        return self.Omega[self.m :, self.m :]


@dataclass(frozen=True, eq=False)
class FilterStepResult:
    posterior: GaussianBelief
    gain: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class ForwardPass:
    predicted: tuple
    filtered: tuple
    gains: tuple
    iterations: tuple
    converged: tuple
    transitions: tuple

    @property
    def horizon(self):
        return len(self.filtered)

    @property
    def means(self):
        return np.array([belief.mean for belief in self.filtered])


def weight_matrices(e, sigma):
    """Ψ (diagonal), Φ e Ω = ΨᵀΨ + ΦᵀΦ para os resíduos ``e``."""
    e = np.asarray(e, dtype=float)
    Phi = gaussian_kernel(e[:, None] - e[None, :], sigma)
    Psi = np.diag(Phi.sum(axis=1))
    Omega = Psi.T @ Psi + Phi.T @ Phi
    return Psi, Phi, symmetrize(Omega)


def joseph_update(cov, gain, H, R):
    correction = np.eye(cov.shape[0]) - gain @ H
    return symmetrize(correction @ cov @ correction.T + gain @ R @ gain.T)


def kf_update(pred, y, model):
    H, R = model.H, model.R
    P = pred.cov
    innovation_cov = symmetrize(H @ P @ H.T + R)
    try:
        gain = linalg.solve(innovation_cov, H @ P, assume_a="pos").T
    except (linalg.LinAlgError, ValueError):
        raise NumericalError(
            "Covariância de inovação singular", **matrix_diagnostics(innovation_cov)
        )

    mean = pred.mean + gain @ (np.asarray(y, dtype=float) - H @ pred.mean)
    cov = joseph_update(P, gain, H, R)
    return FilterStepResult(GaussianBelief(mean, cov), gain, 1, True)


def correntropy_weights(whitened, sigma):
    """Pesos G(e_i) por componente do resíduo branqueado.

    Devolve também se algum peso ainda passa de ``MCC_WEIGHT_FLOOR`` vezes G(0);
    quando nenhum passa, o passo deve voltar ao caso clássico.
    """
    weights = np.atleast_1d(gaussian_kernel(np.atleast_1d(whitened), sigma))
    floor = MCC_WEIGHT_FLOOR * gaussian_kernel(0.0, sigma)
    return weights, bool(np.any(weights >= floor))


def weighted_information(whitener, weights):
    """Lᵀ·diag(weights)·L, com L o fator de branqueamento."""
    return symmetrize(whitener.T @ (weights[:, None] * whitener))


def mcc_update(pred, y, model, sigma, jitter=1e-10):
    H, R = model.H, model.R
    innovation = np.asarray(y, dtype=float) - H @ pred.mean
    measurement_whitener = whitening_factor(R, jitter)
    state_whitener = whitening_factor(pred.cov, jitter)

    weights, informative = correntropy_weights(measurement_whitener @ innovation, sigma)
    if not informative:
        logger.debug("Todos os pesos de correntropia abaixo do piso; passo de Kalman")
        return kf_update(pred, y, model)

    weighted = weighted_information(measurement_whitener, weights)
    P_inv = state_whitener.T @ state_whitener
    normal = P_inv + H.T @ weighted @ H
    gain = solve_regularized(normal, H.T @ weighted, jitter)

    mean = pred.mean + gain @ innovation
    cov = joseph_update(pred.cov, gain, H, R)
    return FilterStepResult(GaussianBelief(mean, cov), gain, 1, True)


def build_forward_regression(
    pred, y, model, x_candidate, sigma, jitter=1e-10, whiteners=None
):
    if whiteners is None:
        whiteners = (
            whitening_factor(model.R, jitter),
            whitening_factor(pred.cov, jitter),
        )
    measurement_whitener, state_whitener = whiteners

    d = np.concatenate(
        [measurement_whitener @ np.asarray(y, dtype=float), state_whitener @ pred.mean]
    )
    Z = np.vstack([measurement_whitener @ model.H, state_whitener])
    e = d - Z @ np.asarray(x_candidate, dtype=float)
    Psi, Phi, Omega = weight_matrices(e, sigma)
    return ForwardRegression(
        d, Z, e, Psi, Phi, Omega, measurement_whitener, state_whitener
    )


def mee_filter_gain(reg, H, jitter=1e-10):
    """K = (HᵀPʸH + HᵀPʸˣ + PˣʸH + Pˣ)⁻¹(HᵀPʸ + Pˣʸ)."""
    Rw, Pw = reg.measurement_whitener, reg.state_whitener
    P_y = Rw.T @ reg.omega_y @ Rw
    P_yx = Rw.T @ reg.omega_yx @ Pw
    P_xy = Pw.T @ reg.omega_xy @ Rw
    P_x = Pw.T @ reg.omega_x @ Pw

    normal = symmetrize(H.T @ P_y @ H + H.T @ P_yx + P_xy @ H + P_x)
    return solve_regularized(normal, H.T @ P_y + P_xy, jitter)


def mee_update(pred, y, model, cfg):
    y = np.asarray(y, dtype=float)
    innovation = y - model.H @ pred.mean
    whiteners = (
        whitening_factor(model.R, cfg.jitter),
        whitening_factor(pred.cov, cfg.jitter),
    )

    estimate = pred.mean
    converged = False
    for iterations in range(1, cfg.iteration_cap + 1):
        reg = build_forward_regression(
            pred, y, model, estimate, cfg.sigma, cfg.jitter, whiteners
        )
        gain = mee_filter_gain(reg, model.H, cfg.jitter)
        candidate = pred.mean + gain @ innovation
        change = relative_change(candidate, estimate)
        estimate = candidate
        if not np.isfinite(change):
            raise NumericalError("Iteração de ponto fixo não finita", step="forward")
        if change <= cfg.tau:
            converged = True
            break

    if cfg.mode == "arm":
        converged = True
    elif not converged:
        logger.debug(f"FPI direta parou em {iterations} iterações sem convergir")

    cov = joseph_update(pred.cov, gain, model.H, model.R)
    return FilterStepResult(GaussianBelief(estimate, cov), gain, iterations, converged)


def _predict(belief, model):
    if isinstance(model, LinearStateSpace):
        F = model.F
        mean = F @ belief.mean
    else:
        F = model.transition_at(belief.mean)
        mean = np.asarray(model.f(belief.mean), dtype=float)
    cov = symmetrize(F @ belief.cov @ F.T + model.Q)
    return GaussianBelief(mean, cov), F


def _linearize(model, t, pred, y):
    if isinstance(model, LinearStateSpace):
        return model, y
    sensor = model.sensor_at(t)
    H = np.asarray(sensor.jacobian(pred.mean), dtype=float)
    effective = H @ pred.mean + sensor.innovation(y, pred.mean)
    return Linearization(H, sensor.R), effective


def forward_pass(model, measurements, prior, update, check_jacobians=False, **params):
    """Filtra a trajetória inteira com ``update`` (kf, mcc ou mee).

    Em modelos não lineares cada passo usa a linearização EKF: H é o
    Jacobiano do sensor na média predita e a medição efetiva é
    H·x̂ + inovação.
    """
    if check_jacobians and not isinstance(model, LinearStateSpace):
        model.check_jacobians(prior.mean)

    predicted, filtered, gains, iterations, converged = [], [], [], [], []
    transitions = []
    belief = prior
    for t, y in enumerate(measurements):
        pred, F = _predict(belief, model)
        if t > 0:
            transitions.append(F)
        linearized, effective = _linearize(model, t, pred, y)
        step = update(pred, effective, linearized, **params)

        belief = step.posterior
        predicted.append(pred)
        filtered.append(belief)
        gains.append(step.gain)
        iterations.append(step.iterations)
        converged.append(step.converged)

    missed = converged.count(False)
    if missed:
        logger.warning(
            f"{update.__name__}: {missed} de {len(converged)} passos sem convergência"
        )
    return ForwardPass(
        tuple(predicted),
        tuple(filtered),
        tuple(gains),
        tuple(iterations),
        tuple(converged),
        tuple(transitions),
    )
