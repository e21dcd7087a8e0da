"""Passagens reversas: RTS clássico, MC-RTS, MEE-RTS e MEE-ERTS.

Todos os suavizadores recebem as sequências ``filtered`` e ``predicted`` de
uma passagem direta, alinhadas no tempo: ``predicted[t + 1]`` é a predição
feita a partir de ``filtered[t]``. ``transitions[t]`` é a matriz (ou o
Jacobiano) que leva o instante t ao t + 1; sem ela usa-se ``model.F``.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from estimation.exceptions import NumericalError
from estimation.filters import (
    correntropy_weights,
    forward_pass,
    mee_update,
    weight_matrices,
    weighted_information,
)
from estimation.state_space import (
    GaussianBelief,
    LinearStateSpace,
    clamp_psd,
    matrix_diagnostics,
    relative_change,
    solve_regularized,
    symmetrize,
    whitening_factor,
)

logger = logging.getLogger(__name__)

GAIN_PATH_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class BackwardRegression:
    Theta: np.ndarray
    W: np.ndarray
    eps: np.ndarray
    Gamma: np.ndarray
    Lambda: np.ndarray
    Xi: np.ndarray
    transition: np.ndarray
    process_whitener: np.ndarray
    state_whitener: np.ndarray

    @property
    def n(self):
        return self.transition.shape[0]

    @property
    def xi_11(self):
        return self.Xi[: self.n, : self.n]

    @property
    def xi_12(self):
        return self.Xi[: self.n, self.n :]

    @property
    def xi_21(self):
        return self.Xi[self.n :, : self.n]

    @property
    def xi_22(self):
        return self.Xi[self.n :, self.n :]


@dataclass(frozen=True, eq=False)
class SmootherOutput:
    smoothed: tuple
    gains: tuple
    iterations: tuple
    converged: tuple
    forward: object = None

    @property
    def horizon(self):
        return len(self.smoothed)

    @property
    def means(self):
        return np.array([belief.mean for belief in self.smoothed])


def _transition(model, transitions, t, filtered):
    if transitions is not None:
        return np.asarray(transitions[t], dtype=float)
    if isinstance(model, LinearStateSpace):
        return model.F
    return model.transition_at(filtered[t].mean)


def _check_aligned(filtered, predicted):
    if len(filtered) != len(predicted) or not filtered:
        raise NumericalError(
            "Sequências filtrada e predita desalinhadas",
            filtered=len(filtered),
            predicted=len(predicted),
        )


def _smoothed_belief(filt, gain, smoothed_next, predicted_next):
    mean = filt.mean + gain @ (smoothed_next.mean - predicted_next.mean)
    cov = filt.cov + gain @ (smoothed_next.cov - predicted_next.cov) @ gain.T
    return GaussianBelief(mean, clamp_psd(symmetrize(cov)))


def _backward(filtered, predicted, step):
    _check_aligned(filtered, predicted)
    horizon = len(filtered)
    smoothed = [None] * horizon
    smoothed[-1] = filtered[-1]
    gains, iterations, converged = (
        [None] * (horizon - 1),
        [0] * (horizon - 1),
        [True] * (horizon - 1),
    )
    for t in reversed(range(horizon - 1)):
        gain, count, done = step(t, smoothed[t + 1])
        smoothed[t] = _smoothed_belief(
            filtered[t], gain, smoothed[t + 1], predicted[t + 1]
        )
        gains[t], iterations[t], converged[t] = gain, count, done
    return smoothed, gains, iterations, converged


def _rts_gain(F, P_f, P_pred, t):
    try:
        return linalg.solve(P_pred, F @ P_f, assume_a="pos").T
    except (linalg.LinAlgError, ValueError):
        raise NumericalError(
            "Covariância predita singular", t=t, **matrix_diagnostics(P_pred)
        )


def rts_smooth(filtered, predicted, model, transitions=None):
    def step(t, smoothed_next):
        F = _transition(model, transitions, t, filtered)
        return _rts_gain(F, filtered[t].cov, predicted[t + 1].cov, t), 1, True

    return SmootherOutput(*map(tuple, _backward(filtered, predicted, step)))


def mc_rts_backward(filtered, predicted, model, sigma, transitions=None, jitter=1e-10):
    process_whitener = whitening_factor(model.Q, jitter)

    def step(t, smoothed_next):
        F = _transition(model, transitions, t, filtered)
        filt, predicted_next = filtered[t], predicted[t + 1]
        residual = process_whitener @ (smoothed_next.mean - predicted_next.mean)
        weights, informative = correntropy_weights(residual, sigma)
        if not informative:
            logger.debug(f"Passo {t}: pesos de correntropia abaixo do piso; ganho RTS")
            return _rts_gain(F, filt.cov, predicted_next.cov, t), 1, True

        state_whitener = whitening_factor(filt.cov, jitter)
        P_inv = state_whitener.T @ state_whitener
        weighted = weighted_information(process_whitener, weights)
        normal = P_inv + F.T @ weighted @ F
        gain = solve_regularized(normal, F.T @ weighted, jitter)
        return gain, 1, True

    return SmootherOutput(*map(tuple, _backward(filtered, predicted, step)))


def build_backward_regression(
    filt,
    smoothed_next_mean,
    model,
    x_candidate,
    sigma,
    transition=None,
    predicted_next_mean=None,
    jitter=1e-10,
    whiteners=None,
):
    """Regressão Θ = W·x + ε do passo reverso.

    Com ``predicted_next_mean`` (caso estendido) o bloco superior de Θ usa
    x̃_{t+1|T} − f(x̃_{t|t}) + F_t·x̃_{t|t}.
    """
    if transition is None:
        transition = _transition(model, None, 0, [filt])
    if whiteners is None:
        whiteners = (
            whitening_factor(model.Q, jitter),
            whitening_factor(filt.cov, jitter),
        )
    process_whitener, state_whitener = whiteners

    top = np.asarray(smoothed_next_mean, dtype=float)
    if predicted_next_mean is not None:
        top = top - predicted_next_mean + transition @ filt.mean

    Theta = np.concatenate([process_whitener @ top, state_whitener @ filt.mean])
    W = np.vstack([process_whitener @ transition, state_whitener])
    eps = Theta - W @ np.asarray(x_candidate, dtype=float)
    Gamma, Lambda, Xi = weight_matrices(eps, sigma)
    return BackwardRegression(
        Theta, W, eps, Gamma, Lambda, Xi, transition, process_whitener, state_whitener
    )


def backward_blocks(reg):
    """Blocos P^{b;x1}, P^{b;x1x2}, P^{b;x2x1} e P^{b;x2} de WᵀΞW."""
    a, p = reg.process_whitener, reg.state_whitener
    return (
        a.T @ reg.xi_11 @ a,
        a.T @ reg.xi_12 @ p,
        p.T @ reg.xi_21 @ a,
        p.T @ reg.xi_22 @ p,
    )


def _solve_with_fallback(matrix, rhs, jitter):
    try:
        return solve_regularized(matrix, rhs)
    except NumericalError:
        logger.debug("Sistema reverso singular; repetindo com jitter")
        return solve_regularized(matrix, rhs, jitter)


def smoothing_gain_paths(reg, jitter=1e-10):
    """Ganho reverso pelas equações normais e pelo lema de inversão.

    Um caminho singular volta como ``None``.
    """
    F = reg.transition
    P1, P12, P21, P2 = backward_blocks(reg)
    A = P2 + F.T @ P12
    B = F.T @ P1 + P21

    try:
        direct = _solve_with_fallback(A + B @ F, B, jitter)
    except NumericalError:
        direct = None

    try:
        partial = _solve_with_fallback(A, B, jitter)
        core = np.eye(F.shape[0]) + F @ partial
        lemma = _solve_with_fallback(core.T, partial.T, jitter).T
    except NumericalError:
        lemma = None

    return direct, lemma


def mee_smoothing_gain(reg, jitter=1e-10):
    direct, lemma = smoothing_gain_paths(reg, jitter)
    if direct is None and lemma is None:
        raise NumericalError("Os dois caminhos do ganho reverso são singulares")
    if direct is None or lemma is None:
        return lemma if direct is None else direct

    gap = relative_change(lemma, direct)
    if gap > GAIN_PATH_RTOL:
        logger.warning(
            f"Caminhos do ganho reverso divergem (diferença relativa {gap:.2e})"
        )
    return direct


def mee_rts_backward(filtered, predicted, model, cfg, transitions=None):
    process_whitener = whitening_factor(model.Q, cfg.jitter)

    def step(t, smoothed_next):
        filt, predicted_next = filtered[t], predicted[t + 1]
        F = _transition(model, transitions, t, filtered)
        whiteners = (process_whitener, whitening_factor(filt.cov, cfg.jitter))
        innovation = smoothed_next.mean - predicted_next.mean

        estimate = filt.mean
        converged = False
        for iterations in range(1, cfg.iteration_cap + 1):
            reg = build_backward_regression(
                filt,
                smoothed_next.mean,
                model,
                estimate,
                cfg.sigma,
                transition=F,
                predicted_next_mean=predicted_next.mean,
                jitter=cfg.jitter,
                whiteners=whiteners,
            )
            gain = mee_smoothing_gain(reg, cfg.jitter)
            candidate = filt.mean + gain @ innovation
            change = relative_change(candidate, estimate)
            estimate = candidate
            if not np.isfinite(change):
                raise NumericalError("Iteração de ponto fixo não finita", step=t)
            if change <= cfg.tau:
                converged = True
                break
        return gain, iterations, converged or cfg.mode == "arm"

    smoothed, gains, iterations, converged = _backward(filtered, predicted, step)
    missed = converged.count(False)
    if missed:
        logger.warning(
            f"MEE-RTS: {missed} de {len(converged)} passos sem convergência"
        )
    return SmootherOutput(
        tuple(smoothed), tuple(gains), tuple(iterations), tuple(converged)
    )


def mee_erts_smooth(measurements, model, cfg, prior, check_jacobians=False):
    forward = forward_pass(
        model, measurements, prior, mee_update, check_jacobians=check_jacobians, cfg=cfg
    )
    backward = mee_rts_backward(
        forward.filtered, forward.predicted, model, cfg, transitions=forward.transitions
    )
    return SmootherOutput(
        backward.smoothed,
        backward.gains,
        backward.iterations,
        backward.converged,
        forward=forward,
    )
