"""Análise de erro do MEE-RTS e contagem de operações.

Os termos O(n³) e O(m³) das contagens (inversões e fatorações) entram com
coeficiente 1, de modo que as funções devolvem inteiros determinísticos.
"""
from dataclasses import dataclass

import numpy as np

from estimation.exceptions import DivergenceError, DomainError
from estimation.smoothers import backward_blocks, mee_smoothing_gain
from estimation.state_space import relative_change, solve_regularized, symmetrize


@dataclass(frozen=True, eq=False)
class ErrorAnalysisState:
    """Acompanhamento conjunto dos momentos do erro de suavização.

    ``gain_expectation`` é a média exponencial E[Kᵇ] (não confundir com a
    matriz de pesos Ω da regressão direta).
    """

    mean_err_filter: np.ndarray
    mean_err_smooth: np.ndarray
    N: np.ndarray
    gain_expectation: np.ndarray
    Y: np.ndarray

    @classmethod
    def initial(cls, mean_err_filter, filter_err_cov):
        mean = np.asarray(mean_err_filter, dtype=float)
        cov = np.asarray(filter_err_cov, dtype=float)
        n = mean.shape[0]
        return cls(mean, mean, cov, np.zeros((n, n)), cov)


def _check_iota(iota):
    if not 0 < iota <= 1:
        raise DomainError(
            f"O fator de esquecimento deve estar em (0, 1], recebido {iota}"
        )


def mean_error_step(mean_err_filter, mean_err_smooth_next, gain, F):
    correction = np.eye(gain.shape[0]) - gain @ F
    return correction @ mean_err_filter + gain @ mean_err_smooth_next


def gain_expectation_update(prev, current_gain, iota):
    _check_iota(iota)
    return (1 - iota) * prev + iota * current_gain


def driving_term(gain_exp, F, Q, filter_err_cov):
    correction = np.eye(gain_exp.shape[0]) - gain_exp @ F
    return symmetrize(
        correction @ filter_err_cov @ correction.T + gain_exp @ Q @ gain_exp.T
    )


def mse_recursion_step(N_prev, gain_exp, F, Q, filter_err_cov):
    Y = driving_term(gain_exp, F, Q, filter_err_cov)
    return symmetrize(gain_exp @ N_prev @ gain_exp.T + Y)


def vec(matrix):
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector, rows):
    return np.asarray(vector).reshape((rows, -1), order="F")


def mse_steady_state(gain_exp, Y):
    """Limite de N = K·N·Kᵀ + Y por vec(N) = (I − K⊗K)⁻¹ vec(Y)."""
    n = gain_exp.shape[0]
    kron = np.kron(gain_exp, gain_exp)
    radius = np.max(np.abs(np.linalg.eigvals(kron)))
    if radius >= 1:
        raise DivergenceError(
            "Recursão do erro quadrático sem regime permanente",
            spectral_radius=radius,
        )
    solution = np.linalg.solve(np.eye(n * n) - kron, vec(Y))
    return symmetrize(unvec(solution, n))


def advance_error_analysis(state, gain, F, Q, filter_err_cov, mean_err_filter, iota):
    gain_exp = gain_expectation_update(state.gain_expectation, gain, iota)
    mean_err_filter = np.asarray(mean_err_filter, dtype=float)
    return ErrorAnalysisState(
        mean_err_filter=mean_err_filter,
        mean_err_smooth=mean_error_step(
            mean_err_filter, state.mean_err_smooth, gain_exp, F
        ),
        N=mse_recursion_step(state.N, gain_exp, F, Q, filter_err_cov),
        gain_expectation=gain_exp,
        Y=driving_term(gain_exp, F, Q, filter_err_cov),
    )


def is_strictly_diagonally_dominant(matrix):
    matrix = np.abs(np.asarray(matrix, dtype=float))
    diagonal = np.diag(matrix)
    return bool(np.all(diagonal > matrix.sum(axis=1) - diagonal))


def diagonal_dominance_gap(reg, jitter=1e-10):
    """Distância relativa entre Kᵇ·F e (FᵀPˣ¹F + Pˣ²)⁻¹FᵀPˣ¹F."""
    F = reg.transition
    P1, _, _, P2 = backward_blocks(reg)
    exact = mee_smoothing_gain(reg, jitter) @ F
    weighted = F.T @ P1 @ F
    approximation = solve_regularized(weighted + P2, weighted, jitter)
    return float(relative_change(approximation, exact))


def _check_sizes(**sizes):
    for name, value in sizes.items():
        if int(value) != value or value < 1:
            raise DomainError(f"{name} deve ser inteiro >= 1, recebido {value}")


def flops_mc_forward(n, m):
    _check_sizes(n=n, m=m)
    return (
        8 * n**3
        + 10 * n**2 * m
        + 6 * n * m**2
        + 2 * m**2
        - n**2
        + 4 * m * n
        - n
        + m
        + 10
        + 3 * m**3
        + n**3
    )


def flops_mc_backward(n):
    _check_sizes(n=n)
    return 12 * n**3 + 7 * n**2 + n + 10 + 4 * n**3


def flops_mc_rtsl(n, m):
    _check_sizes(n=n, m=m)
    return (
        20 * n**3
        + 10 * n**2 * m
        + 6 * n * m**2
        + 2 * m**2
        + 6 * n**2
        + 4 * m * n
        + m
        + 20
        + 5 * n**3
        + 3 * m**3
    )


def flops_r_meekf(n, m, Mf):
    _check_sizes(n=n, m=m, Mf=Mf)
    return (
        (7 * Mf + 8) * n**3
        + 7 * Mf * m**3
        - n**2
        + (19 * Mf + 6) * n**2 * m
        + (15 * Mf + 2) * n * m**2
        + Mf * n**3
        + Mf * m
        + (5 * Mf - 1) * n
        + (7 * Mf - 1) * n * m
        + 3 * Mf * m**3
    )


def flops_mee_backward(n, Mb):
    _check_sizes(n=n, Mb=Mb)
    return (
        (48 * Mb + 8) * n**3
        + (1 - 6 * Mb) * n**2
        + (1 - 9 * Mb) * n
        + 3 * Mb * n**3
        + 24 * Mb
    )


def flops_mee_rts(n, m, Mf, Mb):
    _check_sizes(n=n, m=m, Mf=Mf, Mb=Mb)
    return (
        (7 * Mf + 48 * Mb + 16) * n**3
        + 7 * Mf * m**3
        + (19 * Mf + 6) * n**2 * m
        - 6 * Mb * n**2
        + (15 * Mf + 2) * n * m**2
        + (Mf + 3 * Mb) * n**3
        + Mf * m
        + (5 * Mf - 9 * Mb) * n
        + (7 * Mf - 1) * n * m
        + 3 * Mf * m**3
        + 24 * Mb
    )


def backward_complexity_table(n):
    """Linhas (fórmula, ×, ±, especiais) de uma iteração reversa."""
    _check_sizes(n=n)
    return [
        ("predição da média", n**2, n**2 - n, 0),
        ("predição da covariância", 2 * n**3, 2 * n**3 - n**2, 0),
        ("atualização do estado", n**2, n**2 + n, 0),
        ("ganho de suavização", 8 * n**3, 8 * n**3 - 4 * n**2, 3 * n**3),
        ("matriz Xi", 16 * n**3, 16 * n**3 - 4 * n**2, 0),
        ("matriz Gamma", 2 * n + 7, 2 * n + 1, 4),
        ("matriz Lambda", 2 * n + 7, 2 * n + 1, 4),
        ("covariância suavizada", 2 * n**3, 2 * n**3, 0),
    ]
