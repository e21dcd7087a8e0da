import hashlib
import logging
from dataclasses import dataclass, replace
from functools import partial
from math import pi, sqrt

import numpy as np
from scipy import linalg

from estimation.exceptions import ConfigurationError, DomainError, NumericalError

logger = logging.getLogger(__name__)

MSD_FLOOR = 1e-300
MAX_JITTER_ATTEMPTS = 10
FPI_MODES = ("fpi", "arm")


def _frozen_matrix(value, name):
    matrix = np.array(value, dtype=float, ndmin=2)
    if matrix.ndim != 2:
        raise ConfigurationError(f"{name} deve ser uma matriz ({matrix.ndim}D)")
    matrix.setflags(write=False)
    return matrix


def _frozen_vector(value, name):
    vector = np.array(value, dtype=float, ndmin=1)
    if vector.ndim != 1:
        raise ConfigurationError(f"{name} deve ser um vetor (recebido {vector.ndim}D)")
    vector.setflags(write=False)
    return vector


def _check_symmetric(name, matrix, rtol=1e-12):
    if matrix.shape[0] != matrix.shape[1]:
        raise ConfigurationError(f"{name} deve ser quadrada, recebido {matrix.shape}")
    scale = max(1.0, np.max(np.abs(matrix)))
    if np.max(np.abs(matrix - matrix.T)) > rtol * scale:
        raise ConfigurationError(f"{name} deve ser simétrica")


def _check_psd(name, matrix):
    eigenvalues = np.linalg.eigvalsh(matrix)
    if eigenvalues.min() < -1e-10 * max(1.0, abs(np.trace(matrix))):
        raise ConfigurationError(
            f"{name} deve ser semidefinida positiva (menor autovalor "
            f"{eigenvalues.min():.3e})"
        )


def _check_pd(name, matrix):
    try:
        linalg.cholesky(matrix, lower=True)
    except (linalg.LinAlgError, ValueError):
        raise ConfigurationError(f"{name} deve ser definida positiva")


def matrix_diagnostics(matrix):
    matrix = np.asarray(matrix, dtype=float)
    diagnostics = {"shape": matrix.shape}
    if not np.all(np.isfinite(matrix)):
        diagnostics["finite"] = False
        return diagnostics
    diagnostics["trace"] = float(np.trace(matrix))
    if matrix.shape[0] == matrix.shape[1]:
        eigenvalues = np.linalg.eigvalsh(symmetrize(matrix))
        diagnostics["min_eigenvalue"] = float(eigenvalues.min())
        diagnostics["condition"] = float(np.linalg.cond(matrix))
    return diagnostics


def wrap_angle(angle):
    return (angle + pi) % (2 * pi) - pi


def linear_map(matrix, x):
    return matrix @ x


def constant_map(matrix, x):
    return matrix


@dataclass(frozen=True, eq=False)
class LinearStateSpace:
    """Modelo linear x_t = F x_{t-1} + q, y_t = H x_t + r."""

    F: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name in ("F", "H", "Q", "R"):
            object.__setattr__(self, name, _frozen_matrix(getattr(self, name), name))

        n, m = self.n, self.m
        if self.F.shape != (n, n):
            raise ConfigurationError(f"F deve ser {n}x{n}, recebido {self.F.shape}")
        if self.H.shape != (m, n):
            raise ConfigurationError(f"H deve ser {m}x{n}, recebido {self.H.shape}")
        if self.Q.shape != (n, n):
            raise ConfigurationError(f"Q deve ser {n}x{n}, recebido {self.Q.shape}")
        if self.R.shape != (m, m):
            raise ConfigurationError(f"R deve ser {m}x{m}, recebido {self.R.shape}")

        _check_symmetric("Q", self.Q)
        _check_symmetric("R", self.R)
        _check_psd("Q", self.Q)
        _check_pd("R", self.R)

    @property
    def n(self):
        return self.F.shape[0]

    @property
    def m(self):
        return self.H.shape[0]

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Sensor:
    name: str
    h: object
    jacobian: object
    R: np.ndarray
    angular: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "R", _frozen_matrix(self.R, f"R ({self.name})"))
        object.__setattr__(self, "angular", tuple(self.angular))
        _check_symmetric(f"R ({self.name})", self.R)
        _check_pd(f"R ({self.name})", self.R)

    @property
    def m(self):
        return self.R.shape[0]

    def innovation(self, y, x):
        residual = np.asarray(y, dtype=float) - self.h(x)
        for index in self.angular:
            residual[index] = wrap_angle(residual[index])
        return residual


@dataclass(frozen=True, eq=False)
class NonlinearStateSpace:
    """Modelo não linear com um ou mais sensores usados em rodízio."""

    f: object
    jac_f: object
    Q: np.ndarray
    sensors: tuple

    def __post_init__(self):
        object.__setattr__(self, "Q", _frozen_matrix(self.Q, "Q"))
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if not self.sensors:
            raise ConfigurationError("O modelo precisa de ao menos um sensor")
        _check_symmetric("Q", self.Q)
        _check_psd("Q", self.Q)

    @classmethod
    def from_linear(cls, model):
        sensor = Sensor(
            name="linear",
            h=partial(linear_map, model.H),
            jacobian=partial(constant_map, model.H),
            R=model.R,
        )
        return cls(
            f=partial(linear_map, model.F),
            jac_f=partial(constant_map, model.F),
            Q=model.Q,
            sensors=(sensor,),
        )

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def h(self):
        return self.sensors[0].h

    @property
    def jac_h(self):
        return self.sensors[0].jacobian

    @property
    def R(self):
        return self.sensors[0].R

    @property
    def m(self):
        return self.sensors[0].m

    def replace(self, **changes):
        return replace(self, **changes)

    def sensor_at(self, t):
        return self.sensors[t % len(self.sensors)]

    def transition_at(self, x):
        jacobian = np.asarray(self.jac_f(x), dtype=float)
        if jacobian.shape != (self.n, self.n):
            raise ConfigurationError(
                f"Jacobiano de f deve ser {self.n}x{self.n}, recebido {jacobian.shape}"
            )
        return jacobian

    def check_jacobians(self, x, rtol=1e-4, step=1e-6):
        x = np.asarray(x, dtype=float)
        functions = [("f", self.f, self.jac_f)]
        for sensor in self.sensors:
            functions.append((sensor.name, sensor.h, sensor.jacobian))
        for name, function, jacobian in functions:
            analytic = np.asarray(jacobian(x), dtype=float)
            numeric = _central_differences(function, x, step)
            gap = np.linalg.norm(numeric - analytic)
            if gap > rtol * max(1.0, np.linalg.norm(analytic)):
                raise ConfigurationError(
                    f"Jacobiano de {name} difere das diferenças centrais em {x} "
                    f"(diferença {gap:.3e})"
                )


def _central_differences(function, x, step):
    columns = []
    for index in range(x.size):
        delta = np.zeros_like(x)
        delta[index] = step * max(1.0, abs(x[index]))
        forward = np.asarray(function(x + delta), dtype=float)
        backward = np.asarray(function(x - delta), dtype=float)
        columns.append((forward - backward) / (2 * delta[index]))
    return np.column_stack(columns)


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen_vector(self.mean, "mean"))
        object.__setattr__(self, "cov", _frozen_matrix(self.cov, "cov"))
        if self.cov.shape != (self.dim, self.dim):
            raise ConfigurationError(
                f"Covariância deve ser {self.dim}x{self.dim}, "
                f"recebido {self.cov.shape}"
            )

    @property
    def dim(self):
        return self.mean.shape[0]

    def validate(self):
        scale = max(1.0, np.max(np.abs(self.cov)))
        if np.max(np.abs(self.cov - self.cov.T)) > 1e-12 * scale:
            raise NumericalError(
                "Covariância não simétrica", **matrix_diagnostics(self.cov)
            )
        tolerance = -1e-10 * max(1.0, abs(np.trace(self.cov)))
        if np.linalg.eigvalsh(self.cov).min() < tolerance:
            raise NumericalError(
                "Covariância não é semidefinida positiva",
                **matrix_diagnostics(self.cov),
            )
        return self


@dataclass(frozen=True)
class MeeConfig:
    sigma: float = 0.9
    tau: float = 1e-6
    max_iter: int = 100
    jitter: float = 1e-10
    forgetting: float = 0.95
    mode: str = "fpi"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma deve ser positivo, recebido {self.sigma}")
        if not self.tau > 0:
            raise DomainError(f"tau deve ser positivo, recebido {self.tau}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise DomainError(
                f"max_iter deve ser inteiro >= 1, recebido {self.max_iter}"
            )
        if not self.jitter >= 0:
            raise DomainError(f"jitter não pode ser negativo, recebido {self.jitter}")
        if not 0 < self.forgetting <= 1:
            raise DomainError(
                "O fator de esquecimento deve estar em (0, 1], "
                f"recebido {self.forgetting}"
            )
        if self.mode not in FPI_MODES:
            raise DomainError(f"Modo desconhecido: {self.mode} (use {FPI_MODES})")

    @property
    def iteration_cap(self):
        return 1 if self.mode == "arm" else int(self.max_iter)

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class StateTrajectory:
    states: np.ndarray
    measurements: tuple
    initial_estimate: np.ndarray = None

    def __post_init__(self):
        states = np.array(self.states, dtype=float, ndmin=2)
        states.setflags(write=False)
        object.__setattr__(self, "states", states)
        measurements = tuple(
            _frozen_vector(measurement, "y") for measurement in self.measurements
        )
        object.__setattr__(self, "measurements", measurements)
        if self.initial_estimate is not None:
            estimate = _frozen_vector(self.initial_estimate, "initial_estimate")
            object.__setattr__(self, "initial_estimate", estimate)

        if len(states) < 1:
            raise ConfigurationError("A trajetória precisa de ao menos um passo")
        if len(states) != len(measurements):
            raise ConfigurationError(
                f"Estados ({len(states)}) e medições ({len(measurements)}) "
                "devem ter o mesmo comprimento"
            )

    @property
    def horizon(self):
        return len(self.states)

    def checksum(self):
        digest = hashlib.sha256()
        for measurement in self.measurements:
            digest.update(measurement.tobytes())
        return digest.hexdigest()


def symmetrize(matrix):
    return (matrix + matrix.T) / 2


def clamp_psd(matrix):
    """Zera autovalores negativos além do arredondamento."""
    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    tolerance = 1e-12 * max(1.0, abs(np.trace(matrix)))
    if eigenvalues.min() >= -tolerance:
        return matrix
    logger.warning(
        f"Covariância indefinida (menor autovalor {eigenvalues.min():.3e}); "
        "autovalores negativos zerados"
    )
    clamped = (eigenvectors * np.maximum(eigenvalues, 0.0)) @ eigenvectors.T
    return symmetrize(clamped)


def relative_change(new, old):
    return np.linalg.norm(new - old) / max(np.linalg.norm(old), np.finfo(float).eps)


def solve_regularized(matrix, rhs, jitter=0.0):
    """Resolve matrix · X = rhs após normalizar pela maior diagonal."""
    scale = np.max(np.abs(np.diag(matrix)))
    if not np.isfinite(scale) or scale == 0:
        raise NumericalError("Sistema normal degenerado", **matrix_diagnostics(matrix))

    normalized = matrix / scale + jitter * np.eye(matrix.shape[0])
    try:
        solution = linalg.solve(normalized, rhs / scale)
    except (linalg.LinAlgError, ValueError):
        raise NumericalError(
            "Sistema normal singular", jitter=jitter, **matrix_diagnostics(matrix)
        )
    if not np.all(np.isfinite(solution)):
        raise NumericalError(
            "Solução não finita do sistema normal", **matrix_diagnostics(matrix)
        )
    return solution


def predict(belief, model):
    if model.F.shape[1] != belief.dim:
        raise ConfigurationError(
            f"Crença de dimensão {belief.dim} incompatível com F {model.F.shape}"
        )
    mean = model.F @ belief.mean
    cov = symmetrize(model.F @ belief.cov @ model.F.T + model.Q)
    return GaussianBelief(mean, cov)


def gaussian_kernel(e, sigma):
    if not sigma > 0:
        raise DomainError(f"A largura do kernel deve ser positiva, recebido {sigma}")
    e = np.asarray(e, dtype=float)
    value = np.exp(-(e**2) / (2 * sigma**2)) / (sqrt(2 * pi) * sigma)
    return float(value) if value.ndim == 0 else value


def _estimation_error(true_state, estimate):
    true_state = np.asarray(true_state, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if true_state.shape != estimate.shape:
        raise ConfigurationError(
            f"Dimensões diferentes: {true_state.shape} e {estimate.shape}"
        )
    return true_state - estimate


def msd(true_state, estimate):
    error = _estimation_error(true_state, estimate)
    return 10 * np.log10(max(float(error @ error), MSD_FLOOR))


def msd_components(true_state, estimate):
    error = _estimation_error(true_state, estimate)
    return 10 * np.log10(np.maximum(error**2, MSD_FLOOR))


def whitening_factor(matrix, jitter=1e-10):
    """Inverso do fator de Cholesky inferior: W·P·Wᵀ = I."""
    matrix = symmetrize(np.asarray(matrix, dtype=float))
    identity = np.eye(matrix.shape[0])
    step = jitter
    if step <= 0:
        step = np.finfo(float).eps * max(1.0, abs(np.trace(matrix)))

    added = 0.0
    for attempt in range(MAX_JITTER_ATTEMPTS + 1):
        try:
            lower = linalg.cholesky(matrix + added * identity, lower=True)
        except linalg.LinAlgError:
            added = step if attempt == 0 else added * 2
            logger.debug(f"Cholesky falhou; tentando jitter {added:.3e}")
            continue
        except ValueError:
            break
        return linalg.solve_triangular(lower, identity, lower=True)

    raise NumericalError(
        "Matriz indefinida mesmo após jitter",
        jitter=added,
        **matrix_diagnostics(matrix),
    )
