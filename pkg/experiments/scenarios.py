"""Catálogo de cenários: modelo de aceleração constante e rastreamento veicular."""
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from estimation.exceptions import ConfigurationError, DomainError, NumericalError
from estimation.noise import (
    AlphaStable,
    Gaussian,
    MixedGaussian,
    Mixture,
    Rayleigh,
    component_specs,
)
from estimation.state_space import (
    LinearStateSpace,
    NonlinearStateSpace,
    Sensor,
    constant_map,
    linear_map,
)

RANGE_EPS = 1e-9
PROCESS_COV_MODES = ("nominal", "mixture")


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    name: str
    model: object
    process_noise: object
    measurement_noise: tuple
    horizon: int = 1000
    mc_runs: int = 300
    description: str = ""
    process_noise_factor: np.ndarray = None
    initial_mean: np.ndarray = None
    initial_cov: np.ndarray = None
    estimate_cov: np.ndarray = None
    prior_cov: np.ndarray = None
    sigma: float = 0.9
    mcc_sigma: float = 2.0
    dt: float = 0.1
    base: str = None

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise DomainError(f"O horizonte deve ser >= 1, recebido {self.horizon}")
        if int(self.mc_runs) != self.mc_runs or self.mc_runs < 1:
            raise DomainError(f"O número de execuções deve ser >= 1: {self.mc_runs}")

        n = self.n
        defaults = {
            "initial_mean": np.zeros(n),
            "initial_cov": np.eye(n),
            "estimate_cov": self.model.Q,
            "prior_cov": np.eye(n),
            "process_noise_factor": np.eye(n),
        }
        for field, default in defaults.items():
            value = getattr(self, field)
            value = default if value is None else np.asarray(value, dtype=float)
            object.__setattr__(self, field, value)
        object.__setattr__(self, "measurement_noise", tuple(self.measurement_noise))
        object.__setattr__(self, "base", self.base or self.name)

        if len(self.measurement_noise) != len(self.sensors):
            raise ConfigurationError(
                f"{len(self.measurement_noise)} ruídos de medição para "
                f"{len(self.sensors)} sensores no cenário {self.name}"
            )
        component_specs(self.process_noise, n)
        for sensor, noise in zip(self.sensors, self.measurement_noise):
            component_specs(noise, sensor.m)

    @property
    def n(self):
        return self.model.Q.shape[0]

    @property
    def sensors(self):
        if isinstance(self.model, LinearStateSpace):
            return (Sensor("linear", None, None, self.model.R),)
        return self.model.sensors

    @property
    def is_linear(self):
        return isinstance(self.model, LinearStateSpace)

    def replace(self, **changes):
        return replace(self, **changes)


def _check_dt(dt):
    if not dt > 0:
        raise DomainError(f"O intervalo de amostragem deve ser positivo, recebido {dt}")


def build_ca_model(dt, q_var=0.01, r_var=0.01):
    """Aceleração constante: estado (posição, velocidade, aceleração)."""
    _check_dt(dt)
    F = np.array([[1.0, dt, dt**2 / 2], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
    H = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    Q = np.diag(np.broadcast_to(np.asarray(q_var, dtype=float), 3))
    R = np.diag(np.broadcast_to(np.asarray(r_var, dtype=float), 2))
    return LinearStateSpace(F, H, Q, R)


def radar_measurement(x):
    px, py, vx, vy = x
    distance = np.hypot(px, py)
    rate = (px * vx + py * vy) / distance if distance > RANGE_EPS else 0.0
    return np.array([distance, np.arctan2(py, px), rate])


def radar_jacobian(x):
    px, py, vx, vy = x
    squared = px**2 + py**2
    distance = np.sqrt(squared)
    if distance < RANGE_EPS:
        raise NumericalError("Jacobiano do radar indefinido na origem", state=tuple(x))
    cubed = squared * distance
    return np.array(
        [
            [px / distance, py / distance, 0.0, 0.0],
            [-py / squared, px / squared, 0.0, 0.0],
            [
                py * (vx * py - vy * px) / cubed,
                px * (vy * px - vx * py) / cubed,
                px / distance,
                py / distance,
            ],
        ]
    )


def tracking_process_cov(dt):
    return np.array(
        [
            [dt**2 / 4, 0.0, dt**3 / 2, 0.0],
            [0.0, dt**2 / 4, 0.0, dt**3 / 2],
            [dt**3 / 2, 0.0, dt**2, 0.0],
            [0.0, dt**3 / 2, 0.0, dt**2],
        ]
    )


def build_tracking_model(dt):
    """Velocidade constante observada por radar e lidar em rodízio."""
    _check_dt(dt)
    F = np.array(
        [
            [1.0, 0.0, dt, 0.0],
            [0.0, 1.0, 0.0, dt],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    selector = np.eye(2, 4)
    radar = Sensor(
        "radar",
        radar_measurement,
        radar_jacobian,
        R=np.diag([0.09, 0.05, 0.09]),
        angular=(1,),
    )
    lidar = Sensor(
        "lidar",
        partial(linear_map, selector),
        partial(constant_map, selector),
        R=np.diag([0.09, 0.09]),
    )
    return NonlinearStateSpace(
        f=partial(linear_map, F),
        jac_f=partial(constant_map, F),
        Q=tracking_process_cov(dt),
        sensors=(radar, lidar),
    )


def nominal_variances(spec, dim):
    return np.array([noise.nominal_variance() for noise in component_specs(spec, dim)])


def ca_scenario(name, process_noise, measurement_noise, dt=0.1, **fields):
    """Cenário linear cujas Q e R nominais vêm das leis de ruído."""
    model = build_ca_model(
        dt,
        q_var=nominal_variances(process_noise, 3),
        r_var=nominal_variances(measurement_noise, 2),
    )
    return ScenarioSpec(
        name=name,
        model=model,
        process_noise=process_noise,
        measurement_noise=(measurement_noise,),
        dt=dt,
        **fields,
    )


def tracking_scenario(name="vehicle-tracking", dt=0.1, **fields):
    model = build_tracking_model(dt)
    fields.setdefault(
        "measurement_noise",
        (
            (
                MixedGaussian(0.9, 0, 0, 0.01, 9.0),
                MixedGaussian(0.9, 0, 0, 0.01, 0.09),
                MixedGaussian(0.9, 0, 0, 0.01, 0.09),
            ),
            (MixedGaussian(0.9, 0, 0, 0.01, 9.0), MixedGaussian(0.9, 0, 0, 0.01, 0.09)),
        ),
    )
    fields.setdefault("process_noise", Gaussian(0.0, 1.0))
    fields.setdefault("sigma", 2.0)
    return ScenarioSpec(
        name=name,
        model=model,
        process_noise_factor=np.linalg.cholesky(model.Q),
        dt=dt,
        **fields,
    )


def scenario_catalog():
    process = MixedGaussian(0.9, 0, 0, 0.01, 25)
    return [
        ca_scenario(
            "ca-scenario-1",
            process,
            Gaussian(0.0, 0.01),
            description="Medição gaussiana N(0; 0,01)",
        ),
        ca_scenario(
            "ca-scenario-2",
            process,
            MixedGaussian(0.7, 0, 0, 0.01, 900),
            description="Medição gaussiana mista M(0,7; 0; 0; 0,01; 900)",
        ),
        ca_scenario(
            "ca-scenario-3",
            process,
            Mixture(
                (0.9, 0.1), (AlphaStable(1.25, 1, 0.5, 0.0), Gaussian(0.0, 900))
            ),
            description="Medição 0,9·S(1,25; 1; 0,5; 0) + 0,1·N(0; 900)",
        ),
        ca_scenario(
            "ca-scenario-4",
            process,
            Mixture((0.7, 0.3), (Rayleigh(2.0), Gaussian(0.0, 900))),
            description="Medição 0,7·Rayleigh(2) + 0,3·N(0; 900)",
        ),
        ca_scenario(
            "ca-scenario-5",
            MixedGaussian(0.95, 0, 0, 0.01, 25),
            MixedGaussian(0.6, 2, -2, 0.01, 100),
            sigma=2.0,
            description="Medição assimétrica M(0,6; 2; -2; 0,01; 100)",
        ),
        tracking_scenario(
            description="Rastreamento veicular com radar e lidar em rodízio"
        ),
    ]


def scenario_names():
    return [scenario.name for scenario in scenario_catalog()]


def get_scenario(name):
    for scenario in scenario_catalog():
        if scenario.name == name:
            return scenario
    raise ConfigurationError(
        f"Cenário desconhecido: {name} (disponíveis: {', '.join(scenario_names())})"
    )


def with_noise(spec, process_noise=None, measurement_noise=None):
    """Troca as leis de ruído; em cenários lineares Q e R nominais acompanham."""
    process_noise = spec.process_noise if process_noise is None else process_noise
    measurement_noise = (
        spec.measurement_noise if measurement_noise is None else measurement_noise
    )
    if not spec.is_linear:
        return spec.replace(
            process_noise=process_noise, measurement_noise=tuple(measurement_noise)
        )

    model = spec.model.replace(
        Q=np.diag(nominal_variances(process_noise, spec.n)),
        R=np.diag(nominal_variances(measurement_noise[0], spec.model.m)),
    )
    return spec.replace(
        model=model,
        process_noise=process_noise,
        measurement_noise=tuple(measurement_noise),
        estimate_cov=model.Q,
    )


def with_process_covariance(spec, mode):
    """Q dos filtros pela variância nominal ou pela variância da mistura."""
    if mode not in PROCESS_COV_MODES:
        raise ConfigurationError(f"process_cov desconhecido: {mode}")
    if mode == "nominal":
        return spec

    noises = component_specs(spec.process_noise, spec.n)
    variances = np.array([noise.variance_value() for noise in noises])
    if not np.all(np.isfinite(variances)):
        raise ConfigurationError(
            f"O ruído de processo de {spec.name} tem variância infinita"
        )
    factor = spec.process_noise_factor
    Q = factor @ np.diag(variances) @ factor.T
    return spec.replace(model=spec.model.replace(Q=Q))


def _remix(noise, value):
    if isinstance(noise, MixedGaussian):
        return replace(noise, lambda_=value).validate()
    if isinstance(noise, Mixture) and len(noise.weights) == 2:
        return replace(noise, weights=(value, 1 - value)).validate()
    raise ConfigurationError(f"O ruído {noise.kind} não tem fator de mistura")


def with_measurement_mixing(spec, value):
    """Altera o fator de mistura λ de todos os ruídos de medição."""
    measurement_noise = []
    for noise in spec.measurement_noise:
        if isinstance(noise, (list, tuple)):
            measurement_noise.append(tuple(_remix(item, value) for item in noise))
        else:
            measurement_noise.append(_remix(noise, value))
    return spec.replace(measurement_noise=tuple(measurement_noise))


def with_sampling_interval(spec, dt):
    """Reconstrói o modelo de ``spec`` com outro intervalo de amostragem."""
    if dt == spec.dt:
        return spec
    if spec.is_linear:
        model = build_ca_model(
            dt, q_var=np.diag(spec.model.Q), r_var=np.diag(spec.model.R)
        )
        return spec.replace(model=model, dt=dt, estimate_cov=model.Q)
    model = build_tracking_model(dt)
    return spec.replace(
        model=model,
        dt=dt,
        estimate_cov=model.Q,
        process_noise_factor=np.linalg.cholesky(model.Q),
    )
