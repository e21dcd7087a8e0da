"""Orquestração de Monte Carlo: execuções pareadas, agregação e varreduras."""
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from estimation.exceptions import (
    ConfigurationError,
    DomainError,
    EstimationError,
    ExperimentAborted,
    NumericalError,
)
from estimation.noise import RngStream
from estimation.state_space import MSD_FLOOR
from experiments.algorithms import ALGORITHMS, AlgorithmInput
from experiments.scenarios import with_measurement_mixing
from experiments.simulation import initial_belief, simulate_trajectory

logger = logging.getLogger(__name__)

STEADY_STATE_FRACTION = 0.2
MAX_FAILURE_RATE = 0.01
SWEEP_PARAMETERS = ("sigma", "tau", "lambda")


def to_db(values):
    return 10 * np.log10(np.maximum(values, MSD_FLOOR))


def steady_state_window(horizon):
    return max(1, math.ceil(STEADY_STATE_FRACTION * horizon))


def component_labels(n):
    return ["all"] + [f"x{index}" for index in range(1, n + 1)]


@dataclass(frozen=True, eq=False)
class RunResult:
    """Curvas e resumo de um cenário.

    ``msd_db[alg]`` e ``mse_db[alg]`` têm forma (T, n + 1): a coluna 0 é o
    estado completo e as demais são as componentes. ``steady_state[alg]`` tem
    n + 1 entradas na mesma ordem.
    ``fpi_count`` é a média das iterações da passagem reversa nos
    suavizadores MEE e ``fpi_forward`` a da passagem direta.
    """

    scenario: str
    algorithms: tuple
    horizon: int
    runs: int
    dropped: int
    failures: dict
    msd_db: dict
    mse_db: dict
    steady_state: dict
    fpi_count: dict
    fpi_forward: dict
    wallclock: dict
    checksums: tuple

    @property
    def labels(self):
        first = self.msd_db[self.algorithms[0]]
        return component_labels(first.shape[1] - 1)


def _squared_errors(states, means):
    error = np.asarray(states) - np.asarray(means)
    squared = error**2
    return np.column_stack([squared.sum(axis=1), squared])


def monte_carlo_run(
    spec,
    algorithms,
    cfg,
    seed,
    run,
    mcc_sigma,
    timing=False,
    check_jacobians=False,
):
    """Uma execução: sorteia a trajetória e roda todos os algoritmos nela."""
    trajectory = simulate_trajectory(spec, RngStream(seed, run))
    checksum = trajectory.checksum()
    prior = initial_belief(spec, trajectory)
    shared = {}

    outcome = {
        "run": run,
        "checksum": checksum,
        "errors": {},
        "fpi": {},
        "fpi_forward": {},
        "time": {},
    }
    for name in algorithms:
        data = AlgorithmInput(
            spec.model,
            trajectory.measurements,
            prior,
            cfg,
            mcc_sigma,
            check_jacobians=check_jacobians,
            # com medição de tempo cada algoritmo refaz a própria passagem direta
            cache={} if timing else shared,
        )
        started = time.perf_counter() if timing else None
        try:
            estimate = ALGORITHMS[name](data)
        except NumericalError as error:
            outcome = {"run": run, "checksum": checksum, "failed": name}
            return {**outcome, "error": str(error)}
        if timing:
            outcome["time"][name] = time.perf_counter() - started
        outcome["errors"][name] = _squared_errors(trajectory.states, estimate.means)
        outcome["fpi"][name] = estimate.fpi_count
        outcome["fpi_forward"][name] = estimate.fpi_forward

    if trajectory.checksum() != checksum:
        raise EstimationError(f"As medições da execução {run} foram alteradas")
    return outcome


class _Accumulator:
    def __init__(self):
        self.runs = 0
        self.db_sum = None
        self.squared_sum = None
        self.fpi = []
        self.fpi_forward = []
        self.time = []

    def add(self, squared, fpi, fpi_forward, elapsed):
        db = to_db(squared)
        if self.runs == 0:
            self.db_sum, self.squared_sum = db, squared.copy()
        else:
            self.db_sum = self.db_sum + db
            self.squared_sum = self.squared_sum + squared
        self.runs += 1
        if fpi is not None:
            self.fpi.append(fpi)
        if fpi_forward is not None:
            self.fpi_forward.append(fpi_forward)
        if elapsed is not None:
            self.time.append(elapsed)

    def msd_db(self):
        return self.db_sum / self.runs

    def mse_db(self):
        return to_db(self.squared_sum / self.runs)

    def mean_fpi(self, counts=None):
        counts = self.fpi if counts is None else counts
        return float(np.mean(counts)) if counts else None

    def mean_time(self):
        return float(np.mean(self.time)) if self.time else None


def _check_algorithms(algorithms):
    unknown = [name for name in algorithms if name not in ALGORITHMS]
    if unknown:
        raise ConfigurationError(
            f"Algoritmos desconhecidos: {', '.join(unknown)} "
            f"(disponíveis: {', '.join(ALGORITHMS)})"
        )
    if not algorithms:
        raise ConfigurationError("Nenhum algoritmo selecionado")


def run_scenario(
    spec,
    algorithms,
    cfg,
    rng_seed,
    jobs=1,
    mcc_sigma=None,
    timing=False,
    check_jacobians=False,
):
    algorithms = tuple(dict.fromkeys(algorithms))
    _check_algorithms(algorithms)
    mcc_sigma = spec.mcc_sigma if mcc_sigma is None else mcc_sigma
    logger.info(
        f"Iniciando {spec.name}: {spec.mc_runs} execuções de {spec.horizon} passos "
        f"({', '.join(algorithms)})"
    )

    outcomes = Parallel(n_jobs=jobs, return_as="generator")(
        delayed(monte_carlo_run)(
            spec,
            algorithms,
            cfg,
            rng_seed,
            run,
            mcc_sigma,
            timing=timing,
            check_jacobians=check_jacobians,
        )
        for run in range(spec.mc_runs)
    )

    accumulators = {name: _Accumulator() for name in algorithms}
    failures = Counter()
    checksums = []
    for outcome in outcomes:
        checksums.append(outcome["checksum"])
        if "failed" in outcome:
            failures[outcome["failed"]] += 1
            logger.warning(
                f"Execução {outcome['run']} descartada: {outcome['failed']} falhou "
                f"({outcome['error']})"
            )
            continue
        for name in algorithms:
            accumulators[name].add(
                outcome["errors"][name],
                outcome["fpi"][name],
                outcome["fpi_forward"][name],
                outcome["time"].get(name),
            )

    dropped = sum(failures.values())
    excess = {
        name: count
        for name, count in failures.items()
        if count > MAX_FAILURE_RATE * spec.mc_runs
    }
    if excess or dropped == spec.mc_runs:
        raise ExperimentAborted(
            f"Falhas numéricas demais em {spec.name}: "
            + ", ".join(f"{name}={count}" for name, count in failures.items()),
            failures=dict(failures),
            runs=spec.mc_runs,
        )

    window = steady_state_window(spec.horizon)
    msd_db = {name: acc.msd_db() for name, acc in accumulators.items()}
    result = RunResult(
        scenario=spec.name,
        algorithms=algorithms,
        horizon=spec.horizon,
        runs=spec.mc_runs - dropped,
        dropped=dropped,
        failures=dict(failures),
        msd_db=msd_db,
        mse_db={name: acc.mse_db() for name, acc in accumulators.items()},
        steady_state={
            name: curve[-window:].mean(axis=0) for name, curve in msd_db.items()
        },
        fpi_count={name: acc.mean_fpi() for name, acc in accumulators.items()},
        fpi_forward={
            name: acc.mean_fpi(acc.fpi_forward) for name, acc in accumulators.items()
        },
        wallclock={name: acc.mean_time() for name, acc in accumulators.items()},
        checksums=tuple(checksums),
    )
    logger.info(
        f"{spec.name} concluído: {result.runs} execuções válidas, "
        f"{dropped} descartadas"
    )
    return result


def _check_parameter(parameter):
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigurationError(
            f"Parâmetro de varredura desconhecido: {parameter} "
            f"(use {', '.join(SWEEP_PARAMETERS)})"
        )


def apply_sweep_value(parameter, value, spec, cfg):
    _check_parameter(parameter)
    if parameter == "sigma":
        return spec, cfg.replace(sigma=value)
    if parameter == "tau":
        return spec, cfg.replace(tau=value)
    return with_measurement_mixing(spec, value), cfg


def sweep(parameter, values, spec, algorithms, cfg, rng_seed, **options):
    """Roda ``run_scenario`` para cada valor, sempre com a mesma semente."""
    values = list(values)
    if not values:
        raise DomainError("A lista de valores da varredura está vazia")
    _check_parameter(parameter)

    logger.info(f"Varredura de {parameter} em {spec.name}: {values}")
    results = []
    for value in values:
        swept_spec, swept_cfg = apply_sweep_value(parameter, value, spec, cfg)
        result = run_scenario(swept_spec, algorithms, swept_cfg, rng_seed, **options)
        results.append((value, result))
    logger.info(f"Varredura de {parameter} concluída ({len(values)} valores)")
    return results
