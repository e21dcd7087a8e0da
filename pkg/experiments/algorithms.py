"""Registro dos algoritmos comparados nos experimentos.

Cada algoritmo recebe um ``AlgorithmInput`` e devolve as médias estimadas
(T×n) e as contagens médias de iterações de ponto fixo, quando houver: nos
suavizadores ``fpi_count`` é a da passagem reversa e ``fpi_forward`` a da
direta; nos filtros as duas coincidem. As passagens diretas ficam em cache
por execução, de modo que o RTS reaproveita o KF, o MC-RTS reaproveita o MCKF
e o MEE-RTS reaproveita o MEE-KF.
"""
from dataclasses import dataclass, field

import numpy as np

from estimation.filters import forward_pass, kf_update, mcc_update, mee_update
from estimation.smoothers import (
    mc_rts_backward,
    mee_erts_smooth,
    mee_rts_backward,
    rts_smooth,
)
from estimation.state_space import NonlinearStateSpace


@dataclass(eq=False)
class AlgorithmInput:
    model: object
    measurements: tuple
    prior: object
    cfg: object
    mcc_sigma: float
    check_jacobians: bool = False
    cache: dict = field(default_factory=dict)

    def forward(self, name):
        if name not in self.cache:
            update, params = {
                "kf": (kf_update, {}),
                "mcc": (mcc_update, {"sigma": self.mcc_sigma}),
                "mee": (mee_update, {"cfg": self.cfg}),
            }[name]
            self.cache[name] = forward_pass(
                self.model,
                self.measurements,
                self.prior,
                update,
                check_jacobians=self.check_jacobians,
                **params,
            )
        return self.cache[name]


@dataclass(frozen=True, eq=False)
class Estimate:
    means: np.ndarray
    fpi_count: float = None
    fpi_forward: float = None


def _mean_iterations(iterations):
    return float(np.mean(iterations)) if len(iterations) else 0.0


def run_kf(data):
    return Estimate(data.forward("kf").means)


def run_rts(data):
    forward = data.forward("kf")
    output = rts_smooth(
        forward.filtered, forward.predicted, data.model, forward.transitions
    )
    return Estimate(output.means)


def run_mckf(data):
    return Estimate(data.forward("mcc").means)


def run_mc_rts(data):
    forward = data.forward("mcc")
    output = mc_rts_backward(
        forward.filtered,
        forward.predicted,
        data.model,
        data.mcc_sigma,
        transitions=forward.transitions,
    )
    return Estimate(output.means)


def run_mee_kf(data):
    forward = data.forward("mee")
    count = _mean_iterations(forward.iterations)
    return Estimate(forward.means, count, count)


def run_mee_rts(data):
    forward = data.forward("mee")
    output = mee_rts_backward(
        forward.filtered,
        forward.predicted,
        data.model,
        data.cfg,
        transitions=forward.transitions,
    )
    return Estimate(
        output.means,
        _mean_iterations(output.iterations),
        _mean_iterations(forward.iterations),
    )


def run_mee_erts(data):
    model = data.model
    if not isinstance(model, NonlinearStateSpace):
        model = NonlinearStateSpace.from_linear(model)
    output = mee_erts_smooth(
        data.measurements,
        model,
        data.cfg,
        data.prior,
        check_jacobians=data.check_jacobians,
    )
    return Estimate(
        output.means,
        _mean_iterations(output.iterations),
        _mean_iterations(output.forward.iterations),
    )


ALGORITHMS = {
    "KF": run_kf,
    "RTS": run_rts,
    "MCKF": run_mckf,
    "MC-RTS": run_mc_rts,
    "MEE-KF": run_mee_kf,
    "MEE-RTS": run_mee_rts,
    "MEE-ERTS": run_mee_erts,
}
