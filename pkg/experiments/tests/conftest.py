from textwrap import dedent

import numpy as np
import pytest

from experiments.runner import RunResult
from experiments.scenarios import get_scenario


@pytest.fixture
def small_spec():
    return get_scenario("ca-scenario-1").replace(mc_runs=4, horizon=20)


@pytest.fixture
def write_config(tmp_path):
    def write(text, name="experimento.yml"):
        path = tmp_path / name
        path.write_text(dedent(text), encoding="utf-8")
        return path

    return write


@pytest.fixture
def run_result():
    """Resultado sintético com dois algoritmos, três passos e n = 1."""
    curve = np.array([[-1.0, -1.0], [-2.0, -2.0], [-3.0, -3.0]])
    return RunResult(
        scenario="ca-scenario-1",
        algorithms=("KF", "MEE-RTS"),
        horizon=3,
        runs=10,
        dropped=0,
        failures={},
        msd_db={"KF": curve, "MEE-RTS": curve - 1},
        mse_db={"KF": curve + 0.5, "MEE-RTS": curve - 0.5},
        steady_state={"KF": np.array([-3.0, -3.0]), "MEE-RTS": np.array([-4.0, -4.0])},
        fpi_count={"KF": None, "MEE-RTS": 2.5},
        fpi_forward={"KF": None, "MEE-RTS": 1.5},
        wallclock={"KF": None, "MEE-RTS": None},
        checksums=("a", "b"),
    )
