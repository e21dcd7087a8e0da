import numpy as np

from estimation.noise import sample_matrix
from estimation.state_space import GaussianBelief, StateTrajectory


def _propagate(spec, x):
    if spec.is_linear:
        return spec.model.F @ x
    return np.asarray(spec.model.f(x), dtype=float)


def _measure(spec, t, x):
    if spec.is_linear:
        return spec.model.H @ x
    return np.asarray(spec.model.sensor_at(t).h(x), dtype=float)


def simulate_trajectory(spec, rng):
    """Sorteia x₀, x̃₀ e a trajetória com medições de ``spec``.

    Cada fonte de ruído usa um sub-fluxo próprio de ``rng``; a trajetória é
    determinística dada a semente.
    """
    initial = rng.child("init").generator
    x = initial.multivariate_normal(spec.initial_mean, spec.initial_cov, method="eigh")
    estimate = initial.multivariate_normal(x, spec.estimate_cov, method="eigh")

    process_rng = rng.child("process")
    process = sample_matrix(spec.process_noise, spec.n, spec.horizon, process_rng)
    process = process @ spec.process_noise_factor.T

    measurement_rng = rng.child("measurement")
    noises = []
    sensors = zip(spec.sensors, spec.measurement_noise)
    for index, (sensor, noise) in enumerate(sensors):
        # cada sensor só é lido a cada len(sensors) passos
        draws = len(range(index, spec.horizon, len(spec.sensors)))
        noises.append(iter(sample_matrix(noise, sensor.m, draws, measurement_rng)))

    states, measurements = [], []
    for t in range(spec.horizon):
        x = _propagate(spec, x) + process[t]
        sensor_noise = next(noises[t % len(noises)])
        states.append(x)
        measurements.append(_measure(spec, t, x) + sensor_noise)

    return StateTrajectory(np.array(states), measurements, estimate)


def initial_belief(spec, trajectory):
    return GaussianBelief(trajectory.initial_estimate, spec.prior_cov)
