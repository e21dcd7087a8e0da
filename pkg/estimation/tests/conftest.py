import numpy as np
import pytest

from estimation.state_space import GaussianBelief, LinearStateSpace, gaussian_kernel


def random_pd(generator, n, floor=0.1):
    matrix = generator.normal(size=(n, n))
    return matrix @ matrix.T + floor * np.eye(n)


def scalar_model(F=1.0, H=1.0, Q=1.0, R=1.0):
    return LinearStateSpace([[F]], [[H]], [[Q]], [[R]])


@pytest.fixture
def generator():
    return np.random.default_rng(20240601)


@pytest.fixture
def ca_model():
    dt = 0.1
    F = [[1.0, dt, dt**2 / 2], [0.0, 1.0, dt], [0.0, 0.0, 1.0]]
    H = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    return LinearStateSpace(F, H, 0.01 * np.eye(3), 0.01 * np.eye(2))


@pytest.fixture
def unit_belief():
    return GaussianBelief([0.0], [[1.0]])


@pytest.fixture
def random_system(generator):
    """Sistema linear estável de 2 estados com trajetória gaussiana curta."""

    def build(n=2, m=2, horizon=40):
        F = 0.9 * np.eye(n) + 0.05 * generator.normal(size=(n, n))
        H = generator.normal(size=(m, n))
        Q = random_pd(generator, n)
        R = random_pd(generator, m)
        model = LinearStateSpace(F, H, Q, R)

        x = generator.normal(size=n)
        measurements = []
        for _ in range(horizon):
            x = F @ x + generator.multivariate_normal(np.zeros(n), Q)
            measurements.append(H @ x + generator.multivariate_normal(np.zeros(m), R))
        prior = GaussianBelief(np.zeros(n), np.eye(n))
        return model, measurements, prior

    return build


def stationarity_roots(d, z, sigma, center, half_width=10.0, step=1e-4):
    """Raízes de Zᵀ·Ω(x)·(d − Z·x) numa grade densa, para n = 1 e L = 2."""
    grid = np.arange(center - half_width, center + half_width + step / 2, step)
    e1, e2 = d[0] - z[0] * grid, d[1] - z[1] * grid
    g = gaussian_kernel(e1 - e2, sigma)
    g0 = gaussian_kernel(0.0, sigma)
    diagonal = (g0 + g) ** 2 + g0**2 + g**2
    off_diagonal = 2 * g0 * g
    residual = z[0] * (diagonal * e1 + off_diagonal * e2) + z[1] * (
        off_diagonal * e1 + diagonal * e2
    )
    crossings = np.nonzero(residual[:-1] * residual[1:] <= 0)[0]
    return grid[crossings]
