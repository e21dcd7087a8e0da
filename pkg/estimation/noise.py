"""Distribuições de ruído não gaussiano e fluxos de números aleatórios.

Todas as distribuições são sorteadas de forma vetorizada por ``draw`` a partir
de um ``numpy.random.Generator``; ``sample`` e ``sample_vector`` são a
interface escalar/vetorial usada pelos simuladores.
"""
import hashlib
from dataclasses import asdict, dataclass, fields
from math import inf, pi, sqrt

import numpy as np

from estimation.exceptions import ConfigurationError, DomainError


@dataclass(frozen=True)
class Gaussian:
    kind = "gaussian"

    mean: float = 0.0
    variance: float = 1.0

    def validate(self):
        if not self.variance >= 0:
            raise DomainError(f"Variância negativa: {self.variance}")
        return self

    def draw(self, generator, size=None):
        return generator.normal(self.mean, sqrt(self.variance), size)

    def mean_value(self):
        return self.mean

    def variance_value(self):
        return self.variance

    def nominal_variance(self):
        return self.variance


@dataclass(frozen=True)
class MixedGaussian:
    """Com probabilidade ``lambda_`` sorteia N(a1, mu1), senão N(a2, mu2)."""

    kind = "mixed_gaussian"

    lambda_: float
    a1: float
    a2: float
    mu1: float
    mu2: float

    def validate(self):
        if not 0 <= self.lambda_ <= 1:
            raise DomainError(f"lambda deve estar em [0, 1], recebido {self.lambda_}")
        if not (self.mu1 >= 0 and self.mu2 >= 0):
            raise DomainError(
                f"Variâncias devem ser não negativas: mu1={self.mu1}, mu2={self.mu2}"
            )
        return self

    def draw(self, generator, size=None):
        first = generator.random(size) < self.lambda_
        one = generator.normal(self.a1, sqrt(self.mu1), size)
        two = generator.normal(self.a2, sqrt(self.mu2), size)
        return np.where(first, one, two)

    def mean_value(self):
        return self.lambda_ * self.a1 + (1 - self.lambda_) * self.a2

    def variance_value(self):
        first = self.lambda_ * (self.mu1 + self.a1**2)
        second = (1 - self.lambda_) * (self.mu2 + self.a2**2)
        second_moment = first + second
        return second_moment - self.mean_value() ** 2

    def nominal_variance(self):
        return self.mu1 if self.lambda_ >= 0.5 else self.mu2


@dataclass(frozen=True)
class AlphaStable:
    """Lei α-estável de função característica

        exp{jθt − γ|t|^a3 [1 + j·b·sgn(t)·S(t, a3)]}

    com S = tan(a3·π/2) para a3 ≠ 1 e S = (2/π)·log|t| para a3 = 1.
    """

    kind = "alpha_stable"

    a3: float
    b: float
    gamma: float
    theta: float = 0.0

    def validate(self):
        if not 0 < self.a3 <= 2:
            raise DomainError(f"a3 deve estar em (0, 2], recebido {self.a3}")
        if not -1 <= self.b <= 1:
            raise DomainError(f"b deve estar em [-1, 1], recebido {self.b}")
        if not self.gamma > 0:
            raise DomainError(f"gamma deve ser positivo, recebido {self.gamma}")
        return self

    def draw(self, generator, size=None):
        # Chambers-Mallows-Stuck na parametrização S1
        u = pi * (generator.random(size) - 0.5)
        w = -np.log1p(-generator.random(size))

        if self.a3 == 1:
            beta, scale = self.b, self.gamma
            t1 = (pi / 2 + beta * u) * np.tan(u)
            t2 = beta * np.log((pi / 2) * w * np.cos(u) / (pi / 2 + beta * u))
            standard = (2 / pi) * (t1 - t2)
            shift = self.theta + beta * (2 / pi) * scale * np.log(scale)
            return scale * standard + shift

        alpha = self.a3
        beta = -self.b
        scale = self.gamma ** (1 / alpha)
        skew = np.arctan(beta * np.tan(pi * alpha / 2)) / alpha
        t1 = np.sin(alpha * (u + skew)) / (np.cos(alpha * skew) * np.cos(u)) ** (
            1 / alpha
        )
        t2 = (np.cos(alpha * skew + (alpha - 1) * u) / w) ** ((1 - alpha) / alpha)
        return scale * t1 * t2 + self.theta

    def mean_value(self):
        return self.theta if self.a3 > 1 else np.nan

    def variance_value(self):
        return 2 * self.gamma if self.a3 == 2 else inf

    def nominal_variance(self):
        return 2 * self.gamma ** (2 / self.a3)


@dataclass(frozen=True)
class Rayleigh:
    kind = "rayleigh"

    sigma: float

    def validate(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma deve ser positivo, recebido {self.sigma}")
        return self

    def draw(self, generator, size=None):
        # 1 − U está em (0, 1]
        u = 1.0 - generator.random(size)
        return self.sigma * np.sqrt(-2.0 * np.log(u))

    def mean_value(self):
        return self.sigma * sqrt(pi / 2)

    def variance_value(self):
        return (4 - pi) / 2 * self.sigma**2

    def nominal_variance(self):
        return self.variance_value()


@dataclass(frozen=True)
class Mixture:
    kind = "mixture"

    weights: tuple
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "components", tuple(self.components))

    def validate(self):
        if not self.components or len(self.weights) != len(self.components):
            raise DomainError(
                f"Mistura com {len(self.weights)} pesos e "
                f"{len(self.components)} componentes"
            )
        if any(weight < 0 for weight in self.weights):
            raise DomainError(f"Pesos negativos na mistura: {self.weights}")
        if abs(sum(self.weights) - 1) > 1e-12:
            raise DomainError(f"Pesos da mistura somam {sum(self.weights)}, não 1")
        for component in self.components:
            component.validate()
        return self

    def draw(self, generator, size=None):
        choice = generator.choice(len(self.components), size=size, p=self.weights)
        draws = [component.draw(generator, size) for component in self.components]
        if size is None:
            return draws[choice]
        return np.choose(choice, draws)

    def mean_value(self):
        return sum(w * c.mean_value() for w, c in zip(self.weights, self.components))

    def variance_value(self):
        second_moment = sum(
            w * (c.variance_value() + c.mean_value() ** 2)
            for w, c in zip(self.weights, self.components)
        )
        return second_moment - self.mean_value() ** 2

    def nominal_variance(self):
        dominant = int(np.argmax(self.weights))
        return self.components[dominant].nominal_variance()


KINDS = {
    spec.kind: spec
    for spec in (Gaussian, MixedGaussian, AlphaStable, Rayleigh, Mixture)
}
SERIALIZED_NAMES = {"lambda_": "lambda"}


def to_dict(spec):
    if isinstance(spec, Mixture):
        return {
            "kind": spec.kind,
            "weights": list(spec.weights),
            "components": [to_dict(component) for component in spec.components],
        }
    data = {"kind": spec.kind}
    for key, value in asdict(spec).items():
        data[SERIALIZED_NAMES.get(key, key)] = value
    return data


def from_dict(data):
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in KINDS:
        raise ConfigurationError(
            f"Tipo de ruído desconhecido: {kind} (use {', '.join(sorted(KINDS))})"
        )
    spec_class = KINDS[kind]
    if spec_class is Mixture:
        components = tuple(from_dict(item) for item in data.get("components", ()))
        return Mixture(weights=data.get("weights", ()), components=components)

    names = {SERIALIZED_NAMES.get(f.name, f.name): f.name for f in fields(spec_class)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigurationError(
            f"Campos desconhecidos para {kind}: {', '.join(sorted(unknown))}"
        )
    try:
        return spec_class(**{names[key]: float(value) for key, value in data.items()})
    except TypeError as error:
        raise ConfigurationError(f"Ruído {kind} incompleto: {error}")


def _spawn_word(name):
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big")


class RngStream:
    """Fluxo PCG64 determinístico identificado por (semente, caminho)."""

    def __init__(self, seed, stream_id=0, path=()):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = tuple(path)
        self.reset()

    def __repr__(self):
        names = "/".join(str(part) for part in self.path)
        return (
            f"RngStream(seed={self.seed}, stream_id={self.stream_id}, "
            f"path={names!r})"
        )

    @property
    def spawn_key(self):
        return (self.stream_id,) + tuple(_spawn_word(name) for name in self.path)

    def reset(self):
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(sequence))
        return self

    def child(self, name):
        return RngStream(self.seed, self.stream_id, self.path + (name,))


def sample(spec, rng):
    spec.validate()
    return float(spec.draw(rng.generator))


def component_specs(spec, dim):
    if dim < 1:
        raise DomainError(f"A dimensão do vetor deve ser positiva, recebido {dim}")
    if not isinstance(spec, (list, tuple)):
        return (spec,) * dim
    if len(spec) != dim:
        raise DomainError(
            f"{len(spec)} especificações de ruído para um vetor de dimensão {dim}"
        )
    return tuple(spec)


def sample_vector(spec, dim, rng):
    specs = component_specs(spec, dim)
    return np.array([sample(component, rng) for component in specs])


def sample_matrix(spec, dim, size, rng):
    """``size`` sorteios vetoriais de dimensão ``dim``, um por linha.

    Cada componente é sorteada em bloco, na ordem das componentes.
    """
    columns = []
    for component in component_specs(spec, dim):
        component.validate()
        draws = component.draw(rng.generator, size)
        columns.append(np.asarray(draws, dtype=float).reshape(size))
    return np.column_stack(columns)
