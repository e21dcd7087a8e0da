"""Leitura e validação do arquivo YAML de experimentos.

Os erros saem no formato ``arquivo:linha: campo: mensagem``; a linha vem do
nó YAML do campo ou, para campos ausentes, do bloco que deveria contê-lo.
"""
from dataclasses import dataclass, replace
from pathlib import Path

import yaml
from schematics.exceptions import DataError

from estimation.exceptions import ConfigurationError, DomainError
from estimation.noise import from_dict, to_dict
from estimation.state_space import MeeConfig
from experiments.scenarios import (
    get_scenario,
    with_noise,
    with_process_covariance,
    with_sampling_interval,
)
from experiments.validators import ExperimentConfigModel, InlineScenario


class ConfigError(ConfigurationError):
    def __init__(self, source, line, field, message):
        self.source, self.line, self.field = source, line, field
        super().__init__(f"{source}:{line}: {field}: {message}")


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    source: str
    scenario: object
    algorithms: tuple
    mee: MeeConfig
    mcc_sigma: float
    seed: int
    process_cov: str
    timing: bool
    output_path: str
    output_format: str
    sweep: tuple = None

    def replace(self, **changes):
        return replace(self, **changes)

    def manifest(self):
        """Configuração resolvida; pode ser lida de volta por ``load_config``."""
        spec = self.scenario
        data = {
            "scenario": {
                "base": spec.base,
                "name": spec.name,
                "description": spec.description,
                "process_noise": _noise_to_primitive(spec.process_noise),
                "measurement_noise": [
                    _noise_to_primitive(noise) for noise in spec.measurement_noise
                ],
                "sigma": spec.sigma,
                "mcc_sigma": spec.mcc_sigma,
                "dt": spec.dt,
            },
            "algorithms": list(self.algorithms),
            "mee": {
                "sigma": self.mee.sigma,
                "tau": self.mee.tau,
                "max_iter": self.mee.max_iter,
                "jitter": self.mee.jitter,
                "forgetting": self.mee.forgetting,
                "mode": self.mee.mode,
            },
            "mcc_sigma": self.mcc_sigma,
            "seed": self.seed,
            "runs": spec.mc_runs,
            "horizon": spec.horizon,
            "process_cov": self.process_cov,
            "timing": self.timing,
            "output": {"path": self.output_path, "format": self.output_format},
        }
        if self.sweep:
            parameter, values = self.sweep
            data["sweep"] = {"parameter": parameter, "values": list(values)}
        return data


def _noise_to_primitive(noise):
    if isinstance(noise, (list, tuple)):
        return [to_dict(item) for item in noise]
    return to_dict(noise)


def _line_marks(node, path=(), marks=None):
    marks = {} if marks is None else marks
    marks.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            marks[path + (key.value,)] = key.start_mark.line + 1
            _line_marks(value, path + (key.value,), marks)
    elif isinstance(node, yaml.SequenceNode):
        for index, item in enumerate(node.value):
            _line_marks(item, path + (index,), marks)
    return marks


def _flatten(errors, path=()):
    if isinstance(errors, dict):
        for key, value in errors.items():
            yield from _flatten(value, path + (key,))
    elif isinstance(errors, (list, tuple)):
        for item in errors:
            yield from _flatten(item, path)
    else:
        yield path, str(errors)


class _Reporter:
    def __init__(self, source, marks):
        self.source, self.marks = source, marks

    def line(self, path):
        path = tuple(_as_key(part) for part in path)
        while path not in self.marks:
            path = path[:-1]
        return self.marks[path]

    def error(self, path, message):
        field = ".".join(str(part) for part in path) or "(raiz)"
        return ConfigError(self.source, self.line(path), field, message)

    def validate(self, model_class, data, prefix=()):
        try:
            model = model_class(data)
            model.validate()
        except DataError as error:
            path, message = next(_flatten(error.to_primitive()))
            raise self.error(prefix + path, message)
        return model.to_native()


def _as_key(part):
    try:
        return int(part)
    except (TypeError, ValueError):
        return part


def _read(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigurationError(f"{path}: não foi possível ler ({error.strerror})")
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as error:
        mark = getattr(error, "problem_mark", None)
        line = mark.line + 1 if mark else 1
        raise ConfigError(path, line, "(raiz)", f"YAML inválido: {error}")
    if not isinstance(data, dict):
        raise ConfigError(path, 1, "(raiz)", "O documento deve ser um mapeamento")
    return data, _line_marks(root)


def _noise(reporter, path, value):
    try:
        if isinstance(value, list):
            return tuple(from_dict(item).validate() for item in value)
        return from_dict(value).validate()
    except (ConfigurationError, DomainError, TypeError, ValueError) as error:
        raise reporter.error(path, str(error))


def _scenario(reporter, data):
    reference = data["scenario"]
    if isinstance(reference, str):
        try:
            return get_scenario(reference)
        except ConfigurationError as error:
            raise reporter.error(("scenario",), str(error))

    block = reporter.validate(InlineScenario, reference, prefix=("scenario",))
    try:
        spec = get_scenario(block["base"])
    except ConfigurationError as error:
        raise reporter.error(("scenario", "base"), str(error))

    process_noise, measurement_noise = None, None
    if block.get("process_noise") is not None:
        path = ("scenario", "process_noise")
        process_noise = _noise(reporter, path, block["process_noise"])
    if block.get("measurement_noise") is not None:
        measurement_noise = [
            _noise(reporter, ("scenario", "measurement_noise", index), value)
            for index, value in enumerate(block["measurement_noise"])
        ]

    try:
        if block.get("dt") is not None:
            spec = with_sampling_interval(spec, block["dt"])
        spec = with_noise(spec, process_noise, measurement_noise)
        changes = {
            key: block[key]
            for key in ("name", "description", "sigma", "mcc_sigma")
            if block.get(key) is not None
        }
        return spec.replace(**changes)
    except (ConfigurationError, DomainError) as error:
        raise reporter.error(("scenario",), str(error))


def load_config(path, settings):
    """Lê ``path`` e resolve os padrões a partir de ``settings``."""
    source = str(path)
    data, marks = _read(source)
    reporter = _Reporter(source, marks)
    values = reporter.validate(ExperimentConfigModel, data)

    spec = _scenario(reporter, values)
    mee = values.get("mee") or {}
    mee = {key: value for key, value in mee.items() if value is not None}
    try:
        cfg = MeeConfig(
            sigma=mee.get("sigma", spec.sigma),
            tau=mee.get("tau", settings.MEE_TAU),
            max_iter=mee.get("max_iter", settings.MEE_MAX_ITER),
            jitter=mee.get("jitter", settings.MEE_JITTER),
            forgetting=mee.get("forgetting", settings.MEE_FORGETTING),
            mode=mee.get("mode", "fpi"),
        )
    except DomainError as error:
        raise reporter.error(("mee",), str(error))

    sizes = {
        field: values[key]
        for key, field in (("runs", "mc_runs"), ("horizon", "horizon"))
        if values.get(key) is not None
    }
    process_cov = values.get("process_cov") or "nominal"
    try:
        spec = with_process_covariance(spec.replace(**sizes), process_cov)
    except (ConfigurationError, DomainError) as error:
        raise reporter.error(("process_cov",), str(error))

    output = values.get("output") or {}
    sweep = values.get("sweep")
    mcc_sigma = values.get("mcc_sigma")
    if mcc_sigma is None:
        mcc_sigma = spec.mcc_sigma
    seed = values.get("seed")
    if seed is None:
        seed = settings.SMOOTHING_SEED
    return ExperimentConfig(
        source=source,
        scenario=spec,
        algorithms=tuple(values["algorithms"]),
        mee=cfg,
        mcc_sigma=mcc_sigma,
        seed=int(seed),
        process_cov=process_cov,
        timing=bool(values.get("timing")),
        output_path=output.get("path") or settings.SMOOTHING_OUTPUT_DIR,
        output_format=output.get("format") or "csv",
        sweep=(sweep["parameter"], tuple(sweep["values"])) if sweep else None,
    )
