from contextlib import contextmanager

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from estimation.exceptions import (
    ConfigurationError,
    DomainError,
    ExperimentAborted,
    NumericalError,
)
from experiments.config import load_config
from experiments.validators import OUTPUT_FORMATS

INVALID_CONFIG = 2
NUMERICAL_ABORT = 3


@contextmanager
def command_errors():
    """Traduz erros da biblioteca em ``CommandError`` com o código de saída."""
    try:
        yield
    except (ConfigurationError, DomainError) as error:
        raise CommandError(str(error), returncode=INVALID_CONFIG)
    except (NumericalError, ExperimentAborted) as error:
        raise CommandError(str(error), returncode=NUMERICAL_ABORT)


class ExperimentCommand(BaseCommand):
    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="Arquivo YAML.")
        parser.add_argument("--seed", type=int, help="Sobrescreve a semente.")
        parser.add_argument("--out-dir", help="Diretório de saída.")
        parser.add_argument("--format", choices=OUTPUT_FORMATS)
        parser.add_argument(
            "--jobs", type=int, help="Processos paralelos (padrão SMOOTHING_JOBS)."
        )

    def echo(self, text, style=None):
        self.stdout.write(style(text) if style else text)

    def warn(self, text):
        return self.echo(text, self.style.WARNING)

    def success(self, text):
        return self.echo(text, self.style.SUCCESS)

    def load(self, options):
        config = load_config(options["config"], settings)
        changes = {
            field: options[option]
            for option, field in (
                ("seed", "seed"),
                ("out_dir", "output_path"),
                ("format", "output_format"),
            )
            if options.get(option) is not None
        }
        return config.replace(**changes)

    def run_options(self, config, options):
        jobs = options.get("jobs")
        return {
            "jobs": settings.SMOOTHING_JOBS if jobs is None else jobs,
            "mcc_sigma": config.mcc_sigma,
            "timing": config.timing,
            "check_jacobians": settings.DEBUG,
        }

    def report(self, results):
        for value, result in results:
            prefix = "" if value is None else f"[{value!r}] "
            if result.dropped:
                self.warn(f"{prefix}{result.dropped} execuções descartadas")
            for name in result.algorithms:
                values = ", ".join(f"{x:.2f}" for x in result.steady_state[name])
                self.echo(f"{prefix}{name}: regime permanente (dB) = {values}")
