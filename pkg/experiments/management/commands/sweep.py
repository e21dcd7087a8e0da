from experiments.config import ConfigError
from experiments.runner import sweep
from experiments.writers import write_outputs

from ._experiment import ExperimentCommand, command_errors


class Command(ExperimentCommand):
    help = "Varre sigma, tau ou lambda e grava uma linha de resumo por valor."

    def handle(self, *args, **options):
        with command_errors():
            config = self.load(options)
            if not config.sweep:
                raise ConfigError(
                    config.source, 1, "sweep", "Bloco obrigatório para varreduras."
                )
            parameter, values = config.sweep
            self.echo(f"Varrendo {parameter} em {config.scenario.name}: {values}")
            results = sweep(
                parameter,
                values,
                config.scenario,
                config.algorithms,
                config.mee,
                config.seed,
                **self.run_options(config, options),
            )
            written = write_outputs(
                results,
                config.output_path,
                config.output_format,
                config.manifest(),
                swept=True,
            )

        self.report(results)
        self.success(f"Concluído! {len(written)} arquivos em {config.output_path}")
