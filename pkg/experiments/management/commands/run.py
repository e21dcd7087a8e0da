from experiments.runner import run_scenario
from experiments.writers import write_outputs

from ._experiment import ExperimentCommand, command_errors


class Command(ExperimentCommand):
    help = "Roda um cenário de Monte Carlo e grava curvas de MSD e resumo."

    def handle(self, *args, **options):
        with command_errors():
            config = self.load(options)
            if config.sweep:
                self.warn("O bloco sweep é ignorado pelo comando run.")
            spec = config.scenario
            self.echo(f"Cenário {spec.name}: {spec.mc_runs} execuções")
            result = run_scenario(
                spec,
                config.algorithms,
                config.mee,
                config.seed,
                **self.run_options(config, options),
            )
            written = write_outputs(
                [(None, result)],
                config.output_path,
                config.output_format,
                config.manifest(),
            )

        self.report([(None, result)])
        self.success(f"Concluído! {len(written)} arquivos em {config.output_path}")
