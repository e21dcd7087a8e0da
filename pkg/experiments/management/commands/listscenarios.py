from django.core.management.base import BaseCommand

from experiments.scenarios import scenario_catalog


class Command(BaseCommand):
    help = "Lista os cenários do catálogo."

    def handle(self, *args, **options):
        for spec in scenario_catalog():
            kind = "linear" if spec.is_linear else "não linear"
            self.stdout.write(
                f"{spec.name}\t{kind}\tn={spec.n}\tsigma={spec.sigma}\t"
                f"{spec.description}"
            )
