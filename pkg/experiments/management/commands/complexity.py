from django.core.management.base import BaseCommand

from estimation.theory import backward_complexity_table, flops_mc_rtsl, flops_mee_rts

from ._experiment import command_errors

ARGUMENTS = (
    ("--n", "Dimensão do estado."),
    ("--m", "Dimensão da medição."),
    ("--mf", "Iterações de ponto fixo da passagem direta."),
    ("--mb", "Iterações de ponto fixo da passagem reversa."),
)


class Command(BaseCommand):
    help = "Imprime as contagens de operações do MC-RTSL e do MEE-RTS."

    def add_arguments(self, parser):
        for name, help_text in ARGUMENTS:
            parser.add_argument(name, type=int, required=True, help=help_text)

    def handle(self, *args, **options):
        n, m = options["n"], options["m"]
        with command_errors():
            mc_rtsl = flops_mc_rtsl(n, m)
            mee_rts = flops_mee_rts(n, m, options["mf"], options["mb"])
            table = backward_complexity_table(n)

        self.stdout.write(f"MC-RTSL: {mc_rtsl}")
        self.stdout.write(f"MEE-RTS: {mee_rts}")
        self.stdout.write(f"{'operação':<26}{'×':>10}{'±':>10}{'especiais':>11}")
        for label, products, sums, special in table:
            self.stdout.write(f"{label:<26}{products:>10}{sums:>10}{special:>11}")
