class EstimationError(Exception):
    """Base para todos os erros da biblioteca de estimação."""


class ConfigurationError(EstimationError):
    """Modelo ou configuração inconsistente (dimensões, campos ausentes)."""


class DomainError(EstimationError):
    """Parâmetro fora do domínio permitido."""


class NumericalError(EstimationError):
    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        message = super().__str__()
        if not self.diagnostics:
            return message
        details = ", ".join(f"{key}={value}" for key, value in self.diagnostics.items())
        return f"{message} ({details})"


class DivergenceError(NumericalError):
    """A recursão não tem regime permanente (raio espectral >= 1)."""


class ExperimentAborted(EstimationError):
    def __init__(self, message, failures=None, runs=0):
        super().__init__(message)
        self.failures = failures or {}
        self.runs = runs
