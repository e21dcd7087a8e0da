from schematics.exceptions import ValidationError
from schematics.models import Model
from schematics.types import (
    BaseType,
    BooleanType,
    FloatType,
    IntType,
    ListType,
    ModelType,
    StringType,
)

from estimation.state_space import FPI_MODES
from experiments.algorithms import ALGORITHMS
from experiments.runner import SWEEP_PARAMETERS
from experiments.scenarios import PROCESS_COV_MODES

OUTPUT_FORMATS = ("csv", "json")


def positive(value):
    if value is not None and not value > 0:
        raise ValidationError("Deve ser positivo.")
    return value


def scenario_reference(value):
    if not isinstance(value, (str, dict)):
        raise ValidationError("Use o nome de um cenário ou um bloco em linha.")
    return value


def noise_block(value):
    if not isinstance(value, (dict, list)):
        raise ValidationError("Use um bloco de ruído ou uma lista de blocos.")
    return value


class MeeBlock(Model):
    sigma = FloatType(validators=[positive])
    tau = FloatType(validators=[positive])
    max_iter = IntType(min_value=1)
    jitter = FloatType(min_value=0)
    forgetting = FloatType(validators=[positive], max_value=1)
    mode = StringType(choices=FPI_MODES)


class OutputBlock(Model):
    path = StringType()
    format = StringType(choices=OUTPUT_FORMATS)


class SweepBlock(Model):
    parameter = StringType(required=True, choices=SWEEP_PARAMETERS)
    values = ListType(FloatType(), required=True, min_size=1)


class InlineScenario(Model):
    base = StringType(required=True)
    name = StringType()
    description = StringType()
    process_noise = BaseType(validators=[noise_block])
    measurement_noise = ListType(BaseType(validators=[noise_block]), min_size=1)
    sigma = FloatType(validators=[positive])
    mcc_sigma = FloatType(validators=[positive])
    dt = FloatType(validators=[positive])


class ExperimentConfigModel(Model):
    scenario = BaseType(required=True, validators=[scenario_reference])
    algorithms = ListType(
        StringType(choices=list(ALGORITHMS)), required=True, min_size=1
    )
    mee = ModelType(MeeBlock)
    mcc_sigma = FloatType(validators=[positive])
    seed = IntType(min_value=0)
    runs = IntType(min_value=1)
    horizon = IntType(min_value=1)
    process_cov = StringType(choices=PROCESS_COV_MODES)
    timing = BooleanType()
    output = ModelType(OutputBlock)
    sweep = ModelType(SweepBlock)
