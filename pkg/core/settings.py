import logging
import os

import sentry_sdk
from configurations import Configuration, values
from sentry_sdk.integrations.django import DjangoIntegration

sentry_sdk.init(dsn=os.getenv("SENTRY_DSN"), integrations=[DjangoIntegration()])

logging.getLogger("joblib").setLevel(logging.WARNING)


class Common(Configuration):
    BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

    SECRET_KEY = "really-secret"

    DEBUG = False

    ALLOWED_HOSTS = []
    INSTALLED_APPS = ["experiments.apps.ExperimentsConfig"]

    # só comandos de gerenciamento: sem banco, sem URLs
    DATABASES = {}

    LANGUAGE_CODE = "pt-br"
    TIME_ZONE = "America/Fortaleza"
    USE_I18N = True
    USE_TZ = True

    SMOOTHING_JOBS = values.IntegerValue(1, environ_prefix=None)
    SMOOTHING_OUTPUT_DIR = values.Value("resultados", environ_prefix=None)
    SMOOTHING_SEED = values.IntegerValue(42, environ_prefix=None)

    MEE_TAU = values.FloatValue(1e-6, environ_prefix=None)
    MEE_MAX_ITER = values.IntegerValue(100, environ_prefix=None)
    MEE_JITTER = values.FloatValue(1e-10, environ_prefix=None)
    MEE_FORGETTING = values.FloatValue(0.95, environ_prefix=None)

    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOGGING = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "simple": {"format": "%(asctime)s %(levelname)s %(name)s %(message)s"}
        },
        "handlers": {
            "console": {"class": "logging.StreamHandler", "formatter": "simple"}
        },
        "loggers": {
            "estimation": {"handlers": ["console"], "level": LOG_LEVEL},
            "experiments": {"handlers": ["console"], "level": LOG_LEVEL},
        },
    }


class Dev(Common):
    DEBUG = True


class Prod(Common):
    SECRET_KEY = values.SecretValue()
