"""
Django settings for the ovf_lab project.

12-factor app configuration using django-environ. Only process-level knobs are read
from the environment; numerical policy lives in OVF_CONFIG and run parameters come
from command-line flags.
"""
from pathlib import Path

import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Initialize environment variables
env = environ.Env(
    # set casting, default value
    DEBUG=(bool, False),
    SECRET_KEY=(str, "django-insecure-ovf-lab-local-key"),
    OVF_LOG_LEVEL=(str, "INFO"),
)

# Read .env file
environ.Env.read_env(BASE_DIR / ".env")

SECRET_KEY = env("SECRET_KEY")

DEBUG = env("DEBUG")

ALLOWED_HOSTS: list[str] = []


# Application definition
INSTALLED_APPS = [
    # Django core
    "django.contrib.contenttypes",

    # Third party apps
    "rest_framework",

    # Local apps
    "ovf",
]

# No database: every object is computed, serialized to JSON files and discarded.
DATABASES: dict[str, dict[str, str]] = {}

# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/
LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Django REST Framework
# Only serializers and the JSON renderer/parser are used.
REST_FRAMEWORK = {
    "DEFAULT_RENDERER_CLASSES": [
        "rest_framework.renderers.JSONRenderer",
    ],
    "DEFAULT_PARSER_CLASSES": [
        "rest_framework.parsers.JSONParser",
    ],
    "UNICODE_JSON": True,
    "COMPACT_JSON": True,
}


# Logging
# https://docs.djangoproject.com/en/5.2/topics/logging/
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "ovf": {
            "handlers": ["console"],
            "level": env("OVF_LOG_LEVEL"),
            "propagate": False,
        },
    },
}


# Numerical policy for orthogonal vector fields
OVF_CONFIG = {
    # Residual tolerances
    "IDENTITY_TOLERANCE": 1e-10,
    "STATIONARITY_TOLERANCE": 1e-9,
    "PSD_FLOOR": -1e-12,
    "FEASIBILITY_TOLERANCE": 1e-12,
    "DECOMPOSITION_TOLERANCE": 1e-12,

    # Projection lattice
    "PROJECTION_TOLERANCE": 1e-12,
    "SUPPORT_TOLERANCE": 1e-12,
    # 0 < a < 1 is enforced as min(a, 1 - a) > STRICTNESS
    "STRICTNESS": 1e-9,
    "PHASE_TOLERANCE": 1e-12,

    # Case 1 / Case 2 split: min eigenvalue of rho <= RANK_THRESHOLD * trace
    "RANK_THRESHOLD": 1e-12,

    # Gram factorisation of stationary-form instances
    "GRAM_CLIP": 1e-12,
    "GRAM_PSD_FLOOR": -1e-10,

    # Run defaults (overridable by command-line flags)
    "DEFAULT_SAMPLES": 1000,
    "DEFAULT_TRIALS": 100,
    "DEFAULT_SEED": 0,
    "DEFAULT_LEVELS": [2, 4, 8, 16, 32, 64],
    "MAX_COORDINATE_RETRIES": 1000,
    "REFINEMENT_GRID": 20001,
}
