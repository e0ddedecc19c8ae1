"""
Access to the OVF_CONFIG settings dict.

Library functions take explicit keyword tolerances; when a caller passes ``None`` the
value is looked up here, with built-in defaults for anything settings do not define.
"""
from typing import Any

from django.conf import settings

DEFAULTS: dict[str, Any] = {
    "IDENTITY_TOLERANCE": 1e-10,
    "STATIONARITY_TOLERANCE": 1e-9,
    "PSD_FLOOR": -1e-12,
    "FEASIBILITY_TOLERANCE": 1e-12,
    "DECOMPOSITION_TOLERANCE": 1e-12,
    "PROJECTION_TOLERANCE": 1e-12,
    "SUPPORT_TOLERANCE": 1e-12,
    "STRICTNESS": 1e-9,
    "PHASE_TOLERANCE": 1e-12,
    "RANK_THRESHOLD": 1e-12,
    "GRAM_CLIP": 1e-12,
    "GRAM_PSD_FLOOR": -1e-10,
    "DEFAULT_SAMPLES": 1000,
    "DEFAULT_TRIALS": 100,
    "DEFAULT_SEED": 0,
    "DEFAULT_LEVELS": [2, 4, 8, 16, 32, 64],
    "MAX_COORDINATE_RETRIES": 1000,
    "REFINEMENT_GRID": 20001,
}


def ovf_config() -> dict[str, Any]:
    """Return OVF_CONFIG merged over the defaults."""
    return {**DEFAULTS, **getattr(settings, "OVF_CONFIG", {})}


def setting(name: str) -> Any:
    return ovf_config()[name]


def resolve(value: Any, name: str) -> Any:
    """Return ``value`` unless it is None, else the configured ``name``."""
    return setting(name) if value is None else value
