"""Python bindings for the mmwce channel-estimation library."""

import json

from ._core import (
    AnmError,
    ConditioningError,
    ConfigError,
    ContractViolation,
    DomainError,
    OmpError,
    __version__,
    anm_denoise,
    anm_exact,
    atomic_norm,
    canonical_config,
    config_hash,
    design_precoder,
    grid_dictionary,
    mutual_coherence,
    omp,
    sensing_plan,
    steering_vector,
    validate,
    welch_bound,
    zadoff_chu,
    zf_baseband,
)
from . import _core


def _as_text(config):
    if config is None:
        return "{}"
    if isinstance(config, str):
        return config
    return json.dumps(config)


def nmse_sweep(config=None):
    """Run an NMSE sweep. `config` is a dict or JSON text; returns the JSON
    result with the per-row CSV under "csv"."""
    return json.loads(_core._nmse_sweep_json(_as_text(config)))


def se_eval(config=None):
    """Run the multi-user SE evaluation; same conventions as nmse_sweep."""
    return json.loads(_core._se_eval_json(_as_text(config)))


__all__ = [name for name in dir() if not name.startswith("_")]
