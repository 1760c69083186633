"""Vehicle intrusion detection: simulator, KF/UKF estimators, CUSUM detector."""

import json

from ._core import (
    Config,
    ConfigError,
    Model,
    Run,
    VidsRuntimeError,
    adaptive_rate,
    run,
    simulate,
    sweep,
    train,
    unify_control,
)
from ._core import metrics_json as _metrics_json


def metrics(run_result, config):
    """Per-estimator detection metrics of a run, as a dict."""
    return json.loads(_metrics_json(run_result, config))


__all__ = [
    "Config",
    "ConfigError",
    "Model",
    "Run",
    "VidsRuntimeError",
    "adaptive_rate",
    "metrics",
    "run",
    "simulate",
    "sweep",
    "train",
    "unify_control",
]
