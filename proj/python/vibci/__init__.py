"""Offline pipeline for SSVEP and visual-imagery BCI experiments."""

import json

from . import _vibci
from ._vibci import (
    DesignError,
    Error,
    Filter,
    ValidationError,
    default_config_text,
    schedule_session,
    solve_dual,
    synthesize_session,
    welch_psd,
    wolpaw_bitrate,
)

__all__ = [
    "DesignError",
    "Error",
    "Filter",
    "ValidationError",
    "default_config_text",
    "run_experiment",
    "schedule_session",
    "solve_dual",
    "synthesize_session",
    "welch_psd",
    "wolpaw_bitrate",
]


def run_experiment(config=None, seed=None, protocol=None, train_sessions=None, test_sessions=None):
    """Run a full experiment and return the results document as a dict."""
    text = _vibci.run_experiment_json(
        config=None if config is None else str(config),
        seed=seed,
        protocol=protocol,
        train_sessions=train_sessions,
        test_sessions=test_sessions,
    )
    return json.loads(text)
