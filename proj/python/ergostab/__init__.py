"""Ergodic dynamics and algorithmic-stability estimators for fixed-step GD/SGD."""

import json as _json

from ._ergostab import *  # noqa: F401,F403
from ._ergostab import __version__, execute as _execute, run as _run, default_params as _default_params


def default_params(kind, preset="desk"):
    return _json.loads(_default_params(kind, preset))


def execute(kind, params=None, seed=0, workers=1, preset="desk"):
    """Run an experiment in memory. Returns (result dict, {file name: bytes})."""
    text, files, _ = _execute(kind, _json.dumps(params or {}), seed, workers, preset)
    return _json.loads(text), files


def run(kind, out, params=None, seed=0, workers=1, preset="desk"):
    """Run an experiment and write its files into `out`. Returns (exit code, summary dict)."""
    code, summary = _run(kind, _json.dumps(params or {}), seed, workers, preset, str(out))
    return code, _json.loads(summary)
