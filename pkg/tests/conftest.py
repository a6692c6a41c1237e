"""Shared fixtures: stub surrogates and cached preset runs.

Preset pipelines are expensive (surrogate construction dominates), so each
one runs at most once per session; the acceptance criteria all read from
the cached results.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from gpinverse.presets import get_preset, run_experiment


class FunctionSurrogate:
    """Exact-mean stand-in for a fitted GP in inversion/sampling tests."""

    def __init__(self, fn, variance=0.0):
        self.fn = fn
        self.variance = float(variance)

    def predict(self, x):
        x = np.asarray(x, dtype=float).ravel()
        return float(self.fn(x)), self.variance

    def predict_many(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        mean = np.array([float(self.fn(row)) for row in x])
        return mean, np.full(x.shape[0], self.variance)


@pytest.fixture(scope="session")
def function_surrogate():
    return FunctionSurrogate


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    """Run-once cache of preset executions, keyed by preset name."""
    cache: dict[str, tuple] = {}

    def run(name: str):
        if name not in cache:
            outdir = tmp_path_factory.mktemp(f"run-{name}")
            t0 = time.perf_counter()
            result = run_experiment(get_preset(name), str(outdir))
            elapsed = time.perf_counter() - t0
            cache[name] = (result, elapsed)
        return cache[name]

    return run
