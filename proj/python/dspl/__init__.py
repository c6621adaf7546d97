"""Python access to the dspl engine.

Results and reports come back as plain dicts.
"""

import json

from . import _core
from ._core import DsplError, Model, ParameterStore

__all__ = [
    "DsplError",
    "Model",
    "ParameterStore",
    "query",
    "gradients",
    "train",
    "reference_probability",
    "run_cli",
]


def query(model, query="", params=None, n_samples=10000, seed=0, mode="hard", beta=50.0):
    """Estimate one query; returns the result record as a dict."""
    return json.loads(_core.query(model, query, params, n_samples, seed, mode, beta))


def gradients(model, query, params, n_samples=1000, seed=0, mode="soft", beta=50.0):
    """Return (estimate, {parameter name: gradient list})."""
    return _core.gradients(model, query, params, n_samples, seed, mode, beta)


def train(model, examples, params, **options):
    """Train `params` in place on examples given as dicts or JSON lines."""
    lines = [e if isinstance(e, str) else json.dumps(e) for e in examples]
    return json.loads(_core.train(model, lines, params, **options))


def reference_probability(model, query="", params=None):
    """Exact or quadrature reference value: (value, error bound, exact)."""
    return _core.reference_probability(model, query, params)


def run_cli(*args):
    """Run the command-line tool in process: (exit code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
