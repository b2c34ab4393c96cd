"""Two-level Plackett-Luce route-choice model.

Observations are plain dicts in the JSONL record layout used by the CLI:
``{"z": {...}, "routes": [{"t":..,"c":..,"tw":..}, ...], "choice": i}``.
"""

import json

try:
    from . import _plroute as _ext
except ImportError:  # in-tree build: the extension sits next to this package
    import _plroute as _ext

NumericError = _ext.NumericError
StateError = _ext.StateError
ValidationError = _ext.ValidationError

__all__ = [
    "NumericError",
    "Posterior",
    "StateError",
    "ValidationError",
    "choice_probabilities",
    "evaluate",
    "fit_static",
    "generate_dataset",
    "reference_parameters",
    "run_cli",
    "weights",
]


def _jsonl(records):
    return "".join(json.dumps(r) + "\n" for r in records)


def reference_parameters():
    """Ground-truth matrix used by the synthetic generator, as {"a2": [...], "a3": [...]}."""
    return json.loads(_ext.reference_parameters())


def weights(params, z):
    """(w_time, w_cost, w_walk) for a user with features z."""
    return tuple(_ext.weights(json.dumps(params), json.dumps(z)))


def choice_probabilities(params, z, routes, scaler):
    """Choice probabilities over raw routes; scaler is {"mean": [...], "std": [...]}."""
    return _ext.choice_probabilities(
        json.dumps(params), json.dumps(z), json.dumps(routes), json.dumps(scaler)
    )


def generate_dataset(n, seed=0, params=None):
    """n synthetic observations as a list of dicts."""
    text = _ext.generate_dataset(n, seed, "" if params is None else json.dumps(params))
    return [json.loads(line) for line in text.splitlines() if line]


class Posterior:
    """Posterior draws plus the scaler they were fitted with."""

    def __init__(self, native):
        self._native = native

    @property
    def particles(self):
        return self._native.particles

    @property
    def day(self):
        return self._native.day

    @property
    def scaler(self):
        return json.loads(self._native.scaler)

    def mean(self):
        return json.loads(self._native.mean())

    def summary(self, level=0.9):
        return json.loads(self._native.summary(level))

    def save(self, path):
        self._native.save(str(path))

    @classmethod
    def load(cls, path):
        return cls(_ext.Posterior.load(str(path)))


def fit_static(data, warmup=500, samples=1000, seed=0):
    return Posterior(_ext.fit_static(_jsonl(data), warmup, samples, seed))


def evaluate(posterior, data):
    """Top-1 accuracy of the posterior mean on data."""
    return _ext.evaluate(posterior._native, _jsonl(data))


def run_cli(*args):
    """Run a CLI subcommand in-process; returns (exit_code, stdout, stderr)."""
    return _ext.run_cli([str(a) for a in args])
