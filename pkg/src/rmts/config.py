"""
JSON experiment configuration: schema, parsing and the resolved form.

A config names a mode, a model and the settings that mode needs::

    {
      "mode": "moments",
      "seed": 1,
      "horizon": 50000,
      "model": {
        "dim": 5,
        "lags": [{"ensemble": "custom", "mean": 0, "std": 0.1,
                  "constraint": "symmetric"}],
        "noise": {"mean": 1, "std": 1}
      }
    }

Matrix-valued fields (``mean``, ``std``, ``std_imag`` of a lag) accept a
scalar broadcast to every entry, ``{"diag": x, "offdiag": y}``, or a k x k
nested list.  Vector fields accept a scalar or a list of k entries.  A
complex scalar is written ``[re, im]``; where a list of two numbers could
also be a length-2 vector, the vector reading wins.

Unknown keys are rejected.  :func:`resolve` fills every default and returns
a plain dict that parses back to the same experiment.
"""

import copy
import json

import jsonschema
import numpy as np

from .ensembles import (CONSTRAINTS, MatrixDistribution, NoiseDistribution,
                        preset_goe, preset_gue)
from .errors import ConfigError
from .likelihood import OPTIMIZERS
from .model import RmtsModel
from .moments import DEFAULT_BURN_IN
from .rmde import SCALINGS

MODES = ("simulate", "moments", "fit", "verify", "rmexp")

_number = {"type": "number"}
_complex = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}
_scalar = {"anyOf": [_number, _complex]}
_vector = {"anyOf": [_scalar, {"type": "array", "items": _scalar, "minItems": 1}]}
_matrix = {"anyOf": [
    _scalar,
    {"type": "object", "properties": {"diag": _scalar, "offdiag": _scalar},
     "required": ["diag", "offdiag"], "additionalProperties": False},
    {"type": "array", "items": {"type": "array", "items": _scalar}, "minItems": 1},
]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["mode", "model"],
    "properties": {
        "mode": {"enum": list(MODES)},
        "seed": {"type": "integer", "minimum": 0},
        "horizon": {"type": "integer", "minimum": 1},
        "burn_in": {"type": "integer", "minimum": 0},
        "initial": {"anyOf": [_vector, {"type": "array", "items": {"type": "array"}}]},
        "input": {"type": ["string", "null"]},
        "output": {"type": ["string", "null"]},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dim", "lags"],
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "field": {"enum": ["real", "complex"]},
                "lags": {
                    "type": "array", "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "ensemble": {"enum": ["custom", "goe", "gue"]},
                            "mean": _matrix,
                            "std": _matrix,
                            "std_imag": {"anyOf": [_matrix, {"type": "null"}]},
                            "constraint": {"enum": list(CONSTRAINTS)},
                            "scale": _number,
                        },
                    },
                },
                "noise": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "mean": _vector,
                        "std": _vector,
                        "std_imag": {"anyOf": [_vector, {"type": "null"}]},
                    },
                },
            },
        },
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tying": {"enum": ["full", "diag_offdiag"]},
                "optimizer": {"enum": sorted(OPTIMIZERS)},
                "init": {"anyOf": [{"type": "null"}, {"type": "array", "items": _number}]},
                "options": {"type": "object"},
            },
        },
        "rmexp": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "steps": {"type": "integer", "minimum": 1},
                "paths": {"type": "integer", "minimum": 1},
                "scaling": {"enum": list(SCALINGS)},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "horizon": 1000,
    "burn_in": DEFAULT_BURN_IN,
    "initial": 0,
    "input": None,
    "output": None,
}
LAG_DEFAULTS = {"ensemble": "custom", "mean": 0, "std": 0, "std_imag": None,
                "constraint": "none", "scale": 1.0}
NOISE_DEFAULTS = {"mean": 0, "std": 0, "std_imag": None}
FIT_DEFAULTS = {"tying": "diag_offdiag", "optimizer": "nelder_mead", "init": None, "options": {}}
RMEXP_DEFAULTS = {"horizon": 1.0, "steps": 1000, "paths": 1, "scaling": "diffusive"}


def _where(err):
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def validate(raw):
    """Schema-check a config dict.

    Raises:
        ConfigError: naming the offending key path.
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"invalid config at {_where(best)}: {best.message}")


def resolve(raw):
    """Validated copy of ``raw`` with every default filled in."""
    validate(raw)
    cfg = copy.deepcopy(raw)
    for key, val in DEFAULTS.items():
        cfg.setdefault(key, val)
    model = cfg["model"]
    model.setdefault("field", "real")
    model.setdefault("noise", {})
    model["lags"] = [{**LAG_DEFAULTS, **lag} for lag in model["lags"]]
    model["noise"] = {**NOISE_DEFAULTS, **model["noise"]}
    cfg["fit"] = {**FIT_DEFAULTS, **cfg.get("fit", {})}
    cfg["rmexp"] = {**RMEXP_DEFAULTS, **cfg.get("rmexp", {})}
    return cfg


def _is_complex_scalar(v):
    return (isinstance(v, list) and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v))


def _scalar_value(v, where):
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(v, (int, float)):
        return v
    if _is_complex_scalar(v):
        return complex(v[0], v[1])
    raise ConfigError(f"{where}: expected a number or [re, im]")


def _as_dtype(values):
    return np.array(values, dtype=np.complex128 if any(isinstance(v, complex) for v in values)
                    else np.float64)


def parse_vector(spec, k, where):
    if isinstance(spec, list) and len(spec) == k:
        return _as_dtype([_scalar_value(v, f"{where}[{i}]") for i, v in enumerate(spec)])
    if isinstance(spec, list) and not _is_complex_scalar(spec):
        raise ConfigError(f"{where}: expected {k} entries, got {len(spec)}")
    return _as_dtype([_scalar_value(spec, where)] * k)


def parse_matrix(spec, k, where):
    if isinstance(spec, dict):
        d = _scalar_value(spec["diag"], f"{where}/diag")
        o = _scalar_value(spec["offdiag"], f"{where}/offdiag")
        out = np.full((k, k), o, dtype=np.result_type(type(d), type(o), np.float64))
        np.fill_diagonal(out, d)
        return out
    if isinstance(spec, list) and spec and all(isinstance(r, list) for r in spec) \
            and not _is_complex_scalar(spec):
        if len(spec) != k or any(len(r) != k for r in spec):
            raise ConfigError(f"{where}: expected a {k} x {k} nested list")
        flat = [_scalar_value(v, f"{where}[{i}][{j}]")
                for i, row in enumerate(spec) for j, v in enumerate(row)]
        return _as_dtype(flat).reshape(k, k)
    v = _scalar_value(spec, where)
    return np.full((k, k), v, dtype=np.complex128 if isinstance(v, complex) else np.float64)


def _real(a, where):
    if np.iscomplexobj(a):
        raise ConfigError(f"{where}: standard deviations must be real")
    return a


def build_lag(lag, k, field, where):
    scale = float(lag["scale"])
    if lag["ensemble"] == "goe":
        return preset_goe(k, scale)
    if lag["ensemble"] == "gue":
        return preset_gue(k, scale)
    means = parse_matrix(lag["mean"], k, f"{where}/mean")
    if field == "complex":
        means = means.astype(np.complex128)
    stds = _real(parse_matrix(lag["std"], k, f"{where}/std"), f"{where}/std")
    imag = lag["std_imag"]
    if imag is not None:
        imag = _real(parse_matrix(imag, k, f"{where}/std_imag"), f"{where}/std_imag")
    try:
        return MatrixDistribution(means, stds, imag, constraint=lag["constraint"], scale=scale)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_noise(noise, k, field, where="model/noise"):
    means = parse_vector(noise["mean"], k, f"{where}/mean")
    if field == "complex":
        means = means.astype(np.complex128)
    stds = _real(parse_vector(noise["std"], k, f"{where}/std"), f"{where}/std")
    imag = noise["std_imag"]
    if imag is not None:
        imag = _real(parse_vector(imag, k, f"{where}/std_imag"), f"{where}/std_imag")
    try:
        return NoiseDistribution(means, stds, imag)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_model(model_cfg):
    k = model_cfg["dim"]
    field = model_cfg["field"]
    lags = tuple(build_lag(lag, k, field, f"model/lags/{i}")
                 for i, lag in enumerate(model_cfg["lags"]))
    noise = build_noise(model_cfg["noise"], k, field)
    return RmtsModel(lags, noise)


def build_initial(spec, order, k):
    """Initial values, shape (order, k), time order ``X(0) .. X(order-1)``.

    For order > 1 a list of ``order`` lists gives one row per lag; anything
    else is a vector repeated for every row.
    """
    if order > 1 and isinstance(spec, list) and len(spec) == order \
            and all(isinstance(r, list) for r in spec):
        return np.vstack([parse_vector(r, k, f"initial[{i}]") for i, r in enumerate(spec)])
    return np.tile(parse_vector(spec, k, "initial"), (order, 1))


class Experiment:
    """A parsed config: built model objects plus the resolved dict."""

    def __init__(self, resolved):
        self.resolved = resolved
        self.mode = resolved["mode"]
        self.seed = resolved["seed"]
        self.horizon = resolved["horizon"]
        self.burn_in = resolved["burn_in"]
        self.model = build_model(resolved["model"])
        self.initial = build_initial(resolved["initial"], self.model.order, self.model.dim)
        self.fit = resolved["fit"]
        self.rmexp = resolved["rmexp"]
        self.input = resolved["input"]
        self.output = resolved["output"]

    def __eq__(self, other):
        return isinstance(other, Experiment) and self.resolved == other.resolved


def load_config(raw, seed=None):
    """Parse a config dict (or JSON text) into an :class:`Experiment`.

    ``seed`` overrides the config's seed and is recorded in the resolved form.

    Raises:
        ConfigError: invalid JSON, schema violation or inconsistent values.
    """
    if isinstance(raw, (str, bytes)):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = resolve(raw)
    if seed is not None:
        if seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg["seed"] = int(seed)
    return Experiment(cfg)


def read_config(path, seed=None):
    with open(path) as fh:
        text = fh.read()
    return load_config(text, seed=seed)
