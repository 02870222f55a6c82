"""Experiment configuration: flat ``key = value`` files with dotted keys.

Example::

    model.d = 1
    symbol = 1
    action.weights = -1, 1
    k_max = 400
    cutoff.epsilon = 0.5
    lambda.start = 200
    lambda.stop = 400
    lambda.count = 21
    isotypes = 0, 1, 5

``[section]`` headers are accepted and flattened, so ``[lambda]`` followed
by ``start = 200`` is the same as ``lambda.start = 200``. Lines starting
with ``#`` or ``;`` are comments.
"""

from dataclasses import asdict, dataclass
import configparser

import numpy as np

from ..exceptions import ConfigError, PreconditionError, SymbolSyntaxError
from ..symbols import parse_symbol

_ROOT = "__root__"

KNOWN_KEYS = {
    "experiment", "model.d", "symbol", "action.weights", "k_max", "cutoff.epsilon",
    "lambda.start", "lambda.stop", "lambda.count", "isotypes", "base_point", "seed",
    "output.dir", "instances", "points", "tau", "k", "check.tolerance", "backend",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment parameters (see the module docstring)."""

    d: int = 1
    symbol: str = "1"
    weights: tuple = None
    k_max: int = 200
    epsilon: float = 0.5
    lambda_start: float = 100.0
    lambda_stop: float = 200.0
    lambda_count: int = 11
    isotypes: tuple = None
    base_point: tuple = None
    seed: int = 0
    output_dir: str = "twl-out"
    instances: int = 1000
    points: int = 50
    tau: float = 1.0
    k: int = 300
    tolerance: float = 0.05
    backend: str = "auto"

    @property
    def lambdas(self):
        return np.linspace(self.lambda_start, self.lambda_stop, self.lambda_count)

    def to_dict(self):
        return asdict(self)


def read_config_text(text):
    """Parse config text into a flat ``{dotted key: raw string}`` dict."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_ROOT}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"cannot parse configuration: {exc}") from exc
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            name = key if section == _ROOT else f"{section}.{key}"
            flat[name] = value.strip()
    return flat


def _int(raw, name):
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(name, f"expected an integer, got {raw!r}") from exc


def _float(raw, name):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(name, f"expected a number, got {raw!r}") from exc


def _int_list(raw, name):
    if raw.strip().lower() in ("none", ""):
        return None
    return tuple(_int(v.strip(), name) for v in raw.split(","))


def _complex_list(raw, name):
    try:
        return tuple(complex(v.strip().replace(" ", "")) for v in raw.split(","))
    except ValueError as exc:
        raise ConfigError(name, f"expected complex coordinates, got {raw!r}") from exc


def build_config(flat, overrides=None):
    """Validate a flat dict (plus overrides) into an :class:`ExperimentConfig`."""
    flat = dict(flat)
    flat.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(flat) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    kw = {}
    conv = {
        "model.d": ("d", _int), "symbol": ("symbol", lambda r, n: r),
        "action.weights": ("weights", _int_list), "k_max": ("k_max", _int),
        "cutoff.epsilon": ("epsilon", _float), "lambda.start": ("lambda_start", _float),
        "lambda.stop": ("lambda_stop", _float), "lambda.count": ("lambda_count", _int),
        "isotypes": ("isotypes", _int_list), "base_point": ("base_point", _complex_list),
        "seed": ("seed", _int), "output.dir": ("output_dir", lambda r, n: r),
        "instances": ("instances", _int), "points": ("points", _int), "tau": ("tau", _float),
        "k": ("k", _int), "check.tolerance": ("tolerance", _float),
        "backend": ("backend", lambda r, n: r),
    }
    for key, raw in flat.items():
        # "experiment" is a free-form label and carries no parameter
        if key in conv:
            attr, fn = conv[key]
            kw[attr] = fn(raw, key)
    cfg = ExperimentConfig(**kw)
    validate(cfg)
    return cfg


def load_config(path=None, overrides=None):
    flat = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                flat = read_config_text(fh.read())
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc}") from exc
    return build_config(flat, overrides)


def validate(cfg):
    """Check the invariants of :class:`ExperimentConfig`."""
    if cfg.d < 1:
        raise ConfigError("model.d", "must be >= 1")
    if cfg.k_max < 1:
        raise ConfigError("k_max", "must be >= 1")
    if not cfg.epsilon > 0:
        raise ConfigError("cutoff.epsilon", "must be positive")
    if cfg.lambda_count < 1:
        raise ConfigError("lambda.count", "must be >= 1")
    if cfg.lambda_stop < cfg.lambda_start:
        raise ConfigError("lambda.stop", "must be >= lambda.start")
    if cfg.weights is not None and len(cfg.weights) != cfg.d + 1:
        raise ConfigError("action.weights", f"expected {cfg.d + 1} weights")
    if cfg.weights is not None and len(set(cfg.weights)) == 1:
        raise ConfigError("action.weights", "weights must not all be equal")
    if cfg.base_point is not None and len(cfg.base_point) != cfg.d + 1:
        raise ConfigError("base_point", f"expected {cfg.d + 1} coordinates")
    if cfg.instances < 1:
        raise ConfigError("instances", "must be >= 1")
    if cfg.points < 1:
        raise ConfigError("points", "must be >= 1")
    try:
        parse_symbol(cfg.symbol, d=cfg.d, require_positive=False, allow_fiber_dependent=True)
    except SymbolSyntaxError as exc:
        raise ConfigError("symbol", str(exc)) from exc
    except PreconditionError as exc:
        raise ConfigError("symbol", str(exc)) from exc
    return cfg


def lambda_grid_bound(cfg, f_min):
    """Raise if the lambda grid exceeds the completeness bound ``k_max min f``."""
    bound = cfg.k_max * f_min
    if cfg.lambda_stop > bound:
        raise ConfigError(
            "lambda.stop", f"{cfg.lambda_stop:g} exceeds the completeness bound k_max * min f = {bound:g}"
        )
