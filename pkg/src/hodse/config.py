# src/hodse/config.py
"""
Experiment config files: flat ``key = value`` lines with dotted keys and
``#`` comments, versioned by a mandatory ``schema_version``.

    schema_version = 1
    functional = sep:abs
    sample.n = 32
    sample.d = 1024
    noise.family = gaussian
    noise.sigma_n = 1.0
    theta.kind = zeros
    estimators = plugin, hodse
    estimator.order = auto
    estimator.order_cap = 16
    estimator.profile = flat
    run.replications = 500
    run.seed = 20240101
    output.json = abs_d1024.json

Correlated noise takes a d x d matrix with unit diagonal, rows separated
by ``;``: ``noise.correlation = 1, 0.5; 0.5, 1``.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, Tuple

from .errors import ConfigError, InputError
from .rules import EstimatorName, NoiseFamily, ThetaKind
from .parser import parse_functional
from .simlab import ExperimentConfig, NoiseModel, ThetaSpec
from .smoothing import PROFILES

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BUNDLED_DIR = Path(__file__).parent / "configs"

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise ValueError(text)
    return val


def _positive_float(text: str) -> float:
    val = float(text)
    if not val > 0:
        raise ValueError(text)
    return val


def _auto(conv: Callable[[str], object]) -> Callable[[str], object]:
    def parse(text: str):
        return None if text.lower() == "auto" else conv(text)
    return parse


def _flag(text: str) -> bool:
    low = text.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(text)


def _estimators(text: str) -> Tuple[EstimatorName, ...]:
    names = tuple(EstimatorName(part.strip()) for part in text.split(",") if part.strip())
    if not names:
        raise ValueError(text)
    return names


def _scales(text: str) -> Tuple[float, ...]:
    return tuple(_positive_float(part) for part in text.split(","))


def _correlation(text: str) -> Tuple[Tuple[float, ...], ...]:
    """Rows separated by ``;``, entries by ``,``: ``1, 0.5; 0.5, 1``."""
    rows = tuple(tuple(float(v) for v in row.split(",")) for row in text.split(";"))
    if any(len(row) != len(rows) for row in rows):
        raise ValueError(text)
    return rows


def _profile(text: str) -> str:
    if text not in PROFILES:
        raise ValueError(text)
    return text


SCHEMA: Dict[str, Callable[[str], object]] = {
    "schema_version": int,
    "functional": str,
    "sample.n": _positive_int,
    "sample.d": _positive_int,
    "noise.family": NoiseFamily,
    "noise.sigma_n": _positive_float,
    "noise.scale": _scales,
    "noise.df": _positive_float,
    "noise.mixture_weight": float,
    "noise.mixture_ratio": _positive_float,
    "noise.correlation": _correlation,
    "theta.kind": ThetaKind,
    "theta.value": float,
    "theta.low": float,
    "theta.high": float,
    "theta.sparsity": int,
    "theta.magnitude": float,
    "estimators": _estimators,
    "estimator.order": _auto(_positive_int),
    "estimator.order_cap": _auto(_positive_int),
    "estimator.bandwidth": _auto(_positive_float),
    "estimator.profile": _profile,
    "estimator.bootstrap_draws": _positive_int,
    "run.replications": _positive_int,
    "run.seed": int,
    "run.decompose": _flag,
    "run.effective_rank": _auto(_positive_float),
    "output.json": str,
    "output.csv": str,
}

REQUIRED = ("schema_version", "functional", "sample.n", "sample.d", "noise.family", "noise.sigma_n")


def parse_config_text(text: str) -> Dict[str, object]:
    """Raw key/value pairs, each converted by the schema."""
    raw: Dict[str, str] = {}
    bad = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            bad.append(f"line {lineno}")
            continue
        if key in raw:
            bad.append(key)
        raw[key] = value
    bad += [key for key in raw if key not in SCHEMA]
    values: Dict[str, object] = {}
    for key, value in raw.items():
        if key not in SCHEMA:
            continue
        try:
            values[key] = SCHEMA[key](value)
        except (ValueError, TypeError):
            bad.append(key)
    bad += [key for key in REQUIRED if key not in raw]
    if bad:
        raise ConfigError("invalid config keys", bad)
    if values["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {values['schema_version']}", ["schema_version"])
    return values


def _section(values: Dict[str, object], prefix: str):
    return [key for key in values if key.startswith(prefix)]


def load_config_text(text: str) -> ExperimentConfig:
    values = parse_config_text(text)
    try:
        parse_functional(values["functional"])
    except InputError as e:
        raise ConfigError(f"bad functional ({e})", ["functional"]) from e
    try:
        noise = NoiseModel(
            family=values["noise.family"],
            sigma_n=values["noise.sigma_n"],
            scales=values.get("noise.scale"),
            df=values.get("noise.df", 8.0),
            mixture_weight=values.get("noise.mixture_weight", 0.1),
            mixture_ratio=values.get("noise.mixture_ratio", 3.0),
            correlation=values.get("noise.correlation"),
        )
        noise.check(values["sample.d"])
    except InputError as e:
        raise ConfigError(f"bad noise settings ({e})", _section(values, "noise.")) from e
    theta = ThetaSpec(
        kind=values.get("theta.kind", ThetaKind.ZEROS),
        value=values.get("theta.value", 0.0),
        low=values.get("theta.low", -1.0),
        high=values.get("theta.high", 1.0),
        sparsity=values.get("theta.sparsity", 0),
        magnitude=values.get("theta.magnitude", 1.0),
    )
    return ExperimentConfig(
        functional=values["functional"],
        n=values["sample.n"],
        d=values["sample.d"],
        noise=noise,
        theta=theta,
        estimators=values.get("estimators", (EstimatorName.PLUGIN, EstimatorName.HODSE)),
        order=values.get("estimator.order"),
        order_cap=values.get("estimator.order_cap"),
        bandwidth=values.get("estimator.bandwidth"),
        profile=values.get("estimator.profile", "flat"),
        bootstrap_draws=values.get("estimator.bootstrap_draws", 2000),
        replications=values.get("run.replications", 100),
        seed=values.get("run.seed", 0),
        decompose=values.get("run.decompose", True),
        effective_rank=values.get("run.effective_rank"),
        out_json=values.get("output.json"),
        out_csv=values.get("output.csv"),
    )


def load_config(path) -> ExperimentConfig:
    """
    Load an experiment config. A bare name such as ``smoke.cfg`` that does
    not exist locally is looked up among the bundled configs; output paths
    are taken relative to the working directory.
    """
    p = Path(path)
    if not p.exists() and p.parent == Path(".") and (BUNDLED_DIR / p.name).exists():
        p = BUNDLED_DIR / p.name
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read config {path}: {e.strerror}") from None
    logger.debug("loading config %s", p)
    return load_config_text(text)
