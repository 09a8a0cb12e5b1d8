"""Configuration dataclasses and the flat key=value config-file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Invalid configuration value or malformed config file."""


@dataclass(frozen=True)
class EncoderConfig:
    """Timing parameters of the input spike code.

    T        presentation window in integer ms steps
    tau      decay constant of the postsynaptic trace, ms
    nu       recency window of the trace, ms (older spikes contribute 0)
    epsilon  coincidence window of the plasticity rule, ms (fixed at one step)
    """

    T: int = 40
    tau: float = 0.5
    nu: float = 4.0
    epsilon: int = 1

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if self.tau <= 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if not (0 < self.nu <= self.T):
            raise ConfigError(f"nu must be in (0, T], got {self.nu}")
        if self.epsilon != 1:
            raise ConfigError("epsilon is fixed at 1 ms (one step)")


# Learning rates are kept below 1/(25*40): one training image contributes at
# most 25 patches of at most 40 postsynaptic events each, and the per-image
# drift must stay small for the stochastic updates to track their mean.
MAX_LEARNING_RATE = 1.0 / (25 * 40)


@dataclass(frozen=True)
class LearningParams:
    """Plasticity hyperparameters.

    a    weight learning rate
    b    threshold learning rate
    lam  weight regularizer (the "lambda" key in files and on the CLI)
    q    target number of distinct firing neurons per presentation
    """

    a: float = 0.0005
    b: float = 0.0001
    lam: float = 0.0
    q: float = 1.0

    def __post_init__(self) -> None:
        if not (0 < self.a < MAX_LEARNING_RATE):
            raise ConfigError(f"a must be in (0, {MAX_LEARNING_RATE}), got {self.a}")
        if not (0 < self.b < MAX_LEARNING_RATE):
            raise ConfigError(f"b must be in (0, {MAX_LEARNING_RATE}), got {self.b}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.q <= 0:
            raise ConfigError(f"q must be > 0, got {self.q}")


#: config-file / CLI name -> attribute name (only "lambda" differs; it is a
#: Python keyword and cannot be a dataclass field).
_EXTERNAL_NAMES = {"lambda": "lam"}

_DEFAULT_PATCH_SIDE = {"mnist": 5, "natural": 16}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a training run needs, resolvable from file + CLI overrides."""

    dataset: str = "mnist"
    data_path: str = ""
    test_data_path: str = ""
    p: int = 0  # 0 means: pick the dataset default (mnist 5, natural 16)
    D: int = 32
    lam: float = 0.0
    a: float = 0.0005
    b: float = 0.0001
    theta_init: float = 0.15
    T: int = 40
    iters: int = 15000
    per_image_patches: int = 25
    min_mass: float = 2.0
    eval_every: int = 1000
    eval_images: int = 1000
    seed: int = 0
    q: float = 1.0
    out_dir: str = "out"

    def __post_init__(self) -> None:
        if self.dataset not in _DEFAULT_PATCH_SIDE:
            raise ConfigError(f"dataset must be one of {sorted(_DEFAULT_PATCH_SIDE)}")
        if self.p == 0:
            object.__setattr__(self, "p", _DEFAULT_PATCH_SIDE[self.dataset])
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if self.D < 2:
            raise ConfigError(f"D must be >= 2, got {self.D}")
        if not (1.0 / self.D < self.theta_init < 0.5):
            raise ConfigError(
                f"theta_init must lie in (1/D, 0.5) = ({1.0 / self.D:.4g}, 0.5), "
                f"got {self.theta_init}"
            )
        if self.iters < 0:
            raise ConfigError(f"iters must be >= 0, got {self.iters}")
        if self.per_image_patches < 1:
            raise ConfigError("per_image_patches must be >= 1")
        if self.min_mass < 0:
            raise ConfigError("min_mass must be >= 0")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.eval_images < 1:
            raise ConfigError("eval_images must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        # delegate the rest
        self.encoder()
        self.learning()

    def encoder(self) -> EncoderConfig:
        return EncoderConfig(T=self.T)

    def learning(self) -> LearningParams:
        return LearningParams(a=self.a, b=self.b, lam=self.lam, q=self.q)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def external_keys() -> list[str]:
    """Config keys as they appear in files and as CLI flags."""
    inverse = {v: k for k, v in _EXTERNAL_NAMES.items()}
    return [inverse.get(f.name, f.name) for f in dataclasses.fields(ExperimentConfig)]


def field_type(key: str):
    """Python type of an external config key's value."""
    attr = _EXTERNAL_NAMES.get(key, key)
    if attr not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    return {"int": int, "float": float}.get(_FIELD_TYPES[attr], str)


def _coerce(key: str, attr: str, raw: str):
    kind = _FIELD_TYPES[attr]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat ``key=value`` file; '#' starts a comment, blanks ignored."""
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        values[key] = raw
    return values


def build_config(
    file_values: dict[str, str] | None = None,
    overrides: dict[str, object] | None = None,
) -> ExperimentConfig:
    """Resolve an ExperimentConfig from config-file values plus overrides.

    ``file_values`` are raw strings keyed by external names; ``overrides``
    (already-typed CLI values) win over the file.
    """
    kwargs: dict[str, object] = {}
    for key, raw in (file_values or {}).items():
        attr = _EXTERNAL_NAMES.get(key, key)
        if attr not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[attr] = _coerce(key, attr, raw)
    for key, value in (overrides or {}).items():
        attr = _EXTERNAL_NAMES.get(key, key)
        if attr not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[attr] = value
    return ExperimentConfig(**kwargs)
