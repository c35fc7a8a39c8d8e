"""Domain types, experiment configuration and the seeded random source."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

N_FEATURES = 8


class ConfigError(ValueError):
    """Raised when a configuration violates one or more bounds.

    ``errors`` holds one message per violated constraint.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _frozen_vector(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Sample:
    """One record: normalized feature vector, binary CHD label, identifier."""

    features: np.ndarray
    label: int
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen_vector(self.features))
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        object.__setattr__(self, "label", int(self.label))
        if not np.all(np.isfinite(self.features)):
            raise ValueError(f"sample {self.id!r} has non-finite features")

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and np.array_equal(self.features, other.features)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Antibody:
    """A paratope ``(w_1..w_k, theta)`` with an optional cached affinity."""

    weights: np.ndarray
    threshold: float
    affinity: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen_vector(self.weights))
        object.__setattr__(self, "threshold", float(self.threshold))
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.threshold):
            raise ValueError("antibody weights and threshold must be finite")

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    def with_affinity(self, affinity: int | None) -> "Antibody":
        return dataclasses.replace(self, affinity=None if affinity is None else int(affinity))

    def paratope(self) -> np.ndarray:
        """Weights followed by the threshold, as one vector."""
        return np.append(self.weights, self.threshold)

    def __eq__(self, other):
        if not isinstance(other, Antibody):
            return NotImplemented
        return (
            self.threshold == other.threshold
            and self.affinity == other.affinity
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Every hyperparameter of a run. Defaults are the reference experimental settings."""

    G_max: int = 100
    m: int = 150
    n: int = 100
    Q: int = 50
    E_sim: float = 0.05
    t: int = 10
    beta: float = 0.1
    alpha: float = 1.0
    a_fraction: float = 0.5
    gamma_w: float = 1.0
    gamma_theta: float = 1.0
    # "symmetric": -gamma_theta < dtheta < gamma_theta; "literal": -1 < dtheta < gamma_theta
    theta_delta_mode: str = "symmetric"
    tau: int = 10
    eta: float = 0.1
    mu_theta: float = 0.3
    # "fixed": mu_theta as given; "sum": per-sample radius equal to the sum of scaled features
    mu_theta_mode: str = "fixed"
    T_IM: int = 50
    E_min: float = 0.001
    # None means n // 2
    c_max_memory: int | None = None
    min_crowd: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.c_max_memory is None:
            object.__setattr__(self, "c_max_memory", max(1, self.n // 2))

    @property
    def c_replace(self) -> int:
        """Number of worst pools replaced on each diversification step."""
        return round_half_away(self.beta * self.n)

    def replace(self, **changes: Any) -> "ExperimentConfig":
        if "n" in changes and "c_max_memory" not in changes:
            changes["c_max_memory"] = None
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_INT_FIELDS = {"G_max", "m", "n", "Q", "t", "tau", "T_IM", "c_max_memory", "min_crowd", "seed"}
_STR_FIELDS = {"theta_delta_mode", "mu_theta_mode"}


def config_errors(cfg: ExperimentConfig) -> list[str]:
    errors = []
    if cfg.n <= 0:
        errors.append("n must be positive")
    if cfg.m < cfg.n:
        errors.append("m must be at least n")
    if cfg.Q < 1:
        errors.append("Q must be at least 1")
    if cfg.G_max < 1:
        errors.append("G_max must be at least 1")
    if not 0 < cfg.beta < 1:
        errors.append("beta must lie in (0, 1)")
    elif cfg.n > 0 and cfg.c_replace >= cfg.n:
        errors.append("beta must replace fewer than n pools")
    if not 0 < cfg.a_fraction <= 1:
        errors.append("a_fraction must lie in (0, 1]")
    if cfg.eta < 0.1:
        errors.append("eta below allowed range [0.1, 1.0]")
    elif cfg.eta > 1.0:
        errors.append("eta above allowed range [0.1, 1.0]")
    if not cfg.mu_theta > 0:
        errors.append("mu_theta must be positive")
    if cfg.c_max_memory is None or cfg.c_max_memory < 1:
        errors.append("c_max_memory must be at least 1")
    if cfg.E_sim < 0:
        errors.append("E_sim must be nonnegative")
    if cfg.t < 1:
        errors.append("t must be at least 1")
    if cfg.tau < 1:
        errors.append("tau must be at least 1")
    if cfg.alpha <= 0:
        errors.append("alpha must be positive")
    if cfg.gamma_w <= 0:
        errors.append("gamma_w must be positive")
    if cfg.gamma_theta <= 0:
        errors.append("gamma_theta must be positive")
    if cfg.T_IM < 1:
        errors.append("T_IM must be at least 1")
    if cfg.E_min <= 0:
        errors.append("E_min must be positive")
    if cfg.min_crowd < 1:
        errors.append("min_crowd must be at least 1")
    if cfg.theta_delta_mode not in ("symmetric", "literal"):
        errors.append("theta_delta_mode must be 'symmetric' or 'literal'")
    if cfg.mu_theta_mode not in ("fixed", "sum"):
        errors.append("mu_theta_mode must be 'fixed' or 'sum'")
    if not 0 <= cfg.seed < 2**64:
        errors.append("seed must be an unsigned 64-bit integer")
    return errors


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    """Return ``cfg`` unchanged if valid, else raise :class:`ConfigError`."""
    errors = config_errors(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def _coerce(name: str, raw: str) -> Any:
    if name not in _CONFIG_FIELDS:
        raise ConfigError([f"unknown config key {name!r}"])
    raw = raw.strip()
    try:
        if name in _STR_FIELDS:
            return raw
        if name == "c_max_memory" and raw.lower() in ("", "none"):
            return None
        if name in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError([f"{name}: cannot parse {raw!r}"]) from None


def parse_config(text: str, overrides: Mapping[str, str] | None = None) -> ExperimentConfig:
    """Parse flat ``key=value`` text (``#`` starts a comment).

    ``overrides`` are applied after the file contents.
    """
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"line {lineno}: expected key=value, got {line!r}"])
        key, raw = line.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), raw)
    for key, raw in (overrides or {}).items():
        values[key] = _coerce(key, str(raw))
    return validate_config(ExperimentConfig(**values))


def load_config(path: str | Path | None, overrides: Mapping[str, str] | None = None) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8") if path else ""
    return parse_config(text, overrides)


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        lines.append(f"{key}={'none' if value is None else value}")
    return "\n".join(lines) + "\n"


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero (49.5 -> 50)."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass
class RandomSource:
    """Seeded PCG64 stream. Single owner; never share across threads."""

    seed: int
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low: float, high: float, size=None):
        return self._gen.uniform(low, high, size)

    def random(self, size=None):
        return self._gen.random(size)

    def integers(self, low: int, high: int, size=None):
        """Integers in ``[low, high)``."""
        return self._gen.integers(low, high, size)

    def choice(self, n: int) -> int:
        return int(self._gen.integers(0, n))

    def bernoulli(self, p: float) -> bool:
        return bool(self._gen.random() < p)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def spawn(self, key: int) -> "RandomSource":
        """An independent substream derived from this source's seed and ``key``."""
        seq = np.random.SeedSequence(self.seed, spawn_key=(key,))
        return RandomSource(int(seq.generate_state(1, np.uint64)[0]))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Column-stacked view of a list of samples (features ``X``, labels ``y``)."""

    X: np.ndarray
    y: np.ndarray
    ids: tuple[str, ...]

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], k: int | None = None) -> "SampleSet":
        if samples:
            X = np.stack([s.features for s in samples]).astype(np.float64)
        else:
            X = np.zeros((0, N_FEATURES if k is None else k))
        X.setflags(write=False)
        y = np.array([s.label for s in samples], dtype=np.int64)
        y.setflags(write=False)
        return cls(X, y, tuple(s.id for s in samples))

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.X[i], int(self.y[i]), self.ids[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def samples(self) -> list[Sample]:
        return list(self)

    def subset(self, index) -> "SampleSet":
        index = np.asarray(index, dtype=np.int64)
        return SampleSet(self.X[index], self.y[index], tuple(self.ids[i] for i in index))


def as_sample_set(ds: Sequence[Sample] | SampleSet) -> SampleSet:
    return ds if isinstance(ds, SampleSet) else SampleSet.from_samples(list(ds))
