"""Synthetic coronary-heart-disease records over the eight-item CHD schema.

The generator draws raw risk factors, labels each record with a fixed logistic
risk model plus label noise, and rejection-samples until the requested number
of CHD and non-CHD cases is reached.  Features are min-max normalized against
fixed schema bounds so train and test sets share one map.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import RandomSource, Sample

HEADER = ("ID", "CHD", "ORIGIN", "EDUCATE", "TOBACCO", "ALCOHOL", "SBP", "DBP", "TC", "LVH")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str  # "categorical" or "continuous"
    low: float
    high: float

    @property
    def levels(self) -> int:
        return int(self.high) + 1 if self.kind == "categorical" else 0

    def normalize(self, v: float) -> float:
        return (v - self.low) / (self.high - self.low)

    def denormalize(self, u: float) -> float:
        return self.low + u * (self.high - self.low)


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]

    def __post_init__(self):
        if len(self.features) != 8:
            raise DatasetError("schema must have exactly 8 features")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def with_bounds(self, **bounds: tuple[float, float]) -> "FeatureSchema":
        feats = []
        for f in self.features:
            if f.name in bounds:
                if f.kind != "continuous":
                    raise DatasetError(f"{f.name} is categorical; its levels are fixed")
                lo, hi = bounds[f.name]
                f = Feature(f.name, f.kind, float(lo), float(hi))
            feats.append(f)
        return FeatureSchema(tuple(feats))


CHD_SCHEMA = FeatureSchema((
    Feature("ORIGIN", "categorical", 0, 1),
    Feature("EDUCATE", "categorical", 0, 3),
    Feature("TOBACCO", "categorical", 0, 4),
    Feature("ALCOHOL", "continuous", 0.0, 300.0),
    Feature("SBP", "continuous", 80.0, 260.0),
    Feature("DBP", "continuous", 50.0, 150.0),
    Feature("TC", "continuous", 100.0, 500.0),
    Feature("LVH", "categorical", 0, 1),
))

# Population moments used to standardize the risk factors in the label model.
_RISK_MOMENTS = {
    "SBP": (135.0, 22.0),
    "DBP": (84.0, 12.0),
    "TC": (235.0, 45.0),
    "TOBACCO": (1.8, 1.5),
    "LVH": (0.05, 0.22),
}

DEFAULT_COEFFICIENTS = {"SBP": 1.0, "DBP": 0.5, "TC": 0.8, "TOBACCO": 0.7, "LVH": 0.9}


@dataclass(frozen=True)
class DatasetSpec:
    n_chd: int
    n_non_chd: int
    coefficients: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_COEFFICIENTS))
    intercept: float = -2.4
    noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_chd < 0 or self.n_non_chd < 0:
            raise DatasetError("case counts must be nonnegative")
        if not 0 <= self.noise < 0.5:
            raise DatasetError("noise rate must lie in [0, 0.5)")
        unknown = set(self.coefficients) - set(_RISK_MOMENTS)
        if unknown:
            raise DatasetError(f"no risk model for {sorted(unknown)}")


def parse_dataset_spec(text: str) -> DatasetSpec:
    """Read ``key=value`` lines; coefficients are given as ``coef_<FEATURE>``."""
    values: dict = {}
    coefs = dict(DEFAULT_COEFFICIENTS)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DatasetError(f"line {lineno}: expected key=value")
        key, raw = (p.strip() for p in line.split("=", 1))
        try:
            if key.startswith("coef_"):
                coefs[key[5:]] = float(raw)
            elif key in ("n_chd", "n_non_chd", "seed"):
                values[key] = int(raw)
            elif key in ("intercept", "noise"):
                values[key] = float(raw)
            else:
                raise DatasetError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, DatasetError):
                raise
            raise DatasetError(f"line {lineno}: cannot parse {raw!r}") from None
    for req in ("n_chd", "n_non_chd"):
        if req not in values:
            raise DatasetError(f"missing required key {req!r}")
    return DatasetSpec(coefficients=coefs, **values)


def _draw_raw(rng: RandomSource, size: int) -> np.ndarray:
    g = rng.generator
    origin = (g.random(size) < 0.25).astype(float)
    educate = g.choice(4, size=size, p=[0.3, 0.3, 0.25, 0.15]).astype(float)
    tobacco = g.choice(5, size=size, p=[0.3, 0.2, 0.1, 0.2, 0.2]).astype(float)
    drinks = g.random(size) < 0.6
    alcohol = np.where(drinks, np.round(g.exponential(20.0, size), 1), 0.0)
    sbp = np.round(g.normal(135.0, 22.0, size))
    dbp = np.round(g.normal(84.0, 12.0, size))
    tc = np.round(g.normal(235.0, 45.0, size))
    lvh = (g.random(size) < 0.05).astype(float)
    raw = np.column_stack([origin, educate, tobacco, alcohol, sbp, dbp, tc, lvh])
    lo = np.array([f.low for f in CHD_SCHEMA.features])
    hi = np.array([f.high for f in CHD_SCHEMA.features])
    return np.clip(raw, lo, hi)


def risk_probability(raw: np.ndarray, spec: DatasetSpec) -> np.ndarray:
    """Logistic CHD risk of raw (unnormalized) records under the DatasetSpec label model."""
    raw = np.atleast_2d(raw)
    z = np.full(raw.shape[0], spec.intercept)
    for name, coef in spec.coefficients.items():
        mean, sd = _RISK_MOMENTS[name]
        z += coef * (raw[:, CHD_SCHEMA.index(name)] - mean) / sd
    return 1.0 / (1.0 + np.exp(-z))


def generate_raw(spec: DatasetSpec) -> tuple[np.ndarray, np.ndarray]:
    """Raw feature matrix and labels with exactly the requested class counts."""
    rng = RandomSource(spec.seed)
    want = {1: spec.n_chd, 0: spec.n_non_chd}
    rows: list[np.ndarray] = []
    labels: list[int] = []
    have = {0: 0, 1: 0}
    batch = 4096
    while have[0] < want[0] or have[1] < want[1]:
        raw = _draw_raw(rng, batch)
        label = (rng.random(batch) < risk_probability(raw, spec)).astype(int)
        flip = rng.random(batch) < spec.noise
        label = np.where(flip, 1 - label, label)
        for row, y in zip(raw, label):
            if have[y] < want[y]:
                rows.append(row)
                labels.append(int(y))
                have[y] += 1
    X = np.array(rows).reshape(-1, 8)
    return X, np.array(labels, dtype=np.int64)


def normalize_array(raw: np.ndarray, schema: FeatureSchema = CHD_SCHEMA, ids: Sequence[str] | None = None) -> np.ndarray:
    raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
    out = np.empty_like(raw)
    for i, f in enumerate(schema.features):
        col = raw[:, i]
        bad = np.flatnonzero((col < f.low) | (col > f.high) | ~np.isfinite(col))
        if bad.size:
            row = bad[0]
            where = ids[row] if ids is not None else row
            raise DatasetError(f"row {where}: {f.name}={col[row]!r} outside [{f.low}, {f.high}]")
        if f.kind == "categorical" and np.any(col != np.round(col)):
            row = int(np.flatnonzero(col != np.round(col))[0])
            where = ids[row] if ids is not None else row
            raise DatasetError(f"row {where}: {f.name}={col[row]!r} is not a level")
        out[:, i] = (col - f.low) / (f.high - f.low)
    return out


def denormalize_array(norm: np.ndarray, schema: FeatureSchema = CHD_SCHEMA) -> np.ndarray:
    norm = np.atleast_2d(np.asarray(norm, dtype=np.float64))
    lo = np.array([f.low for f in schema.features])
    hi = np.array([f.high for f in schema.features])
    return lo + norm * (hi - lo)


def normalize(
    raw: Sequence[Sample] | np.ndarray,
    schema: FeatureSchema = CHD_SCHEMA,
    labels: Sequence[int] | None = None,
    ids: Sequence[str] | None = None,
) -> list[Sample]:
    """Min-max normalize raw records with the schema's fixed bounds.

    ``raw`` is either a sequence of samples holding raw values or a raw matrix
    (then ``labels`` is required).
    """
    if isinstance(raw, np.ndarray):
        if labels is None:
            raise DatasetError("labels are required when normalizing a raw matrix")
        ids = list(ids) if ids is not None else [str(i + 1) for i in range(raw.shape[0])]
        mat = raw
    else:
        labels = [s.label for s in raw]
        ids = [s.id for s in raw]
        mat = np.array([s.features for s in raw]).reshape(-1, 8)
    norm = normalize_array(mat, schema, ids)
    return [Sample(x, int(y), i) for x, y, i in zip(norm, labels, ids)]


def generate(spec: DatasetSpec, schema: FeatureSchema = CHD_SCHEMA) -> list[Sample]:
    raw, labels = generate_raw(spec)
    return normalize(raw, schema, labels=labels)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(ds: Iterable[Sample], path: str | Path | None = None) -> str:
    """Write samples with exact float round-tripping; returns the CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for s in ds:
        w.writerow([s.id, s.label, *(_fmt(v) for v in s.features)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def parse_csv(text: str, raw: bool = False, schema: FeatureSchema = CHD_SCHEMA) -> list[Sample]:
    """Parse CSV text. With ``raw=True`` values are normalized via the schema."""
    lines = text.splitlines()
    if not lines:
        raise DatasetError("line 1: missing header")
    header = tuple(h.strip() for h in lines[0].split(","))
    if header != HEADER:
        raise DatasetError(f"line 1: expected header {','.join(HEADER)}")
    samples: list[Sample] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        cols = line.split(",")
        if len(cols) != len(HEADER):
            raise DatasetError(f"line {lineno}: expected {len(HEADER)} columns, got {len(cols)}")
        sid = cols[0].strip()
        if sid in seen:
            raise DatasetError(f"line {lineno}: duplicate ID {sid!r} (first on line {seen[sid]})")
        seen[sid] = lineno
        try:
            label = int(cols[1])
            values = [float(c) for c in cols[2:]]
        except ValueError:
            raise DatasetError(f"line {lineno}: non-numeric value") from None
        if label not in (0, 1):
            raise DatasetError(f"line {lineno}: CHD must be 0 or 1")
        if not all(math.isfinite(v) for v in values):
            raise DatasetError(f"line {lineno}: non-finite value")
        if raw:
            try:
                values = normalize_array(np.array([values]), schema)[0]
            except DatasetError as exc:
                raise DatasetError(f"line {lineno}: {exc}") from None
        elif any(v < 0.0 or v > 1.0 for v in values):
            raise DatasetError(f"line {lineno}: normalized value outside [0, 1]")
        samples.append(Sample(values, label, sid))
    return samples


def read_csv(path: str | Path, raw: bool = False, schema: FeatureSchema = CHD_SCHEMA) -> list[Sample]:
    return parse_csv(Path(path).read_text(encoding="utf-8"), raw=raw, schema=schema)


def desk_train_a(seed: int = 0, noise: float = 0.05) -> DatasetSpec:
    """Balanced 650 + 650 training set (the 1:1 design at one tenth scale)."""
    return DatasetSpec(650, 650, noise=noise, seed=seed)


def desk_ratio(ratio: int, seed: int = 0, n_chd: int = 650, noise: float = 0.05) -> DatasetSpec:
    """``n_chd`` cases against ``ratio`` times as many non-cases."""
    return DatasetSpec(n_chd, ratio * n_chd, noise=noise, seed=seed)
