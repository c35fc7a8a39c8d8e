"""Experiment runner: RECSA-only vs CSAIM runs, per-generation traces, comparison tables."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence

import numpy as np

from .core import Antibody, ExperimentConfig, Sample, SampleSet, as_sample_set, validate_config
from .dataset import read_csv
from .memory import MemoryStore, predict_with_memory
from .recsa import GenerationTrace, run

MODES = ("recsa", "csaim")

# Published correct ratios (train, test), quoted for reference only.
REFERENCE_RATIOS = {"recsa": (0.623, 0.587), "csaim": (0.996, 0.994)}

TRACE_HEADER = ("generation", "best_affinity", "correct_ratio", "memory_cells")


@dataclass
class RunReport:
    mode: str
    traces: list[GenerationTrace]
    train_correct_ratio: float
    test_correct_ratio: float
    wall_time: float
    config: dict
    seed: int
    best: Antibody | None = None
    memory: MemoryStore | None = field(default=None, repr=False)
    # correct ratio of the best antibody alone on the training set
    best_alone_train_ratio: float | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "train_correct_ratio": self.train_correct_ratio,
            "test_correct_ratio": self.test_correct_ratio,
            "best_alone_train_ratio": self.best_alone_train_ratio,
            "wall_time": self.wall_time,
            "config": self.config,
            "best": None if self.best is None else {
                "weights": [float(w) for w in self.best.weights],
                "threshold": self.best.threshold,
                "affinity": self.best.affinity,
            },
            "traces": [
                [t.generation, t.best_affinity, t.correct_ratio, t.memory_cell_count] for t in self.traces
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        best = d.get("best")
        return cls(
            mode=d["mode"],
            traces=[GenerationTrace(int(g), int(b), float(r), int(m)) for g, b, r, m in d["traces"]],
            train_correct_ratio=float(d["train_correct_ratio"]),
            test_correct_ratio=float(d["test_correct_ratio"]),
            wall_time=float(d["wall_time"]),
            config=dict(d["config"]),
            seed=int(d["seed"]),
            best=None if best is None else Antibody(best["weights"], best["threshold"], best["affinity"]),
            best_alone_train_ratio=d.get("best_alone_train_ratio"),
        )

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for t in self.traces:
            w.writerow([t.generation, t.best_affinity, repr(t.correct_ratio), t.memory_cell_count])
        return buf.getvalue()

    def save(self, out_dir: str | Path) -> Path:
        """Write ``trace.csv``, ``report.json`` and ``memory_snapshot.txt``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.csv").write_text(self.trace_csv(), encoding="utf-8", newline="")
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")
        snap = self.memory.snapshot() if self.memory is not None else ""
        (out / "memory_snapshot.txt").write_text(snap, encoding="utf-8", newline="")
        return out


def _load(ds) -> SampleSet:
    if isinstance(ds, (str, Path)):
        return as_sample_set(read_csv(ds))
    return as_sample_set(ds)


def correct_ratio(pred: np.ndarray, data: SampleSet) -> float:
    return float(np.mean(pred == data.y)) if len(data) else 0.0


def run_experiment(
    cfg: ExperimentConfig,
    train: str | Path | Sequence[Sample] | SampleSet,
    test: str | Path | Sequence[Sample] | SampleSet,
    mode: str,
    on_generation=None,
) -> RunReport:
    """One seeded run in ``mode`` ("recsa" or "csaim") with train/test correct ratios.

    ``train`` and ``test`` are CSV paths or in-memory samples. ``on_generation``
    receives each GenerationTrace as it is produced.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    validate_config(cfg)
    train_set, test_set = _load(train), _load(test)

    memory = MemoryStore(cfg.c_max_memory) if mode == "csaim" else None
    start = time.perf_counter()
    result = run(cfg, train_set, memory, on_generation)
    wall = time.perf_counter() - start

    args = (result.best, cfg.E_sim, cfg.mu_theta, cfg.mu_theta_mode)
    train_pred = predict_with_memory(memory, train_set, *args)
    test_pred = predict_with_memory(memory, test_set, *args)
    alone = predict_with_memory(None, train_set, *args)
    return RunReport(
        mode=mode,
        traces=result.traces,
        train_correct_ratio=correct_ratio(train_pred, train_set),
        test_correct_ratio=correct_ratio(test_pred, test_set),
        wall_time=wall,
        config=cfg.to_dict(),
        seed=cfg.seed,
        best=result.best,
        memory=memory,
        best_alone_train_ratio=correct_ratio(alone, train_set),
    )


def run_repeats(cfg: ExperimentConfig, train, test, seeds: Iterable[int], modes: Sequence[str] = MODES) -> list[RunReport]:
    train_set, test_set = _load(train), _load(test)
    return [
        run_experiment(cfg.replace(seed=seed), train_set, test_set, mode)
        for seed in seeds
        for mode in modes
    ]


@dataclass(frozen=True)
class ComparisonRow:
    mode: str
    runs: int
    train_mean: float
    test_mean: float
    wall_time_mean: float


@dataclass(frozen=True)
class Comparison:
    rows: tuple[ComparisonRow, ...]

    def row(self, mode: str) -> ComparisonRow:
        for r in self.rows:
            if r.mode == mode:
                return r
        raise KeyError(mode)

    def format(self) -> str:
        lines = [f"{'':8}{'Train':>10}{'Test':>10}{'runs':>6}{'time[s]':>10}"]
        for r in self.rows:
            lines.append(
                f"{r.mode.upper():8}{r.train_mean * 100:9.1f}%{r.test_mean * 100:9.1f}%{r.runs:6d}{r.wall_time_mean:10.2f}"
            )
        ref = ", ".join(
            f"{m.upper()} {tr * 100:.1f}%/{te * 100:.1f}%" for m, (tr, te) in REFERENCE_RATIOS.items()
        )
        lines.append("")
        lines.append(f"* published on the original CHD_DB Train_A/TEST (not comparable): {ref}")
        return "\n".join(lines) + "\n"


def compare(reports: Sequence[RunReport], repeats: int | None = None) -> Comparison:
    """Mean train/test correct ratio per mode over the first ``repeats`` reports of each."""
    if not reports:
        raise ValueError("no reports to compare")
    rows = []
    for mode in MODES:
        mine = sorted((r for r in reports if r.mode == mode), key=lambda r: r.seed)
        if repeats is not None:
            if len(mine) < repeats and mine:
                raise ValueError(f"mode {mode}: {len(mine)} reports, {repeats} requested")
            mine = mine[:repeats]
        if not mine:
            continue
        rows.append(ComparisonRow(
            mode,
            len(mine),
            fmean(r.train_correct_ratio for r in mine),
            fmean(r.test_correct_ratio for r in mine),
            fmean(r.wall_time for r in mine),
        ))
    return Comparison(tuple(rows))


def load_reports(root: str | Path) -> list[RunReport]:
    """Every ``report.json`` below ``root``."""
    return [RunReport.from_json(p.read_text(encoding="utf-8")) for p in sorted(Path(root).rglob("report.json"))]
