"""Immunological memory: clustered, trained antibodies with memory-first retrieval.

A memory cell responds to a sample when the sample, rescaled into the range
of the cell's weights, lies within ``mu_theta`` of those weights.  Cells are
grouped into categories; each category carries the threshold its members are
trained towards.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np
from numba import njit

from .affinity import affinity, fires, weighted_sums
from .core import Antibody, ExperimentConfig, Sample, SampleSet, as_sample_set

if TYPE_CHECKING:
    from .recsa import ElitePools

log = logging.getLogger(__name__)


class MemoryFullError(RuntimeError):
    """Raised when a promotion is attempted on a store at capacity."""


@dataclass(frozen=True)
class MemoryCell:
    antibody: Antibody
    category: int
    theta_q: float
    trained: bool = True
    cell_id: int = 0


@dataclass
class MemoryStore:
    capacity: int
    cells: list[MemoryCell] = field(default_factory=list)
    categories: dict[int, list[int]] = field(default_factory=dict)
    _next_category: int = 0

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def full(self) -> bool:
        return len(self.cells) >= self.capacity

    def representative(self, category: int) -> MemoryCell:
        return self.cells[self.categories[category][0]]

    def category_threshold(self, category: int) -> float:
        return self.representative(category).theta_q

    def add(self, antibody: Antibody, category: int | None, theta_q: float | None = None) -> MemoryCell:
        """Insert a cell; ``category=None`` opens a new category."""
        if self.full:
            raise MemoryFullError(f"memory store at capacity ({self.capacity})")
        if category is None:
            category = self._next_category
            self._next_category += 1
            self.categories[category] = []
            if theta_q is None:
                theta_q = antibody.threshold
        elif theta_q is None:
            theta_q = self.category_threshold(category)
        cell = MemoryCell(antibody, category, float(theta_q), True, len(self.cells))
        self.categories[category].append(len(self.cells))
        self.cells.append(cell)
        return cell

    def weights_matrix(self) -> np.ndarray:
        if not self.cells:
            return np.zeros((0, 0))
        return np.stack([c.antibody.weights for c in self.cells])

    def snapshot(self) -> str:
        """One line per cell: category, theta_q, theta, then the k weights."""
        lines = []
        for c in self.cells:
            ab = c.antibody
            fields = [str(c.category), repr(c.theta_q), repr(ab.threshold), *(repr(float(w)) for w in ab.weights)]
            lines.append(" ".join(fields))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_snapshot(cls, text: str, capacity: int) -> "MemoryStore":
        store = cls(capacity)
        for line in text.splitlines():
            if not line.strip():
                continue
            parts = line.split()
            q, theta_q, theta = int(parts[0]), float(parts[1]), float(parts[2])
            ab = Antibody([float(p) for p in parts[3:]], theta)
            if q not in store.categories:
                store.categories[q] = []
                store._next_category = max(store._next_category, q + 1)
            cell = MemoryCell(ab, q, theta_q, True, len(store.cells))
            store.categories[q].append(len(store.cells))
            store.cells.append(cell)
        return store


# -- scaled response ---------------------------------------------------------

def scale_to_antibody(d: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Rescale ``d`` by ``h_j / d_j`` where ``d_j`` is its smallest usable element.

    Usable means ``d_j != 0`` and ``h_j != 0``; "smallest" is by magnitude.
    Elements where either vector is zero are copied unscaled.  With no usable
    index the input is returned unchanged.
    """
    d = np.asarray(d, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if d.shape != h.shape:
        raise ValueError(f"dimension mismatch: {d.shape} vs {h.shape}")
    ok = (d != 0) & (h != 0)
    out = d.copy()
    if not ok.any():
        return out
    cand = np.flatnonzero(ok)
    j = cand[np.argmin(np.abs(d[cand]))]
    out[ok] = d[ok] * (h[j] / d[j])
    return out


def scale_many(X: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Row-wise :func:`scale_to_antibody` of ``X`` against one weight vector."""
    X = np.asarray(X, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    ok = (X != 0) & (h != 0)[None, :]
    mag = np.where(ok, np.abs(X), np.inf)
    j = np.argmin(mag, axis=1)
    rows = np.arange(X.shape[0])
    has = ok[rows, j]
    dj = np.where(has, X[rows, j], 1.0)
    factor = np.where(has, h[j] / dj, 1.0)
    return np.where(ok, X * factor[:, None], X)


def scaled_distance(d: np.ndarray, h: np.ndarray) -> float:
    return float(np.linalg.norm(scale_to_antibody(d, h) - np.asarray(h, dtype=np.float64)))


def response_radius(d_scaled: np.ndarray, mu_theta: float, mode: str = "fixed"):
    """The response radius: ``mu_theta``, or the sum of the scaled sample in "sum" mode."""
    if mode == "sum":
        return np.sum(d_scaled, axis=-1)
    return mu_theta


def responds(cell: MemoryCell, s: Sample | np.ndarray, mu_theta: float, mode: str = "fixed") -> bool:
    d = s.features if isinstance(s, Sample) else np.asarray(s, dtype=np.float64)
    h = cell.antibody.weights
    scaled = scale_to_antibody(d, h)
    return bool(np.linalg.norm(scaled - h) < response_radius(scaled, mu_theta, mode))


def distance_matrix(store: MemoryStore, X: np.ndarray, mu_theta: float, mode: str = "fixed"):
    """Scaled distances ``(N, cells)`` and a mask of which cells respond."""
    N = X.shape[0]
    dist = np.empty((N, len(store.cells)))
    ok = np.empty((N, len(store.cells)), dtype=bool)
    for c, cell in enumerate(store.cells):
        h = cell.antibody.weights
        scaled = scale_many(X, h)
        dist[:, c] = np.linalg.norm(scaled - h[None, :], axis=1)
        ok[:, c] = dist[:, c] < response_radius(scaled, mu_theta, mode)
    return dist, ok


def retrieve_index(store: MemoryStore, X: np.ndarray, mu_theta: float, mode: str = "fixed") -> np.ndarray:
    """Index of the nearest responding cell per row of ``X``, or -1."""
    if not store.cells:
        return np.full(X.shape[0], -1, dtype=np.int64)
    dist, ok = distance_matrix(store, X, mu_theta, mode)
    masked = np.where(ok, dist, np.inf)
    # argmin takes the first minimum, i.e. the earliest inserted cell on ties
    idx = np.argmin(masked, axis=1)
    return np.where(ok.any(axis=1), idx, -1)


def retrieve(store: MemoryStore, s: Sample, mu_theta: float, mode: str = "fixed") -> MemoryCell | None:
    idx = int(retrieve_index(store, s.features[None, :], mu_theta, mode)[0])
    return None if idx < 0 else store.cells[idx]


def predict_with_memory(
    store: MemoryStore | None,
    ds: Sequence[Sample] | SampleSet,
    fallback: Antibody,
    E_sim: float,
    mu_theta: float,
    mode: str = "fixed",
) -> np.ndarray:
    """Memory-first classification of every sample, falling back to ``fallback``."""
    data = as_sample_set(ds)
    out = fires(weighted_sums(fallback.weights, data.X), fallback.threshold, E_sim)
    if store is None or not store.cells or len(data) == 0:
        return out
    idx = retrieve_index(store, data.X, mu_theta, mode)
    for c in np.unique(idx[idx >= 0]):
        rows = idx == c
        ab = store.cells[c].antibody
        out[rows] = fires(weighted_sums(ab.weights, data.X[rows]), ab.threshold, E_sim)
    return out


def classify_with_memory(store, s: Sample, fallback: Antibody, E_sim: float, mu_theta: float, mode: str = "fixed") -> int:
    cell = retrieve(store, s, mu_theta, mode) if store is not None else None
    ab = fallback if cell is None else cell.antibody
    return int(abs(float(weighted_sums(ab.weights, s.features[None, :])[0]) - ab.threshold) >= E_sim)


# -- clustering ----------------------------------------------------------------

def medoid(crowd: Sequence[Antibody]) -> Antibody:
    """Crowd member with the least total Euclidean distance to the others.

    Ties go to the lexicographically smallest paratope, so the result does
    not depend on crowd order.
    """
    if not crowd:
        raise ValueError("crowd must be nonempty")
    P = np.stack([ab.weights for ab in crowd])
    totals = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2).sum(axis=1)
    best = np.flatnonzero(totals == totals.min())
    return min((crowd[i] for i in best), key=lambda ab: tuple(ab.paratope()))


def find_category(store: MemoryStore, ab: Antibody, mu_theta: float, mode: str = "fixed") -> int | None:
    """First category whose representative responds to ``ab``'s weights."""
    for q, members in store.categories.items():
        if responds(store.cells[members[0]], ab.weights, mu_theta, mode):
            return q
    return None


def promote_to_memory(crowd: Sequence[Antibody], store: MemoryStore, mu_theta: float, mode: str = "fixed") -> MemoryCell:
    """Insert the crowd's medoid into its category (or a new one).

    Raises :class:`MemoryFullError` when the store is at capacity.
    """
    if not crowd:
        raise ValueError("crowd must be nonempty")
    if store.full:
        raise MemoryFullError(f"memory store at capacity ({store.capacity})")
    centre = medoid(crowd)
    return store.add(centre, find_category(store, centre, mu_theta, mode))


# -- training ----------------------------------------------------------------

@njit(cache=True)
def _delta_rule_kernel(w, X, target, eta, max_iter, e_min, errors):
    k = w.shape[0]
    passes = 0
    for _ in range(max_iter):
        worst = 0.0
        for r in range(X.shape[0]):
            o = 0.0
            for i in range(k):
                o += w[i] * X[r, i]
            e = 0.5 * (target - o) ** 2
            if e > worst:
                worst = e
        if worst < e_min:
            errors[passes] = worst
            return passes + 1
        worst = 0.0
        for r in range(X.shape[0]):
            o = 0.0
            for i in range(k):
                o += w[i] * X[r, i]
            delta = target - o
            e = 0.5 * delta * delta
            if e > worst:
                worst = e
            step = eta * delta
            for i in range(k):
                w[i] += step * X[r, i]
        errors[passes] = worst
        passes += 1
    return passes


def delta_rule(
    weights: np.ndarray,
    X: np.ndarray,
    target: float,
    eta: float,
    max_iter: int,
    e_min: float,
) -> tuple[np.ndarray, list[float]]:
    """Online delta rule driving ``w . x`` towards ``target`` for every row.

    Returns the final weights and, per pass, the largest error
    ``0.5 * (target - O)^2`` seen during the pass.  Stops once a pass
    starts with every error below ``e_min`` (that check is the last entry)
    or after ``max_iter`` updating passes.
    """
    w = np.array(weights, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    errors = np.zeros(max_iter + 1)
    used = _delta_rule_kernel(w, X, float(target), float(eta), int(max_iter), float(e_min), errors)
    return w, errors[:used].tolist()


def train_memory_cell(
    ab: Antibody,
    T_ro: Sequence[Sample] | SampleSet,
    theta_q: float,
    eta: float,
    T_IM: int,
    E_min: float,
) -> Antibody:
    """Delta-rule training of ``ab`` on its misclassified cases towards ``theta_q``."""
    data = as_sample_set(T_ro)
    if len(data) == 0:
        raise ValueError("T_ro must be nonempty")
    if not 0.1 <= eta <= 1.0:
        raise ValueError("eta must lie in [0.1, 1.0]")
    w, _ = delta_rule(ab.weights, data.X, theta_q, eta, T_IM, E_min)
    return Antibody(w, ab.threshold)


def _correct_count(store, data, fallback, cfg) -> int:
    pred = predict_with_memory(store, data, fallback, cfg.E_sim, cfg.mu_theta, cfg.mu_theta_mode)
    return int((pred == data.y).sum())


def improves(store: MemoryStore, candidate: Antibody, data: SampleSet, fallback: Antibody, cfg: ExperimentConfig) -> bool:
    """Whether inserting ``candidate`` raises the memory-first correct count on ``data``."""
    if store.full:
        return False
    base = _correct_count(store, data, fallback, cfg)
    trial = MemoryStore(store.capacity, list(store.cells), {q: list(m) for q, m in store.categories.items()}, store._next_category)
    trial.add(candidate, find_category(trial, candidate, cfg.mu_theta, cfg.mu_theta_mode))
    return _correct_count(trial, data, fallback, cfg) > base


def stall_hook(
    pools: "ElitePools",
    store: MemoryStore,
    cfg: ExperimentConfig,
    data: SampleSet,
) -> MemoryStore:
    """Train and memorize every elite that has not improved for ``tau`` generations.

    Each stalled elite is trained on the cases it misclassifies towards the
    threshold of the category it falls in, and its stall counter restarts.
    The trained antibody replaces the elite when it is no worse.  The medoid
    of the crowd of similar antibodies trained this generation is recorded
    only if it raises the memory-first correct count on ``data``.
    """
    from .affinity import evaluate

    mode = cfg.mu_theta_mode
    trained_now: list[Antibody] = []
    for entry in pools.entries:
        if entry.stall < cfg.tau:
            continue
        entry.stall = 0
        report = affinity(entry.elite, data, cfg.E_sim)
        if not report.misclassified_index:
            continue
        T_ro = data.subset(report.misclassified_index)
        q = find_category(store, entry.elite, cfg.mu_theta, mode)
        theta_q = entry.elite.threshold if q is None else store.category_threshold(q)
        trained = evaluate(
            train_memory_cell(entry.elite, T_ro, theta_q, cfg.eta, cfg.T_IM, cfg.E_min),
            data,
            cfg.E_sim,
        )
        if trained.affinity >= entry.elite.affinity:
            entry.elite = trained
        crowd = [trained] + [
            other for other in trained_now
            if np.linalg.norm(other.weights - trained.weights) < cfg.mu_theta
        ]
        trained_now.append(trained)
        if len(crowd) < cfg.min_crowd:
            continue
        if store.full:
            log.debug("memory full at generation %d; promotion skipped", pools.generation)
            continue
        if improves(store, medoid(crowd), data, pools.best, cfg):
            promote_to_memory(crowd, store, cfg.mu_theta, mode)
    return store
