"""Antibody response, label agreement and dataset affinity.

An antibody fires (outputs 1) on a sample when its weighted input lies at
least ``E_sim`` away from its threshold.  Affinity is the number of training
samples whose label the antibody reproduces.

All weighted sums accumulate features in ascending index order so results are
bit-identical between the scalar and batched paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .core import Antibody, Sample, SampleSet, as_sample_set


@dataclass(frozen=True)
class AffinityReport:
    affinity: int
    misclassified_ids: tuple[str, ...]
    # positions of the misclassified samples in the evaluated set
    misclassified_index: tuple[int, ...] = ()


def weighted_sums(weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``O = sum_i w_i x_i`` for every (antibody, sample) pair.

    ``weights`` is ``(k,)`` or ``(a, k)``; ``X`` is ``(N, k)``.  Returns ``(N,)``
    or ``(a, N)`` respectively.
    """
    weights = np.asarray(weights, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    k = X.shape[1]
    if weights.shape[-1] != k:
        raise ValueError(f"dimension mismatch: {weights.shape[-1]} weights vs {k} features")
    if weights.ndim == 1:
        out = np.zeros(X.shape[0])
        for i in range(k):
            out += weights[i] * X[:, i]
        return out
    out = np.zeros((weights.shape[0], X.shape[0]))
    for i in range(k):
        out += np.multiply.outer(weights[:, i], X[:, i])
    return out


def raw_output(ab: Antibody, s: Sample) -> float:
    if ab.k != s.features.shape[0]:
        raise ValueError(f"dimension mismatch: {ab.k} weights vs {s.features.shape[0]} features")
    return float(weighted_sums(ab.weights, s.features[None, :])[0])


def fires(outputs: np.ndarray, thresholds, E_sim: float) -> np.ndarray:
    """Vectorized response: 1 where ``|O - theta| >= E_sim``."""
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if thresholds.ndim == 1 and np.ndim(outputs) == 2:
        thresholds = thresholds[:, None]
    return (np.abs(outputs - thresholds) >= E_sim).astype(np.int64)


def classify(ab: Antibody, s: Sample, E_sim: float) -> int:
    if E_sim < 0:
        raise ValueError("E_sim must be nonnegative")
    return int(abs(raw_output(ab, s) - ab.threshold) >= E_sim)


def matches_label(ab: Antibody, s: Sample, E_sim: float) -> int:
    return int(classify(ab, s, E_sim) == s.label)


def predict(ab: Antibody, ds: Sequence[Sample] | SampleSet, E_sim: float) -> np.ndarray:
    data = as_sample_set(ds)
    return fires(weighted_sums(ab.weights, data.X), ab.threshold, E_sim)


def affinity(ab: Antibody, ds: Sequence[Sample] | SampleSet, E_sim: float) -> AffinityReport:
    data = as_sample_set(ds)
    if len(data) == 0:
        return AffinityReport(0, ())
    hits = predict(ab, data, E_sim) == data.y
    miss = np.flatnonzero(~hits)
    return AffinityReport(
        int(hits.sum()),
        tuple(data.ids[i] for i in miss),
        tuple(int(i) for i in miss),
    )


@njit(cache=True)
def _count_matches(W, thresholds, X, y, E_sim):
    A, k = W.shape
    out = np.zeros(A, np.int64)
    for a in range(A):
        hits = 0
        for r in range(X.shape[0]):
            o = 0.0
            for i in range(k):
                o += W[a, i] * X[r, i]
            fired = 1 if abs(o - thresholds[a]) >= E_sim else 0
            if fired == y[r]:
                hits += 1
        out[a] = hits
    return out


def affinities(weights: np.ndarray, thresholds: np.ndarray, data: SampleSet, E_sim: float) -> np.ndarray:
    """Affinity of a batch of antibodies given as stacked weights and thresholds."""
    W = np.ascontiguousarray(weights, dtype=np.float64)
    if W.shape[1] != data.X.shape[1]:
        raise ValueError(f"dimension mismatch: {W.shape[1]} weights vs {data.X.shape[1]} features")
    return _count_matches(
        W,
        np.ascontiguousarray(thresholds, dtype=np.float64),
        np.ascontiguousarray(data.X),
        np.ascontiguousarray(data.y, dtype=np.int64),
        float(E_sim),
    )


def evaluate(ab: Antibody, data: SampleSet, E_sim: float) -> Antibody:
    """Return ``ab`` with its affinity cached against ``data``."""
    return ab.with_affinity(int(affinities(ab.weights[None, :], np.array([ab.threshold]), data, E_sim)[0]))
