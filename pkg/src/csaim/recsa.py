"""Clonal selection with receptor editing (RECSA).

Elites live in ``n`` pools ordered best-first.  Each generation every pool is
cloned in proportion to its rank, each clone undergoes either hypermutation
or receptor editing, the best clone may replace the elite, and the worst
pools are periodically reseeded with random antibodies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .affinity import affinities, evaluate
from .core import (
    Antibody,
    ExperimentConfig,
    RandomSource,
    Sample,
    SampleSet,
    as_sample_set,
    round_half_away,
    validate_config,
)


@dataclass
class PoolEntry:
    elite: Antibody
    clone_quota: int
    # generations since the elite's affinity last improved
    stall: int = 0


@dataclass
class ElitePools:
    entries: list[PoolEntry]
    generation: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def best(self) -> Antibody:
        return self.entries[0].elite

    def elites(self) -> list[Antibody]:
        return [e.elite for e in self.entries]

    def affinities(self) -> list[int]:
        return [e.elite.affinity for e in self.entries]

    def resort(self, Q: int) -> None:
        """Order best-affinity-first (stable) and reassign clone quotas."""
        self.entries.sort(key=lambda e: -e.elite.affinity)
        for i, e in enumerate(self.entries, 1):
            e.clone_quota = clone_quota(i, self.n, Q)


@dataclass(frozen=True)
class GenerationTrace:
    generation: int
    best_affinity: int
    correct_ratio: float
    memory_cell_count: int


def init_population(m: int, k: int, rng: RandomSource) -> list[Antibody]:
    if m < 1 or k < 1:
        raise ValueError("m and k must be positive")
    out = []
    for _ in range(m):
        w = rng.uniform(-1.0, 1.0, k)
        theta = rng.uniform(-1.0, 1.0)
        out.append(Antibody(w, theta))
    return out


def _score(pop: Sequence[Antibody], data: SampleSet, E_sim: float) -> list[Antibody]:
    todo = [i for i, ab in enumerate(pop) if ab.affinity is None]
    out = list(pop)
    if todo:
        W = np.stack([pop[i].weights for i in todo])
        th = np.array([pop[i].threshold for i in todo])
        for i, a in zip(todo, affinities(W, th, data, E_sim)):
            out[i] = pop[i].with_affinity(int(a))
    return out


def select_elites(pop: Sequence[Antibody], n: int, ds, E_sim: float, Q: int = 1) -> ElitePools:
    """The ``n`` highest-affinity antibodies, best first, ties by position in ``pop``."""
    if len(pop) < n:
        raise ValueError(f"population of {len(pop)} is smaller than n={n}")
    scored = _score(pop, as_sample_set(ds), E_sim)
    order = sorted(range(len(scored)), key=lambda i: -scored[i].affinity)[:n]
    entries = [PoolEntry(scored[i], clone_quota(r, n, Q)) for r, i in enumerate(order, 1)]
    return ElitePools(entries)


def clone_quota(i: int, n: int, Q: float) -> int:
    """Clones granted to pool ``i`` (1-based): ``round((n - i) / n * Q)``."""
    if not 1 <= i <= n:
        raise ValueError(f"pool index {i} outside 1..{n}")
    return round_half_away((n - i) * Q / n)


def mutation_rates(D: float, a: float) -> tuple[float, float]:
    """Hypermutation and receptor-editing probabilities ``(a/D, (D-a)/D)``.

    A parent with zero affinity gets even odds.
    """
    if D == 0:
        return 0.5, 0.5
    if D < 0 or not 0 <= a <= D:
        raise ValueError(f"need D > 0 and 0 <= a <= D, got D={D}, a={a}")
    return a / D, (D - a) / D


def hypermutate(
    ab: Antibody,
    gamma_w: float,
    gamma_theta: float,
    rng: RandomSource,
    theta_low: float | None = None,
) -> Antibody:
    """Perturb one random weight by U(-gamma_w, gamma_w) and theta by U(low, gamma_theta).

    ``theta_low`` defaults to ``-gamma_theta``.
    """
    i = rng.choice(ab.k)
    w = ab.weights.copy()
    w[i] += rng.uniform(-gamma_w, gamma_w)
    low = -gamma_theta if theta_low is None else theta_low
    theta = ab.threshold + rng.uniform(low, gamma_theta)
    return Antibody(w, theta)


def crossover_points(k: int, rng: RandomSource) -> tuple[int, int]:
    """Uniform 1-based cut points ``1 <= p < q <= k``."""
    if k < 2:
        return 1, 1
    p, q = sorted(int(v) for v in rng.generator.choice(k, size=2, replace=False))
    return p + 1, q + 1


def receptor_edit(ab: Antibody, partner: Antibody, rng: RandomSource, points: tuple[int, int] | None = None) -> Antibody:
    """Copy ``partner``'s weights over the segment ``[p, q]`` (1-based, inclusive)."""
    if ab.k != partner.k:
        raise ValueError(f"dimension mismatch: {ab.k} vs {partner.k}")
    p, q = crossover_points(ab.k, rng) if points is None else points
    w = ab.weights.copy()
    w[p - 1:q] = partner.weights[p - 1:q]
    return Antibody(w, ab.threshold)


def best_clone(clones: Sequence[Antibody], ds, E_sim: float) -> Antibody:
    if not clones:
        raise ValueError("clones must be nonempty")
    scored = _score(clones, as_sample_set(ds), E_sim)
    best = 0
    for i, c in enumerate(scored):
        if c.affinity > scored[best].affinity:
            best = i
    return scored[best]


def update_elite(i: int, elite: Antibody, candidate: Antibody, alpha: float, rng: RandomSource) -> Antibody:
    """Replace rule for pool ``i``: always on improvement, never for pool 1 otherwise,
    else with probability ``exp((D(candidate) - D(elite)) / alpha)``."""
    if elite.affinity < candidate.affinity:
        return candidate
    if i == 1:
        return elite
    p = math.exp((candidate.affinity - elite.affinity) / alpha)
    return candidate if rng.random() < p else elite


def diversify(
    pools: ElitePools,
    beta: float,
    t: int,
    generation: int,
    rng: RandomSource,
    data: SampleSet | None = None,
    E_sim: float = 0.05,
) -> ElitePools:
    """Every ``t`` generations reseed the ``round(beta * n)`` worst pools."""
    c = round_half_away(beta * pools.n)
    if c >= pools.n:
        raise ValueError(f"cannot replace {c} of {pools.n} pools")
    if c == 0 or generation % t != 0:
        return pools
    k = pools.best.k
    fresh = init_population(c, k, rng)
    if data is not None:
        fresh = _score(fresh, data, E_sim)
    for entry, ab in zip(pools.entries[-c:], fresh):
        entry.elite = ab
        entry.stall = 0
    return pools


def _mutate_pool(entry: PoolEntry, cfg: ExperimentConfig, rng: RandomSource) -> tuple[np.ndarray, np.ndarray]:
    """Clone the elite and send each clone through HM or RE.

    Returns the clones as stacked weights ``(quota, k)`` and thresholds.
    Receptor-editing partners are drawn from the pool's clones after the
    hypermutation pass.
    """
    elite = entry.elite
    q = entry.clone_quota
    k = elite.k
    D = elite.affinity or 0
    p_hm, _ = mutation_rates(D, cfg.a_fraction * D)
    theta_low = -1.0 if cfg.theta_delta_mode == "literal" else -cfg.gamma_theta

    W = np.tile(elite.weights, (q, 1))
    th = np.full(q, elite.threshold)
    hm = rng.random(q) < p_hm
    rows = np.flatnonzero(hm)
    if rows.size:
        W[rows, rng.integers(0, k, rows.size)] += rng.uniform(-cfg.gamma_w, cfg.gamma_w, rows.size)
        th[rows] += rng.uniform(theta_low, cfg.gamma_theta, rows.size)
    re_rows = np.flatnonzero(~hm)
    if re_rows.size and q > 1 and k > 1:
        donors = W.copy()
        other = rng.integers(0, q - 1, re_rows.size)
        other += other >= re_rows
        a = rng.integers(0, k, re_rows.size)
        b = rng.integers(0, k - 1, re_rows.size)
        b += b >= a
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        for j, o, p0, p1 in zip(re_rows, other, lo, hi):
            W[j, p0:p1 + 1] = donors[o, p0:p1 + 1]
    return W, th


StepHook = Callable[[ElitePools, np.ndarray], None]


@dataclass
class RunResult:
    best: Antibody
    traces: list[GenerationTrace] = field(default_factory=list)
    pools: ElitePools | None = None


def run(
    cfg: ExperimentConfig,
    ds: Sequence[Sample] | SampleSet,
    memory=None,
    on_generation: Callable[[GenerationTrace], None] | None = None,
) -> RunResult:
    """Evolve for ``cfg.G_max`` generations.

    With a :class:`~csaim.memory.MemoryStore` given as ``memory`` the stall
    hook trains and memorizes stagnant elites each generation, and the
    per-generation correct ratio uses memory-first classification.
    """
    from .memory import predict_with_memory, stall_hook

    validate_config(cfg)
    data = as_sample_set(ds)
    if len(data) == 0:
        raise ValueError("training set is empty")
    rng = RandomSource(cfg.seed)
    k = data.X.shape[1]

    pop = init_population(cfg.m, k, rng)
    pools = select_elites(pop, cfg.n, data, cfg.E_sim, cfg.Q)
    best = pools.best
    traces: list[GenerationTrace] = []

    for g in range(1, cfg.G_max + 1):
        pools.generation = g
        batches = [_mutate_pool(e, cfg, rng) if e.clone_quota else None for e in pools.entries]
        active = [b for b in batches if b is not None]
        scores = affinities(
            np.concatenate([b[0] for b in active]),
            np.concatenate([b[1] for b in active]),
            data,
            cfg.E_sim,
        )
        offset = 0
        for i, (entry, batch) in enumerate(zip(pools.entries, batches), 1):
            if batch is None:
                entry.stall += 1
                continue
            W, th = batch
            seg = scores[offset:offset + len(th)]
            offset += len(th)
            j = int(np.argmax(seg))
            candidate = Antibody(W[j], th[j], int(seg[j]))
            before = entry.elite.affinity
            entry.elite = update_elite(i, entry.elite, candidate, cfg.alpha, rng)
            entry.stall = 0 if entry.elite.affinity > before else entry.stall + 1
        pools.resort(cfg.Q)

        if memory is not None:
            stall_hook(pools, memory, cfg, data)
            pools.resort(cfg.Q)

        diversify(pools, cfg.beta, cfg.t, g, rng, data, cfg.E_sim)
        pools.resort(cfg.Q)

        if pools.best.affinity > best.affinity:
            best = pools.best
        pred = predict_with_memory(memory, data, best, cfg.E_sim, cfg.mu_theta, cfg.mu_theta_mode)
        trace = GenerationTrace(
            g,
            int(pools.best.affinity),
            float(np.mean(pred == data.y)),
            0 if memory is None else len(memory),
        )
        traces.append(trace)
        if on_generation is not None:
            on_generation(trace)
    return RunResult(best, traces, pools)
