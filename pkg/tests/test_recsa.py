import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csaim.affinity import affinity
from csaim.core import Antibody, ExperimentConfig, RandomSource
from csaim.recsa import (
    ElitePools,
    PoolEntry,
    _mutate_pool,
    best_clone,
    clone_quota,
    diversify,
    hypermutate,
    init_population,
    mutation_rates,
    receptor_edit,
    run,
    select_elites,
    update_elite,
)


def quota_oracle(i, n, Q):
    x = Fraction(n - i, n) * Q
    return int(math.floor(x + Fraction(1, 2)))


def test_init_population_shape_and_range():
    pop = init_population(150, 8, RandomSource(0))
    assert len(pop) == 150
    W = np.stack([ab.weights for ab in pop])
    th = np.array([ab.threshold for ab in pop])
    assert W.shape == (150, 8)
    assert W.min() >= -1 and W.max() <= 1 and th.min() >= -1 and th.max() <= 1


def test_init_population_single_and_deterministic():
    assert len(init_population(1, 8, RandomSource(0))) == 1
    a = init_population(10, 8, RandomSource(7))
    b = init_population(10, 8, RandomSource(7))
    assert a == b


def test_select_elites_counts_and_order(small_set):
    pop = init_population(150, 8, RandomSource(1))
    pools = select_elites(pop, 100, small_set, 0.05, Q=50)
    assert len(pools) == 100
    aff = pools.affinities()
    assert aff == sorted(aff, reverse=True)
    everything = sorted((affinity(ab, small_set, 0.05).affinity for ab in pop), reverse=True)
    assert aff == everything[:100]
    assert [e.clone_quota for e in pools.entries] == [clone_quota(i, 100, 50) for i in range(1, 101)]


def test_select_elites_stable_tie_break(small_set):
    pop = [Antibody(np.full(8, i / 10), 1.0, affinity=5) for i in range(5)]
    pools = select_elites(pop, 3, small_set, 0.05)
    assert pools.elites() == pop[:3]


def test_select_elites_whole_population(small_set):
    pop = init_population(20, 8, RandomSource(2))
    pools = select_elites(pop, 20, small_set, 0.05)
    assert len(pools) == 20 and pools.affinities() == sorted(pools.affinities(), reverse=True)
    with pytest.raises(ValueError):
        select_elites(pop, 21, small_set, 0.05)


@pytest.mark.parametrize("i, expected", [(100, 0), (50, 25), (1, 50)])
def test_clone_quota_examples(i, expected):
    assert clone_quota(i, 100, 50) == expected


def test_clone_quota_matches_exact_oracle():
    for n, Q in [(100, 50), (7, 3), (10, 15), (33, 50)]:
        assert [clone_quota(i, n, Q) for i in range(1, n + 1)] == [quota_oracle(i, n, Q) for i in range(1, n + 1)]


@given(st.integers(1, 200), st.integers(1, 100))
def test_clone_quota_nonincreasing(n, Q):
    q = [clone_quota(i, n, Q) for i in range(1, n + 1)]
    assert all(a >= b for a, b in zip(q, q[1:]))
    assert q[-1] == 0


def test_mutation_rates_examples():
    assert mutation_rates(10, 10) == (1.0, 0.0)
    assert mutation_rates(10, 5) == (0.5, 0.5)
    assert mutation_rates(0, 0) == (0.5, 0.5)
    with pytest.raises(ValueError):
        mutation_rates(10, 11)


@given(st.floats(1e-6, 1e6), st.floats(0, 1))
def test_mutation_rates_sum_to_one(D, frac):
    p_hm, p_re = mutation_rates(D, frac * D)
    assert p_hm + p_re == pytest.approx(1.0, abs=1e-12)


def test_hypermutate_vanishing_perturbation():
    ab = Antibody(np.linspace(-0.5, 0.5, 8), 0.2)
    out = hypermutate(ab, 1e-12, 1e-12, RandomSource(0))
    assert np.allclose(out.weights, ab.weights, atol=1e-11)
    assert out.threshold == pytest.approx(ab.threshold, abs=1e-11)


def test_hypermutate_changes_one_weight_and_threshold():
    rng = RandomSource(3)
    ab = Antibody(np.linspace(-0.5, 0.5, 8), 0.2)
    for _ in range(500):
        out = hypermutate(ab, 0.7, 0.4, rng)
        diff = out.weights - ab.weights
        assert np.count_nonzero(diff) == 1
        assert np.all(np.abs(diff) < 0.7)
        assert -0.4 <= out.threshold - ab.threshold < 0.4
        assert out.threshold != ab.threshold


def test_hypermutate_literal_theta_bound():
    rng = RandomSource(4)
    ab = Antibody(np.zeros(8), 0.0)
    deltas = [hypermutate(ab, 1.0, 0.25, rng, theta_low=-1.0).threshold for _ in range(2000)]
    assert min(deltas) >= -1.0 and max(deltas) < 0.25 and min(deltas) < -0.5


def test_receptor_edit_identities():
    rng = RandomSource(5)
    ab = Antibody(np.arange(8) / 10, 0.3)
    partner = Antibody(-np.arange(8) / 10 - 1, -0.9)
    assert receptor_edit(ab, ab, rng) == ab
    full = receptor_edit(ab, partner, rng, points=(1, 8))
    assert np.array_equal(full.weights, partner.weights) and full.threshold == ab.threshold


def test_receptor_edit_membership_and_contiguity():
    rng = RandomSource(6)
    ab = Antibody(np.arange(8) / 10, 0.3)
    partner = Antibody(-np.arange(8) / 10 - 1, -0.9)
    for _ in range(500):
        out = receptor_edit(ab, partner, rng)
        from_partner = out.weights == partner.weights
        assert np.all(from_partner | (out.weights == ab.weights))
        idx = np.flatnonzero(from_partner)
        assert idx.size >= 2 and np.all(np.diff(idx) == 1)
        assert out.threshold == ab.threshold
    with pytest.raises(ValueError):
        receptor_edit(ab, Antibody(np.zeros(3), 0.0), rng)


def test_best_clone(small_set):
    rng = np.random.default_rng(7)
    clones = [Antibody(rng.uniform(-0.3, 0.3, 8), rng.uniform(-0.3, 0.3)) for _ in range(30)]
    scores = [affinity(c, small_set, 0.05).affinity for c in clones]
    best = best_clone(clones, small_set, 0.05)
    assert best.affinity == max(scores)
    assert np.array_equal(best.weights, clones[scores.index(max(scores))].weights)
    assert np.array_equal(best_clone(clones[:1], small_set, 0.05).weights, clones[0].weights)
    # every clone fires on every sample, so all affinities tie
    same = [Antibody(np.full(8, i * 1e-6), 1.0) for i in range(3)]
    assert np.array_equal(best_clone(same, small_set, 0.05).weights, same[0].weights)
    with pytest.raises(ValueError):
        best_clone([], small_set, 0.05)


def test_update_elite_rules():
    rng = RandomSource(8)
    e5, e7 = Antibody(np.zeros(2), 0.0, 5), Antibody(np.ones(2), 0.0, 7)
    for i in (1, 2, 50):
        assert update_elite(i, e5, e7, 1.0, rng) is e7
    assert update_elite(1, e7, e5, 1.0, rng) is e7
    tie = Antibody(np.full(2, 3.0), 0.0, 7)
    assert update_elite(3, e7, tie, 1.0, rng) is tie


def test_update_elite_acceptance_probability():
    rng = RandomSource(9)
    elite, worse = Antibody(np.zeros(2), 0.0, 10), Antibody(np.ones(2), 0.0, 9)
    taken = sum(update_elite(2, elite, worse, 1.0, rng) is worse for _ in range(20000))
    assert taken / 20000 == pytest.approx(math.exp(-1), abs=0.015)


def _pools(n, k=8):
    rng = RandomSource(10)
    entries = [PoolEntry(Antibody(rng.uniform(-1, 1, k), 0.0, 100 - i), clone_quota(i + 1, n, 50)) for i in range(n)]
    return ElitePools(entries)


def test_diversify_replaces_worst_on_period():
    pools = _pools(100)
    before = pools.elites()
    diversify(pools, 0.1, 10, 10, RandomSource(11))
    after = pools.elites()
    assert after[:90] == before[:90]
    assert all(not np.array_equal(a.weights, b.weights) for a, b in zip(after[90:], before[90:]))


def test_diversify_off_period_and_zero_fraction():
    pools = _pools(100)
    before = pools.elites()
    diversify(pools, 0.1, 10, 7, RandomSource(12))
    assert pools.elites() == before
    diversify(pools, 0.004, 10, 10, RandomSource(12))
    assert pools.elites() == before
    with pytest.raises(ValueError):
        diversify(_pools(4), 0.9, 1, 1, RandomSource(0))


def test_mutate_pool_all_hypermutation():
    cfg = ExperimentConfig(a_fraction=1.0)
    elite = Antibody(np.linspace(-0.5, 0.5, 8), 0.1, affinity=40)
    W, th = _mutate_pool(PoolEntry(elite, 20), cfg, RandomSource(13))
    assert W.shape == (20, 8)
    assert np.all(np.count_nonzero(W - elite.weights, axis=1) == 1)
    assert np.all(th != elite.threshold)


def test_mutate_pool_mix_of_operators():
    cfg = ExperimentConfig()
    elite = Antibody(np.linspace(-0.5, 0.5, 8), 0.1, affinity=40)
    W, th = _mutate_pool(PoolEntry(elite, 400), cfg, RandomSource(14))
    hm = th != elite.threshold
    # RE clones keep the threshold; each clone went through one operator
    assert 0.4 < hm.mean() < 0.6
    assert np.all(np.count_nonzero(W[hm] - elite.weights, axis=1) == 1)


def test_run_single_generation(small_train):
    res = run(ExperimentConfig(G_max=1, m=30, n=20, seed=1), small_train)
    assert len(res.traces) == 1 and res.traces[0].generation == 1


def test_run_deterministic_and_elitist(small_train):
    cfg = ExperimentConfig(G_max=25, m=40, n=30, Q=20, seed=2)
    a, b = run(cfg, small_train), run(cfg, small_train)
    assert a.traces == b.traces and a.best == b.best
    best = [t.best_affinity for t in a.traces]
    assert all(x <= y for x, y in zip(best, best[1:]))
    assert a.best.affinity == best[-1]
    assert all(t.memory_cell_count == 0 for t in a.traces)


def test_run_rejects_empty_training_set():
    with pytest.raises(ValueError):
        run(ExperimentConfig(G_max=1), [])
