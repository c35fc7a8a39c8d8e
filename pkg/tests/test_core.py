import numpy as np
import pytest

from csaim.core import (
    Antibody,
    ConfigError,
    ExperimentConfig,
    RandomSource,
    Sample,
    SampleSet,
    config_errors,
    format_config,
    parse_config,
    round_half_away,
    validate_config,
)


def test_defaults_match_reference_settings():
    cfg = ExperimentConfig()
    assert (cfg.G_max, cfg.m, cfg.n, cfg.Q) == (100, 150, 100, 50)
    assert cfg.E_sim == 0.05 and cfg.t == 10
    assert cfg.eta == 0.1 and cfg.mu_theta == 0.3
    assert cfg.T_IM == 50 and cfg.E_min == 0.001
    assert cfg.c_max_memory == 50
    assert cfg.gamma_w == cfg.gamma_theta == 1.0
    assert cfg.a_fraction == 0.5 and cfg.tau == 10
    assert cfg.c_replace == 10


def test_valid_config_returned_unchanged():
    cfg = ExperimentConfig(n=100, m=150)
    assert validate_config(cfg) is cfg


def test_zero_n_rejected():
    with pytest.raises(ConfigError) as exc:
        validate_config(ExperimentConfig(n=0))
    assert "n must be positive" in exc.value.errors


def test_eta_below_range_rejected():
    errors = config_errors(ExperimentConfig(eta=0.05))
    assert errors == ["eta below allowed range [0.1, 1.0]"]


def test_all_violations_reported():
    errors = config_errors(ExperimentConfig(n=200, m=150, Q=0, beta=1.5, mu_theta=0.0))
    assert len(errors) == 4
    assert any(e.startswith("m ") for e in errors)
    assert any(e.startswith("Q ") for e in errors)
    assert any(e.startswith("beta ") for e in errors)
    assert any(e.startswith("mu_theta ") for e in errors)


def test_memory_cap_follows_n():
    assert ExperimentConfig(n=40, m=40).c_max_memory == 20
    assert ExperimentConfig().replace(n=60).c_max_memory == 30
    assert ExperimentConfig(c_max_memory=7).c_max_memory == 7


@pytest.mark.parametrize("x, expected", [(49.5, 50), (0.5, 1), (1.49, 1), (-2.5, -3), (0.0, 0)])
def test_round_half_away(x, expected):
    assert round_half_away(x) == expected


def test_parse_config_with_comments_and_overrides():
    text = "# desk run\nG_max = 20   # short\nmu_theta=0.25\n\nseed=3\n"
    cfg = parse_config(text, {"seed": "9", "theta_delta_mode": "literal"})
    assert cfg.G_max == 20 and cfg.mu_theta == 0.25
    assert cfg.seed == 9 and cfg.theta_delta_mode == "literal"


def test_parse_config_errors():
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config("bogus=1")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("G_max 20")
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config("n=ten")


def test_format_config_round_trips():
    cfg = ExperimentConfig(G_max=7, alpha=2.5, seed=11)
    assert parse_config(format_config(cfg)) == cfg


def test_random_source_streams_identical():
    a, b = RandomSource(12345), RandomSource(12345)
    assert np.array_equal(a.random(10**6), b.random(10**6))
    assert not np.array_equal(RandomSource(1).random(10), RandomSource(2).random(10))


def test_spawned_streams_are_reproducible_and_distinct():
    rng = RandomSource(5)
    s1, s2 = rng.spawn(0), rng.spawn(1)
    assert np.array_equal(s1.random(5), RandomSource(5).spawn(0).random(5))
    assert not np.array_equal(s1.random(5), s2.random(5))


def test_sample_validation():
    s = Sample([0.1] * 8, 1, "a")
    assert s.features.shape == (8,)
    with pytest.raises(ValueError):
        Sample([0.1] * 8, 2)
    with pytest.raises(ValueError):
        Sample([np.nan] + [0.0] * 7, 0)
    with pytest.raises(ValueError):
        s.features[0] = 1.0


def test_antibody_is_immutable_value():
    ab = Antibody([1.0, 2.0], 0.5)
    assert ab == Antibody(np.array([1.0, 2.0]), 0.5)
    assert ab.with_affinity(3).affinity == 3 and ab.affinity is None
    with pytest.raises(ValueError):
        Antibody([np.inf], 0.0)


def test_sample_set_round_trip():
    samples = [Sample(np.full(8, i / 10), i % 2, str(i)) for i in range(5)]
    ss = SampleSet.from_samples(samples)
    assert len(ss) == 5 and ss.samples() == samples
    assert ss.subset([3, 1]).ids == ("3", "1")
