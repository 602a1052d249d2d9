import math

import pytest

from qfldp.config import ConfigError, TrainingConfig, parse_values


def test_defaults_round_trip():
    cfg = TrainingConfig()
    assert TrainingConfig.from_text(cfg.to_text()) == cfg


def test_round_trip_with_every_type():
    private = TrainingConfig().override(target_epsilon=1.0 / 3.0, timing=True, source="data/x.csv")
    public = TrainingConfig().override(clip_norm=math.inf, noise_multiplier=0.0)
    assert "target_epsilon=0.33333333333333331\n" in private.to_text()
    assert "timing=true\n" in private.to_text()
    assert "clip_norm=inf\n" in public.to_text()
    for cfg in (private, public):
        assert TrainingConfig.from_text(cfg.to_text()) == cfg


def test_string_values_are_parsed():
    cfg = TrainingConfig().override(rounds="7", learning_rate="0.5", timing="yes", target_epsilon="none")
    assert (cfg.rounds, cfg.learning_rate, cfg.timing, cfg.target_epsilon) == (7, 0.5, True, None)


def test_none_overrides_are_ignored():
    assert TrainingConfig().override(rounds=None) == TrainingConfig()


def test_comments_blank_lines_and_whitespace():
    values = parse_values("# a comment\n\n  rounds = 3 \nseed=4\n")
    assert values == {"rounds": "3", "seed": "4"}


def test_ignored_keys_are_dropped():
    cfg = TrainingConfig.from_text("rounds=2\nfinal_epsilon=1.5\n", ignore=("final_epsilon",))
    assert cfg.rounds == 2


@pytest.mark.parametrize(
    "text",
    ["rounds=2\nrounds=3\n", "rounds\n", "bogus=1\n", "rounds=two\n", "timing=maybe\n", "final_epsilon=1\n"],
)
def test_malformed_text(text):
    with pytest.raises(ConfigError):
        TrainingConfig.from_text(text)


@pytest.mark.parametrize(
    "overrides",
    [
        dict(test_fraction=0.0),
        dict(test_fraction=1.0),
        dict(delta=0.0),
        dict(delta=1.0),
        dict(seed=-1),
        dict(target_epsilon=0.0),
        dict(reducer="tsne"),
        dict(n_clients=0),
        dict(lot_size=0),
        dict(rounds=-1),
        dict(n_clients=4, clients_per_round=5),
        dict(clip_norm=0.0),
        dict(noise_multiplier=-0.5),
        dict(clip_norm=math.inf),
        dict(learning_rate=0.0),
    ],
)
def test_invalid_values(overrides):
    with pytest.raises(ConfigError):
        TrainingConfig().override(**overrides)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        TrainingConfig.load(tmp_path / "missing.cfg")


def test_every_key_is_serialized():
    lines = TrainingConfig().to_text().splitlines()
    assert [line.split("=")[0] for line in lines] == TrainingConfig.keys()
