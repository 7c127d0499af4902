"""Tests for the line-based config format and the run-level defaults."""

import pytest

from turinglearn.config import (
    RunConfig,
    config_from_text,
    config_to_text,
    default_config,
    format_value,
    load_config,
    parse_bool,
    parse_sections,
    save_config,
    serialize_sections,
)
from turinglearn.nn import TrainSchedule
from turinglearn.pipeline import four_parameter_plan
from turinglearn.simulate import SimConfig


SAMPLE = """
# an experiment
[plan]
count = 10

[run]
master_seed=5
"""


def test_parse_sections_basics():
    sections = parse_sections(SAMPLE)
    assert sections == {"plan": {"count": "10"}, "run": {"master_seed": "5"}}


def test_parse_sections_keeps_equals_in_values():
    sections = parse_sections("[s]\nexpr=a=b\n")
    assert sections["s"]["expr"] == "a=b"


@pytest.mark.parametrize("text", [
    "[]\nx=1\n",
    "x=1\n",
    "[s]\njust a line\n",
    "[s]\n=value\n",
])
def test_parse_sections_rejects_malformed_lines(text):
    with pytest.raises(ValueError):
        parse_sections(text)


def test_serialize_parse_identity():
    sections = {"a": {"x": "1", "y": "2.5"}, "b": {"flag": "true"}}
    assert parse_sections(serialize_sections(sections)) == sections


def test_format_value_and_parse_bool():
    assert format_value(True) == "true"
    assert format_value(False) == "false"
    assert format_value(0.1) == "0.1"
    assert format_value(7) == "7"
    assert parse_bool("true") and parse_bool("YES") and parse_bool("1")
    assert not parse_bool("False") and not parse_bool("no") and not parse_bool("0")
    with pytest.raises(ValueError):
        parse_bool("maybe")


def test_default_config_values():
    cfg = default_config()
    assert cfg.plan.count == 100
    assert cfg.plan.ranges == {"c": (0.0, 1.15)}
    assert cfg.bins == 12
    assert cfg.kernel_kind == "wasserstein"
    assert len(cfg.architectures) == 6
    assert cfg.schedule() is None


def test_empty_text_gives_the_defaults():
    assert config_from_text("") == default_config()


def test_partial_override_keeps_the_rest():
    cfg = config_from_text("[run]\nmaster_seed=5\n")
    assert cfg.master_seed == 5
    assert cfg.plan == default_config().plan


def test_full_round_trip_is_exact():
    cfg = RunConfig(
        plan=four_parameter_plan(count=40, grid_side=32, radii=(4.0, 8.0)),
        sim=SimConfig(h=0.1 + 0.2, t_final=500.0, check_interval=50.0,
                      noise_amplitude=0.02, max_inner_iters=30, max_halvings=4),
        bins=10, spacing=2, epsilon_weight=0.004, species=1, extras=True,
        kernel_kind="chi2exp",
        gamma_grid=(0.25, 1.0, 4.0), lambda_grid=(0.01, 0.1),
        gamma_out_grid=(0.5, 2.0), epsilon_tube=0.05, eps_reg=1e-5,
        architectures=((), (3,), (7, 9)),
        max_steps=5000, patience=800, master_seed=12,
    )
    text = config_to_text(cfg)
    parsed = config_from_text(text)
    assert parsed == cfg
    # floats survive exactly, including non-representable decimals
    assert parsed.sim.h == 0.1 + 0.2
    assert parsed.schedule() == TrainSchedule(5000, 800)
    # and a second pass reproduces the text itself
    assert config_to_text(parsed) == text


def test_architectures_encoding():
    text = config_to_text(default_config())
    assert "architectures=linear;2;20;5x10;10x10;20x20" in text

    cfg = config_from_text("[nn]\narchitectures= linear ; 2 ;5x10\n")
    assert cfg.architectures == ((), (2,), (5, 10))

    with pytest.raises(ValueError):
        config_from_text("[nn]\narchitectures=\n")


@pytest.mark.parametrize("text", [
    "[magic]\nx=1\n",
    "[features]\nshape=round\n",
    "[kernels]\ndegree=3\n",
    "[nn]\ndropout=0.5\n",
    "[run]\nthreads=4\n",
    "[plan]\ncount=5\nstride=2\n",
    "[sim]\ndt=0.1\n",
])
def test_unknown_sections_and_keys_are_rejected(text):
    with pytest.raises(ValueError):
        config_from_text(text)


def test_plan_needs_a_count():
    with pytest.raises(ValueError):
        config_from_text("[plan]\ngrid_side=32\n")


def test_plan_defaults_fill_in():
    cfg = config_from_text(
        "[plan]\ncount=7\nrange_c=0.0,1.0\n"
        "fixed_a=0.02\nfixed_b=1.0\nfixed_delta=100.0\nfixed_s=0.25\n"
    )
    assert cfg.plan.count == 7
    assert cfg.plan.grid_side == 64
    assert cfg.plan.radii == (8.0,)


def test_file_round_trip(tmp_path):
    cfg = default_config()
    path = tmp_path / "run.cfg"
    save_config(path, cfg)
    assert load_config(path) == cfg
