import os
from pathlib import Path

import pytest

from nqdlab import __version__
from nqdlab.config import OUTPUT_DIR_ENV, ConfigError, RunConfig, config_from_dict, load_config, parse_config
from nqdlab.reports import atomic_write, fmt_value, read_report, render_csv, write_csv

FULL = """
[marginal]
spec = pareto(alpha=1.8, xm=1.0)

[dependence]
kind = gaussian_copula
correlations = -0.3, -0.1

[scaling]
p = 1.2
lam_kind = power
lam_gamma = 0.5

[simulate]
seed = 11
paths = 40
epsilons = 0.25, 4
empirical_centering = true

[check]
conditions = a, c, L2.3.2
tol = 0.01

[output]
dir = out
prefix = run_
"""


def test_defaults():
    cfg = RunConfig()
    assert cfg.scaling.p == 1.5 and cfg.scaling.r == 2.0
    assert cfg.scaling.s == pytest.approx(1 / 3)
    assert cfg.simulate.seed == 0
    assert cfg.marginal is None


def test_full_parse_and_types():
    cfg = parse_config(FULL)
    assert cfg.dependence.correlations == (-0.3, -0.1)
    assert cfg.scaling.s == pytest.approx((2 - 1.2) / 1.2)
    assert cfg.simulate.epsilons == (0.25, 4.0)
    assert cfg.simulate.empirical_centering is True
    assert cfg.check.conditions == ("a", "c", "L2.3.2")
    assert cfg.output.prefix == "run_"


@pytest.mark.parametrize("text", [FULL, "", "[marginal]\nspec = exponential(rate=2)\n"])
def test_round_trip(text):
    cfg = parse_config(text)
    again = parse_config(cfg.to_ini())
    assert again == cfg
    assert again.to_ini() == cfg.to_ini()


@pytest.mark.parametrize("text,path", [
    ("[bogus]\nx = 1\n", "bogus"),
    ("[scaling]\nq = 1\n", "scaling.q"),
    ("[scaling]\np = 2.5\n", "scaling.p"),
    ("[scaling]\np = 1.5\nr = 1.2\n", "scaling"),
    ("[marginal]\nspec = cauchy()\n", "marginal.spec"),
    ("[check]\nconditions = a, zz\n", "check.conditions"),
    ("[dependence]\nkind = discrete_joint\n", "dependence"),
    ("[simulate]\nhorizon = 10\ncheckpoint_start = 100\n", "simulate"),
    ("no section header\n", "config"),
])
def test_rejections_name_the_path(text, path):
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    assert ei.value.path == path


def test_missing_marginal_names_section():
    with pytest.raises(ConfigError, match="marginal"):
        RunConfig().require_marginal()


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError) as ei:
        load_config(tmp_path / "missing.ini")
    assert "missing.ini" in ei.value.path


def test_output_dir_precedence(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert RunConfig().output_dir() == Path(".")
    monkeypatch.setenv(OUTPUT_DIR_ENV, "/tmp/elsewhere")
    assert RunConfig().output_dir() == Path("/tmp/elsewhere")
    assert parse_config(FULL).output_dir() == Path("out")


def test_seed_override_is_a_copy():
    cfg = parse_config(FULL)
    assert cfg.with_seed(5).simulate.seed == 5
    assert cfg.simulate.seed == 11
    assert cfg.with_seed(None) is cfg


def test_config_from_dict():
    cfg = config_from_dict({"marginal": {"spec": "degenerate(value=1)"}})
    assert cfg.require_marginal().mean() == 1.0


@pytest.mark.parametrize("value,text", [
    (0.1, "0.10000000000000001"), (1, "1"), (True, "true"), (float("inf"), "inf"),
    (float("-inf"), "-inf"), (float("nan"), "nan"), ("x", "x"), (2.0, "2"),
])
def test_fmt_value(value, text):
    assert fmt_value(value) == text


def test_render_and_read_back():
    cfg = parse_config(FULL)
    text = render_csv(["n", "v"], [(1, 0.5), (2, 1 / 3)], cfg.to_ini(), ["summary: ok"])
    assert text.splitlines()[0] == f"# artifact {__version__}"
    ini, header, rows = read_report(text)
    assert header == ["n", "v"]
    assert rows == [["1", "0.5"], ["2", "0.33333333333333331"]]
    assert float(rows[1][1]) == 1 / 3
    assert parse_config(ini) == cfg


def test_atomic_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "sub" / "r.csv"
    write_csv(target, ["a"], [(1,)])
    write_csv(target, ["a"], [(2,)])
    assert read_report(target)[2] == [["2"]]
    assert os.listdir(target.parent) == ["r.csv"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    target = tmp_path / "r.txt"
    atomic_write(target, "old")

    with pytest.raises(TypeError):
        atomic_write(target, object())
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["r.txt"]
