import dataclasses

import pytest
from hypothesis import given, strategies as st

from stablecond import cli
from stablecond.cli import ConfigError, RunConfig, main, parse_config, serialize


def test_minimal_config_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    b = cfg.budget()
    assert b.n == 100_000 and b.dt_ladder == (1e-2, 1e-3, 4e-4) and b.chunks == 8


def test_values_parsed():
    cfg = parse_config("[params]\nkind = avoid_origin\nalphas = 1.5, 2\n[budgets]\nn = 5000\n[output]\nseed = 7\n")
    assert cfg.kind == "avoid_origin" and cfg.alphas == (1.5, 2.0) and cfg.seed == 7 and cfg.budget().n == 5000


def test_subordinator_rejected():
    with pytest.raises(ConfigError, match="subordinator case excluded"):
        parse_config("[params]\nkind = stay_positive\nalpha = 0.5\nrho = 1\n")


def test_avoid_origin_domain():
    with pytest.raises(ConfigError, match="1 < alpha <= 2"):
        parse_config("[params]\nkind = avoid_origin\nalpha = 0.9\n")


def test_all_violations_listed():
    with pytest.raises(ConfigError) as err:
        parse_config("[params]\nbogus = 1\nalpha = 0.5\nrho = 1\n[extra]\nk = v\n[budgets]\nchunks = 1\n")
    text = " ".join(err.value.errors)
    assert len(err.value.errors) >= 4
    assert "bogus" in text and "[extra]" in text and "subordinator" in text and "chunks" in text


def test_bad_values():
    with pytest.raises(ConfigError):
        parse_config("[budgets]\nn = many\n")
    with pytest.raises(ConfigError):
        parse_config("[params]\neps_ladder = 0.05, 0.1\n")
    with pytest.raises(ConfigError):
        parse_config("[output]\nexperiment = nope\n")


floats = st.floats(0.05, 5.0, allow_nan=False)
configs = st.builds(
    RunConfig,
    experiment=st.sampled_from(["martingale", "feller", "longtime", "resolvent"]),
    seed=st.integers(0, 2**64 - 1),
    kind=st.sampled_from([None, "stay_positive"]),
    alphas=st.one_of(st.none(), st.lists(st.floats(1.01, 2.0), min_size=1, max_size=3).map(tuple)),
    eps_ladder=st.one_of(st.none(), st.lists(floats, min_size=1, max_size=4, unique=True).map(
        lambda v: tuple(sorted(v, reverse=True)))),
    t=st.one_of(st.none(), floats),
    bridge=st.booleans(),
    n=st.one_of(st.none(), st.integers(100, 10**6)),
    limit_dt=st.one_of(st.none(), st.floats(1e-4, 0.1)),
)


@given(configs)
def test_round_trip(cfg):
    assert parse_config(serialize(cfg)) == cfg


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out.split()
    assert out == ["martingale", "conditioning-limit", "meander-limit", "feller", "longtime", "brownian"]


def test_run_writes_artifacts_and_is_deterministic(tmp_path):
    args = ["verify-longtime", "--quick", "--seed", "11"]
    codes = [main(args + ["--out", str(tmp_path / d)]) for d in ("a", "b")]
    assert codes[0] == codes[1] and codes[0] in (0, 1)
    a, b = (tmp_path / d / "longtime" for d in ("a", "b"))
    assert (a / "cells.csv").read_bytes() == (b / "cells.csv").read_bytes()
    assert (a / "summary.json").exists() and (a / "run.log").read_text()


def test_chunks_override_changes_streams(tmp_path):
    main(["verify-feller", "--quick", "--out", str(tmp_path / "a")])
    main(["verify-feller", "--quick", "--chunks", "5", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a/feller/cells.csv").read_bytes() != (tmp_path / "b/feller/cells.csv").read_bytes()


def test_exit_status_tracks_verdicts(tmp_path, monkeypatch):
    import stablecond.experiments as ex

    def fake(cfg):
        rep = ex.ExperimentReport("feller", cfg.seed, 2, 3.0)
        rep.check("always", cfg.seed == 1)
        return rep

    monkeypatch.setattr(cli, "run_experiment", fake)
    assert main(["verify-feller", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert main(["verify-feller", "--seed", "2", "--out", str(tmp_path)]) == 1


def test_config_file_and_errors(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[params]\nkind = avoid_origin\nalpha = 0.9\n")
    assert main(["verify-feller", "--config", str(path)]) == 2
    assert main(["verify-feller", "--config", str(tmp_path / "missing.ini")]) == 2


def test_simulate(tmp_path):
    assert main(["simulate", "--quick", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "simulate" / "paths.csv").read_text().splitlines()
    assert lines[0] == "path,t,x,killed" and len(lines) == 1 + 10 * 201


def test_replace_keeps_validation():
    cfg = dataclasses.replace(RunConfig(), kind="avoid_origin", alpha=0.8)
    assert cli.validate(cfg)
