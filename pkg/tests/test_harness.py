import csv
import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from dpnash.graphs import Digraph, GraphSchedule
from dpnash.harness import (PRIVACY_COLUMNS, ConfigError, RunConfig, config_from_dict,
                            density_report, first_crossing, load_config, preset_names,
                            run_columns, run_experiment, summarize, write_config)

GOLDEN = Path(__file__).parent / "golden"


class Rec:
    def __init__(self, err, seed=0):
        self.err = np.asarray(err, dtype=float)
        self.seed = seed


def raw_preset(name="ieee30-6p"):
    from importlib import resources
    return json.loads(resources.files("dpnash").joinpath(f"data/configs/{name}.json").read_text())


# -- configs ------------------------------------------------------------------

def test_published_preset(ieee_cfg, ieee_spec, fig1, sched6):
    assert ieee_cfg.horizon == 300 and ieee_cfg.seeds == list(range(10))
    assert ieee_cfg.q0 == 0.1 and ieee_cfg.threshold == 0.5 and ieee_cfg.noise == "on"
    assert ieee_spec.n == 6 and fig1.period == 4
    assert sched6.beta == (0.6,) * 6
    assert sched6.noise_b[0](0) == 2.0


def test_missing_horizon():
    d = raw_preset()
    del d["horizon"]
    with pytest.raises(ConfigError, match="horizon"):
        config_from_dict(d)


def test_zero_noise_flag():
    d = raw_preset()
    d["noise"] = "zero-noise"
    assert config_from_dict(d).zero_noise


@pytest.mark.parametrize("field,value", [("horizon", 0), ("threshold", -1.0), ("noise", "off"),
                                         ("convention", "both"), ("seeds", []),
                                         ("game", "no-such-game"), ("topology", "nowhere")])
def test_invalid_fields(field, value):
    d = raw_preset()
    d[field] = value
    with pytest.raises(ConfigError, match=field):
        config_from_dict(d)


def test_unknown_field_and_preset():
    d = raw_preset()
    d["horizn"] = 10
    with pytest.raises(ConfigError, match="horizn"):
        config_from_dict(d)
    with pytest.raises(ConfigError, match="no config file"):
        load_config("not-a-preset")


def test_parse_error_has_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "horizon": 10,\n  "game": ieee\n}\n')
    with pytest.raises(ConfigError, match=":3:"):
        load_config(p)


def test_player_count_mismatch():
    d = raw_preset()
    d["topology"] = "density-10p-low"
    with pytest.raises(ConfigError, match="10 nodes"):
        config_from_dict(d)


def test_relative_files(tmp_path):
    (tmp_path / "g.json").write_text(_res("games/ieee30-6p.json"))
    (tmp_path / "t.txt").write_text(_res("topologies/fig1-6p.txt"))
    d = raw_preset()
    d.update(game="g.json", topology="t.txt", seed=3)
    del d["seeds"]
    (tmp_path / "c.json").write_text(json.dumps(d))
    cfg = load_config(tmp_path / "c.json")
    assert cfg.seeds == [3]
    assert cfg.game == load_config("ieee30-6p").game


def _res(rel):
    from importlib import resources
    return resources.files("dpnash").joinpath("data", rel).read_text()


@pytest.mark.parametrize("name", preset_names())
def test_round_trip(name, tmp_path):
    cfg = load_config(name)
    again = load_config(write_config(cfg, tmp_path / "c.json"))
    assert dataclasses.replace(again, name=cfg.name) == cfg


# -- summaries ----------------------------------------------------------------

def test_first_crossing():
    assert first_crossing([1.0, 0.6, 0.4, 0.3], 0.5) == 2
    assert first_crossing([1.0, 0.9], 0.5) is None
    assert first_crossing([0.5, 0.49], 0.5) == 1


def test_summarize_examples():
    t = summarize([Rec([1.0, 0.6, 0.4]), Rec([1, 1, 1], 1)], 0.5)
    (row,) = t.rows
    assert row.crossings == [2, None] and row.reached == 1
    assert row.crossing_median == 2
    none = summarize([Rec([2, 2])], 0.5).rows[0]
    assert none.reached == 0 and none.crossing_median is None
    assert "-" in summarize([Rec([2, 2])], 0.5).format()


def test_summarize_permutation_invariant():
    rng = np.random.default_rng(0)
    recs = [Rec(np.sort(rng.uniform(0, 2, 30))[::-1], seed=k) for k in range(7)]
    a = summarize(recs, 0.5).rows[0]
    b = summarize(recs[::-1], 0.5).rows[0]
    for f in ("reached", "crossing_median", "crossing_min", "crossing_max",
              "final_error_median", "final_error_max"):
        assert getattr(a, f) == getattr(b, f)


def test_summarize_needs_records():
    with pytest.raises(ValueError):
        summarize([], 0.5)


def test_density_examples():
    rng = np.random.default_rng(1)
    pairs = [(j, i) for j in range(1, 11) for i in range(1, 11) if i != j]
    pick = [pairs[k] for k in rng.choice(90, 20, replace=False)]
    assert density_report(GraphSchedule.fixed(Digraph.from_edges(10, pick))).max == pytest.approx(0.222, abs=1e-3)
    assert density_report(GraphSchedule.fixed(Digraph.complete(5))).min == 1.0
    assert density_report(GraphSchedule.fixed(Digraph(4))).max == 0.0


@pytest.mark.parametrize("name,lo,hi", [("low", 20 / 90, 20 / 90), ("mid", 36 / 90, 49 / 90),
                                        ("high", 50 / 90, 79 / 90)])
def test_density_presets_hit_bands(name, lo, hi):
    st = density_report(load_config(f"density-10p-{name}").graph_schedule())
    assert st.min == pytest.approx(lo) and st.max == pytest.approx(hi)


# -- experiments --------------------------------------------------------------

def test_horizon_one(ieee_cfg, tmp_path):
    cfg = dataclasses.replace(ieee_cfg, horizon=1, seeds=[0, 1])
    res = run_experiment(cfg, tmp_path)
    rows = list(csv.reader((tmp_path / "run_seed0.csv").open()))
    assert rows[0] == run_columns(6)
    assert len(rows) == 3  # header + 2 snapshots
    names = {p.name for p in res.files}
    assert {"summary.json", "ne_oracle.json", "config.json", "run_seed1.csv",
            "privacy_seed1_empirical.csv", "privacy_seed1_theoretical.csv"} <= names
    priv = list(csv.reader((tmp_path / "privacy_seed0_theoretical.csv").open()))
    assert tuple(priv[0]) == PRIVACY_COLUMNS


def test_outputs_agree_with_records(damped_cfg, tmp_path):
    cfg = dataclasses.replace(damped_cfg, horizon=60, seeds=[3])
    res = run_experiment(cfg, tmp_path)
    rec = res.records[0]
    rows = list(csv.DictReader((tmp_path / "run_seed3.csv").open()))
    assert float(rows[60]["q_4"]) == rec.q[60, 3]
    assert float(rows[60]["err"]) == rec.err[60]
    assert float(rows[60]["epsilon_cum"]) == res.ledgers["empirical"][0].total
    q_star = json.loads((tmp_path / "ne_oracle.json").read_text())["q_star"]
    np.testing.assert_allclose(q_star, [1.9932, 4.9526, 7.8629, 11.6692, 14.4304, 17.2964], atol=1e-3)
    assert load_config(tmp_path / "config.json") == cfg


def test_golden_csv(ieee_cfg, tmp_path):
    cfg = dataclasses.replace(ieee_cfg, horizon=20, seeds=[7])
    run_experiment(cfg, tmp_path)
    assert (tmp_path / "run_seed7.csv").read_bytes() == (GOLDEN / "ieee30-6p_seed7_h20.csv").read_bytes()
    assert ((tmp_path / "privacy_seed7_theoretical.csv").read_bytes()
            == (GOLDEN / "ieee30-6p_seed7_h20_theoretical.csv").read_bytes())


def test_thread_count_does_not_change_results(damped_cfg, tmp_path):
    cfg = dataclasses.replace(damped_cfg, horizon=50, seeds=[4, 1, 9])
    a = run_experiment(cfg, tmp_path / "a", workers=1)
    b = run_experiment(cfg, tmp_path / "b", workers=3)
    assert [r.seed for r in b.records] == [4, 1, 9]
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_partial_artifacts(tmp_path):
    game = {"n": 2, "players": [dict(a=0, b1=0, P0=1, kappa=1, b2=1, lo=-1, hi=1)] * 2}
    cfg = RunConfig("degenerate", game, {"n": 2, "period": 1, "D": 1, "graphs": [[[1, 2]]]},
                    {"mu": 0.0, "rho": 0.5, "beta": 0.0, "noise_b": 1.0}, horizon=1500,
                    noise="zero-noise")
    res = run_experiment(cfg, tmp_path, assume_valid=True)
    assert not res.complete
    rows = list(csv.reader((tmp_path / "run_seed0.csv").open()))
    assert 900 < len(rows) < 1100
