import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixedpg.cli import (
    ConfigError,
    RunConfig,
    convergence_table,
    iterations_to_goal,
    minimum_return,
    parse_config,
    state_magnitudes,
    summarize_runs,
    tracking_errors,
)
from mixedpg.cli.main import main
from mixedpg.envs.trajectory import read_trajectory_csv
from mixedpg.runtime import TIMING_COLUMNS, read_metrics, write_metrics

DATA = Path(__file__).parent / "data"

SMALL = """
[run]
task = inverted_pendulum
variant = mpg-v2
seeds = 0, 1
budget = 100
eval_interval = 50
eval_episodes = 3
[training]
hidden = 8, 8
n_agents = 8
batch_size = 32
buffer_size = 5000
[algorithm]
H = 4
"""


def small_config(tmp_path, text=SMALL):
    p = tmp_path / "small.ini"
    p.write_text(text)
    return p


# config -----------------------------------------------------------------------

def test_default_config_golden():
    assert RunConfig().to_ini() == (DATA / "default_config.ini").read_text()


def test_defaults_match_hyperparameter_table():
    c = RunConfig()
    assert c.adam_betas == (0.9, 0.999)
    assert c.hidden == (256, 256)
    assert c.buffer_size == 500_000 and c.batch_size == 256
    assert c.policy_lr == (3e-4, 3e-6) and c.value_lr == (8e-4, 8e-6)
    assert c.gamma == 0.98 and c.tau == 0.005
    assert (c.n_actors, c.n_buffers, c.n_learners) == (2, 2, 12)
    assert c.eta == 0.1 and c.H == 25 and c.n == 25 and c.batch_reuse == 10 and c.delay == 2
    assert c.explore_std == 0.1 and c.smooth_std == 0.1 and c.smooth_clip == 0.5
    assert c.ramp_length == 9000
    assert parse_config("[run]\ntask = inverted_pendulum\n", {}).ramp_length == 4000
    assert c.eval_interval == 3000 and c.eval_episodes == 5
    s = c.settings(3)
    assert s.seed == 3 and s.spec.T == 9000 and s.topology.n_learners == 12


def test_config_round_trip_and_names():
    c = parse_config(SMALL + "\n[env]\nforce_max = 3.0\n[reset]\ntheta = -0.1, 0.1\n", {})
    again = parse_config(c.to_ini(), {})
    assert again == c
    assert c.variant == "mpg-v2" and c.hidden == (8, 8) and c.env == {"force_max": 3.0}
    task = c.make_task()
    assert task.params.force_max == 3.0 and task.reset_ranges["theta"] == (-0.1, 0.1)


@given(st.floats(0, 0.999), st.integers(1, 60), st.tuples(st.integers(1, 64), st.integers(1, 64)),
       st.booleans())
@settings(max_examples=50, deadline=None)
def test_config_round_trip_property(gamma, H, hidden, noise):
    c = RunConfig(gamma=gamma, H=H, hidden=hidden, prior_noise=noise)
    assert parse_config(c.to_ini(), {}) == c


def test_env_overrides():
    env = {"MIXEDPG_RUN__BUDGET": "77", "MIXEDPG_ALGORITHM__H": "5", "MIXEDPG_ENV__force_max": "2.5",
           "OTHER": "x"}
    c = parse_config(SMALL, env)
    assert c.budget == 77 and c.H == 5 and c.env["force_max"] == 2.5


@pytest.mark.parametrize("text,field", [
    ("[run]\nseeds =\n", "run.seeds"),
    ("[algorithm]\ngamma = 1.0\n", "algorithm.gamma"),
    ("[run]\ntask = cartwheel\n", "run.task"),
    ("[run]\nvariant = sac\n", "run.variant"),
    ("[training]\nbatch_size = many\n", "training.batch_size"),
    ("[topology]\nn_learners = 0\n", "topology.n_learners"),
    ("[algorithm]\nmystery = 1\n", "algorithm.mystery"),
    ("[reset]\nx = 1, 0\n", "reset.x"),
    ("[run]\nprior_noise = maybe\n", "run.prior_noise"),
])
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(text, {})


# analysis ---------------------------------------------------------------------

def _log(its, rets):
    return [{"iteration": i, "eval_return_mean": r} for i, r in zip(its, rets)]


def test_convergence_table_definitions():
    never = _log([3000, 6000, 9000], [-500.0, -300.0, -201.0])
    crossing = _log([3000, 6000, 9000, 12000], [-120.0, -50.0, -29.0, -40.0])
    t = convergence_table({"a": [never], "b": [crossing]}, (-100, -30, -10, -5))
    assert all(t.cell("a", g) is None for g in t.goals)
    assert t.cell("b", -30)[:2] == (9000.0, 0.0)
    assert t.cell("b", -100)[0] == 6000.0
    text = t.format()
    assert text.splitlines()[2].split(" | ")[1:] == ["-", "-", "-", "-"]
    assert iterations_to_goal(crossing, -30) == 9000


def test_convergence_table_mean_and_ci():
    runs = [_log([3000, 6000, 9000], r) for r in ([-20, -5, -1], [-50, -20, -1], [-50, -50, -50])]
    t = convergence_table({"x": runs}, (-30,))
    mean, ci, k, n = t.cell("x", -30)
    assert (mean, k, n) == (4500.0, 2, 3)
    assert ci == pytest.approx(1.96 * np.std([3000, 6000], ddof=1) / math.sqrt(2))


@given(st.lists(st.floats(-1000, 0), min_size=1, max_size=12), st.floats(-1000, 0), st.floats(0, 500))
@settings(max_examples=200, deadline=None)
def test_convergence_monotone_in_goal(rets, g, dg):
    log = _log([1000 * (i + 1) for i in range(len(rets))], rets)
    lo, hi = iterations_to_goal(log, g), iterations_to_goal(log, g + dg)
    if lo is None:
        assert hi is None
    elif hi is not None:
        assert hi >= lo


def test_summarize_runs():
    s = summarize_runs([_log([1, 2], [-1.0, -2.0]), _log([1, 2, 3], [-3.0, -4.0, -5.0])])
    assert [r["iteration"] for r in s] == [1, 2]
    assert s[0]["mean"] == -2.0 and s[0]["ci95"] == pytest.approx(1.96 * np.std([-1, -3], ddof=1) / math.sqrt(2))


def test_tracking_errors():
    ref = np.linspace(0, 1, 10)
    perfect = {"y": ref, "y_ref": ref, "phi": ref, "phi_ref": ref, "u": ref + 20, "u_ref": ref + 20}
    assert tracking_errors(perfect) == {"error_y": 0.0, "error_phi": 0.0, "error_u": 0.0}
    off = dict(perfect, y=ref + 1.0)
    assert tracking_errors(off)["error_y"] == pytest.approx(1.0, abs=1e-15)
    mixed = dict(perfect, y=ref + np.array([1, -1, 2, 0, 0, 0, 0, 0, 0, 0.0]),
                 u=ref + 20 + np.array([3, 0, 0, 0, 0, 0, 0, 0, 0, -4.0]))
    e = tracking_errors(mixed)
    assert e["error_y"] == pytest.approx(math.sqrt(6 / 10))
    assert e["error_u"] == pytest.approx(math.sqrt(25 / 10))


def test_state_magnitudes():
    z = np.zeros(8)
    assert set(state_magnitudes({"x": z, "xdot": z, "theta": z, "thetadot": z}).values()) == {0.0}
    m = state_magnitudes({"x": np.array([3.0, -4.0]), "xdot": z[:2], "theta": np.full(2, 0.1),
                          "thetadot": np.array([1.0, 7.0])})
    assert m["state_theta"] == pytest.approx(0.1, abs=1e-16)
    assert m["state_x"] == pytest.approx(math.sqrt(12.5))
    assert m["state_thetadot"] == pytest.approx(5.0)


def test_minimum_return():
    assert minimum_return("path_tracking") == -30
    assert minimum_return("inverted_pendulum") == -2
    with pytest.raises(ValueError):
        minimum_return("unicycle")


def test_metric_csv_round_trip(tmp_path):
    rows = [{c: float(i) + 0.1 for c in ("wall_clock_s", "eval_return_mean", "eval_return_ci", "value_loss",
                                           "policy_loss", "w0", "wH", "lambda", "grad_staleness_mean",
                                           "update_time_ms", "grad_compute_time_ms")} for i in range(3)]
    for i, r in enumerate(rows):
        r["iteration"] = i
    rows[1]["w0"] = math.nan
    write_metrics(tmp_path / "m.csv", rows)
    back = read_metrics(tmp_path / "m.csv")
    assert back[0] == rows[0] and back[2] == rows[2] and math.isnan(back[1]["w0"])


# command line -----------------------------------------------------------------

def test_run_counts_and_reproducibility(tmp_path, capsys):
    cfg = small_config(tmp_path)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    csvs = sorted((tmp_path / "a").glob("seed*/metrics.csv"))
    assert len(csvs) == 2
    for p in csvs:
        rows = read_metrics(p)
        assert [r["iteration"] for r in rows] == [50, 100]
        other = read_metrics(tmp_path / "b" / p.parent.name / "metrics.csv")
        for ra, rb in zip(rows, other):
            for k in ra:
                if k not in TIMING_COLUMNS:
                    assert repr(ra[k]) == repr(rb[k])
    assert (tmp_path / "a" / "training_curve.svg").read_text().startswith("<svg")
    assert len(list(csvs[0].parent.glob("*.ckpt"))) == 1
    assert parse_config((tmp_path / "a" / "config.ini").read_text(), {}) == parse_config(SMALL, {})


def test_run_seed_flag_and_exit_codes(tmp_path, capsys):
    cfg = small_config(tmp_path)
    assert main(["run", "--config", str(cfg), "--seed", "7", "--out", str(tmp_path / "s")]) == 0
    assert [p.name for p in (tmp_path / "s").iterdir() if p.is_dir()] == ["seed7"]
    bad = small_config(tmp_path, SMALL.replace("seeds = 0, 1", "seeds ="))
    assert main(["run", "--config", str(bad)]) == 2
    assert "run.seeds" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2
    with pytest.raises(SystemExit) as info:
        main(["launch"])
    assert info.value.code == 2


def test_runtime_failure_exit_code(tmp_path, monkeypatch, capsys):
    import mixedpg.cli.main as cli_main

    def broken(*a, **k):
        raise FloatingPointError("boom")

    monkeypatch.setattr(cli_main, "serial_train", broken)
    assert main(["run", "--config", str(small_config(tmp_path)), "--out", str(tmp_path / "r")]) == 1
    assert "boom" in capsys.readouterr().err


def test_eval_table_errors_commands(tmp_path, capsys):
    cfg = small_config(tmp_path)
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "run")])
    ckpt = tmp_path / "run" / "seed0" / "checkpoint.ckpt"
    assert main(["eval", str(ckpt), "--config", str(cfg), "--out", str(tmp_path / "ev")]) == 0
    traj = read_trajectory_csv(tmp_path / "ev" / "trajectory.csv")
    assert set(np.unique(traj["agent"])) == {0.0, 1.0, 2.0}
    assert np.all(traj["reward"] <= 0)
    assert main(["table", f"mpg={tmp_path / 'run'}", "--config", str(cfg), "--out", str(tmp_path / "tab")]) == 0
    out = capsys.readouterr().out
    assert "mpg" in out and "-20" in out
    assert (tmp_path / "tab" / "convergence.csv").exists()
    assert main(["errors", str(ckpt), "--config", str(cfg), "--out", str(tmp_path / "err.csv")]) == 0
    assert "state_theta" in (tmp_path / "err.csv").read_text()
    assert main(["eval", str(tmp_path / "nope.ckpt"), "--config", str(cfg)]) == 1


def test_bias_study_command(tmp_path, capsys):
    cfg = small_config(tmp_path, "[run]\ntask = path_tracking\n")
    assert main(["bias-study", "--config", str(cfg), "--n-seeds", "2", "--horizons", "0", "2", "10",
                 "--out", str(tmp_path / "b")]) == 0
    out = capsys.readouterr().out
    assert "critic" in out and "model" in out
    text = (tmp_path / "b" / "bias.csv").read_text().splitlines()
    assert text[0] == "seed,regime,n,bias,ref_norm" and len(text) == 1 + 2 * 3 * 3
    assert (tmp_path / "b" / "bias.svg").exists()
