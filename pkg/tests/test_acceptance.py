"""Acceptance gate, one test per criterion.

Each test records a ``criterion N: PASS|FAIL`` line which the terminal
summary prints (see ``conftest.py``); the lines are also written to
``artifacts/acceptance.txt``. Criteria 9-11 read the training logs written by
``scripts/reproduce.py`` under ``artifacts/runs``; missing logs count as FAIL.
"""
import json
import math
import os
import time
from pathlib import Path

import numpy as np

from mixedpg.algo import (
    AlgorithmSpec,
    ActorCritic,
    bias_trends,
    clipped_double_q_target,
    dpg_policy_loss,
    mixed_policy_loss,
    model_return_X,
    nstep_target,
    pg_bias_diagnostic,
    policy_gradient,
    q_value,
    rule_weights,
    td3_target,
    theorem1_check,
)
from mixedpg.diffkit import MlpParams, Tape, backward, forward_mlp, functional as F
from mixedpg.envs import BatchEnv, PendulumTask, VehicleTask, pendulum_step, vehicle_step
from mixedpg.priors import make_prior, oracle_model_adapter
from mixedpg.runtime import TIMING_COLUMNS, Topology, TrainSettings, async_train, read_metrics, serial_train
from mixedpg.runtime.throughput import update_interval_ms, with_learners

from conftest import ACCEPTANCE, fd_flat, rel_err
from test_envs import pendulum_oracle, random_vehicle_state, vehicle_oracle

ROOT = Path(__file__).resolve().parents[1]
RUNS = Path(os.environ.get("MIXEDPG_RUNS", ROOT / "artifacts" / "runs"))
SEEDS = (0, 1, 2)
TASKS = (VehicleTask(), PendulumTask())


class Clock:
    """CPU seconds of this process (the box may be shared) alongside wall seconds."""

    def __enter__(self):
        self.c0, self.w0 = time.process_time(), time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.cpu = time.process_time() - self.c0
        self.wall = time.perf_counter() - self.w0

    def __str__(self):
        return f"{self.cpu:.1f}s cpu ({self.wall:.1f}s wall)"


def record(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[k] = line
    print(line)
    assert ok, line


def nets_for(task, seed, double_q=False, hidden=(16, 16)):
    rng = np.random.default_rng(seed)
    nets = ActorCritic.create(task, rng, double_q, hidden)
    nets.policy.weights[-1] *= 0.3
    for qt in nets.q_target:
        qt.biases[-1] += rng.normal(size=1)
    return nets


def batch_for(task, rng, n=16):
    obs = task.reset(rng, n)
    act = rng.uniform(-1, 1, size=(n, task.act_dim)) * task.action_high * 0.5
    nxt = task.step(obs, act)
    return {"obs": obs, "act": act, "rew": np.asarray(task.reward(obs, act)), "next_obs": nxt,
            "done": task.terminal(nxt)}


# property-based ---------------------------------------------------------------------

def test_criterion_01_autodiff():
    worst = 0.0
    with Clock() as clk:
        for seed in range(100):
            worst = max(worst, _autodiff_case(seed))
    record(1, worst < 1e-5 and clk.cpu < 60, f"max rel err {worst:.2e} over 100 MLPs in {clk}")


def _autodiff_case(seed):
    rng = np.random.default_rng(1000 + seed)
    sizes = tuple(int(h) for h in rng.integers(2, 7, size=rng.integers(1, 4)))
    d_in, d_out = int(rng.integers(1, 5)), int(rng.integers(1, 4))
    net = MlpParams.init(rng, d_in, d_out, sizes, output="tanh" if seed % 2 else "linear")
    for b in net.biases:
        b += rng.normal(scale=0.3, size=b.shape)
    x = rng.normal(size=(5, d_in))
    target = rng.normal(size=(5, d_out))

    def loss(p):
        return F.mean(F.square(forward_mlp(p, x) - target))

    with Tape() as tape:
        leaf = tape.watch_params(net)
        out = loss(leaf)
    g = backward(tape, out, leaf).to_flat()
    return rel_err(g, fd_flat(lambda p: float(loss(p)), net))


def test_criterion_02_theorem1():
    worst = 0.0
    with Clock() as clk:
        for task in TASKS:
            model = oracle_model_adapter(task)
            for draw in range(20):
                rng = np.random.default_rng(draw)
                nets = nets_for(task, 500 + draw)
                s = task.reset(rng, 4)
                for n in range(1, 11):
                    lhs, rhs, diff = theorem1_check(s, n, nets.policy, nets.q[0], model, 0.95)
                    scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1e-300)
                    worst = max(worst, diff / scale)
    record(2, worst < 1e-8 and clk.cpu < 120, f"max rel diff {worst:.2e} over 2 tasks x 20 draws x n=1..10 in {clk}")


def test_criterion_03_weighting():
    w1 = rule_weights(1.0, (0, 25))
    exact = w1[0] == 0.5 and w1[25] == 0.5
    lo, hi = rule_weights(0.9, (0, 25))[25], rule_weights(1.1, (0, 25))[0]
    simplex, sym = 0.0, 0.0
    for lam in np.linspace(0.9, 1.1, 201):
        for hs in ((0, 25), (0, 1, 5, 25), (0, 3)):
            w = rule_weights(float(lam), hs)
            simplex = max(simplex, abs(sum(w.values()) - 1.0), -min(min(w.values()), 0.0))
        a, b = rule_weights(float(lam), (0, 25)), rule_weights(float(2 - lam), (0, 25))
        sym = max(sym, abs(a[0] - b[25]), abs(a[25] - b[0]))
    ok = exact and lo > 0.999 and hi > 0.999 and simplex < 1e-12 and sym < 1e-12
    record(3, ok, f"lam=1 exact={exact}, dominant {lo:.6f}/{hi:.6f}, simplex err {simplex:.1e}, symmetry err {sym:.1e}")


def test_criterion_04_mixing_linearity():
    worst = 0.0
    H = 25
    for task in TASKS:
        nets = nets_for(task, 40)
        s = task.reset(np.random.default_rng(40), 8)
        model = make_prior(task)

        def grad(weights):
            return policy_gradient(lambda leaf, pol: mixed_policy_loss(
                s, weights, leaf, pol, nets.q[0], model, 0.98, np.random.default_rng(7)), nets.policy)[1].to_flat()

        g0 = policy_gradient(lambda leaf, pol: dpg_policy_loss(s, leaf, nets.q[0]), nets.policy)[1].to_flat()
        gH = policy_gradient(lambda leaf, pol: model_return_X(H, s, leaf, pol, nets.q[0], model, 0.98,
                                                              np.random.default_rng(7)), nets.policy)[1].to_flat()
        for alpha in (0.0, 0.25, 0.5, 1.0):
            want = alpha * g0 + (1 - alpha) * gH
            got = grad({0: alpha, H: 1 - alpha})
            worst = max(worst, np.max(np.abs(got - want)) / max(np.max(np.abs(want)), 1e-300))
    record(4, worst < 1e-10, f"max rel deviation {worst:.2e} for alpha in (0, .25, .5, 1), H=25")


def test_criterion_05_dynamics():
    worst_v = worst_p = 0.0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        s = random_vehicle_state(rng)
        a = rng.uniform(-0.3, 0.3), rng.uniform(-3, 3)
        want = vehicle_oracle(s, a)
        worst_v = max(worst_v, np.max(np.abs(vehicle_step(s, a) - want) / (1 + np.abs(want))))
        sp, f = rng.uniform(-1, 1, size=4), rng.uniform(-15, 15)
        want = pendulum_oracle(sp, f)
        worst_p = max(worst_p, np.max(np.abs(pendulum_step(sp, [f]) - want) / (1 + np.abs(want))))
    rng = np.random.default_rng(99)
    fixed = all(np.array_equal(pendulum_step(np.zeros(4), [0.0], substeps=n), np.zeros(4)) for n in (1, 2, 5))
    straight = vehicle_step(np.array([20.0, 0, 0, 0, 0, 0]), (0.0, 0.0))
    fixed = fixed and np.array_equal(straight[:5], [20.0, 0, 0, 0, 0]) and abs(straight[5] - 2.0) < 1e-12
    odd = mirror = 0.0
    for _ in range(50):
        sp, f = rng.uniform(-1, 1, size=4), rng.uniform(-10, 10)
        odd = max(odd, np.max(np.abs(pendulum_step(sp, [f]) + pendulum_step(-sp, [-f]))))
        s = random_vehicle_state(rng)
        a = rng.uniform(-0.3, 0.3), rng.uniform(-3, 3)
        flip = np.array([1, -1, -1, -1, -1, 1.0])
        mirror = max(mirror, np.max(np.abs(vehicle_step(s * flip, (-a[0], a[1])) * flip - vehicle_step(s, a))
                                    / (1 + np.abs(vehicle_step(s, a)))))
    ok = worst_v < 1e-12 and worst_p < 1e-12 and fixed and odd < 1e-12 and mirror < 1e-12
    record(5, ok, f"transcription err vehicle {worst_v:.1e} pendulum {worst_p:.1e}; fixed points {fixed}; "
                  f"odd/mirror symmetry err {odd:.1e}/{mirror:.1e}")


def test_criterion_06_value_targets():
    checks = {}
    for task in TASKS:
        rng = np.random.default_rng(60)
        nets = nets_for(task, 60, double_q=True)
        batch = batch_for(task, rng, 32)
        batch["done"][:] = False
        env = BatchEnv(task, 1, rng)
        s1 = batch["next_obs"]
        a1 = forward_mlp(nets.policy_target, s1)
        y1 = nstep_target(batch, 1, 0.9, nets.policy, nets.policy_target, nets.q_target[0], env)
        want = batch["rew"] + 0.9 * q_value(nets.q_target[0], s1, a1)
        checks[f"{task.name} n=1"] = np.max(np.abs(y1 - want)) < 1e-13
        y = clipped_double_q_target(batch, 0.9, nets.policy_target, nets.q_target)
        singles = [batch["rew"] + 0.9 * q_value(qt, s1, a1) for qt in nets.q_target]
        checks[f"{task.name} v2 min"] = bool(np.all(y == np.minimum(*singles)))
        yt = td3_target(batch, 0.9, nets.policy_target, nets.q_target, 0.1, 0.5, np.random.default_rng(1))
        r2 = np.random.default_rng(1)
        high = task.action_high
        at = np.clip(a1 / high + np.clip(r2.normal(0, 0.1, size=a1.shape), -0.5, 0.5), -1, 1) * high
        smooth = [batch["rew"] + 0.9 * q_value(qt, s1, at) for qt in nets.q_target]
        checks[f"{task.name} td3 min"] = bool(np.all(yt == np.minimum(*smooth)))
        checks[f"{task.name} gamma=0"] = (
            np.array_equal(nstep_target(batch, 25, 0.0, nets.policy, nets.policy_target, nets.q_target[0], env),
                           batch["rew"])
            and np.array_equal(clipped_double_q_target(batch, 0.0, nets.policy_target, nets.q_target), batch["rew"])
            and np.array_equal(td3_target(batch, 0.0, nets.policy_target, nets.q_target, 0.1, 0.5,
                                          np.random.default_rng(2)), batch["rew"]))
    failed = [k for k, v in checks.items() if not v]
    record(6, not failed, f"{len(checks) - len(failed)}/{len(checks)} exact checks" + (f"; failed {failed}" if failed else ""))


def _tiny(variant, **kw):
    spec = AlgorithmSpec(variant, n=4, H=4, T=20, batch_reuse=3)
    base = dict(spec=spec, seed=0, batch_size=32, buffer_size=2000, n_agents=8, hidden=(8, 8),
                eval_interval=5, eval_episodes=3)
    base.update(kw)
    return TrainSettings(**base)


def test_criterion_07_runtime(tmp_path):
    equal = {}
    for variant in ("mpg-v1", "mpg-v2", "nstep-dpg", "nstep-adp", "td3"):
        ser = serial_train(VehicleTask(), _tiny(variant), 15, out_dir=tmp_path / variant / "s")
        asy = async_train(VehicleTask(), _tiny(variant, topology=Topology(1, 1, 1)), 15,
                          out_dir=tmp_path / variant / "a", rendezvous=True)
        la = read_metrics(tmp_path / variant / "s" / "metrics.csv")
        lb = read_metrics(tmp_path / variant / "a" / "metrics.csv")
        strip = lambda rows: [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in rows]
        same = json.dumps(strip(la)) == json.dumps(strip(lb)) and len(la) == 3
        equal[variant] = same and np.array_equal(ser.nets.to_flat(), asy.nets.to_flat())
    topo = Topology(n_actors=2, n_buffers=2, n_learners=12, grad_queue=4)
    res = async_train(PendulumTask(), _tiny("td3", topology=topo, eval_interval=2500, hidden=(4,), n_agents=4,
                                            batch_size=16), 10_000)
    bound = topo.grad_queue + topo.n_learners
    audit = res.iteration == 10_000 and res.staleness.max <= bound
    ok = all(equal.values()) and audit
    record(7, ok, f"rendezvous==serial {sum(equal.values())}/5 variants; staleness max {res.staleness.max} "
                  f"<= {bound} over {res.iteration} updates ({res.staleness.dropped} dropped)")


def test_criterion_08_bias_trends():
    with Clock() as clk:
        rows = pg_bias_diagnostic(VehicleTask(), horizons=(0, 1, 2, 5, 10, 25), seeds=range(20), hidden=(32, 32),
                                  regimes=("critic", "model"))
        trends = bias_trends(rows)
    ok = trends["critic"] < 0 and trends["model"] > 0 and clk.cpu < 600
    record(8, ok, f"spearman critic {trends['critic']:+.3f}, model {trends['model']:+.3f} "
                  f"(20 seeds, n in 0,1,2,5,10,25) in {clk}")


# desk-scale reproductions --------------------------------------------------------------

def _logs(task, variant):
    out = {}
    for seed in SEEDS:
        d = RUNS / task / variant / f"seed{seed}"
        if (d / "metrics.csv").exists():
            out[seed] = (read_metrics(d / "metrics.csv"), (d / "done.json").exists())
    return out


def _first_hit(rows, goal, limit):
    for r in rows:
        if r["iteration"] <= limit and r["eval_return_mean"] >= goal:
            return int(r["iteration"])
    return None


def _final(rows, budget=30_000):
    last = [r for r in rows if r["iteration"] == budget]
    return last[0]["eval_return_mean"] if last else None


def test_criterion_09_path_tracking_speed():
    parts, ok = [], True
    for variant in ("mpg-v1", "mpg-v2"):
        logs = _logs("path_tracking", variant)
        hits = {s: _first_hit(rows, -30.0, 15_000) for s, (rows, _) in logs.items()}
        reached = sum(h is not None for h in hits.values())
        ok &= reached >= 2
        parts.append(f"{variant} reached -30 by 15k in {reached}/3 seeds "
                     f"({', '.join(f's{s}:{h}' for s, h in hits.items()) or 'no logs'})")
    record(9, ok, "; ".join(parts))


def test_criterion_10_path_tracking_ordering():
    finals = {}
    for variant in ("mpg-v1", "mpg-v2", "nstep-adp", "nstep-dpg"):
        vals = [_final(rows) for rows, _ in _logs("path_tracking", variant).values()]
        vals = [v for v in vals if v is not None]
        finals[variant] = (float(np.mean(vals)) if vals else math.nan, len(vals))
    m1, m2, adp, dpg = (finals[v][0] for v in ("mpg-v1", "mpg-v2", "nstep-adp", "nstep-dpg"))
    complete = all(k == 3 for _, k in finals.values())
    ok = complete and m1 >= -10 and m2 >= -10 and adp <= -30 and min(m1, m2) > dpg
    detail = ", ".join(f"{v} {m:.2f} ({k}/3)" for v, (m, k) in finals.items())
    record(10, ok, f"final mean returns at 30k: {detail}")


def test_criterion_11_pendulum():
    logs = _logs("inverted_pendulum", "mpg-v2")
    hits = {s: _first_hit(rows, -2.0, 30_000) for s, (rows, _) in logs.items()}
    reached = sum(h is not None for h in hits.values())
    record(11, reached >= 2, f"mpg-v2 reached -2 in {reached}/3 seeds "
                             f"({', '.join(f's{s}:{h}' for s, h in hits.items()) or 'no logs'})")


def test_criterion_12_throughput():
    task = VehicleTask()
    base = TrainSettings(spec=AlgorithmSpec("mpg-v1", H=25, n=25))
    one = update_interval_ms(task, with_learners(base, 1), 40)
    many = update_interval_ms(task, with_learners(base, 12), 40)
    dpg = update_interval_ms(task, with_learners(TrainSettings(spec=AlgorithmSpec("nstep-dpg")), 1), 40)
    speedup = one / many
    ok = speedup >= 5 and many <= 3 * dpg
    record(12, ok, f"update interval H=25: 1 learner {one:.0f} ms, 12 learners {many:.0f} ms "
                   f"({speedup:.1f}x); n-step DPG 1 learner {dpg:.0f} ms ({many / dpg:.1f}x); "
                   f"{os.cpu_count()} cpu core(s)"
                   + ("; on one core the gain is thread CPU share, not parallel compute" if os.cpu_count() == 1 else ""))
