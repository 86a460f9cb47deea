"""Run configuration stored as an INI file.

Grammar: standard ``configparser`` INI. Sections ``[run]``, ``[algorithm]``,
``[training]`` and ``[topology]`` hold the fixed keys below; ``[env]`` holds
simulator parameter overrides (``force_max = 3.0``) and ``[reset]`` holds
reset-range overrides (``x = -0.1, 0.1``). Tuples are comma separated,
booleans are ``true``/``false``, and ``algorithm.T = auto`` picks the task's
weighting-ramp length.

Environment variables ``MIXEDPG_<SECTION>__<KEY>`` override file values,
e.g. ``MIXEDPG_RUN__BUDGET=200``.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..algo import VARIANTS, AlgorithmSpec, canonical_variant
from ..envs import TASKS, make_task
from ..runtime import Topology, TrainSettings

ENV_PREFIX = "MIXEDPG_"
RAMP_LENGTH = {"path_tracking": 9000, "inverted_pendulum": 4000}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _positive(v):
    return None if v >= 1 else "must be at least 1"


def _non_negative(v):
    return None if v >= 0 else "must be non-negative"


def _unit(v):
    return None if 0.0 <= v <= 1.0 else "must lie in [0, 1]"


def _discount(v):
    return None if 0.0 <= v < 1.0 else "must lie in [0, 1)"


def _eta(v):
    return None if 0.0 <= v < 1.0 else "must lie in [0, 1)"


def _choice(options):
    def check(v):
        return None if v in options else f"must be one of {', '.join(options)}"
    return check


def _lr_pair(v):
    if len(v) != 2:
        return "needs two values: start, final"
    return None if all(x >= 0 for x in v) else "learning rates must be non-negative"


def _hidden(v):
    return None if len(v) >= 1 and all(x >= 1 for x in v) else "needs at least one positive layer width"


def _betas(v):
    return None if len(v) == 2 and all(0.0 <= b < 1.0 for b in v) else "needs two values in [0, 1)"


def _seeds(v):
    if not v:
        return "needs at least one seed"
    return None if len(set(v)) == len(v) and all(s >= 0 for s in v) else "seeds must be distinct and non-negative"


def _ramp(v):
    return None if v is None or v >= 0 else "must be non-negative or auto"


def _f(section, default, check=None, kind=None):
    return field(default=default, metadata={"section": section, "check": check, "kind": kind})


@dataclass
class RunConfig:
    task: str = _f("run", "path_tracking", _choice(TASKS))
    variant: str = _f("run", "mpg-v1", _choice(tuple(VARIANTS)))
    seeds: tuple = _f("run", (0, 1, 2, 3, 4), _seeds, int)
    budget: int = _f("run", 30_000, _non_negative)
    eval_interval: int = _f("run", 3000, _positive)
    eval_episodes: int = _f("run", 5, _positive)
    mode: str = _f("run", "serial", _choice(("serial", "async")))
    prior_noise: bool = _f("run", True)

    n: int = _f("algorithm", 25, _positive)
    H: int = _f("algorithm", 25, _non_negative)
    delay: int = _f("algorithm", 2, _positive)
    batch_reuse: int = _f("algorithm", 10, _positive)
    gamma: float = _f("algorithm", 0.98, _discount)
    tau: float = _f("algorithm", 0.005, _unit)
    eta: float = _f("algorithm", 0.1, _eta)
    T: int | None = _f("algorithm", None, _ramp, "ramp")
    explore_std: float = _f("algorithm", 0.1, _non_negative)
    smooth_std: float = _f("algorithm", 0.1, _non_negative)
    smooth_clip: float = _f("algorithm", 0.5, _non_negative)
    weight_cutoff: float = _f("algorithm", 1e-5, _unit)
    terminal: str = _f("algorithm", "absorbing", _choice(("absorbing", "zero")))

    batch_size: int = _f("training", 256, _positive)
    buffer_size: int = _f("training", 500_000, _positive)
    n_agents: int = _f("training", 128, _positive)
    hidden: tuple = _f("training", (256, 256), _hidden, int)
    policy_lr: tuple = _f("training", (3e-4, 3e-6), _lr_pair, float)
    value_lr: tuple = _f("training", (8e-4, 8e-6), _lr_pair, float)
    lr_horizon: int = _f("training", 100_000, _non_negative)
    adam_betas: tuple = _f("training", (0.9, 0.999), _betas, float)

    n_actors: int = _f("topology", 2, _positive)
    n_buffers: int = _f("topology", 2, _positive)
    n_learners: int = _f("topology", 12, _positive)
    grad_queue: int = _f("topology", 4, _positive)
    exp_queue: int = _f("topology", 8, _positive)
    inbox: int = _f("topology", 16, _positive)

    env: dict = field(default_factory=dict, metadata={"section": "env"})
    reset: dict = field(default_factory=dict, metadata={"section": "reset"})

    def __post_init__(self):
        try:
            self.variant = canonical_variant(self.variant)
        except ValueError:
            pass
        self.validate()

    # -- derived objects ---------------------------------------------------

    @property
    def ramp_length(self) -> int:
        return RAMP_LENGTH[self.task] if self.T is None else self.T

    def spec(self) -> AlgorithmSpec:
        return AlgorithmSpec(
            self.variant, n=self.n, H=self.H, delay=self.delay, batch_reuse=self.batch_reuse, gamma=self.gamma,
            tau=self.tau, eta=self.eta, T=self.ramp_length, explore_std=self.explore_std,
            smooth_std=self.smooth_std, smooth_clip=self.smooth_clip, weight_cutoff=self.weight_cutoff,
            terminal=self.terminal,
        )

    def topology(self) -> Topology:
        return Topology(self.n_actors, self.n_buffers, self.n_learners, self.grad_queue, self.exp_queue, self.inbox)

    def settings(self, seed: int) -> TrainSettings:
        return TrainSettings(
            spec=self.spec(), seed=seed, batch_size=self.batch_size, buffer_size=self.buffer_size,
            n_agents=self.n_agents, hidden=tuple(self.hidden), policy_lr=tuple(self.policy_lr),
            value_lr=tuple(self.value_lr), lr_horizon=self.lr_horizon, adam_betas=tuple(self.adam_betas),
            eval_interval=self.eval_interval, eval_episodes=self.eval_episodes, prior_noise=self.prior_noise,
            topology=self.topology(),
        )

    def make_task(self):
        try:
            return make_task(self.task, self.env or None, self.reset or None)
        except TypeError as exc:
            raise ConfigError(f"env: unknown simulator parameter ({exc})") from exc

    # -- validation and serialization -----------------------------------

    def validate(self) -> None:
        for f in dataclasses.fields(self):
            check = f.metadata.get("check")
            if check is None:
                continue
            problem = check(getattr(self, f.name))
            if problem:
                raise ConfigError(f"{f.metadata['section']}.{f.name}: {problem}, got {getattr(self, f.name)!r}")
        for k, v in self.reset.items():
            if len(v) != 2 or not v[0] <= v[1]:
                raise ConfigError(f"reset.{k}: needs 'low, high' with low <= high, got {v!r}")
        if self.variant in ("mpg-v1", "mpg-v2") and self.H == 0:
            raise ConfigError("algorithm.H: mixed variants need H >= 1, got 0")

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for f in dataclasses.fields(self):
            sec = f.metadata["section"]
            if not cp.has_section(sec):
                cp.add_section(sec)
            value = getattr(self, f.name)
            if isinstance(value, dict):
                for k, v in value.items():
                    cp.set(sec, k, _fmt(v))
            else:
                cp.set(sec, f.name, "auto" if f.metadata.get("kind") == "ramp" and value is None else _fmt(value))
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {v}" for k, v in cp.items(sec))
            lines.append("")
        return "\n".join(lines)

    def save(self, path) -> None:
        Path(path).write_text(self.to_ini())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_bool(text: str, where: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{where}: expected true or false, got {text!r}")


def _parse(f: dataclasses.Field, text: str):
    where = f"{f.metadata['section']}.{f.name}"
    default = f.default if f.default is not dataclasses.MISSING else None
    kind = f.metadata.get("kind")
    try:
        if kind == "ramp":
            return None if text.strip().lower() == "auto" else int(text)
        if isinstance(default, bool):
            return _parse_bool(text, where)
        if isinstance(default, tuple):
            parts = [p.strip() for p in text.split(",") if p.strip()]
            return tuple(kind(p) for p in parts)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            x = float(text)
            if not math.isfinite(x):
                raise ValueError
            return x
        return text.strip()
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {text!r}") from None


def _parse_free(section: str, key: str, text: str):
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected a number or 'low, high', got {text!r}") from None
    if section == "env":
        if len(parts) != 1:
            raise ConfigError(f"env.{key}: expected a single number, got {text!r}")
        return parts[0]
    return tuple(parts)


def _field_index():
    idx = {}
    for f in dataclasses.fields(RunConfig):
        idx[(f.metadata["section"], f.name.lower())] = f
    return idx


def parse_config(text: str = "", environ=None) -> RunConfig:
    """Build a config from INI text plus ``MIXEDPG_*`` overrides."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    raw: dict[tuple[str, str], str] = {}
    for sec in cp.sections():
        for k, v in cp.items(sec):
            raw[(sec.lower(), k)] = v
    environ = os.environ if environ is None else environ
    for name, v in environ.items():
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        sec, _, key = name[len(ENV_PREFIX):].partition("__")
        raw[(sec.lower(), key if sec.lower() in ("env", "reset") else key.lower())] = v
    index = _field_index()
    values: dict = {"env": {}, "reset": {}}
    for (sec, key), text in raw.items():
        if sec in ("env", "reset"):
            values[sec][key] = _parse_free(sec, key, text)
            continue
        f = index.get((sec, key.lower()))
        if f is None:
            sections = sorted({s for s, _ in index})
            raise ConfigError(f"{sec}.{key}: unknown setting (sections: {', '.join(sections)})")
        values[f.name] = _parse(f, text)
    return RunConfig(**values)


def load_config(path=None, environ=None) -> RunConfig:
    text = ""
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        text = p.read_text()
    return parse_config(text, environ)
