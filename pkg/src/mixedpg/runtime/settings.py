from __future__ import annotations

from dataclasses import dataclass, field

from ..algo.spec import AlgorithmSpec


@dataclass
class Topology:
    n_actors: int = 2
    n_buffers: int = 2
    n_learners: int = 12
    grad_queue: int = 4
    exp_queue: int = 8
    inbox: int = 16

    def validate(self) -> None:
        for name in ("n_actors", "n_buffers", "n_learners", "grad_queue", "exp_queue", "inbox"):
            if getattr(self, name) < 1:
                raise ValueError(f"topology.{name} must be at least 1, got {getattr(self, name)}")


@dataclass
class TrainSettings:
    """Everything a training run needs besides the task object."""

    spec: AlgorithmSpec = field(default_factory=AlgorithmSpec)
    seed: int = 0
    batch_size: int = 256
    buffer_size: int = 500_000
    n_agents: int = 128
    hidden: tuple = (256, 256)
    policy_lr: tuple = (3e-4, 3e-6)
    value_lr: tuple = (8e-4, 8e-6)
    lr_horizon: int = 100_000
    adam_betas: tuple = (0.9, 0.999)
    eval_interval: int = 3000
    eval_episodes: int = 5
    prior_noise: bool = True
    topology: Topology = field(default_factory=Topology)
