from __future__ import annotations

from dataclasses import dataclass

# value target, policy gradient, critic count; one row per algorithm
VARIANTS = {
    "mpg-v1": ("nstep", "mixed", False),
    "mpg-v2": ("clipped_double_q", "mixed", True),
    "nstep-dpg": ("nstep", "dpg", False),
    "nstep-adp": ("nstep", "model", False),
    "td3": ("td3", "dpg", True),
}


def canonical_variant(name: str) -> str:
    key = name.strip().lower().replace("_", "-").replace(" ", "-")
    key = {"n-step-dpg": "nstep-dpg", "n-step-adp": "nstep-adp", "mpgv1": "mpg-v1", "mpgv2": "mpg-v2"}.get(key, key)
    if key not in VARIANTS:
        raise ValueError(f"unknown algorithm {name!r}; expected one of {sorted(VARIANTS)}")
    return key


@dataclass
class AlgorithmSpec:
    variant: str = "mpg-v1"
    n: int = 25
    H: int = 25
    delay: int = 2
    batch_reuse: int = 10
    gamma: float = 0.98
    tau: float = 0.005
    eta: float = 0.1
    T: int = 9000
    explore_std: float = 0.1
    smooth_std: float = 0.1
    smooth_clip: float = 0.5
    weight_cutoff: float = 1e-5
    terminal: str = "absorbing"

    def __post_init__(self):
        self.variant = canonical_variant(self.variant)
        if self.terminal not in ("absorbing", "zero"):
            raise ValueError(f"terminal must be 'absorbing' or 'zero', got {self.terminal!r}")

    @property
    def value_target(self) -> str:
        return VARIANTS[self.variant][0]

    @property
    def policy_gradient(self) -> str:
        return VARIANTS[self.variant][1]

    @property
    def double_q(self) -> bool:
        return VARIANTS[self.variant][2]

    @property
    def needs_env_rollouts(self) -> bool:
        return self.value_target == "nstep"

    @property
    def needs_model(self) -> bool:
        return self.policy_gradient in ("mixed", "model")
