"""Policy objectives, weighting rules, value targets and diagnostics."""
from .diagnostics import RolloutCritic, bias_trends, oracle_horizon, pg_bias_diagnostic
from .nets import ActorCritic, act, explore, q_value
from .returns import (
    adp_policy_loss,
    critic_value,
    dpg_policy_loss,
    mixed_policy_loss,
    model_return_X,
    policy_gradient,
    theorem1_check,
    unified_returns,
)
from .spec import VARIANTS, AlgorithmSpec, canonical_variant
from .targets import (
    ConfigurationError,
    clipped_double_q_target,
    nstep_target,
    td3_target,
    value_loss_grad,
    value_targets,
)
from .weighting import WeightSchedule, lambda_value, rule_errors, rule_weights

__all__ = [
    "ActorCritic",
    "AlgorithmSpec",
    "ConfigurationError",
    "RolloutCritic",
    "VARIANTS",
    "WeightSchedule",
    "act",
    "adp_policy_loss",
    "bias_trends",
    "canonical_variant",
    "clipped_double_q_target",
    "critic_value",
    "dpg_policy_loss",
    "explore",
    "lambda_value",
    "mixed_policy_loss",
    "model_return_X",
    "nstep_target",
    "oracle_horizon",
    "pg_bias_diagnostic",
    "policy_gradient",
    "q_value",
    "rule_errors",
    "rule_weights",
    "td3_target",
    "theorem1_check",
    "unified_returns",
    "value_loss_grad",
    "value_targets",
]
