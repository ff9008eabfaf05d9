"""Tabular causal identification and evaluation operators."""

from __future__ import annotations

from .bounds import SensitivityModel, UnboundedWeightsError, ope_bounds, snips_estimate, weight_box_bounds
from .identify import (
    DomainPair,
    NonConformingSCM,
    TransportModel,
    backdoor_adjust,
    counterfactual_outcome,
    exact_backdoor_inputs,
    frontdoor_adjust,
    interventional_dynamics,
    observational_dynamics,
    transport_estimate,
)
from .pipeline import PipelineResult, identify_kernel, run_causal_pipeline
from .scm import TabularSCM, load_scm, save_scm, scm_from_json, scm_to_json
from .value import (
    associational_value_iteration,
    causal_q_values,
    causal_value_iteration,
    do_rollout_value,
)

__all__ = [
    "DomainPair", "NonConformingSCM", "PipelineResult", "SensitivityModel",
    "TabularSCM", "TransportModel", "UnboundedWeightsError",
    "associational_value_iteration", "backdoor_adjust", "causal_q_values",
    "causal_value_iteration", "counterfactual_outcome", "do_rollout_value",
    "exact_backdoor_inputs", "frontdoor_adjust", "identify_kernel",
    "interventional_dynamics", "load_scm", "observational_dynamics",
    "ope_bounds", "run_causal_pipeline", "save_scm", "scm_from_json",
    "scm_to_json", "snips_estimate", "transport_estimate", "weight_box_bounds",
]
