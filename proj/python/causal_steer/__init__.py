"""Causal counterfactual video steering."""

from ._core import (
    CausalSteerError,
    builtin_graph,
    cosine,
    evaluate,
    extract_interventions,
    load_manifest,
    mutilate,
    parents,
    parse_attributes,
    render_evaluation_instruction,
    render_target_interventions,
    steer,
    version,
)

__version__ = version

__all__ = [
    "CausalSteerError",
    "builtin_graph",
    "cosine",
    "evaluate",
    "extract_interventions",
    "load_manifest",
    "mutilate",
    "parents",
    "parse_attributes",
    "render_evaluation_instruction",
    "render_target_interventions",
    "steer",
]
