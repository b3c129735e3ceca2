"""Closed-loop geosteering decision support.

Noisy deep-EM logs are assimilated into an ensemble of latent geomodel
vectors with an ensemble Kalman analysis step; per-realization dynamic
programming plus robust one-step averaging recommends the next drilling
segment. Runs are deterministic under a seed, fully serializable, and
drivable headless (CLI), programmatically (engine), or interactively
(HTTP service + operator UI).
"""

from .assimilation import AnalysisReport, Observation, enkf_analysis, normalized_misfit
from .engine import (
    RunConfig,
    RunState,
    StepRecord,
    config_from_dict,
    config_to_dict,
    init_run,
    load_run,
    misfit_series,
    run_to_completion,
    save_run,
    score,
    step,
)
from .forward import EMLog, simulate_em, simulate_ensemble
from .generator import (
    LATENT_DIM,
    GeneratorConfig,
    LatentEnsemble,
    generate,
    generate_ensemble,
    sample_prior,
)
from .geomodel import (
    Facies,
    FaciesGrid,
    FaciesImage,
    GridGeometry,
    LogResistivityField,
    PetrophysicsTable,
    ProbabilityMap,
    ToolPosition,
    facies_argmax,
    load_facies_grid,
    resistivity_log_field,
    sand_probability_map,
    save_facies_grid,
)
from .optimizer import (
    CostModel,
    Decision,
    RewardImage,
    admissible_actions,
    decide_with_fan,
    reward_image,
    robust_decision,
    segment_cost,
    trace_path,
    value_matrix,
)

__all__ = [
    "AnalysisReport",
    "Observation",
    "enkf_analysis",
    "normalized_misfit",
    "RunConfig",
    "RunState",
    "StepRecord",
    "config_from_dict",
    "config_to_dict",
    "init_run",
    "load_run",
    "misfit_series",
    "run_to_completion",
    "save_run",
    "score",
    "step",
    "EMLog",
    "simulate_em",
    "simulate_ensemble",
    "LATENT_DIM",
    "GeneratorConfig",
    "LatentEnsemble",
    "generate",
    "generate_ensemble",
    "sample_prior",
    "Facies",
    "FaciesGrid",
    "FaciesImage",
    "GridGeometry",
    "LogResistivityField",
    "PetrophysicsTable",
    "ProbabilityMap",
    "ToolPosition",
    "facies_argmax",
    "load_facies_grid",
    "resistivity_log_field",
    "sand_probability_map",
    "save_facies_grid",
    "CostModel",
    "Decision",
    "RewardImage",
    "admissible_actions",
    "decide_with_fan",
    "reward_image",
    "robust_decision",
    "segment_cost",
    "trace_path",
    "value_matrix",
]
