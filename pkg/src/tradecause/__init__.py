"""tradecause: learn causal graphs from interventional pipeline runs,
estimate treatment effects, and rank the causes of metric trade-offs."""

__version__ = "0.1.0"

from .core import (
    AteQuery,
    CausalGraph,
    Direction,
    ObservationMatrix,
    SignSpec,
    Tier,
    VariableKind,
    VariableSpec,
    build_graph,
    common_ancestors,
    is_cause,
    load_run_table,
    load_study_config,
)
from .discovery import (
    BgeHyper,
    GraphAccuracy,
    OverlapReport,
    SearchConfig,
    bge_local_score,
    bge_score,
    compare_graphs,
    eval_against_truth,
    learn_graph,
    skeleton_f1,
)
from .inference import (
    DmlConfig,
    EffectEstimate,
    KNearest,
    LinearRidge,
    adjustment_set,
    ate,
    conditional_mean,
    dml_effect,
)
from .scm import Scm, ScmConfig, do_sample, random_scm, sample, true_ate
from .selection import Objective, ObjectiveTerm, SelectionPlan, fit_response, select_methods
from .tradeoff import (
    AnalysisResult,
    CauseEvidence,
    CauseRole,
    ConfidenceTable,
    Sign,
    TradeoffQuery,
    aggregate,
    analyze,
    detect_tradeoff,
    export_report,
    sign,
)

__all__ = [name for name in dir() if not name.startswith("_")]
