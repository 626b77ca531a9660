"""Explainable state-space modeling of full-body movement.

Builds one second-order equation per joint-angle channel over a skeleton
topology, estimates time-varying coefficients with a Kalman-filter MLE
trainer, and uses the fitted representations for significance analysis,
sensor selection, tolerance intervals, movement generation, and HMM
recognition benchmarks.
"""

from .topology import SkeletonTopology, TopologyError, default_topology, load_topology
from .motion import (
    MotionDataError,
    MovementDataset,
    PostureSequence,
    load_motion_csv,
    load_motion_dir,
    save_motion_csv,
)
from .equations import (
    AssumptionSet,
    CoefficientTrajectory,
    GomEquation,
    GomSystem,
    build_equation,
    build_system,
    eval_equation,
    eval_system_matrix,
)
from .alignment import align_to_template, dtw_distance, dtw_path, select_reference
from .synth import (
    ChannelDynamics,
    ClassSpec,
    Coupling,
    GroundTruth,
    SynthSpec,
    UnstableSpecError,
    synth_generate,
)
from .kalman import FilterError, KfConfig, KfResult, TrainedEquation, kf_filter, mle_fit, fit_reference
from .analysis import (
    SensorRanking,
    SignificanceReport,
    ToleranceBand,
    coefficient_ttest,
    rank_and_select,
    sensor_channels,
    significance_report,
    tolerance_intervals,
)
from .generation import (
    ForecastMetrics,
    GenerationDiverged,
    GenerationResult,
    generate,
    generate_from_bundle,
    metrics,
    reconstruct,
)
from .recognition import HmmModel, RecognitionReport, classify, evaluate_f1, train_hmm
from .exchange import (
    CoefficientBundle,
    EquationCoefficients,
    ExchangeFormatError,
    bundle_from_trained,
    load_bundle,
    one_step_predictions,
    save_bundle,
    validate_against_topology,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionSet",
    "ChannelDynamics",
    "ClassSpec",
    "CoefficientBundle",
    "CoefficientTrajectory",
    "Coupling",
    "EquationCoefficients",
    "ExchangeFormatError",
    "FilterError",
    "ForecastMetrics",
    "GenerationDiverged",
    "GenerationResult",
    "GomEquation",
    "GomSystem",
    "GroundTruth",
    "HmmModel",
    "KfConfig",
    "KfResult",
    "MotionDataError",
    "MovementDataset",
    "PostureSequence",
    "RecognitionReport",
    "SensorRanking",
    "SignificanceReport",
    "SkeletonTopology",
    "SynthSpec",
    "ToleranceBand",
    "TopologyError",
    "TrainedEquation",
    "UnstableSpecError",
    "align_to_template",
    "build_equation",
    "build_system",
    "bundle_from_trained",
    "classify",
    "coefficient_ttest",
    "default_topology",
    "dtw_distance",
    "dtw_path",
    "eval_equation",
    "eval_system_matrix",
    "evaluate_f1",
    "fit_reference",
    "generate",
    "generate_from_bundle",
    "kf_filter",
    "load_bundle",
    "load_motion_csv",
    "load_motion_dir",
    "load_topology",
    "metrics",
    "mle_fit",
    "one_step_predictions",
    "rank_and_select",
    "reconstruct",
    "save_bundle",
    "save_motion_csv",
    "select_reference",
    "sensor_channels",
    "significance_report",
    "synth_generate",
    "train_hmm",
    "tolerance_intervals",
    "validate_against_topology",
]
