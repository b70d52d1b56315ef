"""sigrec: online goal recognition from streaming trajectories.

Modules by capability:

    signature   truncated path signatures (batch, streaming, concatenation)
    trajtree    prefix-sharing trajectory trees with merge/prune compression
    dtw         exact and windowed dynamic time warping
    recognizer  online Bayesian goal posterior over tree branches
    sampler     grid-world trajectory sampling and file formats
    bench       experiment harness, metrics, grid search, reports
    cli         `sigrec` command-line front end
"""
from sigrec.bench import (
    ExperimentSpec,
    GridSearchResult,
    MetricsReport,
    ProblemSpec,
    emit_report,
    grid_search,
    run_experiment,
    sampled_problem,
)
from sigrec.dtw import (
    WarpingPath,
    accumulated_cost_matrix,
    dtw_exact,
    dtw_fast,
    first_occurrence_map,
)
from sigrec.recognizer import (
    EngineConfig,
    EpisodeTerminated,
    GoalPosterior,
    Recognizer,
)
from sigrec.sampler import (
    GridMap,
    SampleRequest,
    SamplerError,
    astar_path,
    load_trajectories,
    sample_k_trajectories,
    save_trajectories,
)
from sigrec.signature import (
    PathSignature,
    SignatureStream,
    batch_signature,
    concat,
    prefix_signatures,
    segment_signature,
    signature_length,
    stream_extend,
)
from sigrec.trajtree import (
    Branch,
    TrajectoryTree,
    TreeDiagnostics,
    TreeFormatError,
    branches,
    build_tree,
    load_tree,
    merge,
    prune,
    save_tree,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "EngineConfig",
    "EpisodeTerminated",
    "ExperimentSpec",
    "GoalPosterior",
    "GridMap",
    "GridSearchResult",
    "MetricsReport",
    "PathSignature",
    "ProblemSpec",
    "Recognizer",
    "SampleRequest",
    "SamplerError",
    "SignatureStream",
    "TrajectoryTree",
    "TreeDiagnostics",
    "TreeFormatError",
    "WarpingPath",
    "accumulated_cost_matrix",
    "astar_path",
    "batch_signature",
    "branches",
    "build_tree",
    "concat",
    "dtw_exact",
    "dtw_fast",
    "emit_report",
    "first_occurrence_map",
    "grid_search",
    "load_trajectories",
    "load_tree",
    "merge",
    "prefix_signatures",
    "prune",
    "run_experiment",
    "sample_k_trajectories",
    "sampled_problem",
    "save_trajectories",
    "save_tree",
    "segment_signature",
    "signature_length",
    "stream_extend",
    "validate",
    "__version__",
]
