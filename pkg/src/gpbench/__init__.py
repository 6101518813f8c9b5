"""Minimalist cross-domain genetic programming benchmark kit.

Two interchangeable program representations (expression forests and
feed-forward grids) evolve against three problem domains: symbolic
regression, Boolean function synthesis, and policy search.  The harness
runs seeded, reproducible experiment batteries; the CLI and HTTP service
are thin frontends over it.
"""

__version__ = "0.1.0"

from .blackbox import (
    BlackBoxProblem,
    BooleanFamily,
    Dataset,
    Metric,
    ParseError,
    TableSizeError,
    TruthTable,
    gen_boolean,
    gen_regression,
    load_dataset,
    load_truth_table,
    save_dataset,
    save_truth_table,
)
from .cgp import CartesianGP, CgpConfig, CgpGenome, CgpProgram
from .core import (
    ConfigurationError,
    Fitness,
    GPModel,
    Hyperparameters,
    Individual,
    Problem,
    RunResult,
    Scheme,
    evolve,
    tournament_select,
)
from .harness import (
    catalogue,
    render_report,
    report_from_json,
    report_to_csv,
    report_to_json,
    run_experiment,
    run_single,
)
from .policy import (
    Agent,
    CartPole,
    Continuous1D,
    Discrete,
    Environment,
    EpisodeConfig,
    GridWorld,
    PolicyProblem,
    rollout,
)
from .primitives import (
    Domain,
    FunctionSet,
    Primitive,
    default_boolean,
    default_real,
    extended_real,
)
from .rng import derive_rng
from .schemas import BenchmarkReport, ExperimentConfig, RunRecord
from .tgp import TgpParams, TreeForest, TreeGP, TreeNode, TreeProgram

__all__ = [
    "__version__",
    "Agent",
    "BenchmarkReport",
    "BlackBoxProblem",
    "BooleanFamily",
    "CartesianGP",
    "CartPole",
    "CgpConfig",
    "CgpGenome",
    "CgpProgram",
    "ConfigurationError",
    "Continuous1D",
    "Dataset",
    "Discrete",
    "Domain",
    "Environment",
    "EpisodeConfig",
    "ExperimentConfig",
    "Fitness",
    "FunctionSet",
    "GPModel",
    "GridWorld",
    "Hyperparameters",
    "Individual",
    "Metric",
    "ParseError",
    "PolicyProblem",
    "Primitive",
    "Problem",
    "RunRecord",
    "RunResult",
    "Scheme",
    "TableSizeError",
    "TgpParams",
    "TreeForest",
    "TreeGP",
    "TreeNode",
    "TreeProgram",
    "TruthTable",
    "catalogue",
    "default_boolean",
    "default_real",
    "derive_rng",
    "evolve",
    "extended_real",
    "gen_boolean",
    "gen_regression",
    "load_dataset",
    "load_truth_table",
    "render_report",
    "report_from_json",
    "report_to_csv",
    "report_to_json",
    "rollout",
    "run_experiment",
    "run_single",
    "save_dataset",
    "save_truth_table",
    "tournament_select",
]
