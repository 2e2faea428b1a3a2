"""Learning with label proportions: large-margin trainers and a benchmark harness."""

from .data import (
    BagPartition,
    ConfigError,
    Dataset,
    FoldSplit,
    ParseError,
    compute_proportions,
    generate_bags,
    kfold_over_bags,
    parse_sparse_dataset,
    partition_from_json,
    partition_to_json,
    restrict_to_bags,
    scale_attributes,
)
from .kernels import (
    DegenerateKernelError,
    FactorizedFeatures,
    GramMatrix,
    KernelConfig,
    center_features,
    factorize,
    gram,
    kernel_matrix,
    raw_features,
)
from .svm import DualSolution, SolverError, decision_values, solve_dual
from .bagopt import (
    optimize_all_bags,
    optimize_bag_linear_constrained,
    optimize_bag_penalized,
)
from .model import PsvmModel, model_from_json, model_to_json
from .alternating import AlterParams, psvm_objective, train_alter
from .convex import (
    ActiveSet,
    ConvParams,
    find_violated_labeling,
    recover_labels,
    solve_mkl,
    train_conv,
)
from .invcal import InvCalParams, invcal_targets, super_instance_gram, train_invcal
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    bag_error,
    instance_accuracy,
    make_toy_dataset,
    parse_config,
    run_experiment,
)

__version__ = "0.1.0"
