"""Architecture search as pairwise ranking.

Train a gradient boosted tree ranker on architecture pairs, read which
features it relies on, prune the space, and search what is left, optionally
under a hardware latency budget.
"""

from . import errors
from .importance import (
    ImportanceReport,
    build_report,
    feature_importance,
    prune_space,
    randomize_feature,
    select_features,
    total_error,
)
from .metrics import kendall_tau, pair_accuracy, spearman_rho
from .oracle import (
    EvalRecord,
    HardwareProfile,
    Oracle,
    SyntheticOracle,
    SyntheticOracleConfig,
    TabularOracle,
    analytic_flops,
    analytic_latency,
    analytic_params,
    default_synthetic_config,
    trimmed_mean,
)
from .pairs import Direction, PairExample, build_pairs, split_by_architecture
from .ranker import (
    RankerModel,
    RegressionTree,
    TrainConfig,
    fit_tree,
    load_model,
    pair_grad_hess,
    pair_loss,
    pair_prob,
    save_model,
    train,
)
from .search import (
    EvolutionConfig,
    LatencyPredictor,
    SearchResult,
    evolutionary_search,
    fit_latency_predictor,
    hardware_aware_select,
    random_search,
    top_k,
)
from .seeding import substream
from .space import (
    Architecture,
    EncodedMatrix,
    FeatureDef,
    Kind,
    PRESETS,
    Scope,
    SearchSpace,
    arch_hash,
    build_architecture,
    cardinality,
    encode,
    encode_batch,
    enumerate_architectures,
    fix_feature,
    preset_iwslt_high_acc,
    preset_lm,
    preset_synthetic_small,
    preset_wmt_high_acc,
    sample_uniform,
    validate_space,
)

__version__ = "0.1.0"
