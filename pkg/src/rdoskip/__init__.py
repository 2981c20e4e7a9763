"""rdoskip: decision-tree RDO skipping for a toy quad-tree encoder."""

__version__ = "0.1.0"

from .bench import BenchReport, RdPoint, bd_rate, run_benchmark
from .cart import (
    CuSplitClassifier,
    TreeModel,
    TreeNode,
    best_split,
    gini_impurity,
    grow_tree,
    kfold_validate,
    load_model,
    save_model,
)
from .codec import (
    CodingUnit,
    CuTree,
    EncoderConfig,
    Frame,
    FrameStats,
    ModeResult,
    NeighbourContext,
    RdoStats,
    encode_frame,
    lambda_from_qp,
    merge_skip_test,
    partition_cu,
    rd_cost,
    whole_cu_inter_test,
)
from .criteria import (
    CriteriaBundle,
    Predicate,
    SkipCriterion,
    apply_skip,
    evaluate_criterion,
    load_criteria_bundle,
    write_criteria_file,
)
from .features import (
    Dataset,
    FeatureVector,
    QuantileBinner,
    Sample,
    average_neighbour_depth,
    bin_continuous,
    correlation_table,
    export_dataset,
    extract_sample,
    import_dataset,
    pearson_correlation,
)
from .pipeline import collect_dataset, encode_sequence, train_models
from .pruning import (
    PruneThresholds,
    harvest_criteria,
    path_conjunction,
    select_bundle,
    select_per_depth,
    threshold_plot_data,
)
from .sequences import (
    SequenceSpec,
    generate_sequence,
    parse_sequence_spec,
    read_sequence,
    write_sequence,
)
