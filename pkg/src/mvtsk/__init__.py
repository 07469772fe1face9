"""Multi-view transfer TSK fuzzy classifier and EEG benchmark tooling."""

from .antecedent import AntecedentBank, cluster_antecedents, membership
from .core import (
    FeatureStats,
    LabeledSample,
    MultiViewDataset,
    TrainConfig,
    ValidationError,
    ViewDataset,
    decode_labels,
    one_hot_encode,
    validate_multiview,
)
from .fuzzy_map import (
    FuzzyDesignMatrix,
    firing_strength_matrix,
    firing_strengths,
    map_dataset,
    map_sample,
)
from .transfer import (
    MmdMatrix,
    SourceKnowledge,
    anchor_value,
    build_mmd,
    mmd_value,
    transfer_value,
)
from .trainer import (
    MultiViewModel,
    TrainingDivergedError,
    TrainTrace,
    fit,
    predict,
    predict_labels,
    update_weights,
)
from .tsk import (
    ConsequentBlock,
    TskModel,
    decision_matrix,
    decision_values,
    fit_tsk,
    predict_class,
    ridge_consequents,
)
from .features import (
    FeatureConfig,
    SignalRecord,
    WindowSpec,
    extract_multiview,
    segment,
)
from .dataio import (
    ArchiveError,
    ParseError,
    SynthSpec,
    load_model,
    load_raw,
    read_features,
    save_model,
    save_record,
    synth_domains,
    write_features,
)
from .experiment import (
    ExperimentConfig,
    Prediction,
    ResultRow,
    run_gridsearch_task,
    run_transfer,
)

__version__ = "0.1.0"
