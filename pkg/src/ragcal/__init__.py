"""ragcal: confidence-calibration harness for pseudo-RAG multiple-choice QA.

Pipeline: load rationale-bearing QA items, build controlled document sets
(answer-bearing and/or distractor passages), render forced-choice prompts
with the document block at a chosen position, score per-label log-probs with
a synthetic or remote backend, and analyze calibration (entropy, best
probability, accuracy, ECE, ACE) split by answer correctness.
"""

from .backends import (
    AUTH_TOKEN_ENV,
    BackendError,
    BackendId,
    RemoteBackend,
    SchemaError,
    SyntheticBackend,
    SyntheticConfig,
    TransportError,
    http_score,
    score_options,
    synth_score,
)
from .contextgen import (
    ContextDoc,
    ContextGenError,
    InsufficientPoolError,
    Mixture,
    Position,
    ScenarioSpec,
    build_context,
    sample_distractors,
)
from .dataset import (
    DatasetError,
    QaItem,
    dump_dataset,
    filter_with_rationale,
    load_dataset,
)
from .metrics import (
    CalibrationBin,
    MetricConfig,
    OptionScores,
    PredictionRecord,
    accuracy,
    ace,
    best_prob,
    calibration_bins,
    ece,
    entropy,
    normalize,
)
from .prompt import (
    DEFAULT_SYSTEM_PROMPT,
    PromptInstance,
    PromptTemplate,
    relabel_options,
    render_prompt,
)
from .report import (
    ConfusionTable,
    MetricReport,
    aggregate,
    confusion_by_group,
    error_confusion,
    export_violin,
)
from .runner import (
    RunConfig,
    RunResult,
    ScoreCache,
    cache_key,
    load_records,
    run_grid,
    write_records,
)

__version__ = "0.1.0"

__all__ = [
    "AUTH_TOKEN_ENV",
    "BackendError",
    "BackendId",
    "CalibrationBin",
    "ConfusionTable",
    "ContextDoc",
    "ContextGenError",
    "DatasetError",
    "DEFAULT_SYSTEM_PROMPT",
    "InsufficientPoolError",
    "MetricConfig",
    "MetricReport",
    "Mixture",
    "OptionScores",
    "Position",
    "PredictionRecord",
    "PromptInstance",
    "PromptTemplate",
    "QaItem",
    "RemoteBackend",
    "RunConfig",
    "RunResult",
    "ScenarioSpec",
    "SchemaError",
    "ScoreCache",
    "SyntheticBackend",
    "SyntheticConfig",
    "TransportError",
    "accuracy",
    "ace",
    "aggregate",
    "best_prob",
    "build_context",
    "cache_key",
    "calibration_bins",
    "confusion_by_group",
    "dump_dataset",
    "ece",
    "entropy",
    "error_confusion",
    "export_violin",
    "filter_with_rationale",
    "http_score",
    "load_dataset",
    "load_records",
    "normalize",
    "relabel_options",
    "render_prompt",
    "run_grid",
    "sample_distractors",
    "score_options",
    "synth_score",
    "write_records",
]
