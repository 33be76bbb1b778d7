from .datasets import (
    DATASET_FORMATS,
    BcmtdCategory,
    DatasetInstance,
    FormatError,
    InsufficientClass,
    Modality,
    balanced_sample,
    load_dataset,
)
from .reports import (
    AgreementBlock,
    CorrelationBlock,
    DistributionBlock,
    MethodRow,
    MethodTable,
    fmt_pct,
    render_report,
    render_report_csv,
)
from .scoring import (
    TEXT_ERROR_CATEGORIES,
    VISUAL_ERROR_CATEGORIES,
    Confusion,
    DetectionScore,
    HttpScorer,
    JoinError,
    ScorerError,
    UnderstandingScore,
    UnknownCategory,
    category_success_rates,
    exact_match_scorer,
    score_detection,
    score_understanding,
    tally_errors,
)
from .stats import (
    AnnotationMatrix,
    DegenerateInput,
    DegenerateMatrix,
    TieError,
    fleiss_kappa,
    majority_vote,
    point_biserial,
    spearman,
)

__all__ = [
    "DATASET_FORMATS",
    "BcmtdCategory",
    "DatasetInstance",
    "FormatError",
    "InsufficientClass",
    "Modality",
    "balanced_sample",
    "load_dataset",
    "AgreementBlock",
    "CorrelationBlock",
    "DistributionBlock",
    "MethodRow",
    "MethodTable",
    "fmt_pct",
    "render_report",
    "render_report_csv",
    "TEXT_ERROR_CATEGORIES",
    "VISUAL_ERROR_CATEGORIES",
    "Confusion",
    "DetectionScore",
    "HttpScorer",
    "JoinError",
    "ScorerError",
    "UnderstandingScore",
    "UnknownCategory",
    "category_success_rates",
    "exact_match_scorer",
    "score_detection",
    "score_understanding",
    "tally_errors",
    "AnnotationMatrix",
    "DegenerateInput",
    "DegenerateMatrix",
    "TieError",
    "fleiss_kappa",
    "majority_vote",
    "point_biserial",
    "spearman",
]
