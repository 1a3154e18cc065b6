"""Quality-aware semi-supervised segmentation testbed on synthetic cine phantoms.

Core capabilities: seeded phantom cohorts with exact ground truth, curve
extraction and clinical metrics, trainable segmentation and curve-QC
models, ROC/Youden operating points, best-in-class pseudo-label selection,
dense-CRF refinement, and a five-scenario training comparison harness.
"""

from .errors import CorruptArtifactError, ValidationError
from .phantom import (
    CineCase,
    CohortSpec,
    CorruptionSpec,
    Geometry,
    LabelMap,
    corrupt_labels,
    generate_cohort,
)
from .curves import (
    ClinicalMetrics,
    PhysioCurve,
    clinical_metrics,
    prepare_qc_input,
    structure_series,
)
from .qc import (
    QCDataset,
    QCEntry,
    QCVerdict,
    RocCurve,
    build_qc_dataset,
    load_qc_dataset,
    rank_select,
    roc,
    save_qc_dataset,
    youden_threshold,
)
from .crf import CrfParams, refine, refine_labelmap
from .pipeline import (
    MetricsReport,
    RunRecord,
    ScenarioConfig,
    compare,
    dice,
    evaluate,
    paired_ttest,
    plan_census,
    pooled_dice,
    run_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "ValidationError",
    "CorruptArtifactError",
    "CohortSpec",
    "CineCase",
    "LabelMap",
    "Geometry",
    "CorruptionSpec",
    "generate_cohort",
    "corrupt_labels",
    "PhysioCurve",
    "ClinicalMetrics",
    "structure_series",
    "clinical_metrics",
    "prepare_qc_input",
    "QCDataset",
    "QCEntry",
    "QCVerdict",
    "RocCurve",
    "build_qc_dataset",
    "save_qc_dataset",
    "load_qc_dataset",
    "roc",
    "youden_threshold",
    "rank_select",
    "CrfParams",
    "refine",
    "refine_labelmap",
    "ScenarioConfig",
    "RunRecord",
    "MetricsReport",
    "dice",
    "pooled_dice",
    "paired_ttest",
    "evaluate",
    "run_scenario",
    "compare",
    "plan_census",
]
