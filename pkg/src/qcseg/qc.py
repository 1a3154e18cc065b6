"""Quality-control datasets, ROC construction and operating-point selection.

Conventions: the positive class is "erroneous" throughout, matching the
goal of maximizing sensitivity of error detection. ``roc`` accepts
probability-of-accurate scores and internally ranks by (1 - p); reported
thresholds live in that flipped (erroneousness) space, strictly decreasing
from +inf to -inf, so sensitivity is non-decreasing along the curve.
A verdict threshold on probability-of-accurate is ``1 - threshold``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import prepare_qc_input, structure_series
from .errors import ValidationError
from .phantom import CineCase, CorruptionSpec, LabelMap, corrupt_labels, task_classes

LABEL_ACCURATE = "accurate"
LABEL_ERRONEOUS = "erroneous"


@dataclass
class QCEntry:
    case_id: str
    features: np.ndarray  # (T, D)
    label: str
    provenance: str


@dataclass
class QCDataset:
    entries: list[QCEntry] = field(default_factory=list)

    def validate(self):
        ids = [e.case_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValidationError("case_ids must be unique", field="entries")
        labels = {e.label for e in self.entries}
        if not labels <= {LABEL_ACCURATE, LABEL_ERRONEOUS}:
            raise ValidationError(f"unknown labels {labels}", field="entries")
        if labels != {LABEL_ACCURATE, LABEL_ERRONEOUS}:
            raise ValidationError("both labels must be present", field="entries")

    def counts(self) -> dict[str, int]:
        out = {LABEL_ACCURATE: 0, LABEL_ERRONEOUS: 0}
        for e in self.entries:
            out[e.label] += 1
        return out


@dataclass
class RocCurve:
    """Operating points (threshold, sensitivity, specificity), thresholds
    strictly decreasing; AUC by the trapezoid rule."""

    points: list[tuple[float, float, float]]
    auc: float


@dataclass
class QCVerdict:
    case_id: str
    prob_accurate: float
    threshold: float  # on prob_accurate; good iff prob_accurate >= threshold
    decision: str

    @staticmethod
    def from_score(case_id: str, prob_accurate: float, threshold: float) -> "QCVerdict":
        decision = "good" if prob_accurate >= threshold else "erroneous"
        return QCVerdict(case_id, prob_accurate, threshold, decision)


def qc_feature_channels(task: str) -> list[int]:
    """Class ids whose curves feed the QC classifier (LV+RV for sax)."""
    classes = task_classes(task)
    if task == "aorta":
        return [classes["aorta"]]
    return [classes["lv_blood"], classes["rv_blood"]]


def case_qc_features(case: CineCase, labels: LabelMap, norm: str = "max") -> np.ndarray:
    curves = [structure_series(labels, cid, case.geometry) for cid in qc_feature_channels(labels.task)]
    return prepare_qc_input(curves, norm=norm)


def build_qc_dataset(
    cases: list[CineCase],
    corruption_plan: dict[str, CorruptionSpec] | None = None,
    human_label_file=None,
    labels_by_case: dict[str, LabelMap] | None = None,
    norm: str = "max",
) -> QCDataset:
    """Assemble a QC training set from a cohort.

    Exactly one label source: a corruption plan (cases named in it get
    corrupted label maps and the erroneous label) or a human verdict file
    (JSON lines with case_id and verdict). Features are area/volume curves
    of the case's label maps, max-normalized by default.
    """
    if (corruption_plan is None) == (human_label_file is None):
        raise ValidationError(
            "exactly one of corruption_plan or human_label_file required", field="corruption_plan"
        )
    by_id = {c.case_id: c for c in cases}

    def _labels_for(case: CineCase) -> LabelMap:
        if labels_by_case is not None:
            if case.case_id not in labels_by_case:
                raise ValidationError(f"missing labels for case {case.case_id}", field="labels_by_case")
            return labels_by_case[case.case_id]
        if case.gt_labels is None:
            raise ValidationError(f"case {case.case_id} has no labels", field="cases")
        return case.gt_labels

    entries = []
    if corruption_plan is not None:
        for cid in corruption_plan:
            if cid not in by_id:
                raise ValidationError(f"corruption plan names unknown case {cid}", field="corruption_plan")
        for case in cases:
            clean = _labels_for(case)
            if case.case_id in corruption_plan:
                damaged = corrupt_labels(clean, corruption_plan[case.case_id])
                feats = case_qc_features(case, damaged, norm=norm)
                entries.append(QCEntry(case.case_id, feats, LABEL_ERRONEOUS, "synthetic_corruption"))
            else:
                feats = case_qc_features(case, clean, norm=norm)
                entries.append(QCEntry(case.case_id, feats, LABEL_ACCURATE, "synthetic_corruption"))
    else:
        verdicts = {}
        with open(human_label_file) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                verdicts[rec["case_id"]] = rec["verdict"]
        for case in cases:
            if case.case_id not in verdicts:
                raise ValidationError(f"missing verdict for case {case.case_id}", field="human_label_file")
            v = verdicts[case.case_id]
            label = LABEL_ACCURATE if v in ("good", LABEL_ACCURATE) else LABEL_ERRONEOUS
            feats = case_qc_features(case, _labels_for(case), norm=norm)
            entries.append(QCEntry(case.case_id, feats, label, "human_review"))
    ds = QCDataset(entries)
    ds.validate()
    return ds


def save_qc_dataset(ds: QCDataset, path) -> Path:
    """Write JSON lines {case_id, label, provenance, features_path};
    feature arrays go to .npy files next to the JSONL."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    feat_dir = path.parent / (path.stem + "_features")
    feat_dir.mkdir(exist_ok=True)
    with open(path, "w") as f:
        for e in ds.entries:
            fpath = feat_dir / f"{e.case_id}.npy"
            np.save(fpath, e.features)
            rec = {
                "case_id": e.case_id,
                "label": e.label,
                "provenance": e.provenance,
                "features_path": str(fpath.relative_to(path.parent)),
            }
            f.write(json.dumps(rec) + "\n")
    return path


def load_qc_dataset(path) -> QCDataset:
    path = Path(path)
    entries = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            fpath = Path(rec["features_path"])
            if not fpath.is_absolute():
                fpath = path.parent / fpath
            feats = np.load(fpath)
            entries.append(QCEntry(rec["case_id"], feats, rec["label"], rec["provenance"]))
    ds = QCDataset(entries)
    ds.validate()
    return ds


def roc(prob_accurate, labels) -> RocCurve:
    """ROC for detecting erroneous cases from probability-of-accurate scores.

    ``labels`` may be strings ("accurate"/"erroneous") or 0/1 ints with
    1 = erroneous. Thresholds are midpoints between consecutive distinct
    erroneousness scores (1 - p) plus +/-inf sentinels; Se/Sp by exact
    counting; AUC by the trapezoid rule over (1-Sp, Se).
    """
    scores = np.asarray(prob_accurate, dtype=np.float64)
    y = np.asarray([1 if l in (1, True, LABEL_ERRONEOUS) else 0 for l in labels], dtype=np.int64)
    if scores.shape != y.shape or scores.ndim != 1:
        raise ValidationError("scores and labels must be equal-length 1-D", field="scores")
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores must be finite", field="scores")
    pos = int(y.sum())
    neg = int(len(y) - pos)
    if pos == 0 or neg == 0:
        raise ValidationError("both classes must be present", field="labels")

    err = 1.0 - scores  # higher = more likely erroneous
    distinct = np.unique(err)
    thresholds = [np.inf]
    thresholds += [0.5 * (a + b) for a, b in zip(distinct[:-1], distinct[1:])][::-1]
    thresholds.append(-np.inf)

    points = []
    for thr in thresholds:
        pred = err >= thr
        tp = int(np.count_nonzero(pred & (y == 1)))
        tn = int(np.count_nonzero(~pred & (y == 0)))
        se = tp / pos
        sp = tn / neg
        points.append((float(thr), se, sp))

    fpr = np.array([1.0 - sp for _, _, sp in points])
    tpr = np.array([se for _, se, _ in points])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(points, auc)


def youden_threshold(curve: RocCurve, w: float = 0.7) -> float:
    """Operating threshold maximizing the weighted Youden index
    J_w = 2 (w Se + (1-w) Sp) - 1; ties prefer higher Se, then higher Sp."""
    if not (0.5 <= w < 1.0):
        raise ValidationError("w must lie in [0.5, 1)", field="w")
    if not curve.points:
        raise ValidationError("empty ROC", field="curve")
    best = None
    for thr, se, sp in curve.points:
        j = 2.0 * (w * se + (1.0 - w) * sp) - 1.0
        key = (j, se, sp)
        if best is None or key > best[0]:
            best = (key, thr)
    return best[1]


def roc_to_csv(curve: RocCurve, path) -> None:
    import csv

    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["threshold", "sensitivity", "specificity"])
        for thr, se, sp in curve.points:
            w.writerow([repr(thr), repr(se), repr(sp)])


def rank_select(scores: dict[str, float], k: int = 30) -> list[str]:
    """The k highest-scoring case ids, descending score, ties by id."""
    if k < 0:
        raise ValidationError("must be >= 0", field="k")
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [cid for cid, _ in ranked[:k]]
