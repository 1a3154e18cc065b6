"""Scenario orchestration: five training regimes, evaluation and comparison.

Scenarios: train on the full labelled pool; on half of it; half plus K
randomly selected pseudo-labelled cases; the same with CRF-refined
pseudo-labels; and half plus the K cases ranked best by the downstream
curve QC classifier. Evaluation reports per-case per-class Dice, pooled
mean/sd, clinical metrics against ground truth, per-case deltas against a
baseline run and paired t-tests against a reference run.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np
from scipy import special

from . import store
from .crf import CrfParams, refine_labelmap
from .curves import ClinicalMetrics, clinical_metrics, structure_series
from .errors import ValidationError
from .phantom import CineCase, LabelMap, foreground_classes, task_classes
from .qc import case_qc_features, load_qc_dataset, rank_select
from .models import (
    QCArchConfig,
    SegArchConfig,
    TrainConfig,
    TrainedModel,
    qc_score,
    segment,
    train_qc_classifier,
    train_segmenter,
)

SCENARIOS = ("full", "half", "ssl_random", "ssl_random_crf", "semiqcseg")
SSL_SCENARIOS = ("ssl_random", "ssl_random_crf", "semiqcseg")

DEFAULT_FRAMES_PER_SUBJECT = {"sax": 2, "aorta": 3}
DEFAULT_ARCH = {"sax": "unet", "aorta": "fcn"}


# ---------------------------------------------------------------------------
# metrics primitives


def dice(pred: np.ndarray, gt: np.ndarray) -> float:
    """Dice overlap 2|A.B| / (|A| + |B|); two empty masks score 1."""
    pred = np.asarray(pred).astype(bool)
    gt = np.asarray(gt).astype(bool)
    if pred.shape != gt.shape:
        raise ValidationError(f"shape mismatch {pred.shape} vs {gt.shape}", field="pred")
    a = int(pred.sum())
    b = int(gt.sum())
    if a + b == 0:
        return 1.0
    inter = int(np.count_nonzero(pred & gt))
    return 2.0 * inter / (a + b)


def pooled_dice(values) -> tuple[float, float]:
    """Flat arithmetic mean and population sd over all entries."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValidationError("empty input", field="values")
    return float(arr.mean()), float(arr.std(ddof=0))


def paired_ttest(x, y) -> tuple[float, float]:
    """Paired two-sided t-test; p via the regularized incomplete beta.

    Degenerate conventions: zero differences give (0, 1); constant nonzero
    differences give (+/-inf, 0).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("inputs must be equal-length 1-D", field="x")
    n = len(x)
    if n < 2:
        raise ValidationError("need n >= 2 pairs", field="x")
    d = x - y
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return (np.inf if mean > 0 else -np.inf), 0.0
    t = mean / (sd / np.sqrt(n))
    df = n - 1
    p = float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))
    return float(t), p


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class MetricsReport:
    dice_rows: list[tuple[str, str, float]]  # (case_id, class_name, dice)
    per_case_pooled: dict[str, float]
    pooled_mean: float
    pooled_sd: float
    clinical_rows: list[dict]  # per case, predicted and ground_truth sources
    deltas: Optional[dict[str, float]] = None
    baseline_run_id: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "dice_rows": [[c, k, v] for c, k, v in self.dice_rows],
            "per_case_pooled": self.per_case_pooled,
            "pooled_mean": self.pooled_mean,
            "pooled_sd": self.pooled_sd,
            "clinical_rows": self.clinical_rows,
            "deltas": self.deltas,
            "baseline_run_id": self.baseline_run_id,
        }

    @staticmethod
    def from_dict(d: dict) -> "MetricsReport":
        return MetricsReport(
            dice_rows=[(c, k, v) for c, k, v in d["dice_rows"]],
            per_case_pooled=d["per_case_pooled"],
            pooled_mean=d["pooled_mean"],
            pooled_sd=d["pooled_sd"],
            clinical_rows=d["clinical_rows"],
            deltas=d.get("deltas"),
            baseline_run_id=d.get("baseline_run_id"),
        )


def _predict_labels(model, case: CineCase) -> LabelMap:
    if callable(model):
        return model(case)
    return segment(model, case)[1]


def _case_clinical(labels: LabelMap, case: CineCase) -> Optional[ClinicalMetrics]:
    classes = task_classes(labels.task)
    lv = structure_series(labels, classes["lv_blood"], case.geometry)
    rv = structure_series(labels, classes["rv_blood"], case.geometry)
    try:
        return clinical_metrics(lv, rv)
    except ValidationError:
        return None  # empty prediction: EF undefined


def evaluate(model, test_cases: Sequence[CineCase], baseline_run=None) -> MetricsReport:
    """Score a model (or any case -> LabelMap callable) on a test cohort.

    Dice is computed per case and foreground class over all frames and
    slices; pooled statistics flatten (case x class). For SAX, clinical
    metrics from predicted and ground-truth curves are attached per case.
    """
    cases = sorted(test_cases, key=lambda c: c.case_id)
    if not cases:
        raise ValidationError("empty test cohort", field="test_cases")
    for c in cases:
        if c.gt_labels is None:
            raise ValidationError(f"case {c.case_id} lacks ground truth", field="test_cases")

    task = cases[0].gt_labels.task
    fg = foreground_classes(task)
    dice_rows = []
    per_case_pooled = {}
    clinical_rows = []
    for case in cases:
        pred = _predict_labels(model, case)
        gt = case.gt_labels
        cdices = []
        for name, cid in fg.items():
            d = dice(pred.masks == cid, gt.masks == cid)
            dice_rows.append((case.case_id, name, d))
            cdices.append(d)
        per_case_pooled[case.case_id] = float(np.mean(cdices))
        if task == "sax":
            for source, labels in (("predicted", pred), ("ground_truth", gt)):
                cm = _case_clinical(labels, case)
                row = {"case_id": case.case_id, "source": source}
                row.update(cm.as_dict() if cm is not None else
                           {k: float("nan") for k in ClinicalMetrics(0, 0, 0, 0, 0, 0, 0, 0).as_dict()})
                clinical_rows.append(row)

    mean, sd = pooled_dice([v for _, _, v in dice_rows])
    deltas = None
    baseline_id = None
    if baseline_run is not None:
        base = baseline_run.report.per_case_pooled
        missing = set(per_case_pooled) - set(base)
        if missing:
            raise ValidationError(f"baseline lacks cases {sorted(missing)}", field="baseline_run")
        deltas = {cid: per_case_pooled[cid] - base[cid] for cid in per_case_pooled}
        baseline_id = baseline_run.run_id
    return MetricsReport(dice_rows, per_case_pooled, mean, sd, clinical_rows, deltas, baseline_id)


# ---------------------------------------------------------------------------
# scenario configuration and census


@dataclass
class ScenarioConfig:
    scenario: str
    task: str = "sax"
    labelled_dir: str = ""
    test_dir: str = ""
    unlabelled_dir: Optional[str] = None
    qc_dataset: Optional[str] = None
    k_select: int = 30
    labelled_frames_per_subject: Optional[int] = None
    frames_added_per_case: Optional[int] = None  # None = every frame
    arch: Optional[str] = None  # None = task default (sax unet, aorta fcn)
    depth: int = 3
    base_channels: int = 8
    epochs: int = 60
    batch_size: int = 16
    learning_rate: float = 1e-3
    qc_epochs: int = 300
    qc_learning_rate: float = 3e-3
    qc_dense_dim: int = 16
    qc_hidden: int = 24
    youden_weight: float = 0.7
    seed: int = 0
    iterations: int = 1
    early_stop_on_val_loss: bool = False
    validation_fraction: float = 0.0
    crf: CrfParams = field(default_factory=CrfParams)
    run_id: str = ""

    def __post_init__(self):
        if isinstance(self.crf, dict):
            self.crf = CrfParams(**self.crf)
        if not self.run_id:
            self.run_id = self.scenario

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"unknown scenario {self.scenario!r}", field="scenario")
        task_classes(self.task)
        if self.scenario in SSL_SCENARIOS and not self.unlabelled_dir:
            raise ValidationError("SSL scenarios need an unlabelled pool", field="unlabelled_dir")
        if self.scenario == "semiqcseg" and not self.qc_dataset:
            raise ValidationError("semiqcseg needs a QC training set", field="qc_dataset")
        if self.k_select < 0:
            raise ValidationError("must be >= 0", field="k_select")
        if self.iterations < 1:
            raise ValidationError("must be >= 1", field="iterations")
        if self.early_stop_on_val_loss and self.validation_fraction <= 0:
            raise ValidationError(
                "early stopping needs a validation fraction", field="validation_fraction"
            )
        self.crf.validate()

    def frames_per_subject(self) -> int:
        if self.labelled_frames_per_subject is not None:
            return self.labelled_frames_per_subject
        return DEFAULT_FRAMES_PER_SUBJECT[self.task]

    def seg_arch(self) -> SegArchConfig:
        return SegArchConfig(
            arch=self.arch or DEFAULT_ARCH[self.task],
            depth=self.depth,
            base_channels=self.base_channels,
            n_classes=len(task_classes(self.task)),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["crf"] = self.crf.as_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "ScenarioConfig":
        return ScenarioConfig(**d)


def plan_census(
    scenario: str,
    n_labelled_subjects: int,
    frames_per_subject: int,
    k: int = 0,
    frames_added_per_case: int = 0,
) -> list[dict]:
    """Training-set census arithmetic, stage by stage.

    An "image" is one timeframe's full slice stack; augmentation therefore
    adds exactly k * frames_added_per_case images.
    """
    n0 = n_labelled_subjects if scenario == "full" else n_labelled_subjects // 2
    stages = [{"stage": "initial", "subjects": n0, "images": n0 * frames_per_subject}]
    if scenario in SSL_SCENARIOS:
        added = k * frames_added_per_case
        stages.append(
            {
                "stage": "augmented",
                "subjects": n0 + k,
                "images": n0 * frames_per_subject + added,
                "images_added": added,
            }
        )
    return stages


REFERENCE_PRESETS = {
    # full-scale training-data summaries (subjects / frames / selection size)
    "reference_sax": {"task": "sax", "n_labelled": 500, "frames_per_subject": 2, "T": 50, "k": 30},
    "reference_aorta": {"task": "aorta", "n_labelled": 138, "frames_per_subject": 3, "T": 100, "k": 30},
}


# ---------------------------------------------------------------------------
# run record


@dataclass
class RunRecord:
    run_id: str
    config: dict
    seed: int
    census: list[dict]
    loss_history: dict[str, list[float]]
    val_loss_history: dict[str, list[float]]
    model_checksum: str
    report: MetricsReport
    selected_cases: list[list[str]] = field(default_factory=list)
    qc_model_checksum: Optional[str] = None
    wall_clock_sec: float = 0.0
    log_lines: list[str] = field(default_factory=list)
    model: Optional[TrainedModel] = None  # not serialized in record.json

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "seed": self.seed,
            "census": self.census,
            "loss_history": self.loss_history,
            "val_loss_history": self.val_loss_history,
            "model_checksum": self.model_checksum,
            "report": self.report.to_dict(),
            "selected_cases": self.selected_cases,
            "qc_model_checksum": self.qc_model_checksum,
            "wall_clock_sec": self.wall_clock_sec,
        }

    @staticmethod
    def from_dict(d: dict) -> "RunRecord":
        return RunRecord(
            run_id=d["run_id"],
            config=d["config"],
            seed=d["seed"],
            census=d["census"],
            loss_history=d["loss_history"],
            val_loss_history=d["val_loss_history"],
            model_checksum=d["model_checksum"],
            report=MetricsReport.from_dict(d["report"]),
            selected_cases=d.get("selected_cases", []),
            qc_model_checksum=d.get("qc_model_checksum"),
            wall_clock_sec=d.get("wall_clock_sec", 0.0),
        )


# ---------------------------------------------------------------------------
# scenario execution


def _sub_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence([int(seed), *key])
    return int(ss.generate_state(1)[0])


def labelled_frame_indices(case: CineCase, task: str, frames_per_subject: int, seed: int) -> list[int]:
    """Which frames of a subject carry manual labels.

    SAX: the ED and ES phases (plus seeded extras if more are requested);
    aorta: seeded random frames spread over the cycle.
    """
    T = case.images.shape[0]
    ed = int(case.subject_params.get("ed_frame", 0))
    es = int(case.subject_params.get("es_frame", max(1, round(0.4 * T))))
    stable = int.from_bytes(hashlib.sha256(case.case_id.encode()).digest()[:4], "little")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xF7A, stable]))
    if task == "sax":
        frames = [ed, es]
        extra = [t for t in range(T) if t not in frames]
        while len(frames) < min(frames_per_subject, T) and extra:
            pick = int(rng.choice(len(extra)))
            frames.append(extra.pop(pick))
        return sorted(frames[:frames_per_subject]) if frames_per_subject >= 2 else [ed]
    picks = rng.choice(T, size=min(frames_per_subject, T), replace=False)
    return sorted(int(t) for t in picks)


def _planes(case: CineCase, labels: LabelMap, frames: Sequence[int]):
    out = []
    for t in frames:
        for s in range(case.images.shape[1]):
            out.append((case.images[t, s], labels.masks[t, s]))
    return out


def _added_frames(T: int, frames_added: Optional[int]) -> list[int]:
    if frames_added is None or frames_added >= T:
        return list(range(T))
    idx = np.unique(np.linspace(0, T - 1, frames_added).round().astype(int))
    return [int(t) for t in idx]


def _check_disjoint(name_a, ids_a, name_b, ids_b):
    overlap = set(ids_a) & set(ids_b)
    if overlap:
        raise ValidationError(
            f"{name_a} and {name_b} share cases {sorted(overlap)[:5]}", field=name_b
        )


def run_scenario(cfg: ScenarioConfig, baseline_run: Optional[RunRecord] = None) -> RunRecord:
    """Execute one scenario end to end and evaluate on the test cohort.

    Identical config and seeds reproduce the record bit for bit (modulo
    wall clock). SSL scenarios retrain from scratch after augmentation.
    """
    cfg.validate()
    t0 = time.monotonic()
    log: list[str] = []

    labelled = store.load_cohort(cfg.labelled_dir)
    test = store.load_cohort(cfg.test_dir)
    unlabelled = store.load_cohort(cfg.unlabelled_dir) if cfg.unlabelled_dir else []
    if not labelled:
        raise ValidationError("labelled pool is empty", field="labelled_dir")
    if not test:
        raise ValidationError("test cohort is empty", field="test_dir")

    lab_ids = [c.case_id for c in labelled]
    test_ids = [c.case_id for c in test]
    pool_ids = [c.case_id for c in unlabelled]
    _check_disjoint("labelled pool", lab_ids, "test set", test_ids)
    _check_disjoint("unlabelled pool", pool_ids, "test set", test_ids)
    _check_disjoint("labelled pool", lab_ids, "unlabelled pool", pool_ids)

    qc_entries = None
    if cfg.scenario == "semiqcseg":
        qc_ds = load_qc_dataset(cfg.qc_dataset)
        qc_ids = [e.case_id for e in qc_ds.entries]
        _check_disjoint("qc training set", qc_ids, "labelled pool", lab_ids)
        _check_disjoint("qc training set", qc_ids, "unlabelled pool", pool_ids)
        _check_disjoint("qc training set", qc_ids, "test set", test_ids)
        qc_entries = qc_ds.entries

    if cfg.scenario in SSL_SCENARIOS and len(unlabelled) < cfg.k_select:
        raise ValidationError(
            f"unlabelled pool ({len(unlabelled)}) smaller than K={cfg.k_select}",
            field="k_select",
        )

    # subject-level split: first half of a seed-shuffled id list
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 0xA11]))
    shuffled = list(shuffle_rng.permutation(sorted(lab_ids)))
    train_ids = shuffled if cfg.scenario == "full" else shuffled[: len(shuffled) // 2]
    by_id = {c.case_id: c for c in labelled}
    train_cases = [by_id[cid] for cid in sorted(train_ids)]
    if not train_cases:
        raise ValidationError("training split is empty", field="labelled_dir")

    fps = cfg.frames_per_subject()
    base_pairs = []
    for case in train_cases:
        frames = labelled_frame_indices(case, cfg.task, fps, cfg.seed)
        base_pairs.extend(_planes(case, case.gt_labels, frames))
    log.append(f"initial training: {len(train_cases)} subjects, {len(base_pairs)} planes")

    arch = cfg.seg_arch()
    train_cfg = TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        optimizer="adam",
        seed=_sub_seed(cfg.seed, 1, 0),
        loss="cross_entropy",
        validation_fraction=cfg.validation_fraction,
    )
    model = train_segmenter(arch, base_pairs, train_cfg)
    loss_history = {"initial": model.loss_history}
    val_history = {"initial": model.val_loss_history}

    census = plan_census(
        cfg.scenario,
        len(lab_ids),
        fps,
        cfg.k_select,
        0,
    )
    selected_rounds: list[list[str]] = []
    qc_model = None

    if cfg.scenario in SSL_SCENARIOS:
        if qc_entries is not None:
            qc_arch = QCArchConfig(
                input_dim=qc_entries[0].features.shape[1],
                dense_dim=cfg.qc_dense_dim,
                lstm_hidden=cfg.qc_hidden,
            )
            qc_cfg = TrainConfig(
                epochs=cfg.qc_epochs,
                batch_size=32,
                learning_rate=cfg.qc_learning_rate,
                optimizer="adam",
                seed=_sub_seed(cfg.seed, 2),
                loss="bce",
            )
            qc_data = [(e.features, 1 if e.label == "accurate" else 0) for e in qc_entries]
            qc_model = train_qc_classifier(qc_data, qc_arch, qc_cfg)
            log.append(f"qc classifier trained on {len(qc_data)} curves")

        pool = {c.case_id: c for c in unlabelled}
        pseudo_pairs: list = []
        prev_val = val_history["initial"][-1] if val_history["initial"] else None
        frames_added_n = None
        for rnd in range(cfg.iterations):
            remaining = sorted(pool)
            if len(remaining) < cfg.k_select:
                log.append(f"round {rnd}: pool exhausted, stopping")
                break
            predictions = {}
            prob_maps = {}
            for cid in remaining:
                pm, lm = segment(model, pool[cid])
                predictions[cid] = lm
                if cfg.scenario == "ssl_random_crf":
                    prob_maps[cid] = pm
            if cfg.scenario == "semiqcseg":
                scores = {}
                for cid in remaining:
                    feats = case_qc_features(pool[cid], predictions[cid])
                    scores[cid] = qc_score(qc_model, feats)
                chosen = rank_select(scores, cfg.k_select)
                log.append(
                    f"round {rnd}: qc scores span "
                    f"[{min(scores.values()):.3f}, {max(scores.values()):.3f}]"
                )
            else:
                pick_rng = np.random.default_rng(
                    np.random.SeedSequence([int(cfg.seed), 3, rnd])
                )
                chosen = sorted(str(c) for c in pick_rng.choice(remaining, cfg.k_select, replace=False))
            selected_rounds.append(list(chosen))
            log.append(f"round {rnd}: selected {list(chosen)}")

            for cid in chosen:
                case = pool.pop(cid)
                labels = predictions[cid]
                frames = _added_frames(case.images.shape[0], cfg.frames_added_per_case)
                frames_added_n = len(frames)
                if cfg.scenario == "ssl_random_crf":
                    refined = refine_labelmap(prob_maps[cid], case.images, cfg.crf)
                    labels = LabelMap(labels.task, refined)
                pseudo_pairs.extend(_planes(case, labels, frames))

            retrain_cfg = TrainConfig(
                epochs=cfg.epochs,
                batch_size=cfg.batch_size,
                learning_rate=cfg.learning_rate,
                optimizer="adam",
                seed=_sub_seed(cfg.seed, 1, rnd + 1),
                loss="cross_entropy",
                validation_fraction=cfg.validation_fraction,
            )
            new_model = train_segmenter(arch, base_pairs + pseudo_pairs, retrain_cfg)
            loss_history[f"round_{rnd}"] = new_model.loss_history
            val_history[f"round_{rnd}"] = new_model.val_loss_history

            if cfg.early_stop_on_val_loss and new_model.val_loss_history:
                cur_val = new_model.val_loss_history[-1]
                if prev_val is not None and cur_val > prev_val:
                    log.append(
                        f"round {rnd}: validation loss rose ({cur_val:.4f} > {prev_val:.4f}), "
                        "keeping previous model"
                    )
                    selected_rounds.pop()
                    break
                prev_val = cur_val
            model = new_model

        census = plan_census(
            cfg.scenario,
            len(lab_ids),
            fps,
            sum(len(r) for r in selected_rounds),
            frames_added_n or 0,
        )

    report = evaluate(model, test, baseline_run)
    wall = time.monotonic() - t0
    log.append(f"pooled dice {report.pooled_mean:.4f} (sd {report.pooled_sd:.4f})")

    return RunRecord(
        run_id=cfg.run_id,
        config=cfg.to_dict(),
        seed=cfg.seed,
        census=census,
        loss_history=loss_history,
        val_loss_history=val_history,
        model_checksum=model.checksum,
        report=report,
        selected_cases=selected_rounds,
        qc_model_checksum=qc_model.checksum if qc_model is not None else None,
        wall_clock_sec=wall,
        log_lines=log,
        model=model,
    )


# ---------------------------------------------------------------------------
# cross-run comparison


def compare(runs: Sequence[RunRecord], reference: str, baseline: Optional[str] = None) -> dict:
    """Aggregate runs into Dice and clinical summary tables plus per-case
    deltas against the baseline (default: the half run, if present)."""
    by_id = {r.run_id: r for r in runs}
    if reference not in by_id:
        raise ValidationError(f"reference run {reference!r} not given", field="reference")
    ref = by_id[reference]
    case_ids = sorted(ref.report.per_case_pooled)
    for r in runs:
        if sorted(r.report.per_case_pooled) != case_ids:
            raise ValidationError(
                f"run {r.run_id!r} evaluated on a different test cohort", field="runs"
            )

    if baseline is None:
        halves = [r.run_id for r in runs if r.config.get("scenario") == "half"]
        baseline = halves[0] if halves else reference
    if baseline not in by_id:
        raise ValidationError(f"baseline run {baseline!r} not given", field="baseline")
    base = by_id[baseline]

    ref_pooled = [ref.report.per_case_pooled[c] for c in case_ids]
    summary = []
    for r in runs:
        pooled = [r.report.per_case_pooled[c] for c in case_ids]
        t, p = (0.0, 1.0) if r.run_id == reference else paired_ttest(pooled, ref_pooled)
        row = {
            "run_id": r.run_id,
            "scenario": r.config.get("scenario", ""),
            "mean_dice": float(np.mean([v for _, _, v in r.report.dice_rows])),
            "sd_dice": float(np.std([v for _, _, v in r.report.dice_rows], ddof=0)),
            "t_vs_reference": t,
            "p_vs_reference": p,
        }
        row.update(_clinical_aggregate(r.report, "predicted"))
        summary.append(row)
    gt_row = {
        "run_id": "ground_truth",
        "scenario": "manual",
        "mean_dice": 1.0,
        "sd_dice": 0.0,
        "t_vs_reference": float("nan"),
        "p_vs_reference": float("nan"),
    }
    gt_row.update(_clinical_aggregate(ref.report, "ground_truth"))
    summary.append(gt_row)

    deltas = []
    for r in runs:
        if r.run_id == baseline:
            continue
        for cid in case_ids:
            deltas.append(
                {
                    "run_id": r.run_id,
                    "case_id": cid,
                    "delta": r.report.per_case_pooled[cid] - base.report.per_case_pooled[cid],
                }
            )
    return {
        "reference": reference,
        "baseline": baseline,
        "case_ids": case_ids,
        "summary": summary,
        "deltas": deltas,
    }


def _clinical_aggregate(report: MetricsReport, source: str) -> dict:
    rows = [r for r in report.clinical_rows if r["source"] == source]
    out = {}
    for key in ("lvedv", "lvef", "rvedv", "rvef"):
        vals = np.array([r[key] for r in rows], dtype=np.float64)
        if len(vals) == 0:
            out[f"{key}_mean"], out[f"{key}_sd"] = float("nan"), float("nan")
        else:
            out[f"{key}_mean"] = float(np.nanmean(vals))
            out[f"{key}_sd"] = float(np.nanstd(vals, ddof=0))
    return out
