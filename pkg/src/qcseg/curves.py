"""Downstream quantities from label maps: area/volume curves and clinical metrics.

Pixel counting is exact integer arithmetic; physical scaling happens once
per frame, so results do not depend on iteration order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .phantom import Geometry, LabelMap, task_classes

UNIT_AREA = "mm2"
UNIT_VOLUME = "mL"


@dataclass
class PhysioCurve:
    """Per-structure scalar time series over the cardiac cycle."""

    structure: int
    values: np.ndarray  # (T,)
    unit: str
    structure_name: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __len__(self):
        return len(self.values)


@dataclass
class ClinicalMetrics:
    lvedv: float
    lvesv: float
    lvef: float
    rvedv: float
    rvesv: float
    rvef: float
    ed_frame: int
    es_frame: int

    def as_dict(self) -> dict:
        return {
            "lvedv": self.lvedv,
            "lvesv": self.lvesv,
            "lvef": self.lvef,
            "rvedv": self.rvedv,
            "rvesv": self.rvesv,
            "rvef": self.rvef,
            "ed_frame": self.ed_frame,
            "es_frame": self.es_frame,
        }


def structure_series(labels: LabelMap, structure: int, geometry: Geometry) -> PhysioCurve:
    """Area (aorta, mm^2) or volume (sax, mL) of one structure per frame.

    Volume sums pixel counts over slices (uniform-thickness Simpson rule)
    before scaling: value_t = sum_s count(t, s) * sx * sy [* dz / 1000].
    """
    classes = task_classes(labels.task)
    if structure not in classes.values():
        raise ValidationError(
            f"structure {structure} not in task {labels.task!r} classes", field="structure"
        )
    geometry.validate()
    counts = (labels.masks == structure).sum(axis=(2, 3)).sum(axis=1)  # (T,) ints
    name = next(k for k, v in classes.items() if v == structure)
    if labels.task == "aorta":
        values = counts * geometry.pixel_area_mm2()
        return PhysioCurve(structure, values, UNIT_AREA, name)
    values = counts * geometry.voxel_volume_mm3() / 1000.0
    return PhysioCurve(structure, values, UNIT_VOLUME, name)


def _edv_esv(curve: PhysioCurve):
    v = curve.values
    ed = int(np.argmax(v))
    es = int(np.argmin(v))
    return float(v[ed]), float(v[es]), ed, es


def clinical_metrics(lv: PhysioCurve, rv: PhysioCurve) -> ClinicalMetrics:
    """EDV/ESV/EF from full-cycle volume curves (extrema convention).

    ED/ES frames are the argmax/argmin of the LV curve, ties to the lowest
    index. EF is in percent.
    """
    for name, c in (("lv", lv), ("rv", rv)):
        if c.unit != UNIT_VOLUME:
            raise ValidationError(f"{name} curve must be in mL", field=name)
    if len(lv) != len(rv):
        raise ValidationError("curves must share T", field="rv")
    lvedv, lvesv, ed, es = _edv_esv(lv)
    rvedv, rvesv, _, _ = _edv_esv(rv)
    if lvedv <= 0 or rvedv <= 0:
        raise ValidationError("EF undefined for zero EDV", field="lv" if lvedv <= 0 else "rv")
    lvef = 100.0 * (lvedv - lvesv) / lvedv
    rvef = 100.0 * (rvedv - rvesv) / rvedv
    return ClinicalMetrics(lvedv, lvesv, lvef, rvedv, rvesv, rvef, ed, es)


def prepare_qc_input(curves: list[PhysioCurve], norm: str = "max") -> np.ndarray:
    """Stack curves into a (T, D) feature sequence for the QC classifier.

    norm="max" divides each channel by its max; an all-zero channel stays
    zero. norm="none" passes raw values through.
    """
    if norm not in ("max", "none"):
        raise ValidationError(f"unknown norm {norm!r}", field="norm")
    if not curves:
        raise ValidationError("need at least one curve", field="curves")
    T = len(curves[0])
    for c in curves[1:]:
        if len(c) != T:
            raise ValidationError("curves must share T", field="curves")
    feats = np.stack([c.values for c in curves], axis=1).astype(np.float64)
    if norm == "max":
        peaks = feats.max(axis=0)
        safe = np.where(peaks > 0, peaks, 1.0)
        feats = feats / safe
    return feats


def curves_to_csv(curves: list[PhysioCurve], path) -> None:
    """Write curves as CSV with columns frame, structure, value, unit."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["frame", "structure", "value", "unit"])
        for c in curves:
            for t, v in enumerate(c.values):
                w.writerow([t, c.structure_name or c.structure, repr(float(v)), c.unit])
