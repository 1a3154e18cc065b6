"""Local review service: serves curves and overlay frames, records verdicts.

The reviewer sees, per case, the structure curves and an animation of
segmentation contours; verdicts land in an append-only JSON-lines log
(latest verdict per case wins) and export as a QC dataset.
"""

from __future__ import annotations

import io
import json
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel
from scipy import ndimage

from .. import store
from ..curves import structure_series
from ..models import load_model, segment
from ..phantom import CineCase, LabelMap, foreground_classes
from ..qc import case_qc_features

CONTOUR_COLORS = {
    1: (230, 60, 60),  # lv blood / aorta
    2: (60, 200, 60),  # lv myocardium
    3: (80, 120, 255),  # rv blood
}


class VerdictBody(BaseModel):
    verdict: str
    reviewer: str = "anonymous"


class LabelStore:
    """Append-only JSONL verdict log; latest verdict per case wins."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.latest: dict[str, dict] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self.latest[rec["case_id"]] = rec

    def record(self, case_id: str, verdict: str, reviewer: str) -> dict:
        rec = {
            "case_id": case_id,
            "verdict": verdict,
            "reviewer": reviewer,
            "timestamp": time.time(),
        }
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as f:
                f.write(json.dumps(rec) + "\n")
            self.latest[case_id] = rec
        return rec


class ReviewService:
    def __init__(self, cohort_dir, run_dir=None, labels_path=None):
        self.cases: dict[str, CineCase] = {
            c.case_id: c for c in store.load_cohort(cohort_dir)
        }
        if not self.cases:
            raise ValueError(f"no cases found under {cohort_dir}")
        self.model = None
        if run_dir is not None:
            ckpt = Path(run_dir) / "checkpoint"
            self.model = load_model(ckpt if ckpt.exists() else run_dir)
        default_labels = Path(run_dir or cohort_dir) / "review_labels.jsonl"
        self.store = LabelStore(Path(labels_path) if labels_path else default_labels)
        self._pred_cache: dict[str, LabelMap] = {}
        self._pred_lock = threading.Lock()

    def labels_for(self, case: CineCase) -> LabelMap:
        if self.model is None:
            if case.gt_labels is None:
                raise HTTPException(404, f"case {case.case_id} has no labels to review")
            return case.gt_labels
        with self._pred_lock:
            if case.case_id not in self._pred_cache:
                self._pred_cache[case.case_id] = segment(self.model, case)[1]
            return self._pred_cache[case.case_id]

    def case_or_404(self, case_id: str) -> CineCase:
        case = self.cases.get(case_id)
        if case is None:
            raise HTTPException(404, f"unknown case {case_id}")
        return case


def _overlay_png(case: CineCase, labels: LabelMap, t: int) -> bytes:
    T, S, H, W = case.images.shape
    canvas = np.zeros((H, S * W, 3), dtype=np.uint8)
    for s in range(S):
        gray = np.round(np.clip(case.images[t, s], 0, 1) * 255).astype(np.uint8)
        tile = np.stack([gray] * 3, axis=-1)
        for cid in np.unique(labels.masks[t, s]):
            if cid == 0:
                continue
            mask = labels.masks[t, s] == cid
            boundary = mask & ~ndimage.binary_erosion(mask)
            tile[boundary] = CONTOUR_COLORS.get(int(cid), (255, 255, 0))
        canvas[:, s * W : (s + 1) * W] = tile
    buf = io.BytesIO()
    Image.fromarray(canvas).save(buf, format="PNG")
    return buf.getvalue()


def create_app(cohort_dir, run_dir=None, labels_path=None, static_dir=None) -> FastAPI:
    svc = ReviewService(cohort_dir, run_dir, labels_path)
    app = FastAPI(title="segmentation review")
    app.state.service = svc

    @app.get("/cases")
    def list_cases():
        rows = []
        for cid in sorted(svc.cases):
            rec = svc.store.latest.get(cid)
            rows.append(
                {
                    "case_id": cid,
                    "labeled": rec is not None,
                    "verdict": rec["verdict"] if rec else None,
                }
            )
        return {
            "cases": rows,
            "total": len(rows),
            "labeled": sum(1 for r in rows if r["labeled"]),
        }

    @app.get("/cases/{case_id}/curves")
    def case_curves(case_id: str):
        case = svc.case_or_404(case_id)
        labels = svc.labels_for(case)
        structures = []
        for name, cid in foreground_classes(labels.task).items():
            curve = structure_series(labels, cid, case.geometry)
            structures.append(
                {
                    "structure": cid,
                    "name": name,
                    "unit": curve.unit,
                    "values": [float(v) for v in curve.values],
                }
            )
        rec = svc.store.latest.get(case_id)
        return {
            "case_id": case_id,
            "task": labels.task,
            "frames": case.images.shape[0],
            "slices": case.images.shape[1],
            "structures": structures,
            "verdict": rec["verdict"] if rec else None,
        }

    @app.get("/cases/{case_id}/frames/{t}")
    def case_frame(case_id: str, t: int):
        case = svc.case_or_404(case_id)
        if t < 0 or t >= case.images.shape[0]:
            raise HTTPException(404, f"frame {t} out of range [0, {case.images.shape[0]})")
        png = _overlay_png(case, svc.labels_for(case), t)
        return Response(content=png, media_type="image/png")

    @app.post("/cases/{case_id}/label")
    def label_case(case_id: str, body: VerdictBody):
        svc.case_or_404(case_id)
        if body.verdict not in ("good", "erroneous"):
            raise HTTPException(400, f"verdict must be good or erroneous, got {body.verdict!r}")
        rec = svc.store.record(case_id, body.verdict, body.reviewer)
        return {"ok": True, "label": rec}

    @app.get("/export/qc-dataset", response_class=PlainTextResponse)
    def export_qc_dataset():
        labeled = {cid: rec for cid, rec in svc.store.latest.items() if cid in svc.cases}
        if not labeled:
            raise HTTPException(400, "no labeled cases to export")
        out_dir = svc.store.path.parent
        feat_dir = out_dir / "qc_export_features"
        feat_dir.mkdir(parents=True, exist_ok=True)
        lines = []
        for cid in sorted(labeled):
            case = svc.cases[cid]
            feats = case_qc_features(case, svc.labels_for(case))
            fpath = feat_dir / f"{cid}.npy"
            np.save(fpath, feats)
            label = "accurate" if labeled[cid]["verdict"] == "good" else "erroneous"
            lines.append(
                json.dumps(
                    {
                        "case_id": cid,
                        "label": label,
                        "provenance": "human_review",
                        "features_path": str(fpath),
                    }
                )
            )
        text = "\n".join(lines) + "\n"
        (out_dir / "qc_export.jsonl").write_text(text)
        return text

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve_review(cohort_dir, run_dir=None, port: int = 8765, labels_path=None, static_dir=None):
    """Run the review service (blocking)."""
    import uvicorn

    app = create_app(cohort_dir, run_dir, labels_path, static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
