"""Cohort persistence: one directory per case, PNG planes plus case.json.

Images are 16-bit PNGs (intensity * 65535), masks 8-bit PNGs; case.json
records geometry, subject parameters and per-file sha256 checksums.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CorruptArtifactError, ValidationError
from .phantom import CineCase, Geometry, LabelMap


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def save_case(case: CineCase, root) -> Path:
    case.validate()
    cdir = Path(root) / case.case_id
    cdir.mkdir(parents=True, exist_ok=True)
    T, S, H, W = case.images.shape
    files = []
    for t in range(T):
        for s in range(S):
            img16 = np.round(np.clip(case.images[t, s], 0.0, 1.0) * 65535.0).astype(np.uint16)
            name = f"img_t{t:03d}_s{s:02d}.png"
            Image.fromarray(img16).save(cdir / name)
            files.append(name)
            if case.gt_labels is not None:
                lname = f"lab_t{t:03d}_s{s:02d}.png"
                Image.fromarray(case.gt_labels.masks[t, s].astype(np.uint8)).save(cdir / lname)
                files.append(lname)
    meta = {
        "case_id": case.case_id,
        "task": case.gt_labels.task if case.gt_labels is not None else case.subject_params.get("task"),
        "shape": [T, S, H, W],
        "geometry": {
            "pixel_spacing": list(case.geometry.pixel_spacing),
            "slice_thickness": case.geometry.slice_thickness,
        },
        "subject_params": case.subject_params,
        "has_labels": case.gt_labels is not None,
        "checksums": {name: _sha256(cdir / name) for name in sorted(files)},
    }
    (cdir / "case.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return cdir


def load_case(cdir, verify: bool = True) -> CineCase:
    cdir = Path(cdir)
    meta = json.loads((cdir / "case.json").read_text())
    T, S, H, W = meta["shape"]
    if verify:
        for name, digest in meta["checksums"].items():
            actual = _sha256(cdir / name)
            if actual != digest:
                raise CorruptArtifactError(f"{cdir / name}: checksum mismatch")
    images = np.empty((T, S, H, W), dtype=np.float32)
    masks = np.zeros((T, S, H, W), dtype=np.uint8) if meta["has_labels"] else None
    for t in range(T):
        for s in range(S):
            arr = np.asarray(Image.open(cdir / f"img_t{t:03d}_s{s:02d}.png"))
            images[t, s] = arr.astype(np.float32) / 65535.0
            if masks is not None:
                masks[t, s] = np.asarray(Image.open(cdir / f"lab_t{t:03d}_s{s:02d}.png"))
    geom = Geometry(
        tuple(meta["geometry"]["pixel_spacing"]), meta["geometry"]["slice_thickness"]
    )
    labels = LabelMap(meta["task"], masks) if masks is not None else None
    return CineCase(meta["case_id"], images, geom, labels, meta.get("subject_params", {}))


def save_cohort(cases: list[CineCase], root) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    ids = [c.case_id for c in cases]
    if len(set(ids)) != len(ids):
        raise ValidationError("case ids must be unique", field="cases")
    for case in cases:
        save_case(case, root)
    (root / "cohort.json").write_text(json.dumps({"case_ids": sorted(ids)}, indent=2))
    return root


def load_cohort(root, verify: bool = True) -> list[CineCase]:
    root = Path(root)
    listing = root / "cohort.json"
    if listing.exists():
        ids = json.loads(listing.read_text())["case_ids"]
    else:
        ids = sorted(p.name for p in root.iterdir() if (p / "case.json").exists())
    return [load_case(root / cid, verify=verify) for cid in ids]
