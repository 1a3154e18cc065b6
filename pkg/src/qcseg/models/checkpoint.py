"""Checkpoint container: params.bin (JSON header + raw little-endian data)
plus arch.json. Round-trips are bit-exact."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CorruptArtifactError
from .config import QCArchConfig, SegArchConfig
from .train import TrainedModel, params_checksum

MAGIC = b"QCSEGPK1"


def _write_params(params: dict[str, np.ndarray], path: Path) -> None:
    entries = []
    offset = 0
    blobs = []
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name])
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw = le.tobytes()
        entries.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": np.dtype(arr.dtype).newbyteorder("<").str,
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"entries": entries}, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for raw in blobs:
            f.write(raw)


def _read_params(path: Path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise CorruptArtifactError(f"{path}: bad magic {magic!r}")
        (hlen,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(hlen).decode())
        data = f.read()
    params = {}
    for e in header["entries"]:
        raw = data[e["offset"] : e["offset"] + e["nbytes"]]
        arr = np.frombuffer(raw, dtype=np.dtype(e["dtype"])).reshape(e["shape"])
        params[e["name"]] = arr.astype(np.dtype(e["dtype"]).newbyteorder("="), copy=True)
    return params


def save_model(model: TrainedModel, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_params(model.params, outdir / "params.bin")
    meta = {
        "kind": model.kind,
        "arch": model.arch.as_dict(),
        "seed": model.seed,
        "checksum": model.checksum,
        "loss_history": model.loss_history,
        "val_loss_history": model.val_loss_history,
    }
    (outdir / "arch.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return outdir


def load_model(outdir) -> TrainedModel:
    outdir = Path(outdir)
    meta = json.loads((outdir / "arch.json").read_text())
    params = _read_params(outdir / "params.bin")
    arch_cls = SegArchConfig if meta["kind"] == "seg" else QCArchConfig
    model = TrainedModel(
        kind=meta["kind"],
        arch=arch_cls(**meta["arch"]),
        params=params,
        loss_history=meta["loss_history"],
        val_loss_history=meta["val_loss_history"],
        seed=meta["seed"],
        checksum=meta["checksum"],
    )
    actual = params_checksum(params)
    if actual != meta["checksum"]:
        raise CorruptArtifactError(f"{outdir}: checkpoint checksum mismatch")
    return model
