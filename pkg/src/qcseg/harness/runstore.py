"""Run persistence: a directory of artifacts plus a hash manifest.

Every artifact is listed in manifest.json with its sha256; load_run
verifies all of them and fails on tampering.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

from ..errors import CorruptArtifactError
from ..models import load_model, save_model
from ..pipeline import MetricsReport, RunRecord


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_metrics_csv(report: MetricsReport, path: Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["case_id", "class", "dice"])
        for cid, cls, d in report.dice_rows:
            w.writerow([cid, cls, repr(d)])


def _write_clinical_csv(report: MetricsReport, path: Path) -> None:
    cols = ["case_id", "source", "lvedv", "lvesv", "lvef", "rvedv", "rvesv", "rvef",
            "ed_frame", "es_frame"]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cols)
        for row in report.clinical_rows:
            w.writerow([row["case_id"], row["source"]] + [repr(row[c]) for c in cols[2:]])


def _write_summary_csv(record: RunRecord, path: Path) -> None:
    rep = record.report
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["run_id", "scenario", "n_cases", "pooled_mean_dice", "pooled_sd_dice"])
        w.writerow(
            [
                record.run_id,
                record.config.get("scenario", ""),
                len(rep.per_case_pooled),
                repr(rep.pooled_mean),
                repr(rep.pooled_sd),
            ]
        )


def _write_deltas_csv(report: MetricsReport, path: Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["case_id", "pooled_dice", "delta_vs_" + (report.baseline_run_id or "baseline")])
        for cid in sorted(report.deltas):
            w.writerow([cid, repr(report.per_case_pooled[cid]), repr(report.deltas[cid])])


def _write_plots(record: RunRecord, outdir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3.5))
    for stage, hist in record.loss_history.items():
        if hist:
            ax.plot(hist, label=stage)
    for stage, hist in record.val_loss_history.items():
        if hist:
            ax.plot(hist, ls="--", label=f"{stage} (val)")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    if record.loss_history:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(outdir / "loss.png", dpi=110)
    plt.close(fig)

    pooled = record.report.per_case_pooled
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ids = sorted(pooled)
    ax.bar(range(len(ids)), [pooled[c] for c in ids], color="#4878a8")
    ax.set_ylim(0, 1.02)
    ax.set_ylabel("pooled Dice")
    ax.set_xlabel("test case (sorted by id)")
    ax.set_title(f"{record.run_id}: mean {record.report.pooled_mean:.4f}")
    fig.tight_layout()
    fig.savefig(outdir / "dice_per_case.png", dpi=110)
    plt.close(fig)


def save_run(record: RunRecord, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    (outdir / "config.json").write_text(json.dumps(record.config, indent=2, sort_keys=True))
    (outdir / "census.json").write_text(json.dumps(record.census, indent=2, sort_keys=True))
    (outdir / "record.json").write_text(json.dumps(record.to_dict(), indent=2, sort_keys=True))
    _write_metrics_csv(record.report, outdir / "metrics.csv")
    _write_summary_csv(record, outdir / "summary.csv")
    if record.report.clinical_rows:
        _write_clinical_csv(record.report, outdir / "clinical.csv")
    if record.report.deltas is not None:
        _write_deltas_csv(record.report, outdir / "deltas.csv")
    (outdir / "log.txt").write_text("\n".join(record.log_lines) + "\n")
    _write_plots(record, outdir)
    if record.model is not None:
        save_model(record.model, outdir / "checkpoint")

    files = sorted(
        str(p.relative_to(outdir))
        for p in outdir.rglob("*")
        if p.is_file() and p.name != "manifest.json"
    )
    manifest = {"files": {name: _sha256(outdir / name) for name in files}}
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return outdir


def load_run(outdir, verify: bool = True) -> RunRecord:
    outdir = Path(outdir)
    manifest = json.loads((outdir / "manifest.json").read_text())
    if verify:
        for name, digest in manifest["files"].items():
            p = outdir / name
            if not p.exists():
                raise CorruptArtifactError(f"{p}: listed in manifest but missing")
            if _sha256(p) != digest:
                raise CorruptArtifactError(f"{p}: manifest hash mismatch")
    record = RunRecord.from_dict(json.loads((outdir / "record.json").read_text()))
    ckpt = outdir / "checkpoint"
    if ckpt.exists():
        record.model = load_model(ckpt)
        if record.model.checksum != record.model_checksum:
            raise CorruptArtifactError(f"{ckpt}: checkpoint does not match record")
    return record
