"""Command-line entry points, one verb per pipeline stage.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from ..errors import ValidationError
from .config import AppConfig, load_config


def _app_config(args) -> AppConfig:
    cfg = load_config(args.config) if args.config else AppConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def cmd_generate(args) -> int:
    from ..benchmark import generate_desk_benchmark
    from ..phantom import CohortSpec, generate_cohort
    from .. import store

    cfg = _app_config(args)
    out = Path(args.out)
    if args.benchmark:
        bench = generate_desk_benchmark(
            out,
            seed=cfg.seed,
            task=args.task or cfg.task,
            epochs=args.epochs,
        )
        for name, sc in bench.scenario_configs.items():
            (out / f"scenario_{name}.json").write_text(
                json.dumps(sc.to_dict(), indent=2, sort_keys=True)
            )
        print(f"benchmark written to {out}")
        return 0
    spec = CohortSpec(
        n_subjects=args.subjects,
        task=args.task or cfg.task,
        frames_T=args.frames,
        slices_S=args.slices,
        height=args.size,
        width=args.size,
        noise_level=args.noise,
        disease_fraction=args.disease_fraction,
        seed=cfg.seed,
    )
    cohort = generate_cohort(spec)
    store.save_cohort(cohort, out)
    print(f"wrote {len(cohort)} cases to {out}")
    return 0


def cmd_train_seg(args) -> int:
    from .. import store
    from ..models import SegArchConfig, TrainConfig, save_model, train_segmenter
    from ..pipeline import DEFAULT_ARCH, DEFAULT_FRAMES_PER_SUBJECT, labelled_frame_indices, _planes
    from ..phantom import task_classes

    cfg = _app_config(args)
    cases = store.load_cohort(args.data)
    if not cases:
        raise ValidationError(f"no cases under {args.data}", field="data")
    task = cases[0].gt_labels.task
    fps = args.frames_per_subject or DEFAULT_FRAMES_PER_SUBJECT[task]
    pairs = []
    for case in cases:
        frames = labelled_frame_indices(case, task, fps, cfg.seed)
        pairs.extend(_planes(case, case.gt_labels, frames))
    arch = SegArchConfig(
        arch=args.arch or DEFAULT_ARCH[task],
        depth=args.depth,
        base_channels=args.base_channels,
        n_classes=len(task_classes(task)),
    )
    tc = TrainConfig(epochs=args.epochs, seed=cfg.seed, loss="cross_entropy")
    model = train_segmenter(arch, pairs, tc)
    save_model(model, args.out)
    print(f"trained on {len(pairs)} planes; checksum {model.checksum[:12]}; saved to {args.out}")
    return 0


def cmd_qc_train(args) -> int:
    from ..models import QCArchConfig, TrainConfig, save_model, train_qc_classifier, qc_score_many
    from ..qc import load_qc_dataset, roc, roc_to_csv, youden_threshold

    cfg = _app_config(args)
    ds = load_qc_dataset(args.dataset)
    data = [(e.features, 1 if e.label == "accurate" else 0) for e in ds.entries]
    arch = QCArchConfig(input_dim=ds.entries[0].features.shape[1])
    tc = TrainConfig(
        epochs=args.epochs, batch_size=32, learning_rate=3e-3, seed=cfg.seed, loss="bce"
    )
    model = train_qc_classifier(data, arch, tc)
    out = Path(args.out)
    save_model(model, out)
    scores = qc_score_many(model, [e.features for e in ds.entries])
    curve = roc(scores, [e.label for e in ds.entries])
    roc_to_csv(curve, out / "roc.csv")
    thr = youden_threshold(curve, w=args.youden_weight)
    (out / "threshold.json").write_text(
        json.dumps(
            {
                "youden_weight": args.youden_weight,
                "threshold_erroneousness": thr,
                "threshold_prob_accurate": 1.0 - thr,
                "auc": curve.auc,
            },
            indent=2,
        )
    )
    print(f"qc classifier trained on {len(data)} curves; AUC {curve.auc:.3f}; saved to {out}")
    return 0


def cmd_run_scenario(args) -> int:
    from ..pipeline import ScenarioConfig, run_scenario
    from .runstore import load_run, save_run

    cfg = _app_config(args)
    if args.scenario_config:
        sc = ScenarioConfig.from_dict(json.loads(Path(args.scenario_config).read_text()))
        if args.seed is not None:
            sc.seed = args.seed
    elif args.preset:
        if args.preset not in cfg.presets:
            raise ValidationError(f"preset {args.preset!r} not in config", field="preset")
        sc = ScenarioConfig.from_dict(cfg.presets[args.preset])
        if args.seed is not None:
            sc.seed = args.seed
    else:
        sc = ScenarioConfig(
            scenario=args.scenario,
            task=args.task or cfg.task,
            labelled_dir=args.labelled,
            test_dir=args.test,
            unlabelled_dir=args.unlabelled,
            qc_dataset=args.qc_dataset,
            k_select=args.k,
            epochs=args.epochs,
            seed=cfg.seed,
        )
    baseline = load_run(args.baseline) if args.baseline else None
    record = run_scenario(sc, baseline_run=baseline)
    save_run(record, args.out)
    print(
        f"run {record.run_id}: pooled dice {record.report.pooled_mean:.4f} "
        f"(sd {record.report.pooled_sd:.4f}); saved to {args.out}"
    )
    return 0


def cmd_compare(args) -> int:
    from ..pipeline import compare
    from .runstore import load_run

    runs = [load_run(d) for d in args.runs]
    result = compare(runs, reference=args.reference, baseline=args.baseline)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    summary_cols = list(result["summary"][0].keys())
    with open(out / "summary.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=summary_cols)
        w.writeheader()
        w.writerows(result["summary"])
    with open(out / "deltas.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["run_id", "case_id", "delta"])
        w.writeheader()
        w.writerows(result["deltas"])
    _plot_comparison(result, out)
    for row in result["summary"]:
        print(
            f"{row['run_id']:>16}: dice {row['mean_dice']:.4f} ({row['sd_dice']:.4f})"
            + (
                f"  p={row['p_vs_reference']:.2e}"
                if row["run_id"] != result["reference"] and row["run_id"] != "ground_truth"
                else ""
            )
        )
    print(f"comparison written to {out}")
    return 0


def _plot_comparison(result: dict, out: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = [r for r in result["summary"] if r["run_id"] != "ground_truth"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(
        [r["run_id"] for r in rows],
        [r["mean_dice"] for r in rows],
        yerr=[r["sd_dice"] for r in rows],
        color="#4878a8",
        capsize=4,
    )
    ax.set_ylabel("pooled Dice")
    ax.set_ylim(0, 1.05)
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(out / "dice_summary.png", dpi=120)
    plt.close(fig)

    run_ids = sorted({d["run_id"] for d in result["deltas"]})
    if run_ids:
        fig, axes = plt.subplots(len(run_ids), 1, figsize=(7, 2.4 * len(run_ids)), squeeze=False)
        for ax, rid in zip(axes[:, 0], run_ids):
            ds = [d for d in result["deltas"] if d["run_id"] == rid]
            ds.sort(key=lambda d: d["delta"])
            colors = ["#b33" if d["delta"] < 0 else "#383" for d in ds]
            ax.bar(range(len(ds)), [d["delta"] for d in ds], color=colors)
            ax.axhline(0, color="k", lw=0.8)
            ax.set_title(f"{rid}: per-case pooled Dice change vs {result['baseline']}")
            ax.set_xlabel("case (sorted)")
        fig.tight_layout()
        fig.savefig(out / "dice_deltas.png", dpi=120)
        plt.close(fig)


def cmd_serve_review(args) -> int:
    from .review import serve_review

    cfg = _app_config(args)
    serve_review(
        args.cohort,
        run_dir=args.run,
        port=args.port or cfg.port,
        labels_path=args.labels,
        static_dir=args.static,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcseg", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="AppConfig JSON file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", required=True)

    g = sub.add_parser("generate", help="generate a phantom cohort or the desk benchmark")
    common(g)
    g.add_argument("--task", choices=["sax", "aorta"])
    g.add_argument("--subjects", type=int, default=10)
    g.add_argument("--frames", type=int, default=20)
    g.add_argument("--slices", type=int, default=1)
    g.add_argument("--size", type=int, default=64)
    g.add_argument("--noise", type=float, default=0.06)
    g.add_argument("--disease-fraction", type=float, default=0.0)
    g.add_argument("--benchmark", action="store_true", help="emit the full desk benchmark")
    g.add_argument("--epochs", type=int, default=60, help="epochs recorded in benchmark configs")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train-seg", help="train a segmentation model on a labelled cohort")
    common(t)
    t.add_argument("--data", required=True)
    t.add_argument("--frames-per-subject", type=int, default=None)
    t.add_argument("--arch", choices=["unet", "fcn"])
    t.add_argument("--depth", type=int, default=3)
    t.add_argument("--base-channels", type=int, default=8)
    t.add_argument("--epochs", type=int, default=60)
    t.set_defaults(func=cmd_train_seg)

    q = sub.add_parser("qc-train", help="train the curve QC classifier from a QC dataset")
    common(q)
    q.add_argument("--dataset", required=True, help="QC dataset JSONL")
    q.add_argument("--epochs", type=int, default=300)
    q.add_argument("--youden-weight", type=float, default=0.7)
    q.set_defaults(func=cmd_qc_train)

    r = sub.add_parser("run-scenario", help="execute one training scenario")
    common(r)
    r.add_argument("--scenario-config", help="ScenarioConfig JSON (overrides other flags)")
    r.add_argument("--preset", help="named scenario preset from the app config")
    r.add_argument("--scenario", choices=["full", "half", "ssl_random", "ssl_random_crf", "semiqcseg"])
    r.add_argument("--task", choices=["sax", "aorta"])
    r.add_argument("--labelled")
    r.add_argument("--unlabelled")
    r.add_argument("--test")
    r.add_argument("--qc-dataset")
    r.add_argument("--k", type=int, default=30)
    r.add_argument("--epochs", type=int, default=60)
    r.add_argument("--baseline", help="run directory for per-case deltas")
    r.set_defaults(func=cmd_run_scenario)

    c = sub.add_parser("compare", help="compare finished runs")
    common(c)
    c.add_argument("--runs", nargs="+", required=True)
    c.add_argument("--reference", required=True)
    c.add_argument("--baseline", default=None)
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("serve-review", help="serve the labeling review UI/service")
    s.add_argument("--config", help="AppConfig JSON file")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", default=None, help="unused; kept for verb symmetry")
    s.add_argument("--cohort", required=True)
    s.add_argument("--run", default=None)
    s.add_argument("--port", type=int, default=None)
    s.add_argument("--labels", default=None)
    s.add_argument("--static", default=None, help="frontend dist directory")
    s.set_defaults(func=cmd_serve_review)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
