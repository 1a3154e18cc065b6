"""Seeded desk-scale benchmark: cohorts, QC training data and scenario configs.

Everything here is sized to run the full five-scenario comparison on a
laptop CPU. Cohort seeds are derived from one master seed, and the
corruption plan covers every damage kind so the QC classifier sees the
failure modes it must catch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import store
from .phantom import CohortSpec, CorruptionSpec, generate_cohort
from .pipeline import ScenarioConfig
from .qc import build_qc_dataset, save_qc_dataset

CORRUPTION_CYCLE = (
    ("drop_frame", 1),
    ("erode", 4),
    ("dilate", 4),
    ("spatial_shift", 6),
    ("swap_labels", 1),
    ("spurious_blob", 5),
    ("erode", 3),
    ("spurious_blob", 4),
)


@dataclass
class DeskBenchmark:
    """Paths and scenario configs for one generated benchmark instance."""

    root: Path
    labelled_dir: Path
    unlabelled_dir: Path
    test_dir: Path
    qc_dataset: Path
    seed: int
    task: str
    epochs: int
    scenario_configs: dict[str, ScenarioConfig] = field(default_factory=dict)


def corruption_plan(
    case_ids, seed: int, fraction: float = 0.5, task: str = "sax", frames_T: int = 20
):
    """Mark a deterministic fraction of cases for corruption, cycling
    through kinds and severities.

    Damage must be visible in the QC feature curves after per-channel
    max-normalization, so corruptions hit a contiguous frame window (a
    uniform full-cycle erosion just rescales the curve and normalizes
    away). Shifts target the myocardium for SAX (displacing both blood
    pools) and are replaced by dilation for the single-structure aorta
    task, where a pure translation leaves the area curve untouched.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xBAD]))
    ids = sorted(case_ids)
    n_bad = int(round(fraction * len(ids)))
    bad = sorted(rng.choice(ids, size=n_bad, replace=False))
    plan = {}
    for i, cid in enumerate(bad):
        kind, severity = CORRUPTION_CYCLE[i % len(CORRUPTION_CYCLE)]
        if task == "aorta":
            target = 1
            if kind == "spatial_shift":
                kind, severity = "dilate", 3
        elif kind == "spatial_shift":
            target = 2  # displacing the wall moves both blood pools
        elif kind in ("erode", "spurious_blob"):
            target = int(rng.choice([1, 3]))  # myocardium-only damage is curve-invisible
        elif kind == "swap_labels":
            # swapping the two blood pools swaps two near-identical curves;
            # involving the wall flips a curve's shape instead
            target = int(rng.choice([1, 2]))
        else:
            target = int(rng.choice([1, 2, 3]))
        plan[cid] = CorruptionSpec(
            kind=kind,
            severity=severity,
            frame_range=_window(rng, frames_T),
            target_class=target,
            seed=int(rng.integers(0, 2**31)),
        )
    return plan


def _window(rng: np.random.Generator, T: int) -> tuple[int, ...]:
    length = max(1, int(round(T * rng.uniform(0.15, 0.45))))
    start = int(rng.integers(0, T - length + 1))
    return tuple(range(start, start + length))


def generate_desk_benchmark(
    root,
    seed: int = 7,
    task: str = "sax",
    n_labelled: int = 40,
    n_unlabelled: int = 30,
    n_test: int = 24,
    n_qc: int = 60,
    frames_T: int = 20,
    slices_S: int = 1,
    size: int = 64,
    k_select: int = 8,
    epochs: int = 80,
    noise_level: float = 0.10,
    disease_fraction: float = 0.3,
    pool_hard_fraction: float = 0.7,
) -> DeskBenchmark:
    """Generate the four disjoint cohorts plus a synthetic QC dataset and
    return ready-to-run scenario configs.

    Labelled/test/QC cohorts contain only regular-quality subjects; the
    unlabelled pool additionally carries ``pool_hard_fraction`` of hard
    (low contrast, heavy noise) subjects whose pseudo-labels come out
    garbage, which is exactly what quality-aware selection must dodge.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)

    def spec(n, sub, hard):
        return CohortSpec(
            n_subjects=n,
            task=task,
            frames_T=frames_T,
            slices_S=slices_S,
            height=size,
            width=size,
            noise_level=noise_level,
            disease_fraction=disease_fraction,
            hard_fraction=hard,
            seed=seed * 1000 + sub,
        )

    dirs = {}
    for name, n, hard in (
        ("labelled", n_labelled, 0.0),
        ("unlabelled", n_unlabelled, pool_hard_fraction),
        ("test", n_test, 0.0),
        ("qc", n_qc, 0.0),
    ):
        sub = {"labelled": 1, "unlabelled": 2, "test": 3, "qc": 4}[name]
        cohort = generate_cohort(spec(n, sub, hard))
        dirs[name] = store.save_cohort(cohort, root / name)

    qc_cases = store.load_cohort(dirs["qc"])
    plan = corruption_plan(
        [c.case_id for c in qc_cases], seed, fraction=0.5, task=task, frames_T=frames_T
    )
    qc_ds = build_qc_dataset(qc_cases, corruption_plan=plan)
    qc_path = save_qc_dataset(qc_ds, root / "qc_dataset.jsonl")

    common = dict(
        task=task,
        labelled_dir=str(dirs["labelled"]),
        test_dir=str(dirs["test"]),
        unlabelled_dir=str(dirs["unlabelled"]),
        k_select=k_select,
        epochs=epochs,
        seed=seed,
    )
    configs = {
        "full": ScenarioConfig(scenario="full", **common),
        "half": ScenarioConfig(scenario="half", **common),
        "ssl_random": ScenarioConfig(scenario="ssl_random", **common),
        "ssl_random_crf": ScenarioConfig(scenario="ssl_random_crf", **common),
        "semiqcseg": ScenarioConfig(scenario="semiqcseg", qc_dataset=str(qc_path), **common),
    }
    return DeskBenchmark(
        root=root,
        labelled_dir=dirs["labelled"],
        unlabelled_dir=dirs["unlabelled"],
        test_dir=dirs["test"],
        qc_dataset=qc_path,
        seed=seed,
        task=task,
        epochs=epochs,
        scenario_configs=configs,
    )
