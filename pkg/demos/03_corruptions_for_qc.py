"""Manufacture "erroneous" label maps and see how the damage shows up in
the volume curves the QC classifier reads."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from qcseg import CohortSpec, CorruptionSpec, corrupt_labels, generate_cohort, structure_series

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

case = generate_cohort(
    CohortSpec(n_subjects=1, task="sax", frames_T=20, slices_S=1, height=64, width=64, seed=33)
)[0]

corruptions = [
    CorruptionSpec("drop_frame", severity=1, frame_range=(8, 9, 10), seed=1),
    CorruptionSpec("erode", severity=4, frame_range=tuple(range(4, 10)), target_class=1, seed=2),
    CorruptionSpec("dilate", severity=4, frame_range=tuple(range(10, 16)), target_class=2, seed=3),
    CorruptionSpec("spurious_blob", severity=5, frame_range=tuple(range(0, 6)), target_class=3, seed=4),
]

fig, axes = plt.subplots(2, 2, figsize=(11, 7))
clean_lv = structure_series(case.gt_labels, 1, case.geometry).values
clean_rv = structure_series(case.gt_labels, 3, case.geometry).values
for ax, cspec in zip(axes.ravel(), corruptions):
    damaged = corrupt_labels(case.gt_labels, cspec)
    lv = structure_series(damaged, 1, case.geometry).values
    rv = structure_series(damaged, 3, case.geometry).values
    ax.plot(clean_lv, "b-", lw=1, label="LV clean")
    ax.plot(lv, "b--", lw=2, label="LV damaged")
    ax.plot(clean_rv, "g-", lw=1, label="RV clean")
    ax.plot(rv, "g--", lw=2, label="RV damaged")
    ax.set_title(f"{cspec.kind} (severity {cspec.severity}, frames {cspec.frame_range[0]}..{cspec.frame_range[-1]})")
    ax.legend(fontsize=7)
    worst = max(abs(lv - clean_lv).max(), abs(rv - clean_rv).max())
    print(f"{cspec.kind:14s}: max curve deviation = {worst:.2f} mL")
fig.tight_layout()
fig.savefig(OUT / "corruption_curves.png", dpi=110)
print(f"wrote {OUT / 'corruption_curves.png'}")
