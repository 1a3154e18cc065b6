"""Turn label maps into the downstream quantities: volume curves over the
cardiac cycle and clinical metrics (EDV, ESV, EF)."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from qcseg import CohortSpec, clinical_metrics, generate_cohort, structure_series
from qcseg.curves import curves_to_csv

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

case = generate_cohort(
    CohortSpec(n_subjects=1, task="sax", frames_T=30, slices_S=5, height=64, width=64, seed=9)
)[0]

lv = structure_series(case.gt_labels, 1, case.geometry)
myo = structure_series(case.gt_labels, 2, case.geometry)
rv = structure_series(case.gt_labels, 3, case.geometry)
m = clinical_metrics(lv, rv)

print(f"case {case.case_id}")
print(f"  LVEDV {m.lvedv:.2f} mL @ frame {m.ed_frame}, LVESV {m.lvesv:.2f} mL @ frame {m.es_frame}")
print(f"  LVEF {m.lvef:.1f}%  RVEF {m.rvef:.1f}%")
print(f"  (subject target LVEF was {100*case.subject_params['target_lvef']:.1f}%)")

curves_to_csv([lv, myo, rv], OUT / "volume_curves.csv")
print(f"wrote {OUT / 'volume_curves.csv'}")

fig, ax = plt.subplots(figsize=(7, 4))
for curve, label in [(lv, "LV blood"), (myo, "LV myocardium"), (rv, "RV blood")]:
    ax.plot(curve.values, marker="o", ms=3, label=label)
ax.axvline(m.ed_frame, color="k", ls=":", lw=0.8)
ax.axvline(m.es_frame, color="r", ls=":", lw=0.8)
ax.set_xlabel("frame")
ax.set_ylabel("volume (mL)")
ax.legend()
ax.set_title("ground-truth volume curves (ED and ES marked)")
fig.tight_layout()
fig.savefig(OUT / "volume_curves.png", dpi=110)
print(f"wrote {OUT / 'volume_curves.png'}")
