"""Train the curve QC classifier on clean vs corrupted volume curves and
pick the operating threshold with the weighted Youden index (w > 0.5
leans the operating point toward sensitivity of error detection)."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qcseg import CohortSpec, generate_cohort, roc, youden_threshold
from qcseg.benchmark import corruption_plan
from qcseg.models import QCArchConfig, TrainConfig, train_qc_classifier
from qcseg.models.train import qc_score_many
from qcseg.qc import build_qc_dataset

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def qc_set(n, seed):
    cases = generate_cohort(
        CohortSpec(n_subjects=n, task="sax", frames_T=20, slices_S=1,
                   height=64, width=64, noise_level=0.1, seed=seed)
    )
    plan = corruption_plan([c.case_id for c in cases], seed, fraction=0.5,
                           task="sax", frames_T=20)
    return build_qc_dataset(cases, corruption_plan=plan)


train_ds, held_ds = qc_set(120, 70), qc_set(80, 71)
print(f"train counts {train_ds.counts()}, held-out counts {held_ds.counts()}")

model = train_qc_classifier(
    [(e.features, 1 if e.label == "accurate" else 0) for e in train_ds.entries],
    QCArchConfig(input_dim=2, dense_dim=16, lstm_hidden=24),
    TrainConfig(epochs=500, batch_size=32, learning_rate=3e-3, seed=3, loss="bce"),
)
scores = qc_score_many(model, [e.features for e in held_ds.entries])
curve = roc(scores, [e.label for e in held_ds.entries])
thr = youden_threshold(curve, w=0.7)
se, sp = {t: (a, b) for t, a, b in curve.points}[thr]
print(f"held-out AUC {curve.auc:.3f}")
print(f"weighted Youden (w=0.7) threshold: erroneousness >= {thr:.3f} "
      f"(prob_accurate < {1-thr:.3f}) -> Se {se:.2f}, Sp {sp:.2f}")

fig, ax = plt.subplots(figsize=(5, 5))
fpr = [1 - sp for _, _, sp in curve.points]
tpr = [se for _, se, _ in curve.points]
ax.plot(fpr, tpr, "b-")
ax.plot(1 - sp, se, "r*", ms=14, label=f"operating point (Se={se:.2f})")
ax.plot([0, 1], [0, 1], "k:", lw=0.7)
ax.set_xlabel("1 - specificity")
ax.set_ylabel("sensitivity (erroneous detection)")
ax.set_title(f"QC classifier ROC (AUC {curve.auc:.3f})")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "qc_roc.png", dpi=110)
print(f"wrote {OUT / 'qc_roc.png'}")
