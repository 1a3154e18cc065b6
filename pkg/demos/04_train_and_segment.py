"""Train a small residual U-Net on sparsely labelled frames (ED+ES only,
like manual annotation practice) and segment a held-out case."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qcseg import CohortSpec, dice, generate_cohort
from qcseg.models import SegArchConfig, TrainConfig, save_model, segment, train_segmenter
from qcseg.pipeline import labelled_frame_indices, _planes

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

train_cases = generate_cohort(
    CohortSpec(n_subjects=10, task="sax", frames_T=20, slices_S=1,
               height=64, width=64, noise_level=0.08, hard_fraction=0.0, seed=60)
)
test_case = generate_cohort(
    CohortSpec(n_subjects=1, task="sax", frames_T=20, slices_S=1,
               height=64, width=64, noise_level=0.08, hard_fraction=0.0, seed=61)
)[0]

pairs = []
for case in train_cases:
    frames = labelled_frame_indices(case, "sax", 2, seed=0)  # ED and ES
    pairs.extend(_planes(case, case.gt_labels, frames))
print(f"training on {len(pairs)} labelled planes from {len(train_cases)} subjects")

arch = SegArchConfig(arch="unet", depth=3, base_channels=8, n_classes=4)
model = train_segmenter(arch, pairs, TrainConfig(epochs=100, batch_size=16, seed=1))
print(f"final training loss {model.loss_history[-1]:.4f}; checksum {model.checksum[:12]}")
save_model(model, OUT / "demo_checkpoint")

probs, pred = segment(model, test_case)
for cls, name in [(1, "LV blood"), (2, "LV myo"), (3, "RV blood")]:
    d = dice(pred.masks == cls, test_case.gt_labels.masks == cls)
    print(f"  held-out Dice {name}: {d:.3f}")

t = test_case.subject_params["es_frame"]
fig, axes = plt.subplots(1, 3, figsize=(10, 3.5))
axes[0].imshow(test_case.images[t, 0], cmap="gray")
axes[0].set_title("image (ES)")
axes[1].imshow(test_case.gt_labels.masks[t, 0], vmin=0, vmax=3)
axes[1].set_title("ground truth")
axes[2].imshow(pred.masks[t, 0], vmin=0, vmax=3)
axes[2].set_title("prediction")
for ax in axes:
    ax.axis("off")
fig.tight_layout()
fig.savefig(OUT / "segmentation.png", dpi=110)
print(f"wrote {OUT / 'segmentation.png'}")
