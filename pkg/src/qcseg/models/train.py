"""Deterministic training and inference for the segmentation and QC models.

The reproducibility contract: (arch, dataset, config, seed) fully
determine the trained parameters. Initialization is seeded through torch,
batch order through a numpy generator, and all training runs on CPU, so
repeat runs produce identical parameter checksums.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn

from ..errors import ValidationError
from ..phantom import CineCase, LabelMap, n_classes as task_n_classes
from .config import QCArchConfig, SegArchConfig, TrainConfig
from .nets import build_qc_net, build_seg_net


def params_checksum(params: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for name in sorted(params):
        arr = params[name]
        h.update(name.encode())
        h.update(str(arr.shape).encode())
        h.update(str(arr.dtype).encode())
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


@dataclass
class TrainedModel:
    """Immutable training result: named parameter arrays plus provenance."""

    kind: str  # "seg" or "qc"
    arch: SegArchConfig | QCArchConfig
    params: dict[str, np.ndarray]
    loss_history: list[float] = field(default_factory=list)
    val_loss_history: list[float] = field(default_factory=list)
    seed: int = 0
    checksum: str = ""

    def __post_init__(self):
        if not self.checksum:
            self.checksum = params_checksum(self.params)

    def to_module(self) -> nn.Module:
        net = build_seg_net(self.arch) if self.kind == "seg" else build_qc_net(self.arch)
        state = {k: torch.from_numpy(v.copy()) for k, v in self.params.items()}
        net.load_state_dict(state)
        net.eval()
        return net


def _state_to_numpy(net: nn.Module) -> dict[str, np.ndarray]:
    return {k: v.detach().cpu().numpy().copy() for k, v in net.state_dict().items()}


def _make_optimizer(net: nn.Module, cfg: TrainConfig):
    if cfg.optimizer == "adam":
        return torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    return torch.optim.SGD(net.parameters(), lr=cfg.learning_rate, momentum=0.9)


def _split_validation(n: int, fraction: float, rng: np.random.Generator):
    order = rng.permutation(n)
    n_val = int(round(fraction * n))
    n_val = min(n_val, n - 1)
    return order[n_val:], order[:n_val]


def train_segmenter(
    arch: SegArchConfig,
    dataset: Sequence[tuple[np.ndarray, np.ndarray]],
    cfg: TrainConfig,
) -> TrainedModel:
    """Train a segmentation net on (image plane, label plane) pairs.

    Planes must share one shape; per-pixel cross-entropy; loss_history has
    one mean-train-loss entry per epoch (validation likewise when a
    validation fraction is configured).
    """
    arch.validate()
    cfg.validate()
    if cfg.loss != "cross_entropy":
        raise ValidationError("segmentation training uses cross_entropy", field="loss")
    if len(dataset) == 0:
        raise ValidationError("dataset must be non-empty", field="dataset")
    shapes = {tuple(img.shape) for img, _ in dataset}
    if len(shapes) != 1:
        raise ValidationError(f"non-uniform image shapes {sorted(shapes)}", field="dataset")
    shape = shapes.pop()
    down = 2 ** (arch.depth - 1)
    if shape[0] % down or shape[1] % down:
        raise ValidationError(
            f"plane shape {shape} must be divisible by {down} for depth {arch.depth}",
            field="dataset",
        )

    images = torch.from_numpy(np.stack([img for img, _ in dataset]).astype(np.float32))[:, None]
    labels = torch.from_numpy(np.stack([lab for _, lab in dataset]).astype(np.int64))
    if int(labels.max()) >= arch.n_classes:
        raise ValidationError("label indices exceed n_classes", field="dataset")

    torch.manual_seed(cfg.seed)
    net = build_seg_net(arch)
    opt = _make_optimizer(net, cfg)
    loss_fn = nn.CrossEntropyLoss()
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 0x5E6]))

    n = len(dataset)
    train_idx = np.arange(n)
    val_idx = np.array([], dtype=int)
    if cfg.validation_fraction > 0 and n > 1:
        train_idx, val_idx = _split_validation(n, cfg.validation_fraction, rng)

    history: list[float] = []
    val_history: list[float] = []
    for _ in range(cfg.epochs):
        net.train()
        order = rng.permutation(len(train_idx))
        total, seen = 0.0, 0
        for i in range(0, len(order), cfg.batch_size):
            idx = train_idx[order[i : i + cfg.batch_size]]
            opt.zero_grad()
            loss = loss_fn(net(images[idx]), labels[idx])
            loss.backward()
            opt.step()
            total += float(loss.detach()) * len(idx)
            seen += len(idx)
        history.append(total / seen)
        if len(val_idx) > 0:
            net.eval()
            with torch.no_grad():
                v = 0.0
                for i in range(0, len(val_idx), cfg.batch_size):
                    idx = val_idx[i : i + cfg.batch_size]
                    v += float(loss_fn(net(images[idx]), labels[idx])) * len(idx)
            val_history.append(v / len(val_idx))

    return TrainedModel("seg", arch, _state_to_numpy(net), history, val_history, cfg.seed)


def segment(model: TrainedModel, case: CineCase, batch: int = 32):
    """Per-pixel class probabilities and argmax labels for every plane.

    Returns (prob_map, label_map): prob_map is (T, S, C, H, W) float32 on
    the per-pixel simplex; label_map carries the argmax, ties resolved to
    the lowest class index.
    """
    if model.kind != "seg":
        raise ValidationError("model is not a segmenter", field="model")
    task = case.gt_labels.task if case.gt_labels is not None else case.subject_params.get("task")
    if task is not None and task_n_classes(task) != model.arch.n_classes:
        raise ValidationError(
            f"model has {model.arch.n_classes} classes but task {task!r} needs "
            f"{task_n_classes(task)}",
            field="model",
        )
    T, S, H, W = case.images.shape
    down = 2 ** (model.arch.depth - 1)
    if H % down or W % down:
        raise ValidationError(f"plane shape {(H, W)} incompatible with depth", field="case")

    net = model.to_module()
    planes = torch.from_numpy(case.images.reshape(T * S, 1, H, W).astype(np.float32))
    probs = np.empty((T * S, model.arch.n_classes, H, W), dtype=np.float32)
    with torch.no_grad():
        for i in range(0, T * S, batch):
            logits = net(planes[i : i + batch])
            probs[i : i + batch] = torch.softmax(logits, dim=1).numpy()
    prob_map = probs.reshape(T, S, model.arch.n_classes, H, W)
    label_map = LabelMap(task or ("sax" if model.arch.n_classes == 4 else "aorta"),
                         np.argmax(prob_map, axis=2).astype(np.uint8))
    return prob_map, label_map


def train_qc_classifier(
    dataset: Sequence[tuple[np.ndarray, int]],
    arch: QCArchConfig,
    cfg: TrainConfig,
) -> TrainedModel:
    """Train the curve classifier on (features (T, D), label) pairs.

    Label 1 = accurate, 0 = erroneous; the model's sigmoid output is the
    probability the case is accurate. Both labels must be present.
    """
    arch.validate()
    cfg.validate()
    if cfg.loss != "bce":
        raise ValidationError("QC training uses bce", field="loss")
    if len(dataset) == 0:
        raise ValidationError("dataset must be non-empty", field="dataset")
    ys = {int(y) for _, y in dataset}
    if ys != {0, 1}:
        raise ValidationError("dataset must contain both labels", field="dataset")
    shapes = {tuple(f.shape) for f, _ in dataset}
    if len(shapes) != 1:
        raise ValidationError(f"non-uniform feature shapes {sorted(shapes)}", field="dataset")
    (T, D) = shapes.pop()
    if D != arch.input_dim:
        raise ValidationError(f"feature dim {D} != arch input_dim {arch.input_dim}", field="dataset")

    feats = torch.from_numpy(np.stack([f for f, _ in dataset]).astype(np.float32))
    labels = torch.from_numpy(np.array([float(y) for _, y in dataset], dtype=np.float32))

    torch.manual_seed(cfg.seed)
    net = build_qc_net(arch)
    opt = _make_optimizer(net, cfg)
    loss_fn = nn.BCEWithLogitsLoss()
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 0x9C]))

    n = len(dataset)
    train_idx = np.arange(n)
    val_idx = np.array([], dtype=int)
    if cfg.validation_fraction > 0 and n > 1:
        train_idx, val_idx = _split_validation(n, cfg.validation_fraction, rng)

    history: list[float] = []
    val_history: list[float] = []
    for _ in range(cfg.epochs):
        net.train()
        order = rng.permutation(len(train_idx))
        total, seen = 0.0, 0
        for i in range(0, len(order), cfg.batch_size):
            idx = train_idx[order[i : i + cfg.batch_size]]
            opt.zero_grad()
            loss = loss_fn(net(feats[idx]), labels[idx])
            loss.backward()
            opt.step()
            total += float(loss.detach()) * len(idx)
            seen += len(idx)
        history.append(total / seen)
        if len(val_idx) > 0:
            net.eval()
            with torch.no_grad():
                v = float(loss_fn(net(feats[val_idx]), labels[val_idx]))
            val_history.append(v)

    return TrainedModel("qc", arch, _state_to_numpy(net), history, val_history, cfg.seed)


def qc_score(model: TrainedModel, features: np.ndarray) -> float:
    """Probability in [0, 1] that the case behind ``features`` is accurate."""
    if model.kind != "qc":
        raise ValidationError("model is not a QC classifier", field="model")
    features = np.asarray(features, dtype=np.float32)
    if features.ndim != 2 or features.shape[1] != model.arch.input_dim:
        raise ValidationError(
            f"features must be (T, {model.arch.input_dim})", field="features"
        )
    net = model.to_module()
    with torch.no_grad():
        logit = net(torch.from_numpy(features)[None])
    return float(torch.sigmoid(logit)[0])


def qc_score_many(model: TrainedModel, features: Sequence[np.ndarray]) -> list[float]:
    if len(features) == 0:
        return []
    net = model.to_module()
    stacked = torch.from_numpy(np.stack(features).astype(np.float32))
    with torch.no_grad():
        logits = net(stacked)
    return [float(v) for v in torch.sigmoid(logits)]
