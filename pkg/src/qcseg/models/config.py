"""Architecture and training configuration records."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ValidationError


@dataclass
class SegArchConfig:
    """Segmentation network shape. Desk defaults are small on purpose;
    depth and channels scale the same designs up."""

    arch: str = "unet"  # "unet" (residual units) or "fcn" (VGG-like)
    depth: int = 3
    base_channels: int = 8
    n_classes: int = 4
    input_channels: int = 1

    def validate(self):
        if self.arch not in ("unet", "fcn"):
            raise ValidationError(f"unknown arch {self.arch!r}", field="arch")
        if self.depth < 2:
            raise ValidationError("must be >= 2", field="depth")
        if self.base_channels < 4:
            raise ValidationError("must be >= 4", field="base_channels")
        if self.n_classes not in (2, 4):
            raise ValidationError("must be 2 (aorta) or 4 (sax)", field="n_classes")
        if self.input_channels != 1:
            raise ValidationError("single-channel input only", field="input_channels")

    def as_dict(self) -> dict:
        return {
            "arch": self.arch,
            "depth": self.depth,
            "base_channels": self.base_channels,
            "n_classes": self.n_classes,
            "input_channels": self.input_channels,
        }


@dataclass
class QCArchConfig:
    """Curve classifier: per-timestep dense layer, then a 3-layer LSTM,
    then a sigmoid head on the last hidden state."""

    input_dim: int = 2
    dense_dim: int = 16
    lstm_hidden: int = 24
    lstm_layers: int = 3

    def validate(self):
        if self.lstm_layers != 3:
            raise ValidationError("fixed at 3 layers", field="lstm_layers")
        for name in ("input_dim", "dense_dim", "lstm_hidden"):
            if getattr(self, name) < 1:
                raise ValidationError("must be >= 1", field=name)

    def as_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "dense_dim": self.dense_dim,
            "lstm_hidden": self.lstm_hidden,
            "lstm_layers": self.lstm_layers,
        }


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 16
    learning_rate: float = 1e-3
    optimizer: str = "adam"  # or "sgd"
    seed: int = 0
    loss: str = "cross_entropy"  # or "bce"
    validation_fraction: float = 0.0

    def validate(self):
        if self.epochs < 0:
            raise ValidationError("must be >= 0", field="epochs")
        if self.batch_size < 1:
            raise ValidationError("must be >= 1", field="batch_size")
        if self.learning_rate <= 0:
            raise ValidationError("must be > 0", field="learning_rate")
        if self.optimizer not in ("adam", "sgd"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}", field="optimizer")
        if self.loss not in ("cross_entropy", "bce"):
            raise ValidationError(f"unknown loss {self.loss!r}", field="loss")
        if not (0.0 <= self.validation_fraction < 1.0):
            raise ValidationError("must lie in [0, 1)", field="validation_fraction")

    def as_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "optimizer": self.optimizer,
            "seed": self.seed,
            "loss": self.loss,
            "validation_fraction": self.validation_fraction,
        }
