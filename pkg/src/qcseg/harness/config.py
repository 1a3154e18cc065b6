"""Application configuration: JSON file with documented defaults.

Unknown fields are rejected so typos fail loudly; missing optional fields
fall back to the defaults below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ValidationError

DEFAULTS = {
    "data_root": "data",
    "runs_root": "runs",
    "task": "sax",
    "port": 8765,
    "seed": 0,
    "presets": {},
}


@dataclass
class AppConfig:
    data_root: str = DEFAULTS["data_root"]
    runs_root: str = DEFAULTS["runs_root"]
    task: str = DEFAULTS["task"]
    port: int = DEFAULTS["port"]
    seed: int = DEFAULTS["seed"]
    presets: dict = field(default_factory=dict)

    def validate(self):
        if self.task not in ("sax", "aorta"):
            raise ValidationError(f"unknown task {self.task!r}", field="task")
        if not (1024 <= self.port <= 65535):
            raise ValidationError(f"port {self.port} outside [1024, 65535]", field="port")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError("must be a non-negative integer", field="seed")
        if not isinstance(self.presets, dict):
            raise ValidationError("must be a mapping", field="presets")

    def to_dict(self) -> dict:
        return {
            "data_root": self.data_root,
            "runs_root": self.runs_root,
            "task": self.task,
            "port": self.port,
            "seed": self.seed,
            "presets": self.presets,
        }


def load_config(path) -> AppConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file {path} does not exist", field="path")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ValidationError(
            f"malformed config {path}: line {e.lineno}, column {e.colno}: {e.msg}",
            field="path",
        ) from e
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object", field="path")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ValidationError(f"unknown fields {sorted(unknown)}", field=sorted(unknown)[0])
    merged = {**DEFAULTS, **raw}
    cfg = AppConfig(**merged)
    cfg.validate()
    return cfg


def save_config(cfg: AppConfig, path) -> Path:
    cfg.validate()
    path = Path(path)
    path.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return path
