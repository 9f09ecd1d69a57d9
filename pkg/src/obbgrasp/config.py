"""Run configuration: JSON round-trip and a stable digest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from obbgrasp.errors import SceneFormatError
from obbgrasp.scoring import FilterThresholds, StabilityParams
from obbgrasp.strategies import GripperConfig

_GRIPPER_KEYS = {"category", "w_max", "gd", "samples_per_trajectory", "sampling_mode"}
_THRESHOLD_KEYS = {"th0", "th1", "th2", "gravity", "surface_samples", "table_offset"}
_STABILITY_KEYS = {"alpha"}
_TOP_KEYS = {"gripper", "thresholds", "stability", "seed", "top_k", "mode"}


@dataclass(frozen=True)
class RunConfig:
    gripper: GripperConfig = field(default_factory=GripperConfig)
    thresholds: FilterThresholds = field(default_factory=FilterThresholds)
    stability: StabilityParams = field(default_factory=StabilityParams)
    seed: int = 0
    top_k: int = 10
    mode: int = 1

    def __post_init__(self):
        if self.mode not in (1, 2):
            raise ValueError(f"mode must be 1 or 2, got {self.mode}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")

    def to_dict(self) -> dict:
        g, t = self.gripper, self.thresholds
        return {
            "gripper": {
                "category": g.category,
                "w_max": float(g.w_max),
                "gd": float(g.gd),
                "samples_per_trajectory": int(g.samples_per_trajectory),
                "sampling_mode": g.sampling_mode.value,
            },
            "thresholds": {
                "th0": float(t.th0),
                "th1": float(t.th1),
                "th2": float(t.th2),
                "gravity": [float(v) for v in t.gravity],
                "surface_samples": int(t.surface_samples),
                "table_offset": None if t.table_offset is None else float(t.table_offset),
            },
            "stability": {"alpha": float(self.stability.alpha)},
            "seed": int(self.seed),
            "top_k": int(self.top_k),
            "mode": int(self.mode),
        }

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        """Build from a (possibly partial) dict; missing fields keep defaults."""
        _reject_unknown(data, _TOP_KEYS, "")
        kw = {}
        sections = (
            ("gripper", GripperConfig, _GRIPPER_KEYS),
            ("thresholds", FilterThresholds, _THRESHOLD_KEYS),
            ("stability", StabilityParams, _STABILITY_KEYS),
        )
        for name, typ, keys in sections:
            sub = data.get(name, {})
            if not isinstance(sub, dict):
                raise SceneFormatError(f"config.{name}: expected an object")
            _reject_unknown(sub, keys, f"{name}.")
            try:
                kw[name] = typ(**sub)
            except (TypeError, ValueError) as exc:
                raise SceneFormatError(f"config.{name}: {exc}") from exc
        for name in ("seed", "top_k", "mode"):
            if name in data:
                kw[name] = int(data[name])
        try:
            return cls(**kw)
        except ValueError as exc:
            raise SceneFormatError(f"config: {exc}") from exc

    def with_overrides(self, seed=None, top_k=None, mode=None) -> RunConfig:
        d = self.to_dict()
        for key, val in (("seed", seed), ("top_k", top_k), ("mode", mode)):
            if val is not None:
                d[key] = int(val)
        return RunConfig.from_dict(d)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _reject_unknown(data: dict, allowed: set, prefix: str):
    extra = sorted(set(data) - allowed)
    if extra:
        raise SceneFormatError(f"config: unknown field(s) {', '.join(prefix + e for e in extra)}")


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise SceneFormatError(f"{path}: config must be a JSON object")
    return RunConfig.from_dict(data)
