"""Run configuration shared by the CLI and the pipeline.

One flat dataclass covers the facial area, temporal mode, descriptor
choice, windowing, smoothing, landmark anchors, and SVM hyperparameters.
The full configuration is echoed verbatim into every output artifact so
experiments stay reproducible from their outputs alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional

from .descriptors import DESCRIPTOR_KINDS, TemporalMode
from .errors import FormatError, ParameterError
from .ingest import AREAS
from .windowing import WindowingConfig


@dataclass(frozen=True)
class RunConfig:
    area: str = "F"
    mode: str = "direct"
    descriptor: str = "ldp-top"
    window_d_seconds: float = 2.0
    window_s_seconds: float = 1.0
    window_sliding: bool = True
    smooth_window: int = 7
    smooth_order: int = 2
    landmark_r: int = 39
    landmark_l: int = 42
    landmark_n: int = 27
    box_margin: float = 0.1
    svm_c: float = 1.0
    svm_tol: float = 1e-3
    svm_max_iter: Optional[int] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.area not in AREAS:
            raise ParameterError(f"area must be one of {AREAS}, got {self.area!r}")
        TemporalMode.coerce(self.mode)
        if self.descriptor not in DESCRIPTOR_KINDS:
            raise ParameterError(
                f"descriptor must be one of {DESCRIPTOR_KINDS}, got {self.descriptor!r}"
            )
        if self.smooth_window < 3 or self.smooth_window % 2 == 0:
            raise ParameterError("smoother window must be odd and >= 3")
        if not 0 <= self.smooth_order < self.smooth_window:
            raise ParameterError("smoother order must satisfy 0 <= order < window")
        if self.svm_c <= 0 or self.svm_tol <= 0:
            raise ParameterError("svm C and tol must be positive")
        # window/stride positivity is validated by WindowingConfig
        self.windowing()

    def windowing(self) -> WindowingConfig:
        return WindowingConfig(
            d_seconds=self.window_d_seconds,
            s_seconds=self.window_s_seconds,
            sliding=self.window_sliding,
        )

    @property
    def anchors(self) -> dict[str, int]:
        return {"r": self.landmark_r, "l": self.landmark_l, "n": self.landmark_n}

    def to_dict(self) -> dict[str, Any]:
        """Nested echo used in output artifacts and config files."""
        return {
            "area": self.area,
            "mode": self.mode,
            "descriptor": self.descriptor,
            "window": {
                "d_seconds": self.window_d_seconds,
                "s_seconds": self.window_s_seconds,
                "sliding": self.window_sliding,
            },
            "smoother": {"window": self.smooth_window, "order": self.smooth_order},
            "landmarks": {
                "r": self.landmark_r,
                "l": self.landmark_l,
                "n": self.landmark_n,
            },
            "box_margin": self.box_margin,
            "svm": {
                "C": self.svm_c,
                "tol": self.svm_tol,
                "max_iter": self.svm_max_iter,
            },
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        window = data.get("window", {})
        smoother = data.get("smoother", {})
        landmarks = data.get("landmarks", {})
        svm = data.get("svm", {})
        base = cls()
        return cls(
            area=data.get("area", base.area),
            mode=data.get("mode", base.mode),
            descriptor=data.get("descriptor", base.descriptor),
            window_d_seconds=float(window.get("d_seconds", base.window_d_seconds)),
            window_s_seconds=float(window.get("s_seconds", base.window_s_seconds)),
            window_sliding=bool(window.get("sliding", base.window_sliding)),
            smooth_window=int(smoother.get("window", base.smooth_window)),
            smooth_order=int(smoother.get("order", base.smooth_order)),
            landmark_r=int(landmarks.get("r", base.landmark_r)),
            landmark_l=int(landmarks.get("l", base.landmark_l)),
            landmark_n=int(landmarks.get("n", base.landmark_n)),
            box_margin=float(data.get("box_margin", base.box_margin)),
            svm_c=float(svm.get("C", base.svm_c)),
            svm_tol=float(svm.get("tol", base.svm_tol)),
            svm_max_iter=(
                None if svm.get("max_iter") is None else int(svm["max_iter"])
            ),
            seed=int(data.get("seed", base.seed)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        """Read a JSON or TOML config file."""
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".toml":
            try:
                import tomllib  # Python >= 3.11
            except ImportError:
                import tomli as tomllib
            try:
                data = tomllib.loads(text)
            except tomllib.TOMLDecodeError as exc:
                raise FormatError(f"{path}: bad TOML ({exc})") from exc
        else:
            try:
                data = json.loads(text)
            except ValueError as exc:
                raise FormatError(f"{path}: bad JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise FormatError(f"{path}: config must be a mapping")
        return cls.from_dict(data)

    def with_overrides(self, **kwargs: Any) -> "RunConfig":
        """Copy with keyword overrides; None values are ignored."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self
