"""Work accounting and image-quality measurement.

Work is counted in effect samples; the ratio of multi-resolution samples to
full-resolution reference samples is the hardware-independent speedup proxy.
Quality is the root mean square of per-pixel, per-channel differences on
values in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LevelWork:
    index: int
    width: int
    height: int
    shaded_pixels: int
    samples: int


@dataclass
class WorkReport:
    levels: list[LevelWork]
    reference_samples: int
    total_shaded: int = field(init=False)
    total_samples: int = field(init=False)

    def __post_init__(self):
        self.total_shaded = sum(l.shaded_pixels for l in self.levels)
        self.total_samples = sum(l.samples for l in self.levels)

    @property
    def work_ratio(self) -> float:
        if self.reference_samples <= 0:
            raise ValueError("reference sample count must be > 0")
        return self.total_samples / self.reference_samples

    def to_dict(self) -> dict:
        return {
            "levels": [
                {"level": l.index, "resolution": [l.width, l.height],
                 "shaded_pixels": l.shaded_pixels, "samples": l.samples}
                for l in self.levels
            ],
            "total_shaded_pixels": self.total_shaded,
            "total_samples": self.total_samples,
            "reference_samples": self.reference_samples,
            "ratio": self.work_ratio,
            "reduction": work_reduction(self),
        }


@dataclass
class QualityReport:
    rms: float
    max_abs: float
    diff_image: np.ndarray  # |a - b| times the enhancement factor, clamped to [0, 1]

    def to_dict(self) -> dict:
        return {"rms": self.rms, "max_abs": self.max_abs}


def rms_error(a: np.ndarray, b: np.ndarray, enhancement: float = 10.0) -> QualityReport:
    """RMS over all pixels and channels jointly, plus an enhanced difference image."""
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    diff = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    rms = float(np.sqrt(np.mean(diff * diff)))
    return QualityReport(rms=rms, max_abs=float(diff.max()),
                         diff_image=np.clip(diff * enhancement, 0.0, 1.0))


def work_reduction(report: WorkReport) -> float:
    """Fraction of shading work eliminated relative to the full-resolution pass."""
    return 1.0 - report.work_ratio
