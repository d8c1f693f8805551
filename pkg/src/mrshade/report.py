"""Run artifacts: images, report.json, delimited summaries, and figures.

Images are exported twice: a portable 8-bit PNG (quantized with round-half-up)
and a lossless float sidecar (.npy) used by quality comparisons, so 8-bit
rounding never contaminates millinit-scale error measurements. Figures are
rendered with matplotlib alongside the CSV summaries.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from PIL import Image  # noqa: E402


def quantize8(img: np.ndarray) -> np.ndarray:
    """Float [0, 1] -> uint8 with round-half-up; the documented export quantization."""
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_png(path, img: np.ndarray) -> None:
    q = quantize8(img)
    mode = "RGB" if q.ndim == 3 else "L"
    Image.fromarray(q, mode=mode).save(Path(path))


def load_png(path) -> np.ndarray:
    arr = np.asarray(Image.open(Path(path)))
    return arr.astype(np.float64) / 255.0


def save_float(path, img: np.ndarray) -> None:
    np.save(Path(path), np.asarray(img, dtype=np.float64))


def load_float(path) -> np.ndarray:
    return np.load(Path(path))


def write_report_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_report_json(path) -> dict:
    return json.loads(Path(path).read_text())


def write_levels_csv(path, work_dict: dict) -> None:
    """Per-level shading work as a delimited table."""
    with open(Path(path), "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["record", "level", "width", "height", "shaded_pixels", "samples"])
        for lvl in work_dict["levels"]:
            out.writerow(["level", lvl["level"], lvl["resolution"][0], lvl["resolution"][1],
                          lvl["shaded_pixels"], lvl["samples"]])
        out.writerow(["total", "", "", "", work_dict["total_shaded_pixels"], work_dict["total_samples"]])
        out.writerow(["reference", "", "", "", "", work_dict["reference_samples"]])


def write_summary_csv(path, payload: dict) -> None:
    """Flat key/value summary of one run."""
    rows = [
        ("effect", payload["effect"]),
        ("width", payload["resolution"][0]),
        ("height", payload["resolution"][1]),
        ("samples", payload["samples"]),
        ("seed", payload["seed"]),
    ]
    work = payload.get("work")
    if work:
        rows += [
            ("total_samples", work["total_samples"]),
            ("reference_samples", work["reference_samples"]),
            ("work_ratio", work["ratio"]),
            ("work_reduction", work["reduction"]),
        ]
    quality = payload.get("quality")
    if quality:
        rows += [("rms", quality["rms"]), ("max_abs", quality["max_abs"])]
    with open(Path(path), "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["key", "value"])
        out.writerows(rows)


def _imshow(ax, img: np.ndarray, title: str) -> None:
    if img.ndim == 2:
        ax.imshow(np.clip(img, 0, 1), cmap="gray", vmin=0, vmax=1, interpolation="nearest")
    else:
        ax.imshow(np.clip(img, 0, 1), interpolation="nearest")
    ax.set_title(title, fontsize=9)
    ax.set_axis_off()


def render_comparison_figure(path, multi: np.ndarray | None, reference: np.ndarray | None,
                             diff: np.ndarray | None, effect: str) -> None:
    panels = [(img, name) for img, name in
              ((multi, "multi-resolution"), (reference, "reference"), (diff, "difference x10"))
              if img is not None]
    if not panels:
        return
    fig, axes = plt.subplots(1, len(panels), figsize=(4.2 * len(panels), 3.2))
    if len(panels) == 1:
        axes = [axes]
    for ax, (img, name) in zip(axes, panels):
        _imshow(ax, img, f"{effect} {name}")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=110)
    plt.close(fig)


def render_work_figure(path, work_dict: dict, effect: str) -> None:
    levels = work_dict["levels"]
    idx = [str(l["level"]) for l in levels]
    samples = [l["samples"] for l in levels]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(idx, samples, color="#4878b0")
    ax.axhline(work_dict["reference_samples"], color="#b04848", linestyle="--",
               label="full-resolution reference")
    ax.set_xlabel("resolution level (1 = full)")
    ax.set_ylabel("effect samples")
    ax.set_yscale("log")
    ax.set_title(f"{effect}: work ratio {work_dict['ratio']:.4f} "
                 f"(reduction {100.0 * work_dict['reduction']:.1f}%)", fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=110)
    plt.close(fig)
