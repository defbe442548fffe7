"""Per-channel trajectory plot written as plain SVG."""
from __future__ import annotations

from pathlib import Path

import numpy as np

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def trajectory_svg(observed: np.ndarray, predicted: np.ndarray, width: int = 800, height: int = 400,
                   margin: int = 30) -> str:
    """One polyline per channel: observed frames solid, predicted frames dashed.

    ``observed`` is (K, C) and ``predicted`` is (T, C), in channel units (mm).
    """
    obs = np.asarray(observed, dtype=np.float64)
    pred = np.asarray(predicted, dtype=np.float64)
    K, C = obs.shape
    T = pred.shape[0]
    allv = np.concatenate([obs, pred])
    lo, hi = float(allv.min()), float(allv.max())
    span = hi - lo if hi > lo else 1.0
    total = K + T - 1 if K + T > 1 else 1

    def xy(frame: int, v: float) -> str:
        x = margin + (width - 2 * margin) * frame / total
        y = height - margin - (height - 2 * margin) * (v - lo) / span
        return f"{x:.2f},{y:.2f}"

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    x_cut = margin + (width - 2 * margin) * (K - 1) / total
    lines.append(f'<line x1="{x_cut:.2f}" y1="{margin}" x2="{x_cut:.2f}" y2="{height - margin}" '
                 f'stroke="#999" stroke-width="1"/>')
    for c in range(C):
        color = _PALETTE[c % len(_PALETTE)]
        solid = " ".join(xy(f, obs[f, c]) for f in range(K))
        dashed = " ".join([xy(K - 1, obs[-1, c])] + [xy(K + f, pred[f, c]) for f in range(T)])
        lines.append(f'<polyline data-channel="{c}" fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{solid}"/>')
        lines.append(f'<polyline data-channel="{c}" fill="none" stroke="{color}" stroke-width="1.5" '
                     f'stroke-dasharray="5,4" points="{dashed}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_trajectory_svg(observed: np.ndarray, predicted: np.ndarray, path) -> None:
    Path(path).write_text(trajectory_svg(observed, predicted))
