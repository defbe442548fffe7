"""Five-point finite-difference oracle, independent of the backward pass.

The fourth-order stencil allows a larger step, which keeps round-off well
below the relative tolerance on small gradient entries.
"""
import numpy as np

H = 1e-3
REL_TOL = 1e-4
ABS_TOL = 1e-7
SMALL = 1e-6


def numeric_grad(f, arr: np.ndarray, h: float = H, entries=None) -> dict:
    """d f / d arr[idx] by the five-point stencil; ``f`` re-reads ``arr`` (mutated in place)."""
    out = {}
    idxs = entries if entries is not None else list(np.ndindex(arr.shape))
    for idx in idxs:
        old = arr[idx]
        vals = []
        for step in (2 * h, h, -h, -2 * h):
            arr[idx] = old + step
            vals.append(f())
        arr[idx] = old
        out[idx] = (-vals[0] + 8 * vals[1] - 8 * vals[2] + vals[3]) / (12 * h)
    return out


def grad_error(analytic: float, numeric: float) -> float:
    """Relative error, or 0/inf against the absolute tolerance for tiny gradients."""
    if abs(analytic) < SMALL:
        return 0.0 if abs(analytic - numeric) < ABS_TOL else float("inf")
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric))


def check(f, arr: np.ndarray, analytic: np.ndarray, entries=None) -> float:
    """Worst error over the checked entries."""
    worst = 0.0
    for idx, num in numeric_grad(f, arr, entries=entries).items():
        worst = max(worst, grad_error(float(analytic[idx]), num))
    return worst
