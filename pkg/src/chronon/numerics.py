"""Small numerical helpers: Richardson differentiation, order fits, line fits."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_STEPS = (1e-2, 1e-3, 1e-4)


def richardson_central(func: Callable, x, h: float):
    """Central difference at ``x`` refined by two Richardson levels (h, h/2, h/4).

    The truncation error of the result is O(h**6).  ``func`` may return
    scalars or arrays; complex values are fine.
    """
    def central(step):
        return (func(x + step) - func(x - step)) / (2.0 * step)

    d0, d1, d2 = central(h), central(h / 2.0), central(h / 4.0)
    r0 = (4.0 * d1 - d0) / 3.0
    r1 = (4.0 * d2 - d1) / 3.0
    return (16.0 * r1 - r0) / 15.0


@dataclass(frozen=True)
class SweptDerivative:
    value: object
    step: float
    spread: float


def swept_derivative(func: Callable, x, steps: Sequence[float] = DEFAULT_STEPS) -> SweptDerivative:
    """Richardson derivative repeated over a sweep of base steps.

    Adjacent steps are compared and the pair that agrees best wins; the
    estimate from the larger step of that pair is returned (less rounding),
    together with the disagreement as an error indicator.
    """
    estimates = [richardson_central(func, x, h) for h in steps]
    if len(estimates) == 1:
        return SweptDerivative(estimates[0], steps[0], float("nan"))
    best = None
    for k in range(len(steps) - 1):
        spread = float(np.max(np.abs(np.asarray(estimates[k]) - np.asarray(estimates[k + 1]))))
        if best is None or spread < best[0]:
            best = (spread, k)
    spread, k = best
    return SweptDerivative(estimates[k], steps[k], spread)


def partial_derivative(func: Callable, point, axis: int,
                       steps: Sequence[float] = DEFAULT_STEPS) -> SweptDerivative:
    """Swept Richardson estimate of d func / d point[axis]."""
    point = np.asarray(point, dtype=float)
    unit = np.zeros_like(point)
    unit[axis] = 1.0
    return swept_derivative(lambda t: func(point + t * unit), 0.0, steps)


def fit_order(params: Sequence[float], residuals: Sequence[float]) -> float:
    """Least-squares slope of log|residual| against log(param)."""
    lp = np.log(np.asarray(params, dtype=float))
    lr = np.log(np.abs(np.asarray(residuals, dtype=float)))
    slope, _ = np.polyfit(lp, lr, 1)
    return float(slope)


def halving_sequence(start: float, halvings: int) -> np.ndarray:
    """``start`` followed by ``halvings`` successive halvings."""
    return start / 2.0 ** np.arange(halvings + 1)


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    slope_stderr: float


def fit_line(x, y) -> LineFit:
    """Ordinary least squares ``y = slope * x + intercept`` with the slope's standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("need at least three points for a line fit with an error estimate")
    xm = x.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - y.mean())) / sxx
    intercept = y.mean() - slope * xm
    resid = y - (slope * x + intercept)
    stderr = np.sqrt(np.sum(resid ** 2) / (n - 2) / sxx)
    return LineFit(float(slope), float(intercept), float(stderr))
