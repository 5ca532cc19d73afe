"""Exponential saturation model h(y) = h0 + a*(1 - exp(-b*(y - y0))).

h0 and y0 are fixed (defaults: first observation); a and b are fitted by
projected gradient descent on the sum-of-squares loss, with a backtracking
step-size guard so accepted iterations never increase the loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DivergedLoss, EmptyData, InvalidFraction, TooFewPoints

B_FLOOR = 1e-6
LR_FLOOR = 1e-18


@dataclass
class SaturationModel:
    h0: float
    y0: float
    a: float
    b: float
    final_loss: float = 0.0
    iterations_run: int = 0
    converged: bool = False


@dataclass
class FitConfig:
    learning_rate: float = 1e-3
    max_iterations: int = 200000
    grad_tolerance: float = 1e-10
    init_a: Optional[float] = None  # default: max(q) - min(q)
    init_b: float = 0.1
    h0: Optional[float] = None  # default: first-year observed q
    y0: Optional[float] = None  # default: first year

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def model_eval(model: SaturationModel, y: float) -> float:
    return model.h0 + model.a * (1.0 - math.exp(-model.b * (y - model.y0)))


def _sorted_arrays(data: Sequence[Tuple[float, float]]) -> Tuple[np.ndarray, np.ndarray]:
    if not data:
        raise EmptyData("no (year, q) observations")
    ordered = sorted(data, key=lambda p: p[0])
    years = np.array([p[0] for p in ordered], dtype=np.float64)
    values = np.array([p[1] for p in ordered], dtype=np.float64)
    return years, values


def loss(model: SaturationModel, data: Sequence[Tuple[float, float]]) -> float:
    """Sum of squared residuals, compensated, in ascending-year order."""
    years, values = _sorted_arrays(data)
    residuals = values - (model.h0 + model.a * (1.0 - np.exp(-model.b * (years - model.y0))))
    return math.fsum(residuals**2)


def loss_gradient(model: SaturationModel, data: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """Analytic (dL/da, dL/db) for fixed h0, y0."""
    years, values = _sorted_arrays(data)
    d = years - model.y0
    decay = np.exp(-model.b * d)
    r = values - (model.h0 + model.a * (1.0 - decay))
    grad_a = -2.0 * math.fsum(r * (1.0 - decay))
    grad_b = -2.0 * math.fsum(r * model.a * d * decay)
    return grad_a, grad_b


def fit(data: Sequence[Tuple[float, float]], config: Optional[FitConfig] = None) -> SaturationModel:
    """Fit (a, b) by projected gradient descent with a backtracking guard.

    The step size halves whenever a step would increase the loss and grows
    slowly after accepted steps, so the loss is non-increasing across
    accepted iterations. a is projected onto [0, inf), b onto [B_FLOOR, inf).
    """
    if config is None:
        config = FitConfig()
    years, values = _sorted_arrays(data)
    if len(set(years.tolist())) < 3:
        raise TooFewPoints("fit requires at least 3 distinct years")

    y0 = config.y0 if config.y0 is not None else float(years[0])
    h0 = config.h0 if config.h0 is not None else float(values[np.argmin(years)])
    d = years - y0
    a = config.init_a if config.init_a is not None else float(values.max() - values.min())
    a = max(a, 0.0)
    b = max(config.init_b, B_FLOOR)

    def sq_loss(aa: float, bb: float) -> float:
        r = values - (h0 + aa * (1.0 - np.exp(-bb * d)))
        return float(r @ r)

    lr = config.learning_rate
    current = sq_loss(a, b)
    if not math.isfinite(current):
        raise DivergedLoss(f"initial loss non-finite at a={a}, b={b}")

    iterations = 0
    converged = False
    for iterations in range(1, config.max_iterations + 1):
        decay = np.exp(-b * d)
        r = values - (h0 + a * (1.0 - decay))
        grad_a = -2.0 * float(r @ (1.0 - decay))
        grad_b = -2.0 * float(r @ (a * d * decay))
        if max(abs(grad_a), abs(grad_b)) <= config.grad_tolerance:
            converged = True
            break
        while True:
            na = max(a - lr * grad_a, 0.0)
            nb = max(b - lr * grad_b, B_FLOOR)
            new_loss = sq_loss(na, nb)
            if not math.isfinite(new_loss):
                lr *= 0.5
            elif new_loss <= current:
                a, b, current = na, nb, new_loss
                lr = min(lr * 1.1, 1e3)
                break
            else:
                lr *= 0.5
            if lr < LR_FLOOR:
                break
        if lr < LR_FLOOR:
            break

    if not math.isfinite(current):
        raise DivergedLoss(f"loss diverged at a={a}, b={b} after {iterations} iterations")

    model = SaturationModel(
        h0=h0, y0=y0, a=a, b=b, iterations_run=iterations, converged=converged
    )
    model.final_loss = loss(model, data)
    return model


def saturation_year(model: SaturationModel, fraction: float) -> Tuple[float, int]:
    """Year at which the shape factor 1 - exp(-b*(y - y0)) reaches `fraction`.

    Returns (exact real-valued year, floor-reported integer year).
    """
    if not 0.0 < fraction < 1.0:
        raise InvalidFraction(f"fraction must be in (0, 1), got {fraction}")
    if model.b <= 0:
        raise InvalidFraction("saturation year undefined for b <= 0")
    exact = model.y0 + (-math.log(1.0 - fraction)) / model.b
    return exact, math.floor(exact)
