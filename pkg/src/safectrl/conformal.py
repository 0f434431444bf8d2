"""Adaptive conformal prediction for dynamics estimates.

A sliding window keeps the L most recent (state, derivative) pairs.  Each
step the nonconformity scores are the infinity-norm residuals of the current
estimator over the window, and the prediction set is a box around the
estimate whose half-width is the ceil((1 - alpha_t)(L + 1))-th smallest
score.  The miscoverage level alpha_t follows the online update

    alpha_t <- alpha_t + gamma * (alpha_target - err)

where err is 1 when the realised derivative fell outside the previous box.
Out-of-range alpha_t values clamp the width instead of the level: below
1 / (L + 1) the width saturates at r_max, at or above 1 it collapses to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, InsufficientCalibrationError, InsufficientDataError
from .rbf import RbfNetwork, predict_batch


class CalibrationWindow:
    """FIFO window of the most recent (state, derivative) pairs.

    Rows are kept oldest-first in two preallocated arrays so that scoring
    the whole window is a single batched network evaluation.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InputError("window capacity must be at least 1")
        self.capacity = capacity
        self._states: Optional[np.ndarray] = None
        self._derivs: Optional[np.ndarray] = None
        self._count = 0

    def push(self, state: np.ndarray, derivative: np.ndarray) -> None:
        state = np.asarray(state, dtype=float).ravel()
        derivative = np.asarray(derivative, dtype=float).ravel()
        if self._states is None:
            self._states = np.empty((self.capacity, state.shape[0]))
            self._derivs = np.empty((self.capacity, derivative.shape[0]))
        if self._count < self.capacity:
            self._states[self._count] = state
            self._derivs[self._count] = derivative
            self._count += 1
        else:
            self._states[:-1] = self._states[1:]
            self._derivs[:-1] = self._derivs[1:]
            self._states[-1] = state
            self._derivs[-1] = derivative

    @property
    def entries(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Stored pairs, oldest first."""
        if self._states is None:
            return []
        return [
            (self._states[i].copy(), self._derivs[i].copy())
            for i in range(self._count)
        ]

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Views of the stored states and derivatives, oldest first."""
        if self._states is None:
            raise InsufficientCalibrationError("calibration window is empty")
        return self._states[: self._count], self._derivs[: self._count]

    def __len__(self) -> int:
        return self._count


@dataclass
class AcpState:
    """Adaptive miscoverage level and its error history.

    alpha_t itself is never clamped; r_max is the saturation width used when
    alpha_t drifts below 1 / (L + 1).
    """

    alpha_t: float
    alpha_target: float
    gamma: float
    r_max: float
    err_history: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.alpha_target < 1.0:
            raise InputError("alpha_target must lie strictly between 0 and 1")
        if self.gamma <= 0.0:
            raise InputError("gamma must be positive")
        if self.r_max < 0.0:
            raise InputError("r_max must be non-negative")


@dataclass
class PredictionBox:
    """Axis-aligned box: all y with |y - center|_inf <= radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).ravel()
        if self.radius < 0.0:
            raise InputError("radius must be non-negative")


def scores(net: RbfNetwork, window: CalibrationWindow) -> np.ndarray:
    """Infinity-norm residuals of `net` over the window, oldest first."""
    if len(window) == 0:
        raise InsufficientCalibrationError("calibration window is empty")
    states, derivs = window.arrays()
    resid = derivs - predict_batch(net, states)
    return np.max(np.abs(resid), axis=1)


def quantile_width(alpha_t: float, score_values: Sequence[float], r_max: float) -> float:
    """Box half-width from scores at the current miscoverage level.

    For alpha_t in [1/(L+1), 1) this is the ceil((1 - alpha_t)(L + 1))-th
    smallest score (1-indexed).  Below that range the width saturates at
    r_max; at or above 1 it is 0.
    """
    s = np.asarray(score_values, dtype=float).ravel()
    count = s.shape[0]
    if count == 0:
        raise InsufficientCalibrationError("no scores to take a quantile of")
    if np.any(s < 0.0):
        raise InputError("scores must be non-negative")
    if alpha_t < 1.0 / (count + 1):
        return float(r_max)
    if alpha_t >= 1.0:
        return 0.0
    k = math.ceil((1.0 - alpha_t) * (count + 1))
    return float(np.sort(s)[k - 1])


def update_alpha(state: AcpState, err: int) -> AcpState:
    """Return a new state after one miscoverage feedback step."""
    if err not in (0, 1):
        raise InputError("err must be 0 or 1")
    return AcpState(
        alpha_t=state.alpha_t + state.gamma * (state.alpha_target - err),
        alpha_target=state.alpha_target,
        gamma=state.gamma,
        r_max=state.r_max,
        err_history=state.err_history + [int(err)],
    )


def covered(box: PredictionBox, actual: np.ndarray) -> int:
    """0 when `actual` lies in the box (boundary inclusive), else 1."""
    actual = np.asarray(actual, dtype=float).ravel()
    if actual.shape != box.center.shape:
        raise InputError(
            f"actual has shape {actual.shape}, box center has {box.center.shape}"
        )
    return 0 if float(np.max(np.abs(actual - box.center))) <= box.radius else 1


def coverage_rate(err_history: Sequence[int]) -> float:
    """Fraction of recorded steps whose box covered the realised value."""
    errs = list(err_history)
    if not errs:
        raise InsufficientDataError("empty error history")
    if any(e not in (0, 1) for e in errs):
        raise InputError("error history must be binary")
    return 1.0 - sum(errs) / len(errs)
