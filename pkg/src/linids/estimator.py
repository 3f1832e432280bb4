"""Regularized least squares with exact O(d^2) incremental updates.

The estimator is kept in *noise-whitened* coordinates: callers feed it
``(x / sigma, y / sigma)`` so that the observation noise is unit variance
and the confidence-coefficient formulas below apply verbatim.  The
precision matrix starts at the identity, so ``theta_hat`` is the
ridge-regularized solution of the absorbed data.

``step`` is 1-based: a fresh estimator is at step 1 and has absorbed no
observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EstimatorState",
    "BetaSpec",
    "init_estimator",
    "update",
    "absorb",
    "beta",
    "whitened_beta",
    "weighted_norm",
]


@dataclass
class EstimatorState:
    """Sufficient statistics of the regularized least-squares estimate.

    ``precision`` is ``V_s = I + sum x_i x_i^T``, ``precision_inv`` its
    inverse (re-symmetrized after every rank-one update), ``logdet`` the
    running ``log det V_s``, ``data_sum`` the vector ``sum x_i y_i`` and
    ``theta_hat = V_s^{-1} data_sum``.  Treat a state as exclusively owned:
    :func:`update` returns a fresh state, :func:`absorb` mutates in place.
    """

    dim: int
    step: int
    precision: np.ndarray
    precision_inv: np.ndarray
    logdet: float
    data_sum: np.ndarray
    theta_hat: np.ndarray

    def copy(self) -> "EstimatorState":
        return EstimatorState(
            dim=self.dim,
            step=self.step,
            precision=self.precision.copy(),
            precision_inv=self.precision_inv.copy(),
            logdet=self.logdet,
            data_sum=self.data_sum.copy(),
            theta_hat=self.theta_hat.copy(),
        )


@dataclass(frozen=True)
class BetaSpec:
    """Which confidence-coefficient rule to use.

    ``logdet``    -- self-normalized bound (sqrt(2 log(1/delta) + logdet V) + 1)^2
    ``simplified``-- 2 log t + d log log t, indexed by global time
    ``fixed``     -- a constant, for tuning sweeps
    """

    mode: str = "logdet"
    fixed_value: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("logdet", "simplified", "fixed"):
            raise ValueError(f"unknown beta mode {self.mode!r}")
        if self.mode == "fixed":
            if self.fixed_value is None or self.fixed_value <= 0:
                raise ValueError("fixed mode requires fixed_value > 0")


def init_estimator(d: int) -> EstimatorState:
    """Fresh estimator: V = I, theta_hat = 0, step 1."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return EstimatorState(
        dim=d,
        step=1,
        precision=np.eye(d),
        precision_inv=np.eye(d),
        logdet=0.0,
        data_sum=np.zeros(d),
        theta_hat=np.zeros(d),
    )


def absorb(state: EstimatorState, x: np.ndarray, y: float) -> EstimatorState:
    """Rank-one update in place; returns the same (mutated) state.

    V += x x^T, with the inverse updated by the rank-one inverse formula,
    logdet += log(1 + |x|^2_{V^-1}) and theta_hat moved by the one-step
    least-squares increment V^{-1} x (y - <x, theta_hat>) / (1 + |x|^2_{V^-1}).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.dim,):
        raise ValueError(f"expected vector of dimension {state.dim}, got {x.shape}")
    vinv_x = state.precision_inv @ x
    w = float(x @ vinv_x)
    # A non-finite x or y surfaces here: w or the residual goes NaN/inf.
    if not (math.isfinite(w) and math.isfinite(y)):
        raise ValueError("update inputs must be finite")
    denom = 1.0 + w
    if denom <= 0.0:
        # Impossible in exact arithmetic (V is PD); guards numerical drift.
        raise ArithmeticError(f"rank-one update denominator {denom} <= 0")
    state.precision += x[:, None] * x
    inv = state.precision_inv
    inv -= (vinv_x[:, None] / denom) * vinv_x
    inv += inv.T
    inv *= 0.5
    state.logdet += math.log1p(w)
    state.data_sum += x * y
    state.theta_hat += vinv_x * ((y - float(x @ state.theta_hat)) / denom)
    state.step += 1
    return state


def update(state: EstimatorState, x: np.ndarray, y: float) -> EstimatorState:
    """Pure rank-one update: returns a new state, the input is untouched."""
    return absorb(state.copy(), x, y)


def whitened_beta(
    state: EstimatorState,
    spec: BetaSpec,
    delta_inv: float,
    global_t: int | None = None,
) -> float:
    """Confidence coefficient in whitened (unit-variance) units.

    This is the radius bound on |theta_hat - theta*|^2_{V} that every
    algorithm consumes internally.
    """
    if spec.mode == "fixed":
        return float(spec.fixed_value)
    if spec.mode == "simplified":
        if global_t is None:
            raise ValueError("simplified mode needs the global time")
        t = max(int(global_t), 3)
        return 2.0 * math.log(t) + state.dim * math.log(math.log(t))
    if delta_inv < 1:
        raise ValueError(f"delta_inv must be >= 1, got {delta_inv}")
    root = math.sqrt(2.0 * math.log(delta_inv) + state.logdet) + 1.0
    return root * root


def beta(
    state: EstimatorState,
    spec: BetaSpec,
    delta_inv: float,
    noise_std: float = 1.0,
    global_t: int | None = None,
) -> float:
    """Confidence coefficient scaled back to un-whitened reward units.

    ``logdet`` mode: sigma^2 (sqrt(2 log delta_inv + logdet V) + 1)^2;
    ``simplified``: sigma^2 (2 log t + d log log t) for t >= 3;
    ``fixed``: the configured constant, returned as-is.
    """
    base = whitened_beta(state, spec, delta_inv, global_t)
    if spec.mode == "fixed":
        return base
    scale = noise_std if noise_std > 0 else 1.0
    return scale * scale * base


def weighted_norm(state: EstimatorState, v: np.ndarray, inverse: bool = False) -> float:
    """sqrt(v^T V v), or sqrt(v^T V^{-1} v) with ``inverse=True``."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (state.dim,):
        raise ValueError(f"expected vector of dimension {state.dim}, got {v.shape}")
    mat = state.precision_inv if inverse else state.precision
    val = float(v @ (mat @ v))
    return math.sqrt(max(val, 0.0))
