"""Shared independent oracles for the test suite.

Every oracle here deliberately avoids the production code path it checks:
batch solves instead of rank-one updates, projected gradient instead of
closed forms, grids instead of solvers.
"""

from __future__ import annotations

import math

import numpy as np
import pytest


def batch_least_squares(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Dense from-scratch ridge solve: V = I + X^T X, theta = V^{-1} X^T y."""
    d = xs.shape[1]
    v = np.eye(d) + xs.T @ xs
    theta = np.linalg.solve(v, xs.T @ ys)
    sign, logdet = np.linalg.slogdet(v)
    assert sign > 0
    return theta, v, float(logdet)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


def psi_of(mu: np.ndarray, gaps: np.ndarray, info: np.ndarray) -> float:
    den = float(mu @ info)
    if den <= 0:
        return math.inf
    num = float(mu @ gaps)
    return num * num / den


def pg_min_psi(gaps: np.ndarray, info: np.ndarray, iters: int = 3000) -> float:
    """Projected-gradient minimization of the information ratio on the simplex.

    Gradient steps with exact line search along the projected direction;
    restarted from the uniform point and every vertex with positive gain.
    """
    gaps = np.asarray(gaps, float)
    info = np.asarray(info, float)
    k = gaps.size

    def line_search(mu: np.ndarray, d: np.ndarray) -> float:
        # psi(mu + a d) = (A + B a)^2 / (C + E a); pick the interior stationary
        # point when it lies in [0, 1], else the better endpoint.
        a_, b_ = float(mu @ gaps), float(d @ gaps)
        c_, e_ = float(mu @ info), float(d @ info)
        cands = [0.0, 1.0]
        if abs(b_ * e_) > 0:
            alpha = (e_ * a_ - 2.0 * b_ * c_) / (b_ * e_)
            if 0.0 < alpha < 1.0:
                cands.append(alpha)
        vals = [psi_of(mu + a * d, gaps, info) for a in cands]
        return cands[int(np.argmin(vals))]

    best = math.inf
    starts = [np.full(k, 1.0 / k)]
    for j in range(k):
        if info[j] > 0:
            e = np.zeros(k)
            e[j] = 1.0
            starts.append(0.9 * e + 0.1 / k)
    for mu in starts:
        mu = project_simplex(mu)
        for t in range(1, iters + 1):
            den = float(mu @ info)
            if den <= 1e-300:
                mu = project_simplex(mu + 1e-3)
                continue
            num = float(mu @ gaps)
            grad = (2.0 * num * gaps * den - num * num * info) / (den * den)
            scale = float(np.abs(grad).max())
            if scale == 0:
                break
            target = project_simplex(mu - grad / scale)
            d = target - mu
            if float(np.abs(d).max()) < 1e-16:
                break
            alpha = line_search(mu, d)
            if alpha == 0.0:
                break
            mu = mu + alpha * d
        best = min(best, psi_of(mu, gaps, info))
    return best


def pg_halfspace_projection(
    theta: np.ndarray, v: np.ndarray, a: np.ndarray, iters: int = 40_000
) -> tuple[np.ndarray, float]:
    """Projected gradient for min |nu - theta|^2_V subject to <nu, a> >= 0."""
    nu = theta.copy()
    lam = float(np.linalg.eigvalsh(v).max())
    lr = 0.9 / (2.0 * lam)
    aa = float(a @ a)
    for _ in range(iters):
        grad = 2.0 * (v @ (nu - theta))
        nu = nu - lr * grad
        viol = float(nu @ a)
        if viol < 0:
            nu = nu - (viol / aa) * a
    diff = nu - theta
    return nu, 0.5 * float(diff @ (v @ diff))


def grid_min_cell(
    theta: np.ndarray,
    v: np.ndarray,
    actions: np.ndarray,
    z: int,
    n_angles: int = 40_001,
) -> float:
    """Fine polar grid over the cell cone of arm z (d=2 only).

    The cell is a polyhedral cone, so every member is t * u for a feasible
    unit direction u and t >= 0; directions are scanned densely and the
    radius minimized exactly per direction (a 1-D quadratic).
    """
    assert theta.size == 2
    normals = actions[z] - actions
    normals = normals[np.linalg.norm(normals, axis=1) > 0]
    if normals.size == 0 or (normals @ theta).min() >= 0:
        return 0.0
    ang = np.linspace(0.0, 2.0 * math.pi, n_angles)
    # Boundary rays (normals rotated +-90 degrees) are kinks of the angular
    # profile, so include them exactly.
    base_ang = np.arctan2(normals[:, 1], normals[:, 0])
    ang = np.concatenate([ang, base_ang + math.pi / 2, base_ang - math.pi / 2])
    u = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    feasible = np.all(u @ normals.T >= -1e-12, axis=1)
    u = u[feasible]
    assert u.size, "angular grid misses the cell entirely"
    base = float(theta @ v @ theta)
    a = u @ (v @ theta)
    b = np.einsum("ij,ij->i", u @ v, u)
    t = np.maximum(a / b, 0.0)
    vals = 0.5 * (base - 2.0 * t * a + t * t * b)
    return float(min(vals.min(), 0.5 * base))


def grid_min_tradeoff(d1: float, d2: float, i1: float, i2: float, step: float = 1e-5) -> float:
    """Best two-point ratio over a dense probability grid."""
    ps = np.arange(0.0, 1.0 + step, step)
    num = ((1 - ps) * d1 + ps * d2) ** 2
    den = (1 - ps) * i1 + ps * i2
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = np.where(den > 0, num / den, np.inf)
    return float(ps[int(np.argmin(vals))])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(987654321)
