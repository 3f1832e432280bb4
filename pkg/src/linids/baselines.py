"""Baseline policies sharing the whitened least-squares estimator.

All baselines use every observation (no explore/exploit split) and the
same confidence machinery as the sampling algorithm:

* ``linucb``    -- play the optimistic index at confidence level t^2;
* ``thompson``  -- sample a parameter from the Gaussian posterior
  N(theta_hat, V^{-1}) in whitened coordinates and play its best arm;
* ``bayes_ids`` -- approximate the Bayesian information ratio with
  posterior samples: cell probabilities, cell means and a variance-based
  information gain, then sample the two-point minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Instance, RngStream, as_generator, sample_reward
from .estimator import BetaSpec, EstimatorState, absorb, init_estimator, whitened_beta
from .ids import ids_distribution

__all__ = [
    "BaselineState",
    "BayesIdsDiagnostics",
    "init_baseline",
    "ucb_index",
    "linucb_step",
    "thompson_step",
    "bayes_ids_step",
    "posterior_cell_statistics",
    "variance_info_gain",
]

KINDS = ("linucb", "thompson", "bayes_ids")


@dataclass
class BaselineState:
    """Per-run baseline state; exclusively owned by one worker."""

    estimator: EstimatorState
    global_t: int
    kind: str
    beta_spec: BetaSpec = field(default_factory=BetaSpec)
    mc_samples: int = 10_000
    fast_pairing: bool = False
    actions_w: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.kind == "bayes_ids" and self.mc_samples < 100:
            raise ValueError("bayes_ids needs at least 100 posterior samples")


@dataclass(frozen=True)
class BayesIdsDiagnostics:
    """Per-round byproducts of the sample-based Bayesian step."""

    q_bar: np.ndarray
    info_var: np.ndarray
    gaps: np.ndarray
    mu: tuple[tuple[int, float], ...]
    psi: float


def init_baseline(
    instance: Instance,
    kind: str,
    beta_spec: BetaSpec | None = None,
    mc_samples: int = 10_000,
    fast_pairing: bool = False,
) -> BaselineState:
    return BaselineState(
        estimator=init_estimator(instance.dim),
        global_t=1,
        kind=kind,
        beta_spec=beta_spec or BetaSpec(),
        mc_samples=mc_samples,
        fast_pairing=fast_pairing,
        actions_w=instance.whitened_actions,
    )


def _absorb_observation(
    state: BaselineState, instance: Instance, arm: int, gen: np.random.Generator
) -> None:
    y = sample_reward(instance, arm, gen)
    absorb(state.estimator, state.actions_w[arm], y / instance.whitening_scale)
    state.global_t += 1


def ucb_index(est: EstimatorState, actions: np.ndarray, beta: float) -> int:
    """Arm maximizing mean estimate plus confidence bonus; lowest-index ties."""
    xv = actions @ est.precision_inv
    wn2 = np.einsum("ij,ij->i", xv, actions)
    np.maximum(wn2, 0.0, out=wn2)
    return int(np.argmax(actions @ est.theta_hat + np.sqrt(beta * wn2)))


def linucb_step(
    state: BaselineState, instance: Instance, rng: "RngStream | np.random.Generator"
) -> tuple[int, BaselineState]:
    """Optimistic play at confidence level 1/delta = t^2, then update."""
    gen = as_generator(rng)
    t = state.global_t
    b = whitened_beta(state.estimator, state.beta_spec, float(t) * t, t)
    arm = ucb_index(state.estimator, state.actions_w, b)
    _absorb_observation(state, instance, arm, gen)
    return arm, state


def thompson_step(
    state: BaselineState, instance: Instance, rng: "RngStream | np.random.Generator"
) -> tuple[int, BaselineState]:
    """Play the best arm of one posterior draw N(theta_hat, V^{-1})."""
    gen = as_generator(rng)
    est = state.estimator
    chol = np.linalg.cholesky(est.precision_inv)
    theta_tilde = est.theta_hat + chol @ gen.standard_normal(est.dim)
    arm = int(np.argmax(state.actions_w @ theta_tilde))
    _absorb_observation(state, instance, arm, gen)
    return arm, state


def posterior_cell_statistics(
    samples: np.ndarray, actions: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Cell probabilities, cell means, overall mean and Bayesian gaps.

    The *cell* of arm ``z`` collects the posterior samples whose best arm is
    ``z``; empty cells get probability zero and the overall mean as a
    placeholder so they drop out of downstream sums.
    """
    m, _ = samples.shape
    k = actions.shape[0]
    scores = samples @ actions.T
    best = np.argmax(scores, axis=1)
    counts = np.bincount(best, minlength=k)
    q_bar = counts / m
    theta_bar = samples.mean(axis=0)
    nu_bar = np.tile(theta_bar, (k, 1))
    for z in np.flatnonzero(counts):
        nu_bar[z] = samples[best == z].mean(axis=0)
    gaps = scores.max(axis=1).mean() - scores.mean(axis=0)
    return q_bar, nu_bar, theta_bar, gaps


def variance_info_gain(
    q_bar: np.ndarray, nu_bar: np.ndarray, theta_bar: np.ndarray, actions: np.ndarray
) -> np.ndarray:
    """Variance of the conditional mean reward over the best-arm identity.

    ``I(x) = sum_z q_bar(z) <nu_bar(z) - theta_bar, x>^2``; invariant to
    shifting every sample by a constant vector.
    """
    cross = (nu_bar - theta_bar) @ actions.T
    return q_bar @ (cross * cross)


def bayes_ids_step(
    state: BaselineState, instance: Instance, rng: "RngStream | np.random.Generator"
) -> tuple[int, BaselineState, BayesIdsDiagnostics]:
    """Sample-based Bayesian trade-off step.

    Draws ``mc_samples`` posterior parameters, estimates cell statistics and
    the variance-based gain, and samples the two-point ratio minimizer over
    (Bayesian gaps, gain).  With the posterior collapsed onto one cell the
    gain degenerates and the favoured arm is played outright.
    """
    gen = as_generator(rng)
    est = state.estimator
    chol = np.linalg.cholesky(est.precision_inv)
    z = gen.standard_normal((state.mc_samples, est.dim))
    samples = est.theta_hat + z @ chol.T
    x = state.actions_w
    q_bar, nu_bar, theta_bar, gaps = posterior_cell_statistics(samples, x)
    info = variance_info_gain(q_bar, nu_bar, theta_bar, x)

    if not np.any(info > 0):
        arm = int(np.argmax(q_bar))
        mu: tuple[tuple[int, float], ...] = ((arm, 1.0),)
        psi = 0.0
    else:
        hat = int(np.argmin(gaps))
        mu, psi = ids_distribution(gaps, info, hat, state.fast_pairing)
        if len(mu) == 1:
            arm = mu[0][0]
        else:
            arm = mu[0][0] if gen.random() < mu[0][1] else mu[1][0]
    diags = BayesIdsDiagnostics(q_bar=q_bar, info_var=info, gaps=gaps, mu=mu, psi=psi)
    _absorb_observation(state, instance, arm, gen)
    return arm, state, diags
