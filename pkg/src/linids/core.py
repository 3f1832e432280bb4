"""Environments for finite-action stochastic linear bandits.

An :class:`Instance` bundles a finite action set ``X`` of ``k`` feature
vectors in ``R^d``, a true parameter ``theta_star`` and a Gaussian noise
scale.  Pulling arm ``x`` yields ``<x, theta_star> + noise_std * z`` with
``z`` standard normal.  Instances are immutable and safe to share across
simulation workers.

Randomness is supplied through :class:`RngStream`, a value type naming one
(seed, stream) pair of the Philox counter-based generator.  Replaying a
stream reproduces the identical sample sequence bit-for-bit on every
platform.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Instance",
    "RngStream",
    "GapProfile",
    "make_random_instance",
    "make_eoo_instance",
    "sample_reward",
    "gap_profile",
    "as_generator",
]

# Ties in <x, theta_star> below this tolerance are rejected: a unique best
# action is assumed throughout.
_TIE_TOL = 1e-12


def _stable_hash64(text: str) -> int:
    """Map a purpose label to a 64-bit stream id, stable across platforms."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


@dataclass(frozen=True)
class RngStream:
    """A named, replayable randomness source.

    Each (seed, stream_id) pair indexes an independent Philox-4x64-10
    stream; the same pair always yields the same draws.  ``stream_id`` may
    be given directly or derived from a purpose string via
    :meth:`derive`.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2**64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def derive(self, purpose: str) -> "RngStream":
        """Child stream for a named purpose, independent of call order."""
        return RngStream(self.seed, _stable_hash64(f"{self.stream_id}/{purpose}"))

    def generator(self) -> np.random.Generator:
        """Materialize a fresh generator positioned at the stream start."""
        return np.random.Generator(np.random.Philox(key=[self.seed, self.stream_id]))


def as_generator(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    """Accept either a stream (restarted from its origin) or a live generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class Instance:
    """A fixed linear bandit environment.

    ``actions`` is the (k, d) matrix of feature vectors, ``theta_star`` the
    true parameter and ``noise_std`` the reward noise scale (``sigma``).
    The constructor enforces that the actions span R^d and that the best
    action is unique; it does not enforce a unit diameter but records a
    ``diameter_warning`` flag when the action set is wider than one.
    """

    actions: np.ndarray
    theta_star: np.ndarray
    noise_std: float
    label: str = "instance"
    diameter_warning: bool = field(init=False, default=False)

    def __post_init__(self) -> None:
        actions = np.asarray(self.actions, dtype=np.float64)
        theta = np.asarray(self.theta_star, dtype=np.float64)
        if actions.ndim != 2:
            raise ValueError("actions must be a (k, d) matrix")
        k, d = actions.shape
        if k < 2:
            raise ValueError(f"need at least 2 actions, got {k}")
        if theta.shape != (d,):
            raise ValueError(f"theta_star must have dimension {d}, got {theta.shape}")
        if not (np.isfinite(actions).all() and np.isfinite(theta).all()):
            raise ValueError("actions and theta_star must be finite")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if np.linalg.matrix_rank(actions) < d:
            raise ValueError("action set does not span R^d")
        values = actions @ theta
        order = np.sort(values)
        if order[-1] - order[-2] <= _TIE_TOL:
            raise ValueError("best action is not unique (tie within 1e-12)")
        actions = actions.copy()
        theta = theta.copy()
        actions.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "noise_std", float(self.noise_std))
        diffs = actions[:, None, :] - actions[None, :, :]
        diam = float(np.sqrt((diffs**2).sum(-1).max()))
        object.__setattr__(self, "diameter_warning", diam > 1.0 + 1e-12)
        whitened = actions / (self.noise_std if self.noise_std > 0 else 1.0)
        whitened.setflags(write=False)
        object.__setattr__(self, "_whitened", whitened)

    @property
    def k(self) -> int:
        return self.actions.shape[0]

    @property
    def dim(self) -> int:
        return self.actions.shape[1]

    @property
    def whitening_scale(self) -> float:
        """Noise scale used to whiten observations; 1 for noiseless instances."""
        return self.noise_std if self.noise_std > 0 else 1.0

    @property
    def whitened_actions(self) -> np.ndarray:
        """Actions divided by the whitening scale (read-only, cached)."""
        return self._whitened  # type: ignore[attr-defined]

    def mean_rewards(self) -> np.ndarray:
        return self.actions @ self.theta_star


@dataclass(frozen=True)
class GapProfile:
    """True suboptimality gaps of an instance."""

    gaps: np.ndarray
    best_index: int
    delta_min: float


def gap_profile(instance: Instance) -> GapProfile:
    """Exact gaps ``<x* - x, theta_star>``, best index and smallest nonzero gap."""
    values = instance.mean_rewards()
    best = int(np.argmax(values))
    gaps = values[best] - values
    gaps[best] = 0.0
    nonzero = gaps[gaps > 0]
    delta_min = float(nonzero.min()) if nonzero.size else 0.0
    gaps.setflags(write=False)
    return GapProfile(gaps=gaps, best_index=best, delta_min=delta_min)


def _unit_sphere(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    v = rng.standard_normal((n, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # A zero draw has probability zero; resample defensively.
    while (norms == 0).any():
        bad = norms[:, 0] == 0
        v[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v / norms


def make_random_instance(
    d: int,
    k: int,
    noise_std: float,
    rng: "RngStream | np.random.Generator",
    label: str = "random",
) -> Instance:
    """Instance with k actions and theta_star drawn uniformly on the unit sphere.

    Rank-deficient draws or best-action ties (probability-zero events) are
    discarded wholesale and redrawn.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    gen = as_generator(rng)
    for _ in range(1000):
        actions = _unit_sphere(gen, k, d)
        theta = _unit_sphere(gen, 1, d)[0]
        try:
            return Instance(actions, theta, noise_std, label=label)
        except ValueError:
            continue
    raise RuntimeError("failed to draw a valid instance in 1000 attempts")


def make_eoo_instance(epsilon: float, noise_std: float) -> Instance:
    """Three-arm problem where optimism over-pays for information.

    Arms (1, 0), (1 - eps, 2 eps), (0, 1) with theta_star = (1, 0): the
    second arm is eps-suboptimal but nearly useless for separating the
    first arm from the third, so greedy-optimistic play is asymptotically
    wasteful.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive (0 duplicates the first arm)")
    actions = np.array(
        [[1.0, 0.0], [1.0 - epsilon, 2.0 * epsilon], [0.0, 1.0]], dtype=np.float64
    )
    theta = np.array([1.0, 0.0])
    return Instance(actions, theta, noise_std, label=f"eoo(eps={epsilon:g})")


def sample_reward(
    instance: Instance, arm: int, rng: "RngStream | np.random.Generator"
) -> float:
    """Pull ``arm`` once: mean reward plus ``noise_std`` times a normal draw."""
    if not 0 <= arm < instance.k:
        raise ValueError(f"arm {arm} out of range [0, {instance.k})")
    gen = as_generator(rng)
    mean = float(instance.actions[arm] @ instance.theta_star)
    return mean + instance.noise_std * float(gen.standard_normal())
