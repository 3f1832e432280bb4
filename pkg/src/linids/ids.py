"""Information-directed sampling for finite-action linear bandits.

Each exploration step builds, from the current least-squares state:

* optimistic gap estimates ``gap(x) = max_z(<z, th> + b(z)) - <x, th>`` with
  confidence bonus ``b(z) = sqrt(beta) |z|_{V^-1}``;
* for every challenger ``z`` the closest *alternative parameter* under which
  ``z`` would beat the current leader, together with its half squared
  V-distance from the estimate;
* soft-min ``q``-weights over the challengers, an *information gain* vector
  mixing the challenger directions (four variants), and the two-point
  sampling distribution minimizing the ratio ``gap(mu)^2 / info(mu)``.

Rounds where the nearest alternative is implausible at the current
confidence level are *exploitation* rounds: the leader is played and the
observation discarded.  Exploration steps are counted by the local clock
``s``; every interaction round advances the global clock ``t``.

All quantities live in noise-whitened units: actions are divided by the
noise scale so the estimator sees unit-variance observations, and gaps /
info gains are consistently expressed on that scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Instance, RngStream, as_generator, sample_reward
from .estimator import BetaSpec, EstimatorState, absorb, init_estimator, whitened_beta

__all__ = [
    "InfoGainVariant",
    "IdsRound",
    "IdsAlgoState",
    "DegenerateInformationError",
    "NumericalError",
    "init_ids",
    "best_empirical_action",
    "ucb_action",
    "alternative_halfspace",
    "alternative_cell",
    "gap_estimates",
    "q_weights",
    "learning_rate",
    "info_gain",
    "two_action_tradeoff",
    "ids_distribution",
    "exploit_check",
    "ids_step",
    "compute_round",
    "verify_round",
]

_ETA_MIN, _ETA_MAX = 1e-6, 1e6

VARIANTS = ("H", "H_UCB", "C", "C_UCB")


class DegenerateInformationError(RuntimeError):
    """No action carries information: the sampling ratio cannot be formed."""


class NumericalError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""


@dataclass(frozen=True)
class InfoGainVariant:
    """Information-gain flavour and learning-rate rule.

    ``kind`` selects how alternatives enter the gain: ``H`` (halfspace
    alternatives, optimism bonus on every action), ``H_UCB`` (bonus only on
    the UCB action), ``C`` / ``C_UCB`` (same two with cell alternatives).
    """

    kind: str = "H_UCB"
    learning_rate_mode: str = "auto"
    fixed_eta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in VARIANTS:
            raise ValueError(f"unknown info-gain kind {self.kind!r}")
        if self.learning_rate_mode not in ("auto", "fixed"):
            raise ValueError(f"unknown learning-rate mode {self.learning_rate_mode!r}")
        if self.learning_rate_mode == "fixed":
            if self.fixed_eta is None or self.fixed_eta <= 0:
                raise ValueError("fixed learning rate requires fixed_eta > 0")

    @property
    def cell_based(self) -> bool:
        return self.kind in ("C", "C_UCB")

    @property
    def ucb_only_bonus(self) -> bool:
        return self.kind in ("H_UCB", "C_UCB")


@dataclass
class IdsRound:
    """Everything one exploration step computes (whitened units).

    ``gaps`` carries the estimates actually used for sampling (thresholded
    when that option is on); ``nus``/``half_sq`` hold the alternative
    parameter and half squared V-distance per challenger, with the leader's
    row set to the estimate itself and ``+inf``.  ``mu`` is the sampling
    distribution as (index, probability) pairs with at most two entries.
    The two exploitation fields are refreshed every global round; the rest
    only change when the estimator absorbs a new observation.
    """

    local_s: int
    computed_at_t: int
    hat_x: int
    ucb_x: int
    beta_gap: float
    beta_exploit: float
    delta_s: float
    gaps: np.ndarray
    bonuses: np.ndarray
    nus: np.ndarray
    half_sq: np.ndarray
    m_s: float
    eta_s: float
    q: np.ndarray
    info: np.ndarray
    mu: tuple[tuple[int, float], ...]
    psi: float
    exploit: bool


@dataclass
class IdsAlgoState:
    """Mutable per-run state; exclusively owned by one simulation worker."""

    estimator: EstimatorState
    local_s: int
    global_t: int
    variant: InfoGainVariant
    beta_spec: BetaSpec
    fast_pairing: bool = True
    threshold_gaps: bool = False
    last_round: IdsRound | None = None
    actions_w: np.ndarray | None = None


def init_ids(
    instance: Instance,
    variant: InfoGainVariant | None = None,
    beta_spec: BetaSpec | None = None,
    fast_pairing: bool = True,
    threshold_gaps: bool = False,
) -> IdsAlgoState:
    return IdsAlgoState(
        estimator=init_estimator(instance.dim),
        local_s=1,
        global_t=1,
        variant=variant or InfoGainVariant(),
        beta_spec=beta_spec or BetaSpec(),
        fast_pairing=fast_pairing,
        threshold_gaps=threshold_gaps,
        actions_w=instance.whitened_actions,
    )


def best_empirical_action(est: EstimatorState, instance: Instance) -> int:
    """argmax of the estimated mean reward; ties go to the lowest index."""
    return int(np.argmax(instance.whitened_actions @ est.theta_hat))


def ucb_action(est: EstimatorState, instance: Instance, beta: float) -> int:
    """argmax of mean estimate plus sqrt(beta) |x|_{V^-1}; lowest-index ties."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    x = instance.whitened_actions
    scores = x @ est.theta_hat
    wn2 = np.einsum("ij,ij->i", x @ est.precision_inv, x)
    return int(np.argmax(scores + np.sqrt(beta * np.maximum(wn2, 0.0))))


def alternative_halfspace(
    est: EstimatorState, instance: Instance, hat_x: int, z: int
) -> tuple[np.ndarray, float]:
    """Closest parameter (in V-norm) under which ``z`` beats the leader.

    Closed form of the projection of the estimate onto the halfspace
    ``{nu : <nu, z - hat> >= 0}``; returns the minimizer and half its
    squared V-distance ``<th, hat - z>^2 / (2 |hat - z|^2_{V^-1})``.  If the
    estimate already favours ``z`` the projection is inactive and the
    distance is zero.
    """
    if hat_x == z:
        raise ValueError("challenger must differ from the leader")
    x = instance.whitened_actions
    u = x[hat_x] - x[z]
    theta = est.theta_hat
    c = float(theta @ u)
    if c <= 0.0:
        return theta.copy(), 0.0
    vinv_u = est.precision_inv @ u
    w = float(u @ vinv_u)
    if w <= 0.0:
        raise NumericalError("duplicate actions give a zero-width halfspace")
    nu = theta - (c / w) * vinv_u
    return nu, c * c / (2.0 * w)


def alternative_cell(
    est: EstimatorState, instance: Instance, z: int, *, max_sweeps: int = 10_000, tol: float = 1e-8
) -> tuple[np.ndarray, float]:
    """V-norm projection of the estimate onto the cone where ``z`` is optimal.

    Solves min |nu - theta_hat|^2_V subject to <nu, z - x> >= 0 for every
    action x, by cyclic Dykstra projections onto the defining halfspaces.
    """
    x = instance.whitened_actions
    theta = est.theta_hat
    normals = x[z] - x  # halfspace normals a_x: require <nu, a_x> >= 0
    keep = np.linalg.norm(normals, axis=1) > 0
    normals = normals[keep]
    if normals.shape[0] == 0:
        return theta.copy(), 0.0
    vinv_a = normals @ est.precision_inv  # rows V^{-1} a
    denom = np.einsum("ij,ij->i", vinv_a, normals)
    nu = theta.copy()
    if (normals @ nu).min() >= 0.0:
        return nu, 0.0
    corrections = np.zeros_like(normals)
    residual = math.inf
    for _ in range(max_sweeps):
        prev = nu.copy()
        for i in range(normals.shape[0]):
            y = nu + corrections[i]
            viol = float(normals[i] @ y)
            if viol < 0.0:
                proj = y - (viol / denom[i]) * vinv_a[i]
            else:
                proj = y
            corrections[i] = y - proj
            nu = proj
        move = float(np.linalg.norm(nu - prev))
        worst = float(min((normals @ nu).min(), 0.0))
        residual = max(move, -worst)
        if residual <= tol:
            break
    else:
        raise NumericalError(f"cell projection stalled at residual {residual:.3e}")
    diff = nu - theta
    half_sq = 0.5 * float(diff @ (est.precision @ diff))
    return nu, half_sq


def gap_estimates(
    est: EstimatorState, instance: Instance, beta_gap: float
) -> tuple[np.ndarray, float, int]:
    """Optimistic gap estimates, the leader's own estimate and the leader."""
    if beta_gap < 0:
        raise ValueError("beta_gap must be nonnegative")
    x = instance.whitened_actions
    scores = x @ est.theta_hat
    wn2 = np.einsum("ij,ij->i", x @ est.precision_inv, x)
    top = float(np.max(scores + np.sqrt(beta_gap * np.maximum(wn2, 0.0))))
    gaps = top - scores
    hat = int(np.argmax(scores))
    return gaps, float(gaps[hat]), hat


def q_weights(half_sq_distances: np.ndarray, eta: float) -> np.ndarray:
    """Soft-min weights ``q(z) proportional to exp(-eta * half_sq(z))``."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    d = np.asarray(half_sq_distances, dtype=np.float64)
    if d.size == 0:
        raise ValueError("need at least one distance")
    logits = -eta * (d - d.min())  # max-subtraction keeps exp in range
    w = np.exp(logits)
    return w / w.sum()


def learning_rate(
    m_s: float, k: int, variant: InfoGainVariant, beta_ref: float
) -> float:
    """Soft-min rate: 1/sqrt(beta_ref) in auto mode, clamped to [1e-6, 1e6].

    ``m_s`` and ``k`` are accepted for signature stability but unused by the
    auto rule.
    """
    del m_s, k
    if variant.learning_rate_mode == "fixed":
        eta = float(variant.fixed_eta)
    else:
        if beta_ref <= 0:
            raise ValueError("beta_ref must be positive in auto mode")
        eta = 1.0 / math.sqrt(beta_ref)
    return min(max(eta, _ETA_MIN), _ETA_MAX)


def info_gain(
    actions_w: np.ndarray,
    theta_hat: np.ndarray,
    nus: np.ndarray,
    q: np.ndarray,
    bonuses: np.ndarray,
    ucb_x: int,
    ucb_only: bool,
) -> np.ndarray:
    """Information gain of every action for a fixed challenger mixture.

    ``I(x) = 1/2 sum_z q(z) (|<nu_z - theta_hat, x>| + b(x))^2`` where the
    optimism term ``b(x)`` is the confidence bonus for every action, or for
    the UCB action alone in the ucb-only variants.  ``q`` must be zero at
    the leader so its (vacuous) row drops out.
    """
    directions = nus - theta_hat  # (k, d); leader row is zero
    cross = np.abs(directions @ actions_w.T)  # (k_z, k_x)
    if ucb_only:
        cross = cross.copy()
        cross[:, ucb_x] += bonuses[ucb_x]
    else:
        cross = cross + bonuses[None, :]
    return 0.5 * (q @ (cross * cross))


def two_action_tradeoff(
    d1: float, d2: float, i1: float, i2: float
) -> tuple[float, float]:
    """Optimal mixing probability between two actions and the ratio it attains.

    Gaps must satisfy ``0 < d1 <= d2``; the returned probability is the mass
    on the second (larger-gap) action.  When the first action is at least as
    informative the mixture degenerates to it; otherwise
    ``p = clip(d1/(d2-d1) - 2 i1/(i2-i1))`` with the convention d1/0 = inf.
    """
    if d1 <= 0:
        raise ValueError("gaps must be positive")
    if d2 < d1:
        raise ValueError("gaps must be ordered d1 <= d2")
    if i1 < 0 or i2 < 0:
        raise ValueError("information gains must be nonnegative")
    if i1 >= i2:
        p = 0.0
    else:
        gap_term = d1 / (d2 - d1) if d2 > d1 else math.inf
        p = min(max(gap_term - 2.0 * i1 / (i2 - i1), 0.0), 1.0)
    num = (1.0 - p) * d1 + p * d2
    den = (1.0 - p) * i1 + p * i2
    psi = num * num / den if den > 0 else math.inf
    return p, psi


def _pair_mu(i: int, j: int, p: float) -> tuple[tuple[int, float], ...]:
    if p <= 0.0:
        return ((i, 1.0),)
    if p >= 1.0:
        return ((j, 1.0),)
    if i <= j:
        return ((i, 1.0 - p), (j, p))
    return ((j, p), (i, 1.0 - p))


def ids_distribution(
    gaps: np.ndarray,
    info: np.ndarray,
    hat_x: int,
    fast_pairing: bool = True,
) -> tuple[tuple[tuple[int, float], ...], float]:
    """Two-point distribution minimizing ``gap(mu)^2 / info(mu)``.

    With ``fast_pairing`` the search only mixes the leader with one other
    action; otherwise every action pair is scanned.  Ties break toward the
    lexicographically first pair.  Raises
    :class:`DegenerateInformationError` when no action has positive gain.
    """
    gaps = np.asarray(gaps, dtype=np.float64)
    info = np.asarray(info, dtype=np.float64)
    k = gaps.size
    if not np.any(info > 0):
        raise DegenerateInformationError("all information gains are zero")
    if gaps[hat_x] <= 0.0:
        # Degenerate zero-error case (only reachable with a zero bonus):
        # minimize the gap outright and report the leader's own ratio.
        psi = gaps[hat_x] ** 2 / info[hat_x] if info[hat_x] > 0 else 0.0
        return ((hat_x, 1.0),), float(psi)
    if np.any(gaps <= 0):
        raise ValueError("gap estimates must be positive")

    if fast_pairing:
        pairs = ((hat_x, z) for z in range(k) if z != hat_x)
    else:
        pairs = ((i, j) for i in range(k) for j in range(i + 1, k))

    best_psi = math.inf
    best_mu: tuple[tuple[int, float], ...] | None = None
    for i, j in pairs:
        if gaps[i] <= gaps[j]:
            lo, hi = i, j
        else:
            lo, hi = j, i
        p, psi = two_action_tradeoff(gaps[lo], gaps[hi], info[lo], info[hi])
        if psi < best_psi:
            best_psi = psi
            best_mu = _pair_mu(lo, hi, p)
    if best_mu is None or not math.isfinite(best_psi):
        raise DegenerateInformationError("no pair yields a finite ratio")
    return best_mu, float(best_psi)


def exploit_check(m_s: float, beta_exploit: float) -> bool:
    """True when the nearest alternative is implausible: m_s >= beta/2."""
    return m_s >= 0.5 * beta_exploit


def _exploit_delta_inv(t: int) -> float:
    """Confidence level 1/delta = t log t for the exploitation test, floored at e."""
    return max(t * math.log(t), math.e) if t > 1 else math.e


def compute_round(state: IdsAlgoState, instance: Instance) -> IdsRound:
    """Assemble every local-time quantity for the current exploration step."""
    est = state.estimator
    x = state.actions_w
    if x is None:
        x = state.actions_w = instance.whitened_actions
    k = x.shape[0]
    s = state.local_s
    beta_gap = whitened_beta(est, state.beta_spec, float(s) * s, state.global_t)

    theta = est.theta_hat
    vinv = est.precision_inv
    scores = x @ theta
    wn2 = np.einsum("ij,ij->i", x @ vinv, x)
    bonuses = np.sqrt(beta_gap * np.maximum(wn2, 0.0))
    hat = int(np.argmax(scores))
    ucb = int(np.argmax(scores + bonuses))
    top = scores[ucb] + bonuses[ucb]
    gaps = top - scores
    delta_s = float(gaps[hat])
    if state.threshold_gaps:
        delta_plus = max(delta_s, 1.0 / math.sqrt(s))
        gaps = gaps + (delta_plus - delta_s)
        delta_s = delta_plus

    if state.variant.cell_based:
        half_sq = np.empty(k)
        nus = np.empty((k, x.shape[1]))
        for z in range(k):
            if z == hat:
                continue
            nus[z], half_sq[z] = alternative_cell(est, instance, z)
    else:
        u = x[hat] - x
        c = u @ theta
        vinv_u = u @ vinv
        w = np.einsum("ij,ij->i", vinv_u, u)
        # Zero-width rows (the leader itself, or an exact duplicate of it)
        # are inactive anyway; keep their denominator harmless.
        w = np.where(w > 0.0, w, 1.0)
        active = c > 0.0
        coef = np.where(active, c / w, 0.0)
        nus = theta[None, :] - coef[:, None] * vinv_u
        half_sq = np.where(active, c * c / (2.0 * w), 0.0)
    nus[hat] = theta
    half_sq[hat] = math.inf
    m_s = float(np.min(half_sq))

    eta = learning_rate(m_s, k, state.variant, beta_gap)
    mask = np.arange(k) != hat
    q = np.zeros(k)
    q[mask] = q_weights(half_sq[mask], eta)
    info = info_gain(x, theta, nus, q, bonuses, ucb, state.variant.ucb_only_bonus)
    mu, psi = ids_distribution(gaps, info, hat, state.fast_pairing)

    return IdsRound(
        local_s=s,
        computed_at_t=state.global_t,
        hat_x=hat,
        ucb_x=ucb,
        beta_gap=beta_gap,
        beta_exploit=math.nan,
        delta_s=delta_s,
        gaps=gaps,
        bonuses=bonuses,
        nus=nus,
        half_sq=half_sq,
        m_s=m_s,
        eta_s=eta,
        q=q,
        info=info,
        mu=mu,
        psi=psi,
        exploit=False,
    )


def ids_step(
    state: IdsAlgoState, instance: Instance, rng: "RngStream | np.random.Generator"
) -> tuple[int, IdsRound, IdsAlgoState]:
    """Play one global round: exploit the leader or sample the IDS mixture.

    Exploitation rounds advance only the global clock and discard the
    observation; exploration rounds sample from the two-point distribution,
    absorb the whitened observation and advance both clocks.  The state is
    mutated in place and returned.
    """
    gen = as_generator(rng)
    t = state.global_t
    rnd = state.last_round
    # Local-time quantities persist between explorations; only the
    # exploitation threshold moves with t (and, in simplified beta mode,
    # the whole round does).
    if (
        rnd is None
        or rnd.local_s != state.local_s
        or (state.beta_spec.mode == "simplified" and rnd.computed_at_t != t)
    ):
        rnd = compute_round(state, instance)
        state.last_round = rnd
    rnd.beta_exploit = whitened_beta(
        state.estimator, state.beta_spec, _exploit_delta_inv(t), t
    )
    rnd.exploit = exploit_check(rnd.m_s, rnd.beta_exploit)

    if rnd.exploit:
        state.global_t = t + 1
        return rnd.hat_x, rnd, state

    mu = rnd.mu
    if len(mu) == 1:
        arm = mu[0][0]
    else:
        arm = mu[0][0] if gen.random() < mu[0][1] else mu[1][0]
    y = sample_reward(instance, arm, gen)
    absorb(state.estimator, state.actions_w[arm], y / instance.whitening_scale)
    state.local_s += 1
    state.global_t = t + 1
    return arm, rnd, state


def support_residual(rnd: IdsRound) -> float:
    """How far the sampling support is from minimizing the best-response score.

    The score ``g(x) = gap(x) - psi / (2 gap(mu)) * info(x)`` must be
    minimized by every support point of the optimal mixture; returns the
    worst excess over the minimum.
    """
    gap_mu = sum(p * rnd.gaps[i] for i, p in rnd.mu)
    if gap_mu <= 0:
        return 0.0
    g = rnd.gaps - (rnd.psi / (2.0 * gap_mu)) * rnd.info
    g_min = float(np.min(g))
    return max(float(g[i]) - g_min for i, _ in rnd.mu)


def verify_round(
    rnd: IdsRound,
    est: EstimatorState,
    instance: Instance,
    k: int | None = None,
    true_whitened_gaps: np.ndarray | None = None,
    theta_star: np.ndarray | None = None,
    thresholded: bool = False,
    cell_based: bool = False,
) -> None:
    """Assert the deterministic per-round inequalities; raises on violation.

    Checks the soft-min sandwich, the worst-case ratio bound, almost-
    greediness, the gap identity, the support characterization, the
    alternative-parameter geometry (boundary orthogonality for halfspace
    alternatives, cone feasibility for cell alternatives), and, when the
    true parameter is supplied and currently well concentrated, the
    domination of true gaps by twice the estimates.
    """
    k = k or instance.k
    tol = 1e-9

    q_sum = float(rnd.q.sum())
    assert abs(q_sum - 1.0) <= tol, f"q weights sum to {q_sum}"
    assert rnd.q[rnd.hat_x] == 0.0, "leader must carry no q weight"

    mask = np.arange(k) != rnd.hat_x
    mix = float(rnd.q[mask] @ rnd.half_sq[mask])
    upper = rnd.m_s + math.log(k) / rnd.eta_s
    assert rnd.m_s - tol <= mix <= upper + tol, (
        f"soft-min sandwich violated: {rnd.m_s} <= {mix} <= {upper}"
    )

    probs = [p for _, p in rnd.mu]
    assert len(rnd.mu) <= 2 and abs(sum(probs) - 1.0) <= tol, "mu must be a <=2-point distribution"

    if not thresholded:
        x = instance.whitened_actions
        scores = x @ est.theta_hat
        ident = rnd.gaps - rnd.delta_s - (scores[rnd.hat_x] - scores)
        worst = float(np.abs(ident).max())
        scale = max(1.0, float(np.abs(scores).max()), rnd.delta_s)
        assert worst <= max(1e-12, 8.0 * np.finfo(float).eps * scale), (
            f"gap identity violated by {worst}"
        )
        assert np.all(rnd.gaps >= rnd.bonuses - tol), "gaps fell below the bonus"

        ratio_ucb = rnd.gaps[rnd.ucb_x] ** 2 / rnd.info[rnd.ucb_x]
        assert rnd.psi <= ratio_ucb + tol, "mixture worse than the UCB singleton"
        assert ratio_ucb <= 2.0 + tol, f"UCB ratio {ratio_ucb} exceeds 2"

    if rnd.delta_s > 0:
        gap_mu = sum(p * rnd.gaps[i] for i, p in rnd.mu)
        assert gap_mu <= 2.0 * rnd.delta_s + tol, (
            f"mixture gap {gap_mu} exceeds twice the estimation error {rnd.delta_s}"
        )

    assert support_residual(rnd) <= 1e-6, "support point misses the best-response score"

    x = instance.whitened_actions
    if cell_based:
        for z in range(k):
            if z == rnd.hat_x:
                continue
            worst = float(((x[z] - x) @ rnd.nus[z]).min())
            assert worst >= -1e-6, f"cell alternative for arm {z} is infeasible ({worst})"
    else:
        u = x[rnd.hat_x][None, :] - x
        resid = np.abs(np.einsum("ij,ij->i", rnd.nus, u))
        active = rnd.half_sq > 0
        active[rnd.hat_x] = False
        if active.any():
            scale = max(
                1.0, float(np.abs(rnd.nus[active]).max() * np.abs(u[active]).max())
            )
            assert float(resid[active].max()) <= 1e-9 * scale, "projection left the boundary"

    if theta_star is not None and true_whitened_gaps is not None and not thresholded:
        diff = est.theta_hat - theta_star
        concentration = float(diff @ (est.precision @ diff))
        if concentration <= rnd.beta_gap:
            assert np.all(true_whitened_gaps <= 2.0 * rnd.gaps + tol), (
                "true gaps exceed twice the estimates despite concentration"
            )
