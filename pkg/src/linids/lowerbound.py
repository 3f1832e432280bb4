"""Asymptotic lower-bound constant and optimal allocation.

The covering program priced here minimizes the allocation cost
``sum_x alpha(x) gap(x)`` subject to gathering enough evidence against
every parameter under which some other arm would be optimal:

    min_{nu in C*} 1/2 |nu - theta*|^2_{V(alpha)} >= 1,

with ``V(alpha) = sum_x alpha(x) x x^T``.  For finite action sets the
constraint reduces per suboptimal arm ``z`` to
``gap(z)^2 / (2 |x* - z|^2_{V(alpha)^{-1}}) >= 1``.  Mass on the optimal
arm is free (its gap is zero) and the optimum may push it to infinity, so
a large finite surrogate stands in for it during evaluation.

Three routes are provided: a projected-subgradient solver on the
log-parameterized suboptimal allocation, a fictitious two-player game with
an exponential-weights constraint player (also usable as an oracle version
of the sampling algorithm), and a brute-force grid search used as an
independent check.  All three price the program in unit-variance units;
the instance noise scale does not enter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Instance, gap_profile
from .ids import DegenerateInformationError, NumericalError

__all__ = [
    "AllocationSolution",
    "GameState",
    "GridSpec",
    "SURROGATE_MASS",
    "constraint_value",
    "solve_cstar",
    "brute_force_cstar",
    "oracle_primal_dual",
    "oracle_ids_response",
]

SURROGATE_MASS = 1e8
_RIDGE = 1e-12


@dataclass(frozen=True)
class AllocationSolution:
    """An allocation over actions with its cost and constraint slack.

    ``alpha`` includes the (surrogate) mass on the optimal arm; ``cost``
    counts suboptimal mass only, since the optimal arm is free.
    """

    alpha: np.ndarray
    cost: float
    min_constraint: float
    method: str
    iterations: int


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced per-coordinate grid for the brute-force oracle."""

    points_per_axis: int = 20
    log_min: float = -3.0
    log_max: float = 6.0
    include_zero: bool = True
    refine_rounds: int = 1

    def axis(self) -> np.ndarray:
        pts = np.logspace(self.log_min, self.log_max, self.points_per_axis)
        if self.include_zero:
            pts = np.concatenate([[0.0], pts])
        return pts


def constraint_value(instance: Instance, alpha: np.ndarray) -> float:
    """Smallest per-arm evidence value of an allocation.

    Returns ``min_z gap(z)^2 / (2 |x* - z|^2_{V(alpha)^{-1}})`` with a 1e-12
    ridge added to ``V(alpha)`` for evaluation only.  Linear (degree one) in
    the allocation up to the ridge.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (instance.k,):
        raise ValueError(f"allocation must have {instance.k} entries")
    if (alpha < 0).any():
        raise ValueError("allocation must be nonnegative")
    prof = gap_profile(instance)
    x = instance.actions
    v = (x.T * alpha) @ x + _RIDGE * np.eye(instance.dim)
    best = prof.best_index
    u = x[best] - np.delete(x, best, axis=0)
    gaps = np.delete(prof.gaps, best)
    try:
        sol = np.linalg.solve(v, u.T)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular design matrix: {exc}") from exc
    w = np.einsum("ij,ji->i", u, sol)
    if (w <= 0).any():
        raise NumericalError("nonpositive inverse-norm in constraint evaluation")
    return float(np.min(gaps**2 / (2.0 * w)))


def _subopt_constraints(
    instance: Instance, alpha_sub: np.ndarray, sub_idx: np.ndarray, surrogate: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-arm constraint values and the subgradient row of the active arm.

    The subgradient of the minimum constraint with respect to the
    allocation is ``1/2 <nu* - theta*, x>^2`` at the active minimizer.
    """
    x = instance.actions
    prof = gap_profile(instance)
    best = prof.best_index
    alpha = np.zeros(instance.k)
    alpha[best] = surrogate
    alpha[sub_idx] = alpha_sub
    v = (x.T * alpha) @ x + _RIDGE * np.eye(instance.dim)
    u = x[best] - x[sub_idx]
    gaps = prof.gaps[sub_idx]
    sol = np.linalg.solve(v, u.T)  # columns V^{-1} u_z
    w = np.einsum("ij,ji->i", u, sol)
    vals = gaps**2 / (2.0 * w)
    j = int(np.argmin(vals))
    nu_dir = -(gaps[j] / w[j]) * sol[:, j]  # nu* - theta*
    subgrad = 0.5 * (x[sub_idx] @ nu_dir) ** 2
    return vals, subgrad


def solve_cstar(
    instance: Instance,
    method: str = "subgradient",
    budget: int = 100_000,
    beta_n: float | None = None,
) -> AllocationSolution:
    """Optimal allocation cost by subgradient descent or the two-player game.

    The subgradient route works on ``u = log alpha`` over suboptimal arms
    with normalized steps ``~1/sqrt(t)``, moving toward feasibility when the
    constraint is violated and down the cost otherwise; every iterate is
    rescaled onto the constraint boundary and the cheapest rescaled
    allocation wins.  The game route runs :func:`oracle_primal_dual` at
    level ``beta_n`` (default log 1e6) and divides by it.
    """
    prof = gap_profile(instance)
    best = prof.best_index
    sub_idx = np.array([i for i in range(instance.k) if i != best])
    gaps_sub = prof.gaps[sub_idx]

    if method == "game":
        bn = beta_n if beta_n is not None else math.log(1e6)
        sol, _ = oracle_primal_dual(instance, bn, rounds=budget)
        alpha = sol.alpha / bn
        # The game leaves the free arm untouched before coverage; export the
        # allocation with the surrogate mass so it is feasible as declared.
        alpha[best] = max(alpha[best], SURROGATE_MASS)
        for _ in range(10):
            g = constraint_value(instance, alpha)
            if g >= 1.0:
                break
            alpha[sub_idx] /= g
        return AllocationSolution(
            alpha=alpha,
            cost=float(alpha[sub_idx] @ gaps_sub),
            min_constraint=constraint_value(instance, alpha),
            method="game",
            iterations=sol.iterations,
        )
    if method != "subgradient":
        raise ValueError(f"unknown method {method!r}")

    m = sub_idx.size
    u = np.zeros(m)
    best_cost = math.inf
    best_alpha_sub = None
    step0 = 1.0
    for t in range(1, budget + 1):
        alpha_sub = np.exp(u)
        vals, subgrad = _subopt_constraints(instance, alpha_sub, sub_idx, SURROGATE_MASS)
        g = float(vals.min())
        if g > 0:
            cand = float(alpha_sub @ gaps_sub) / g
            if cand < best_cost:
                best_cost = cand
                best_alpha_sub = alpha_sub / g
        grad_alpha = gaps_sub if g >= 1.0 else -subgrad
        grad_u = grad_alpha * alpha_sub
        norm = float(np.linalg.norm(grad_u))
        if norm > 0:
            u -= (step0 / math.sqrt(t)) * grad_u / norm
        np.clip(u, -30.0, 30.0, out=u)
    if best_alpha_sub is None:
        raise NumericalError("no feasible rescaled allocation found within budget")

    alpha = np.zeros(instance.k)
    alpha[best] = SURROGATE_MASS
    alpha[sub_idx] = best_alpha_sub
    # The surrogate mass does not rescale, so restore feasibility exactly.
    for _ in range(10):
        g = constraint_value(instance, alpha)
        if g >= 1.0:
            break
        alpha[sub_idx] /= g
    return AllocationSolution(
        alpha=alpha,
        cost=float(alpha[sub_idx] @ gaps_sub),
        min_constraint=constraint_value(instance, alpha),
        method="subgradient",
        iterations=budget,
    )


def brute_force_cstar(instance: Instance, grid: GridSpec | None = None) -> float:
    """Grid-search upper bound on the optimal cost (exact as the grid refines).

    Scans log-spaced suboptimal allocations, rescales each onto the
    constraint boundary and keeps the cheapest.  Guarded to at most four
    suboptimal arms; one local refinement pass tightens the winner.
    """
    grid = grid or GridSpec()
    prof = gap_profile(instance)
    best = prof.best_index
    sub_idx = np.array([i for i in range(instance.k) if i != best])
    m = sub_idx.size
    if m > 4:
        raise ValueError(f"brute force supports at most 4 suboptimal arms, got {m}")
    gaps_sub = prof.gaps[sub_idx]

    def ray_cost(alpha_sub: np.ndarray) -> float:
        if not alpha_sub.any():
            return math.inf
        vals, _ = _subopt_constraints(instance, alpha_sub, sub_idx, SURROGATE_MASS)
        g = float(vals.min())
        if g <= 0:
            return math.inf
        return float(alpha_sub @ gaps_sub) / g

    def scan(axes: list[np.ndarray]) -> tuple[float, np.ndarray]:
        best_c = math.inf
        best_a = np.zeros(m)
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([g.ravel() for g in mesh], axis=1)
        for a in points:
            c = ray_cost(a)
            if c < best_c:
                best_c = c
                best_a = a
        return best_c, best_a

    axis = grid.axis()
    best_c, best_a = scan([axis] * m)
    for _ in range(grid.refine_rounds):
        axes = []
        for j in range(m):
            center = best_a[j]
            if center <= 0:
                local = np.concatenate([[0.0], np.logspace(grid.log_min, 0.0, grid.points_per_axis)])
            else:
                local = np.concatenate(
                    [[0.0], center * np.logspace(-1.0, 1.0, grid.points_per_axis)]
                )
            axes.append(local)
        c, a = scan(axes)
        if c < best_c:
            best_c, best_a = c, a
    return best_c


@dataclass
class GameState:
    """Live state of the fictitious constraint-vs-allocation game."""

    q_dual: np.ndarray
    cum_alloc: np.ndarray
    cum_loss: np.ndarray
    beta_n: float
    eta_schedule: str = "sqrt(log(l)/t)"


@dataclass(frozen=True)
class GameRound:
    t: int
    arm: int
    min_constraint: float
    info_played: float
    q_dual: np.ndarray = field(repr=False)


def oracle_primal_dual(
    instance: Instance, beta_n: float, rounds: int = 100_000
) -> tuple[AllocationSolution, list[GameRound]]:
    """Sequentially cover the evidence constraints with known gaps.

    A dual exponential-weights player mixes the per-arm constraints
    ``h_z(x) = 1/2 <nu_z - theta*, x>^2``; the primal response plays the
    optimal arm once every constraint has collected ``beta_n`` evidence,
    and otherwise the suboptimal arm with the best cost-to-information
    ratio against the mixed constraint.

    ``nu_z`` is the halfspace minimizer under the running design seeded
    with the identity plus the free surrogate mass on the optimal arm.
    The surrogate is what makes the game well-posed: without it every
    constraint is satisfiable through the zero-cost arm alone, the
    response never selects it, and the evidence cannot accumulate.

    Instances whose constraints are coverable by the optimal arm alone
    (docile) are priced conservatively here, since the response never
    plays the free arm before coverage; use the subgradient route for
    those.
    """
    if beta_n <= 0:
        raise ValueError("beta_n must be positive")
    prof = gap_profile(instance)
    best = prof.best_index
    x = instance.actions
    sub_idx = np.array([i for i in range(instance.k) if i != best])
    gaps_sub = prof.gaps[sub_idx]
    l = sub_idx.size
    u = x[best] - x[sub_idx]
    seed = np.eye(instance.dim) + SURROGATE_MASS * np.outer(x[best], x[best])

    alpha = np.zeros(instance.k)
    cum_loss = np.zeros(l)
    trace: list[GameRound] = []
    state = GameState(
        q_dual=np.full(l, 1.0 / l), cum_alloc=alpha, cum_loss=cum_loss, beta_n=beta_n
    )
    iterations = 0
    satisfied = False
    for t in range(1, rounds + 1):
        iterations = t
        v = seed + (x.T * alpha) @ x
        sol = np.linalg.solve(v, u.T)
        w = np.einsum("ij,ji->i", u, sol)
        nu_dirs = -(gaps_sub / w)[:, None] * sol.T  # rows nu_z - theta*
        h = 0.5 * (nu_dirs @ x.T) ** 2  # (l, k)
        cons = h @ alpha
        min_cons = float(cons.min())
        if min_cons >= beta_n:
            satisfied = True
            trace.append(GameRound(t, best, min_cons, 0.0, state.q_dual.copy()))
            break
        eta = math.sqrt(math.log(max(l, 2)) / t)
        shifted = -eta * (cum_loss - cum_loss.min())
        weights = np.exp(shifted)
        q = weights / weights.sum()
        state.q_dual = q
        info = q @ h
        info_sub = info[sub_idx]
        with np.errstate(divide="ignore"):
            ratios = np.where(info_sub > 0, gaps_sub / info_sub, math.inf)
        if not np.isfinite(ratios).any():
            raise DegenerateInformationError("no suboptimal arm carries information")
        arm = int(sub_idx[int(np.argmin(ratios))])
        alpha[arm] += 1.0
        cum_loss += h[:, arm]
        trace.append(GameRound(t, arm, min_cons, float(info[arm]), q.copy()))

    if not satisfied:
        raise NumericalError(
            f"constraints not covered after {rounds} rounds (reached {min_cons:.3g} of {beta_n:.3g})"
        )
    cost = float(alpha[sub_idx] @ gaps_sub)
    solution = AllocationSolution(
        alpha=alpha,
        cost=cost,
        min_constraint=min_cons,
        method="game",
        iterations=iterations,
    )
    state.cum_alloc = alpha
    state.cum_loss = cum_loss
    return solution, trace


def oracle_ids_response(
    gaps: np.ndarray, delta: float, info: np.ndarray
) -> tuple[tuple[int, float], ...]:
    """Two-point response against a mixed constraint with known gaps.

    Splits mass between the optimal arm and the suboptimal arm with the
    best gap-to-information ratio, with probability ``delta / gap(z)`` on
    the challenger (clipped to [0, 1]).
    """
    gaps = np.asarray(gaps, dtype=np.float64)
    info = np.asarray(info, dtype=np.float64)
    if delta <= 0:
        raise ValueError("delta must be positive")
    best = int(np.argmin(gaps))
    sub = np.arange(gaps.size) != best
    if not np.any(info[sub] > 0):
        raise DegenerateInformationError("every suboptimal arm is uninformative")
    with np.errstate(divide="ignore"):
        ratios = np.where(sub & (info > 0), gaps / np.where(info > 0, info, 1.0), math.inf)
    z = int(np.argmin(ratios))
    p = min(max(delta / gaps[z], 0.0), 1.0)
    if p >= 1.0:
        return ((z, 1.0),)
    if p <= 0.0:
        return ((best, 1.0),)
    lo, hi = (best, z) if best <= z else (z, best)
    p_lo = 1.0 - p if lo == best else p
    return ((lo, p_lo), (hi, 1.0 - p_lo))
