"""Single-arm solvers for the activation-priced, penalty-weighted MDP.

For an activation price lam and penalty multiplier mu the arm's adjusted
reward is r(s,a) - lam*a - mu*g(s,a).  The dual step picks mu in [0, U]
minimizing the arm value plus mu*B/(1-beta); it is solved two independent
ways (an LP over the value function and mu, and a golden-section search)
so each can certify the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linprog import LpProblem, LpSolution, LpStatus, solve_lp
from .model import ArmModel

TIE_EPS = 1e-8
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class ArmSolverError(RuntimeError):
    """Internal solver failure (non-finite values or an LP that should not fail)."""


@dataclass
class ValueFunction:
    """Optimal values and the greedy policy at a fixed (lam, mu, beta)."""

    values: np.ndarray
    greedy_action: np.ndarray
    lam: float
    mu: float
    beta: float


@dataclass
class DualSolution:
    """Minimizer mu*(lam) of the penalty multiplier with its certificate."""

    mu_star: float
    value_fn: ValueFunction
    dual_objective: float


def adjusted_reward(arm: ArmModel, lam: float, mu: float) -> np.ndarray:
    """(S, 2) table r(s,a) - lam*a - mu*g(s,a)."""
    adj = arm.reward - mu * arm.penalty
    adj[:, 1] -= lam
    return adj


def q_values(arm: ArmModel, lam: float, mu: float, beta: float, values: np.ndarray) -> np.ndarray:
    """(S, 2) state-action values implied by a value vector."""
    cont = np.einsum("sat,t->sa", arm.kernel, values)
    return adjusted_reward(arm, lam, mu) + beta * cont


def greedy_from_q(q: np.ndarray) -> np.ndarray:
    """Activation-favored greedy policy: a=1 whenever Q1 >= Q0 - TIE_EPS."""
    return (q[:, 1] >= q[:, 0] - TIE_EPS).astype(np.int64)


def value_iteration(arm: ArmModel, lam: float, mu: float, beta: float,
                    tol: float = 1e-8, max_iters: int = 10_000_000) -> ValueFunction:
    """Value iteration to sup-norm Bellman residual <= tol.

    Stops when successive iterates differ by <= tol*(1-beta)/(2*beta), the
    standard contraction bound for the requested residual.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"discount must be in (0, 1), got {beta}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    adj = adjusted_reward(arm, lam, mu)
    if not np.all(np.isfinite(adj)):
        raise ArmSolverError("non-finite adjusted rewards")
    gap_target = tol * (1.0 - beta) / (2.0 * beta)
    v = np.zeros(arm.n_states)
    for _ in range(max_iters):
        q = adj + beta * np.einsum("sat,t->sa", arm.kernel, v)
        v_next = q.max(axis=1)
        gap = np.max(np.abs(v_next - v))
        v = v_next
        if not np.isfinite(gap):
            raise ArmSolverError("value iteration diverged to non-finite values")
        if gap <= gap_target:
            break
    else:  # pragma: no cover - max_iters is far beyond the contraction bound
        raise ArmSolverError("value iteration failed to converge")
    q = adj + beta * np.einsum("sat,t->sa", arm.kernel, v)
    return ValueFunction(q.max(axis=1), greedy_from_q(q), lam, mu, beta)


def policy_values(arm: ArmModel, lam: float, mu: float, beta: float,
                  policy: np.ndarray) -> np.ndarray:
    """Exact value of a deterministic stationary policy via linear solve."""
    idx = np.arange(arm.n_states)
    p_pi = arm.kernel[idx, policy, :]
    r_pi = adjusted_reward(arm, lam, mu)[idx, policy]
    return np.linalg.solve(np.eye(arm.n_states) - beta * p_pi, r_pi)


def solve_arm_exact(arm: ArmModel, lam: float, mu: float, beta: float,
                    max_iters: int = 1000) -> ValueFunction:
    """Policy iteration; machine-precision alternative to value_iteration.

    Improvement steps break exact ties toward activation but use no
    tolerance band (a band can cycle); the reported greedy policy applies
    the TIE_EPS rule to the converged values.
    """
    policy = np.ones(arm.n_states, dtype=np.int64)
    v = policy_values(arm, lam, mu, beta, policy)
    for _ in range(max_iters):
        q = q_values(arm, lam, mu, beta, v)
        improved = (q[:, 1] >= q[:, 0]).astype(np.int64)
        if np.array_equal(improved, policy):
            break
        v_next = policy_values(arm, lam, mu, beta, improved)
        stationary = np.max(np.abs(v_next - v)) <= 1e-11 * (1.0 + np.max(np.abs(v)))
        policy, v = improved, v_next
        if stationary:
            break
    else:  # pragma: no cover - strict improvement cannot cycle
        raise ArmSolverError("policy iteration cycled")
    q = q_values(arm, lam, mu, beta, v)
    return ValueFunction(v, greedy_from_q(q), lam, mu, beta)


def arm_lagrangian_value(arm: ArmModel, lam: float, mu: float, beta: float,
                         tol: float = 1e-8) -> float:
    """alpha . v(lam, mu) + mu * B / (1 - beta)."""
    vf = value_iteration(arm, lam, mu, beta, tol=tol)
    return float(arm.init_dist @ vf.values + mu * arm.budget / (1.0 - beta))


def _lagrangian_exact(arm: ArmModel, lam: float, mu: float, beta: float) -> float:
    vf = solve_arm_exact(arm, lam, mu, beta)
    return float(arm.init_dist @ vf.values + mu * arm.budget / (1.0 - beta))


def build_dual_lp(arm: ArmModel, lam: float, beta: float, u_cap: float) -> LpProblem:
    """LP over (v, mu): min alpha.v + mu*B/(1-beta) s.t. v >= one-step backup.

    Rearranged rows: v(s) - beta * sum_s' P(s'|s,a) v(s') + mu*g(s,a)
    >= r(s,a) - lam*a for every state-action pair, with mu in [0, U].
    """
    s = arm.n_states
    n_vars = s + 1
    rows = np.zeros((2 * s, n_vars))
    rhs = np.zeros(2 * s)
    for a in (0, 1):
        block = slice(a * s, (a + 1) * s)
        rows[block, :s] = -beta * arm.kernel[:, a, :]
        rows[block, :s] += np.eye(s)
        rows[block, s] = arm.penalty[:, a]
        rhs[block] = arm.reward[:, a] - lam * a
    c = np.concatenate([arm.init_dist, [arm.budget / (1.0 - beta)]])
    lower = np.concatenate([np.full(s, -np.inf), [0.0]])
    upper = np.concatenate([np.full(s, np.inf), [u_cap]])
    return LpProblem(c, "min", rows, [">="] * (2 * s), rhs, lower, upper)


def _smallest_minimizer(arm: ArmModel, lam: float, beta: float, mu_hat: float,
                        obj_hat: float) -> tuple[float, float]:
    """Walk a flat dual segment to its left edge (smallest optimal mu)."""
    tol = 1e-9 * (1.0 + abs(obj_hat))
    if mu_hat <= 0.0:
        return 0.0, obj_hat
    at_zero = _lagrangian_exact(arm, lam, 0.0, beta)
    if at_zero <= obj_hat + tol:
        return 0.0, at_zero
    probe = mu_hat - min(1e-6 * (1.0 + mu_hat), 0.5 * mu_hat)
    if _lagrangian_exact(arm, lam, probe, beta) > obj_hat + tol:
        return mu_hat, obj_hat  # strictly decreasing on the left: unique minimum
    lo, hi = 0.0, mu_hat
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _lagrangian_exact(arm, lam, mid, beta) <= obj_hat + tol:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-10 * (1.0 + mu_hat):
            break
    return hi, _lagrangian_exact(arm, lam, hi, beta)


def solve_dual_mu_lp(arm: ArmModel, lam: float, beta: float, u_cap: float) -> DualSolution:
    """mu*(lam) from the value-function LP; the value function itself is
    re-solved exactly at (lam, mu*) so its Bellman residual is certified.
    Flat dual segments resolve to their smallest minimizer."""
    if u_cap <= 0.0:
        raise ValueError("u_cap must be positive")
    lp = build_dual_lp(arm, lam, beta, u_cap)
    sol = solve_lp(lp)
    if sol.status is not LpStatus.OPTIMAL:
        raise ArmSolverError(f"dual LP ended with status {sol.status.value}: {sol.message}")
    mu_hat = float(min(max(sol.x[arm.n_states], 0.0), u_cap))
    mu_star, objective = _smallest_minimizer(arm, lam, beta, mu_hat, float(sol.objective))
    vf = solve_arm_exact(arm, lam, mu_star, beta)
    return DualSolution(mu_star, vf, objective)


def solve_dual_mu_search(arm: ArmModel, lam: float, beta: float, u_cap: float,
                         value_tol: float = 1e-6, grid_points: int = 33) -> DualSolution:
    """Independent dual solve: golden-section on the convex piecewise-linear
    mu objective, then a local grid sweep keeping the smallest minimizer."""
    if u_cap <= 0.0:
        raise ValueError("u_cap must be positive")

    cache: dict[float, float] = {}

    def f(mu: float) -> float:
        if mu not in cache:
            cache[mu] = _lagrangian_exact(arm, lam, mu, beta)
        return cache[mu]

    lo, hi = 0.0, u_cap
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    # Interval small enough that the slope bound cannot hide a better value.
    slope_bound = (arm.budget + float(arm.penalty.max())) / (1.0 - beta) + 1.0
    while (hi - lo) * slope_bound > value_tol and hi - lo > 1e-13:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)

    grid = np.linspace(max(0.0, lo - (hi - lo)), min(u_cap, hi + (hi - lo)), grid_points)
    values = [f(float(mu)) for mu in grid]
    best = min(values)
    mu_hat = float(grid[int(np.argmax(np.array(values) <= best + 1e-12))])
    mu_star, objective = _smallest_minimizer(arm, lam, beta, mu_hat, best)
    vf = solve_arm_exact(arm, lam, mu_star, beta)
    return DualSolution(mu_star, vf, objective)


def extract_policy(arm: ArmModel, lam: float, mu: float, vf: ValueFunction) -> np.ndarray:
    """Per-state actions: activate iff Q(s,1) >= Q(s,0) - TIE_EPS."""
    return greedy_from_q(q_values(arm, lam, mu, vf.beta, vf.values))
