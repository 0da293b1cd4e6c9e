"""Self-contained dense LP solver: two-phase revised simplex with duals.

Handles min/max objectives, <=/=/>= rows, nonnegative or free variables and
finite upper bounds.  Free variables are split into differences of
nonnegatives and upper bounds become internal constraint rows, so the core
only ever sees ``min c x  s.t.  A x = b, x >= 0``.  Pricing is Dantzig by
default and switches to Bland's rule permanently once the objective stalls,
which guarantees termination.  Sized for dense problems up to a few thousand
variables; every returned optimum is re-verified (feasibility, duality gap,
complementary slackness) and demoted to a failure status if the checks fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8
# Iterations without objective progress before switching to Bland's rule.
STALL_LIMIT = 500
REFACTOR_EVERY = 120


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


class LpError(ValueError):
    """Malformed LP input (dimension mismatch, non-finite data)."""


@dataclass
class LpProblem:
    """``sense`` in {"min", "max"}; one relation in {"<=", "=", ">="} per row.

    ``lower[j]`` is 0.0 or -inf, ``upper[j]`` is +inf or finite.
    """

    c: np.ndarray
    sense: str
    a: np.ndarray
    relations: list[str]
    b: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        n = self.c.shape[0]
        if self.lower is None:
            self.lower = np.zeros(n)
        if self.upper is None:
            self.upper = np.full(n, np.inf)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)

    def validate(self) -> None:
        m, n = self.a.shape
        if self.c.shape != (n,):
            raise LpError(f"objective has {self.c.shape[0]} coefficients for {n} columns")
        if self.b.shape != (m,):
            raise LpError(f"{self.b.shape[0]} right-hand sides for {m} rows")
        if len(self.relations) != m:
            raise LpError(f"{len(self.relations)} relations for {m} rows")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise LpError("bound vectors must have one entry per variable")
        if self.sense not in ("min", "max"):
            raise LpError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for rel in self.relations:
            if rel not in ("<=", "=", ">="):
                raise LpError(f"unknown relation {rel!r}")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))):
            raise LpError("coefficients must be finite")
        for j in range(n):
            if self.lower[j] not in (0.0, -np.inf):
                raise LpError(f"lower bound of column {j} must be 0 or -inf")
            if self.upper[j] != np.inf and not np.isfinite(self.upper[j]):
                raise LpError(f"upper bound of column {j} must be finite or +inf")


@dataclass
class LpSolution:
    """duals holds one multiplier per input row, signed so that at optimality
    objective == duals . b + upper_bound_duals . upper (finite bounds only)."""

    status: LpStatus
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    upper_bound_duals: np.ndarray | None = None
    objective: float | None = None
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class _Simplex:
    """Core tableau state for min c x, A x = b (b >= 0), x >= 0."""

    a: np.ndarray
    b: np.ndarray
    basis: np.ndarray
    b_inv: np.ndarray
    x_b: np.ndarray
    pivots: int = 0

    def refactorize(self) -> bool:
        try:
            self.b_inv = np.linalg.inv(self.a[:, self.basis])
        except np.linalg.LinAlgError:
            return False
        self.x_b = self.b_inv @ self.b
        return True

    def run(self, c: np.ndarray, allowed: np.ndarray, max_iters: int) -> str:
        """Iterate to optimality.  Returns 'optimal', 'unbounded' or 'stalled'."""
        m = self.a.shape[0]
        bland = False
        stall = 0
        last_obj = np.inf
        for _ in range(max_iters):
            y = c[self.basis] @ self.b_inv
            reduced = c - y @ self.a
            reduced[~allowed] = np.inf
            reduced[self.basis] = np.inf  # basic columns have zero reduced cost
            if bland:
                candidates = np.where(reduced < -PIVOT_TOL)[0]
                if candidates.size == 0:
                    return "optimal"
                enter = candidates[0]
            else:
                enter = int(np.argmin(reduced))
                if reduced[enter] >= -PIVOT_TOL:
                    return "optimal"
            direction = self.b_inv @ self.a[:, enter]
            positive = direction > PIVOT_TOL
            if not np.any(positive):
                return "unbounded"
            ratios = np.full(m, np.inf)
            ratios[positive] = self.x_b[positive] / direction[positive]
            theta = ratios.min()
            ties = np.where(ratios <= theta + PIVOT_TOL)[0]
            # smallest basic-variable index among ties (Bland-compatible)
            leave = ties[int(np.argmin(self.basis[ties]))]

            self.basis[leave] = enter
            pivot = direction[leave]
            self.b_inv[leave, :] /= pivot
            other = np.arange(m) != leave
            self.b_inv[other, :] -= np.outer(direction[other], self.b_inv[leave, :])
            self.x_b = self.b_inv @ self.b
            np.maximum(self.x_b, 0.0, out=self.x_b)
            self.pivots += 1
            if self.pivots % REFACTOR_EVERY == 0 and not self.refactorize():
                return "stalled"

            obj = c[self.basis] @ self.x_b
            if obj < last_obj - 1e-12:
                last_obj = obj
                stall = 0
            else:
                stall += 1
                if stall > STALL_LIMIT:
                    bland = True
        return "stalled"


def _standardize(problem: LpProblem):
    """Rewrite into min c x, A x = b (b >= 0), x >= 0.

    Returns the standard-form pieces plus the bookkeeping needed to map the
    solution back: column split map, per-row sign flips, and the index range
    of internal upper-bound rows.
    """
    m, n = problem.a.shape
    sign = 1.0 if problem.sense == "min" else -1.0

    # Column split: each original var maps to (plus_col, minus_col | -1).
    split = np.full((n, 2), -1, dtype=int)
    cols = []
    c_cols = []
    for j in range(n):
        split[j, 0] = len(cols)
        cols.append((j, 1.0))
        c_cols.append(sign * problem.c[j])
        if problem.lower[j] == -np.inf:
            split[j, 1] = len(cols)
            cols.append((j, -1.0))
            c_cols.append(-sign * problem.c[j])
    n_struct = len(cols)

    a_struct = np.zeros((m, n_struct))
    for k, (j, coef) in enumerate(cols):
        a_struct[:, k] = coef * problem.a[:, j]

    rows = [a_struct[i] for i in range(m)]
    rhs = list(problem.b.astype(float))
    relations = list(problem.relations)
    bound_vars = []
    for j in range(n):
        if problem.upper[j] != np.inf:
            row = np.zeros(n_struct)
            row[split[j, 0]] = 1.0
            if split[j, 1] >= 0:
                row[split[j, 1]] = -1.0
            rows.append(row)
            rhs.append(float(problem.upper[j]))
            relations.append("<=")
            bound_vars.append(j)

    m_std = len(rows)
    a_full = np.vstack(rows)
    b_full = np.array(rhs)

    # One slack/surplus column per inequality row.
    slack_cols = np.zeros((m_std, m_std))
    slack_of_row = np.full(m_std, -1, dtype=int)
    n_slack = 0
    for i, rel in enumerate(relations):
        if rel == "<=":
            slack_cols[i, n_slack] = 1.0
            slack_of_row[i] = n_slack
            n_slack += 1
        elif rel == ">=":
            slack_cols[i, n_slack] = -1.0
            slack_of_row[i] = n_slack
            n_slack += 1
    slack_cols = slack_cols[:, :n_slack]

    a_std = np.hstack([a_full, slack_cols])
    c_std = np.concatenate([c_cols, np.zeros(n_slack)])

    flips = b_full < 0
    a_std[flips] *= -1.0
    b_std = np.abs(b_full)

    return a_std, b_std, c_std, split, flips, m, bound_vars, n_struct, slack_of_row, relations


def solve_lp(problem: LpProblem, max_iters: int | None = None) -> LpSolution:
    """Solve an LpProblem; statuses other than optimal carry no primal point."""
    problem.validate()
    (a_std, b_std, c_std, split, flips, m_user, bound_vars, n_struct,
     slack_of_row, relations) = _standardize(problem)
    m_std, n_std = a_std.shape
    if max_iters is None:
        max_iters = 200 * (m_std + n_std) + 20_000

    # Phase 1: artificials on rows without a usable (+1-signed) slack.
    basis = np.full(m_std, -1, dtype=int)
    art_cols = []
    for i in range(m_std):
        s = slack_of_row[i]
        usable = s >= 0 and a_std[i, n_struct + s] > 0.5
        if usable:
            basis[i] = n_struct + s
        else:
            basis[i] = n_std + len(art_cols)
            art_cols.append(i)
    n_art = len(art_cols)
    if n_art:
        art = np.zeros((m_std, n_art))
        for k, i in enumerate(art_cols):
            art[i, k] = 1.0
        a_work = np.hstack([a_std, art])
    else:
        a_work = a_std

    sx = _Simplex(a_work, b_std, basis, np.eye(m_std), b_std.copy())
    allowed = np.ones(a_work.shape[1], dtype=bool)
    if n_art:
        c_phase1 = np.concatenate([np.zeros(n_std), np.ones(n_art)])
        outcome = sx.run(c_phase1, allowed, max_iters)
        if outcome == "stalled" or not sx.refactorize():
            return LpSolution(LpStatus.NUMERICAL_FAILURE, message="phase 1 stalled")
        phase1_obj = c_phase1[sx.basis] @ sx.x_b
        if phase1_obj > 1e-7:
            return LpSolution(LpStatus.INFEASIBLE)
        # Pivot remaining zero-level artificials out; rows that cannot be
        # pivoted are linearly dependent and dropped.
        drop_rows = []
        for i in range(m_std):
            if sx.basis[i] < n_std:
                continue
            row = sx.b_inv[i] @ a_std
            pivot_candidates = np.where(np.abs(row) > 1e-7)[0]
            pivot_candidates = pivot_candidates[~np.isin(pivot_candidates, sx.basis)]
            if pivot_candidates.size:
                enter = int(pivot_candidates[0])
                direction = sx.b_inv @ a_work[:, enter]
                sx.basis[i] = enter
                sx.b_inv[i, :] /= direction[i]
                other = np.arange(m_std) != i
                sx.b_inv[other, :] -= np.outer(direction[other], sx.b_inv[i, :])
                sx.x_b = sx.b_inv @ sx.b
            else:
                drop_rows.append(i)
        if drop_rows:
            keep = np.setdiff1d(np.arange(m_std), drop_rows)
            a_std = a_std[keep]
            b_kept = b_std[keep]
            sx = _Simplex(a_std, b_kept, sx.basis[keep].copy(), np.eye(len(keep)), b_kept.copy())
            kept_mask = np.zeros(m_std, dtype=bool)
            kept_mask[keep] = True
        else:
            kept_mask = np.ones(m_std, dtype=bool)
            sx = _Simplex(a_std, b_std, sx.basis.copy(), sx.b_inv.copy(), sx.x_b.copy())
        if not sx.refactorize():
            return LpSolution(LpStatus.NUMERICAL_FAILURE, message="basis repair failed")
    else:
        kept_mask = np.ones(m_std, dtype=bool)

    allowed = np.ones(n_std, dtype=bool)
    outcome = sx.run(c_std, allowed, max_iters)
    if outcome == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED)
    if outcome == "stalled" or not sx.refactorize():
        return LpSolution(LpStatus.NUMERICAL_FAILURE, message="phase 2 stalled")

    x_std = np.zeros(n_std)
    x_std[sx.basis] = sx.x_b
    y_kept = c_std[sx.basis] @ sx.b_inv

    # Un-flip row signs and scatter duals back over dropped rows.
    y_std = np.zeros(m_std)
    y_std[kept_mask] = y_kept
    y_std[flips] *= -1.0

    sense_sign = 1.0 if problem.sense == "min" else -1.0
    x = np.empty(problem.c.shape[0])
    for j in range(problem.c.shape[0]):
        x[j] = x_std[split[j, 0]] - (x_std[split[j, 1]] if split[j, 1] >= 0 else 0.0)
    duals = sense_sign * y_std[:m_user]
    ub_duals = np.zeros(problem.c.shape[0])
    for k, j in enumerate(bound_vars):
        ub_duals[j] = sense_sign * y_std[m_user + k]
    objective = float(problem.c @ x)

    solution = LpSolution(LpStatus.OPTIMAL, x=x, duals=duals,
                          upper_bound_duals=ub_duals, objective=objective)
    err = _verify(problem, solution)
    if err:
        return LpSolution(LpStatus.NUMERICAL_FAILURE, message=err)
    return solution


def _verify(problem: LpProblem, sol: LpSolution) -> str:
    """Residual checks on a claimed optimum; returns '' when clean."""
    x = sol.x
    row_vals = problem.a @ x
    for i, rel in enumerate(problem.relations):
        resid = row_vals[i] - problem.b[i]
        if rel == "<=" and resid > FEAS_TOL:
            return f"row {i} violates <= by {resid:.3e}"
        if rel == ">=" and resid < -FEAS_TOL:
            return f"row {i} violates >= by {-resid:.3e}"
        if rel == "=" and abs(resid) > FEAS_TOL:
            return f"row {i} violates = by {abs(resid):.3e}"
    lower_bad = (problem.lower == 0.0) & (x < -FEAS_TOL)
    if np.any(lower_bad):
        return "negative value in nonnegative column"
    finite = problem.upper != np.inf
    if np.any(x[finite] > problem.upper[finite] + FEAS_TOL):
        return "upper bound violated"
    dual_value = float(sol.duals @ problem.b)
    if np.any(finite):
        dual_value += float(sol.upper_bound_duals[finite] @ problem.upper[finite])
    scale = 1.0 + abs(sol.objective)
    if abs(dual_value - sol.objective) > FEAS_TOL * scale:
        return f"duality gap {abs(dual_value - sol.objective):.3e}"
    return ""


def complementary_slackness_residual(problem: LpProblem, sol: LpSolution) -> float:
    """max_i |dual_i * slack_i| over constraint rows (0 for a clean optimum)."""
    slack = problem.b - problem.a @ sol.x
    return float(np.max(np.abs(sol.duals * slack), initial=0.0))
