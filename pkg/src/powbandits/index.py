"""Activation-price indices via line search over lam.

The index of a state is the largest activation price at which activating
remains optimal for the arm's penalized MDP, with the penalty multiplier
re-optimized at every price.  Pinning the multiplier to zero instead
recovers the classical (unconstrained) Whittle index.  Bisection is only
sound when activation sets shrink as the price grows, so indexability is
checked on a coarse grid first and a dense scan is used as the fallback.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arm_solver import solve_arm_exact, solve_dual_mu_lp
from .model import ArmModel


@dataclass
class IndexTable:
    """Per-state index values; entries clamped to +-search_bound are states
    whose indifference price was never bracketed."""

    index: np.ndarray
    indexable: bool
    search_bound: float
    resolution: float


@dataclass
class IndexabilityReport:
    indexable: bool
    violations: list[tuple[float, float, int]] = field(default_factory=list)
    grid: np.ndarray | None = None


def default_search_bound(arm: ArmModel, beta: float, u_cap: float) -> float:
    """Price bound exceeding any indifference point: the reward span plus the
    largest possible penalty adjustment, both discounted, plus one."""
    r_span = float(arm.reward.max() - arm.reward.min())
    g_max = float(arm.penalty.max())
    return (r_span + u_cap * g_max) / (1.0 - beta) + 1.0


class ActivationOracle:
    """Caches the optimal activation set per price lam.

    With ``pinned_mu`` unset the penalty multiplier is re-optimized (the
    LP route); with ``pinned_mu=0.0`` this is the plain Whittle evaluation.
    """

    def __init__(self, arm: ArmModel, beta: float, u_cap: float = 1.0,
                 pinned_mu: float | None = None):
        self.arm = arm
        self.beta = beta
        self.u_cap = u_cap
        self.pinned_mu = pinned_mu
        self._cache: dict[float, np.ndarray] = {}
        self.mu_cache: dict[float, float] = {}

    def __call__(self, lam: float) -> np.ndarray:
        lam = float(lam)
        if lam not in self._cache:
            if self.pinned_mu is None:
                ds = solve_dual_mu_lp(self.arm, lam, self.beta, self.u_cap)
                self.mu_cache[lam] = ds.mu_star
                actions = ds.value_fn.greedy_action
            else:
                vf = solve_arm_exact(self.arm, lam, self.pinned_mu, self.beta)
                self.mu_cache[lam] = self.pinned_mu
                actions = vf.greedy_action
            self._cache[lam] = actions.astype(bool)
        return self._cache[lam]

    @property
    def evaluations(self) -> int:
        return len(self._cache)


def _nested_check(oracle: ActivationOracle, grid: np.ndarray) -> IndexabilityReport:
    """Indexable iff activation sets are nested non-increasing along the grid."""
    violations = []
    prev = oracle(grid[0])
    for k in range(1, len(grid)):
        cur = oracle(grid[k])
        gained = np.where(cur & ~prev)[0]
        for s in gained:
            violations.append((float(grid[k - 1]), float(grid[k]), int(s)))
        prev = cur
    return IndexabilityReport(indexable=not violations, violations=violations, grid=grid)


def check_indexability(arm: ArmModel, beta: float, u_cap: float,
                       grid: np.ndarray) -> IndexabilityReport:
    """Evaluate the optimal activation set at every grid price and report any
    state that is activated at a higher price but not at a lower one."""
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be sorted strictly ascending")
    oracle = ActivationOracle(arm, beta, u_cap)
    return _nested_check(oracle, grid)


def _indices_by_bisection(oracle: ActivationOracle, grid: np.ndarray,
                          bound: float, resolution: float) -> np.ndarray:
    n_states = oracle.arm.n_states
    acts = np.stack([oracle(lam) for lam in grid])
    indices = np.empty(n_states)
    for s in range(n_states):
        if acts[-1, s]:
            indices[s] = bound  # still active at the top of the search range
            continue
        if not acts[0, s]:
            indices[s] = -bound  # never active
            continue
        k = int(np.max(np.where(acts[:, s])[0]))
        lo, hi = float(grid[k]), float(grid[k + 1])
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if oracle(mid)[s]:
                lo = mid
            else:
                hi = mid
        indices[s] = 0.5 * (lo + hi)
    return indices


def _indices_by_scan(oracle: ActivationOracle, bound: float, resolution: float,
                     scan_points: int = 2001) -> np.ndarray:
    """Fallback for non-indexable arms: dense scan for the last activation
    price, refined locally.  Approximates the supremum."""
    n_states = oracle.arm.n_states
    grid = np.linspace(-bound, bound, scan_points)
    acts = np.stack([oracle(lam) for lam in grid])
    indices = np.empty(n_states)
    for s in range(n_states):
        active = np.where(acts[:, s])[0]
        if active.size == 0:
            indices[s] = -bound
            continue
        k = int(active.max())
        if k == scan_points - 1:
            indices[s] = bound
            continue
        lo, hi = float(grid[k]), float(grid[k + 1])
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            if oracle(mid)[s]:
                lo = mid
            else:
                hi = mid
        indices[s] = 0.5 * (lo + hi)
    return indices


def _index_table(oracle: ActivationOracle, bound: float, resolution: float,
                 grid_points: int) -> IndexTable:
    grid = np.linspace(-bound, bound, grid_points)
    report = _nested_check(oracle, grid)
    if report.indexable:
        indices = _indices_by_bisection(oracle, grid, bound, resolution)
    else:
        indices = _indices_by_scan(oracle, bound, resolution)
    return IndexTable(indices, report.indexable, bound, resolution)


def pow_index_table(arm: ArmModel, beta: float, u_cap: float,
                    search_bound: float | None = None, resolution: float = 1e-4,
                    grid_points: int = 200) -> IndexTable:
    """Index with the penalty multiplier re-optimized at every price."""
    bound = default_search_bound(arm, beta, u_cap) if search_bound is None else search_bound
    oracle = ActivationOracle(arm, beta, u_cap)
    return _index_table(oracle, bound, resolution, grid_points)


def whittle_index_table(arm: ArmModel, beta: float,
                        search_bound: float | None = None, resolution: float = 1e-4,
                        grid_points: int = 200) -> IndexTable:
    """Unconstrained special case: penalty multiplier pinned at zero."""
    bound = default_search_bound(arm, beta, 0.0) if search_bound is None else search_bound
    oracle = ActivationOracle(arm, beta, pinned_mu=0.0)
    return _index_table(oracle, bound, resolution, grid_points)


def index_table_rows(arm_id: int, table: IndexTable) -> list[tuple[int, int, float, bool]]:
    """CSV-ready rows: (arm_id, state, index, indexable)."""
    return [(arm_id, s, float(table.index[s]), table.indexable)
            for s in range(len(table.index))]
