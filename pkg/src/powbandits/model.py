"""Arm MDPs with per-arm penalty budgets and the three scheduling scenarios.

An arm is a two-action MDP (action 1 = activate) that emits a reward and a
nonnegative penalty each step.  The discounted penalty of arm n must stay
below budget/(1-discount).  Systems bundle N arms with a per-step activation
capacity C and can be replicated K-fold for fluid-scaling experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

PROB_TOL = 1e-12

TP_NUM_STATES = 50
AOI_CAP = 30
SR_NUM_CHANNELS = 10
SR_NUM_LAGS = 10


class ScenarioKind(str, Enum):
    THROUGHPUT_ACTIVATION = "ThroughputActivation"
    REMOTE_SENSING = "RemoteSensing"
    SERVICE_REGULARITY = "ServiceRegularity"


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ArmModel:
    """One restless arm: reward/penalty tables, transition kernel, budget.

    reward, penalty: (S, 2) tables indexed by (state, action).
    kernel: (S, 2, S) table of P(s' | s, a).
    budget: per-step penalty budget B; the constraint is on the discounted
        penalty sum, bounded by B/(1-discount).
    init_dist: initial state distribution alpha over the S states.
    """

    reward: np.ndarray
    penalty: np.ndarray
    kernel: np.ndarray
    budget: float
    init_dist: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "reward", _frozen_array(self.reward))
        object.__setattr__(self, "penalty", _frozen_array(self.penalty))
        object.__setattr__(self, "kernel", _frozen_array(self.kernel))
        object.__setattr__(self, "init_dist", _frozen_array(self.init_dist))
        object.__setattr__(self, "budget", float(self.budget))

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    def equals(self, other: "ArmModel") -> bool:
        """Structural equality on all tables and the budget."""
        return (
            self.reward.shape == other.reward.shape
            and np.array_equal(self.reward, other.reward)
            and np.array_equal(self.penalty, other.penalty)
            and np.array_equal(self.kernel, other.kernel)
            and self.budget == other.budget
            and np.array_equal(self.init_dist, other.init_dist)
        )


@dataclass(frozen=True)
class SystemSpec:
    """N arms sharing a per-step activation capacity C.

    ``replication`` records the K-scaling factor: arms are grouped in
    contiguous blocks of K identical copies, so arm m belongs to group
    m // K.  A freshly built scenario has replication 1.
    """

    arms: tuple[ArmModel, ...]
    capacity: int
    discount: float
    replication: int = 1

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        n = len(self.arms)
        if not 1 <= self.capacity <= n:
            raise ValueError(f"capacity must be in [1, {n}], got {self.capacity}")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must be in (0, 1), got {self.discount}")
        if self.replication < 1:
            raise ValueError(f"replication must be >= 1, got {self.replication}")
        if n % self.replication != 0:
            raise ValueError("arm count must be a multiple of replication")

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def n_groups(self) -> int:
        return len(self.arms) // self.replication

    def group_of(self, arm_index: int) -> int:
        return arm_index // self.replication

    def group_arms(self) -> tuple[ArmModel, ...]:
        """One representative arm per group (the first copy of each)."""
        return tuple(self.arms[g * self.replication] for g in range(self.n_groups))


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters for one of the three built-in scenarios.

    Vector fields are per-arm; a scenario only reads the fields it uses
    (ThroughputActivation: theta0/theta1/delta, RemoteSensing: p/budgets,
    ServiceRegularity: theta0/theta1/budgets).
    """

    kind: ScenarioKind
    theta0: tuple[float, ...] = ()
    theta1: tuple[float, ...] = ()
    delta: tuple[float, ...] = ()
    p: tuple[float, ...] = ()
    budgets: tuple[float, ...] = ()
    capacity: int = 1
    discount: float = 0.99

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        for name in ("theta0", "theta1", "delta", "p", "budgets"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))


@dataclass
class ValidationReport:
    """List of invariant violations; empty means the arm is well formed."""

    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def validate_arm(arm: ArmModel) -> ValidationReport:
    """Check every ArmModel invariant; never raises, reports all violations."""
    report = ValidationReport()
    s = arm.reward.shape[0]
    if arm.reward.shape != (s, 2):
        report.problems.append(f"reward table has shape {arm.reward.shape}, expected ({s}, 2)")
    if arm.penalty.shape != (s, 2):
        report.problems.append(f"penalty table has shape {arm.penalty.shape}, expected ({s}, 2)")
    if arm.kernel.shape != (s, 2, s):
        report.problems.append(f"kernel has shape {arm.kernel.shape}, expected ({s}, 2, {s})")
        return report
    if arm.init_dist.shape != (s,):
        report.problems.append(f"init_dist has shape {arm.init_dist.shape}, expected ({s},)")

    if not np.all(np.isfinite(arm.reward)):
        report.problems.append("reward table contains non-finite entries")
    if not np.all(np.isfinite(arm.penalty)):
        report.problems.append("penalty table contains non-finite entries")
    for (i, a) in zip(*np.where(arm.penalty < 0)):
        report.problems.append(f"penalty g({i},{a}) = {arm.penalty[i, a]} < 0")
    if arm.budget < 0:
        report.problems.append(f"budget {arm.budget} < 0")

    bad = (arm.kernel < -PROB_TOL) | (arm.kernel > 1 + PROB_TOL)
    for (i, a, j) in zip(*np.where(bad)):
        report.problems.append(f"kernel entry P({j}|{i},{a}) = {arm.kernel[i, a, j]} outside [0, 1]")
    row_sums = arm.kernel.sum(axis=2)
    for (i, a) in zip(*np.where(np.abs(row_sums - 1.0) > PROB_TOL)):
        report.problems.append(f"kernel row (s={i}, a={a}) sums to {row_sums[i, a]}, expected 1")

    if arm.init_dist.shape == (s,):
        if np.any(arm.init_dist < -PROB_TOL):
            report.problems.append("init_dist has negative entries")
        if abs(arm.init_dist.sum() - 1.0) > PROB_TOL:
            report.problems.append(f"init_dist sums to {arm.init_dist.sum()}, expected 1")
    return report


def _require_lengths(config: ScenarioConfig, fields: Sequence[str]) -> int:
    lengths = {name: len(getattr(config, name)) for name in fields}
    n = max(lengths.values(), default=0)
    if n == 0:
        raise ValueError(f"{config.kind.value} needs non-empty fields {list(fields)}")
    mismatched = [f"{k} (len {v})" for k, v in lengths.items() if v != n]
    if mismatched:
        raise ValueError(f"{config.kind.value} vector-length mismatch: {', '.join(mismatched)}")
    return n


def throughput_activation_arm(theta0: float, theta1: float, delta: float) -> ArmModel:
    """Uplink-throughput arm: i.i.d.-uniform channel over 50 states.

    Scheduling at channel state s yields theta0 + theta1*s packets; the
    penalty 1-a with budget 1-delta enforces a minimum activation fraction.
    """
    s = TP_NUM_STATES
    channel = np.arange(1, s + 1, dtype=float)
    reward = np.zeros((s, 2))
    reward[:, 1] = theta0 + theta1 * channel
    penalty = np.zeros((s, 2))
    penalty[:, 0] = 1.0
    kernel = np.full((s, 2, s), 1.0 / s)
    return ArmModel(reward, penalty, kernel, 1.0 - delta, np.full(s, 1.0 / s))


def remote_sensing_arm(p: float, budget: float) -> ArmModel:
    """Age-of-information arm: AoI ages by one per step, capped at 30.

    A transmission (a=1) succeeds with probability p and resets AoI to 1;
    each transmission costs one unit of energy (the penalty).
    """
    s = AOI_CAP
    aoi = np.arange(1, s + 1, dtype=float)
    reward = np.tile((-aoi / AOI_CAP)[:, None], (1, 2))
    penalty = np.zeros((s, 2))
    penalty[:, 1] = 1.0
    kernel = np.zeros((s, 2, s))
    for i in range(s):
        aged = min(i + 1, s - 1)
        kernel[i, 0, aged] = 1.0
        kernel[i, 1, aged] += 1.0 - p
        kernel[i, 1, 0] += p
    init = np.zeros(s)
    init[0] = 1.0
    return ArmModel(reward, penalty, kernel, budget, init)


def service_regularity_state(d: int, h: int) -> int:
    """Flat index of channel state d in 1..10 and staleness h in 0..9."""
    return h * SR_NUM_CHANNELS + (d - 1)


def service_regularity_arm(theta0: float, theta1: float, budget: float) -> ArmModel:
    """Throughput arm with a staleness penalty h/9.

    State is (d, h): channel d is i.i.d. uniform over {1..10}; h counts
    slots since the last schedule, resetting to 0 on activation and
    saturating at 9 otherwise.
    """
    s = SR_NUM_CHANNELS * SR_NUM_LAGS
    reward = np.zeros((s, 2))
    penalty = np.zeros((s, 2))
    kernel = np.zeros((s, 2, s))
    for d in range(1, SR_NUM_CHANNELS + 1):
        for h in range(SR_NUM_LAGS):
            i = service_regularity_state(d, h)
            reward[i, 1] = theta0 + theta1 * d
            penalty[i, :] = h / (SR_NUM_LAGS - 1)
            h_active = 0
            h_passive = min(h + 1, SR_NUM_LAGS - 1)
            for d_next in range(1, SR_NUM_CHANNELS + 1):
                kernel[i, 1, service_regularity_state(d_next, h_active)] = 1.0 / SR_NUM_CHANNELS
                kernel[i, 0, service_regularity_state(d_next, h_passive)] = 1.0 / SR_NUM_CHANNELS
    init = np.zeros(s)
    for d in range(1, SR_NUM_CHANNELS + 1):
        init[service_regularity_state(d, 0)] = 1.0 / SR_NUM_CHANNELS
    return ArmModel(reward, penalty, kernel, budget, init)


def make_scenario(config: ScenarioConfig) -> SystemSpec:
    """Build the SystemSpec for a scenario configuration."""
    kind = config.kind
    if kind is ScenarioKind.THROUGHPUT_ACTIVATION:
        n = _require_lengths(config, ("theta0", "theta1", "delta"))
        if any(not 0.0 <= d <= 1.0 for d in config.delta):
            raise ValueError("delta entries must lie in [0, 1]")
        arms = [
            throughput_activation_arm(config.theta0[i], config.theta1[i], config.delta[i])
            for i in range(n)
        ]
    elif kind is ScenarioKind.REMOTE_SENSING:
        n = _require_lengths(config, ("p", "budgets"))
        if any(not 0.0 < p <= 1.0 for p in config.p):
            raise ValueError("p entries must lie in (0, 1]")
        arms = [remote_sensing_arm(config.p[i], config.budgets[i]) for i in range(n)]
    elif kind is ScenarioKind.SERVICE_REGULARITY:
        n = _require_lengths(config, ("theta0", "theta1", "budgets"))
        arms = [
            service_regularity_arm(config.theta0[i], config.theta1[i], config.budgets[i])
            for i in range(n)
        ]
    else:  # pragma: no cover - ScenarioKind coercion rejects unknown kinds
        raise ValueError(f"unknown scenario kind {kind!r}")
    return SystemSpec(tuple(arms), config.capacity, config.discount, replication=1)


def replicate_system(spec: SystemSpec, k: int) -> SystemSpec:
    """K copies of every arm (group order preserved) with capacity K*C."""
    if k < 1:
        raise ValueError(f"replication factor must be >= 1, got {k}")
    if spec.replication != 1:
        raise ValueError("replicate_system expects an unreplicated base system")
    arms = tuple(arm for arm in spec.arms for _ in range(k))
    return SystemSpec(arms, spec.capacity * k, spec.discount, replication=k)


def default_mu_cap(kind: ScenarioKind) -> float:
    """Dual-variable cap U: 10 for remote sensing, 5 for the throughput scenarios."""
    return 10.0 if kind is ScenarioKind.REMOTE_SENSING else 5.0
