import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from powbandits.model import (
    AOI_CAP,
    ArmModel,
    ScenarioConfig,
    ScenarioKind,
    SystemSpec,
    TP_NUM_STATES,
    default_mu_cap,
    make_scenario,
    replicate_system,
    service_regularity_state,
    validate_arm,
)
from conftest import random_arm

TP4 = ScenarioConfig(
    kind=ScenarioKind.THROUGHPUT_ACTIVATION,
    theta0=(0.3, 0.5, 0.7, 0.9),
    theta1=(0.02,) * 4,
    delta=(0.35, 0.35, 0.05, 0.05),
    capacity=1,
    discount=0.99,
)

RS8 = ScenarioConfig(
    kind=ScenarioKind.REMOTE_SENSING,
    p=(0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    budgets=(0.4, 0.4, 0.2, 0.2, 0.1, 0.1, 0.05, 0.05),
    capacity=1,
    discount=0.99,
)

SR4 = ScenarioConfig(
    kind=ScenarioKind.SERVICE_REGULARITY,
    theta0=(0.4, 0.5, 0.6, 0.7),
    theta1=(0.1,) * 4,
    budgets=(0.2, 0.2, 0.1, 0.1),
    capacity=1,
    discount=0.99,
)


def two_state_arm() -> ArmModel:
    return ArmModel(
        reward=[[0.0, 1.0], [0.5, 0.2]],
        penalty=[[0.0, 1.0], [0.0, 1.0]],
        kernel=[[[0.9, 0.1], [0.2, 0.8]], [[0.5, 0.5], [0.3, 0.7]]],
        budget=0.5,
        init_dist=[0.6, 0.4],
    )


class TestValidateArm:
    def test_well_formed_arm_gets_empty_report(self):
        assert validate_arm(two_state_arm()).ok

    def test_kernel_row_not_summing_to_one_is_named(self):
        arm = two_state_arm()
        kernel = arm.kernel.copy()
        kernel[1, 0] = [0.4, 0.5]
        bad = ArmModel(arm.reward, arm.penalty, kernel, arm.budget, arm.init_dist)
        report = validate_arm(bad)
        assert not report.ok
        assert any("(s=1, a=0)" in p for p in report.problems)

    def test_negative_penalty_is_named(self):
        arm = two_state_arm()
        penalty = arm.penalty.copy()
        penalty[0, 1] = -0.25
        bad = ArmModel(arm.reward, penalty, arm.kernel, arm.budget, arm.init_dist)
        report = validate_arm(bad)
        assert any("g(0,1)" in p for p in report.problems)

    def test_validation_never_throws_on_shape_mismatch(self):
        arm = two_state_arm()
        bad = ArmModel(arm.reward, arm.penalty, np.ones((2, 2, 3)) / 3, arm.budget, arm.init_dist)
        assert not validate_arm(bad).ok


class TestScenarios:
    def test_tp4_builds_four_arm_system(self):
        system = make_scenario(TP4)
        assert system.n_arms == 4
        assert system.capacity == 1
        arm = system.arms[0]
        assert arm.n_states == TP_NUM_STATES
        # reward at channel state s is (theta0 + theta1*s) when scheduled
        assert arm.reward[0, 1] == pytest.approx(0.3 + 0.02 * 1)
        assert arm.reward[49, 1] == pytest.approx(0.3 + 0.02 * 50)
        assert np.all(arm.reward[:, 0] == 0.0)
        assert arm.budget == pytest.approx(0.65)

    def test_tp_kernel_uniform_and_action_independent(self):
        system = make_scenario(TP4)
        for arm in system.arms:
            assert np.allclose(arm.kernel, 1.0 / TP_NUM_STATES)

    def test_remote_sensing_reliable_channel_resets_aoi(self):
        config = ScenarioConfig(kind=ScenarioKind.REMOTE_SENSING, p=(1.0,),
                                budgets=(0.5,), capacity=1)
        arm = make_scenario(config).arms[0]
        for s in range(arm.n_states):
            assert arm.kernel[s, 1, 0] == pytest.approx(1.0)

    def test_rs8_builds_eight_arm_system(self):
        system = make_scenario(RS8)
        assert system.n_arms == 8
        arm = system.arms[0]
        assert arm.n_states == AOI_CAP
        assert arm.reward[4, 0] == pytest.approx(-5 / 30)
        assert arm.init_dist[0] == 1.0
        # AoI ages deterministically when idle and saturates at the cap
        assert arm.kernel[0, 0, 1] == 1.0
        assert arm.kernel[AOI_CAP - 1, 0, AOI_CAP - 1] == 1.0

    def test_service_regularity_penalty_action_independent(self):
        system = make_scenario(SR4)
        for arm in system.arms:
            assert np.array_equal(arm.penalty[:, 0], arm.penalty[:, 1])
        arm = system.arms[0]
        idx = service_regularity_state(d=3, h=7)
        assert arm.penalty[idx, 0] == pytest.approx(7 / 9)
        assert arm.reward[idx, 1] == pytest.approx(0.4 + 0.1 * 3)

    def test_every_scenario_arm_validates(self):
        for config in (TP4, RS8, SR4):
            for arm in make_scenario(config).arms:
                assert validate_arm(arm).ok

    def test_vector_length_mismatch_rejected(self):
        bad = ScenarioConfig(kind=ScenarioKind.THROUGHPUT_ACTIVATION,
                             theta0=(0.3, 0.5), theta1=(0.02,), delta=(0.1, 0.1))
        with pytest.raises(ValueError, match="mismatch"):
            make_scenario(bad)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            ScenarioConfig(kind="NoSuchScenario")

    def test_default_mu_cap_per_scenario(self):
        assert default_mu_cap(ScenarioKind.REMOTE_SENSING) == 10.0
        assert default_mu_cap(ScenarioKind.THROUGHPUT_ACTIVATION) == 5.0
        assert default_mu_cap(ScenarioKind.SERVICE_REGULARITY) == 5.0


class TestReplication:
    def test_replicate_copies_each_arm_k_times(self, rng):
        arms = [random_arm(rng, 3), random_arm(rng, 4)]
        spec = SystemSpec(tuple(arms), capacity=1, discount=0.9)
        rep = replicate_system(spec, 3)
        assert rep.n_arms == 6
        assert rep.capacity == 3
        assert rep.replication == 3
        for i in range(3):
            assert rep.arms[i].equals(arms[0])
            assert rep.arms[3 + i].equals(arms[1])
        assert rep.group_of(2) == 0 and rep.group_of(3) == 1

    def test_replicate_k1_is_identity(self, rng):
        spec = SystemSpec((random_arm(rng, 2), random_arm(rng, 2)), capacity=1, discount=0.9)
        rep = replicate_system(spec, 1)
        assert rep.n_arms == 2 and rep.capacity == 1
        assert all(a.equals(b) for a, b in zip(rep.arms, spec.arms))

    def test_tp4_k10_shape(self):
        rep = replicate_system(make_scenario(TP4), 10)
        assert rep.n_arms == 40
        assert rep.capacity == 10
        assert rep.n_groups == 4

    def test_k0_rejected(self, rng):
        spec = SystemSpec((random_arm(rng, 2),), capacity=1, discount=0.9)
        with pytest.raises(ValueError):
            replicate_system(spec, 0)


class TestSystemSpecInvariants:
    def test_capacity_bounds(self, rng):
        with pytest.raises(ValueError):
            SystemSpec((random_arm(rng, 2),), capacity=2, discount=0.9)
        with pytest.raises(ValueError):
            SystemSpec((random_arm(rng, 2),), capacity=0, discount=0.9)

    def test_discount_range(self, rng):
        with pytest.raises(ValueError):
            SystemSpec((random_arm(rng, 2),), capacity=1, discount=1.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_states=st.integers(2, 6))
def test_random_arms_validate_and_break_when_perturbed(seed, n_states):
    rng = np.random.default_rng(seed)
    arm = random_arm(rng, n_states)
    assert validate_arm(arm).ok
    kernel = arm.kernel.copy()
    s = int(rng.integers(n_states))
    a = int(rng.integers(2))
    kernel[s, a] *= 0.7  # row no longer sums to one
    broken = ArmModel(arm.reward, arm.penalty, kernel, arm.budget, arm.init_dist)
    report = validate_arm(broken)
    assert any(f"(s={s}, a={a})" in p for p in report.problems)
