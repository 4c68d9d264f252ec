"""Robot model: stepping, gripper cycle, grasp resolution, spec config."""

import math

import pytest

from armsim.frames import CommandFrame
from armsim.robot import (
    GRIP_CLOSED,
    GRIP_CLOSING,
    GRIP_OPEN,
    GRIP_OPENING,
    JointState,
    Pose,
    RobotState,
    delta_spec,
    forward_kinematics,
    home_state,
    inverse_kinematics,
    scara_spec,
    spec_from_dict,
    spec_to_dict,
    step,
)
from armsim.world import Shape, WorldModel, WorldObject

SPEC = scara_spec()


def frame(x, y, z, grip=0):
    return CommandFrame(1, float(x), float(y), float(z), 0.0, grip, 0)


def settle(state, target, world=None, max_ticks=400, spec=SPEC):
    for _ in range(max_ticks):
        state, arrived = step(state, spec, target, 0.1, world)
        if arrived:
            return state
    raise AssertionError("did not settle")


def test_home_states_inside_workspace():
    for spec in (scara_spec(), delta_spec()):
        pose = home_state(spec).pose(spec)
        assert spec.z_min <= pose.z <= spec.z_max


def test_step_clamps_joint_velocity():
    state = home_state(SPEC)
    target = frame(-200.0, 100.0, 150.0)
    before = state.joints.joint_values
    state, _ = step(state, SPEC, target, 0.1)
    after = state.joints.joint_values
    for b, a, lim in zip(before, after, SPEC.joint_velocity_limits):
        assert abs(a - b) <= lim * 0.1 + 1e-9


def test_step_converges_to_target():
    state = settle(home_state(SPEC), frame(-150.0, 120.0, 30.0))
    pose = state.pose(SPEC)
    assert pose.distance_xyz(Pose(-150.0, 120.0, 30.0)) <= 1.0


def test_gripper_full_cycle_takes_configured_ticks():
    state = home_state(SPEC)
    pose = state.pose(SPEC)
    hold = frame(pose.x, pose.y, pose.z, grip=1)
    seen = []
    for _ in range(SPEC.gripper_cycle_ticks + 1):
        state, _ = step(state, SPEC, hold, 0.1)
        seen.append(state.gripper)
    assert seen[:SPEC.gripper_cycle_ticks - 1] == [GRIP_CLOSING] * (
        SPEC.gripper_cycle_ticks - 1)
    assert seen[SPEC.gripper_cycle_ticks - 1] == GRIP_CLOSED


def _world_with_block(xy, half=20.0):
    obj = WorldObject(id=0, label="block", color="green",
                      shape=Shape("rectangle", (2 * half, 2 * half)),
                      pose=(xy[0], xy[1], 0.0))
    return WorldModel(objects=(obj,))


def test_grasp_resolves_on_close_completion():
    world = _world_with_block((150.0, 50.0))
    state = settle(home_state(SPEC), frame(150.0, 50.0, 10.0), world)
    state = settle(state, frame(150.0, 50.0, 10.0, grip=1), world)
    assert state.gripper == GRIP_CLOSED
    assert state.holding == 0


def test_grasp_misses_outside_tolerance():
    world = _world_with_block((150.0, 50.0))
    state = settle(home_state(SPEC), frame(220.0, 50.0, 10.0), world)
    state = settle(state, frame(220.0, 50.0, 10.0, grip=1), world)
    assert state.gripper == GRIP_CLOSED
    assert state.holding is None


def test_jaw_limit_blocks_oversized_objects():
    world = _world_with_block((150.0, 50.0), half=60.0)  # 120 mm > 100 mm jaw
    state = settle(home_state(SPEC), frame(150.0, 50.0, 10.0), world)
    state = settle(state, frame(150.0, 50.0, 10.0, grip=1), world)
    assert state.holding is None


def test_release_clears_holding_when_opening_starts():
    world = _world_with_block((150.0, 50.0))
    state = settle(home_state(SPEC), frame(150.0, 50.0, 10.0), world)
    state = settle(state, frame(150.0, 50.0, 10.0, grip=1), world)
    assert state.holding == 0
    state, _ = step(state, SPEC, frame(150.0, 50.0, 10.0, grip=0), 0.1, world)
    assert state.gripper == GRIP_OPENING
    assert state.holding is None


def test_arrival_requires_gripper_steady():
    world = _world_with_block((150.0, 50.0))
    state = settle(home_state(SPEC), frame(150.0, 50.0, 10.0), world)
    state, arrived = step(state, SPEC, frame(150.0, 50.0, 10.0, grip=1),
                          0.1, world)
    assert not arrived  # still closing


def test_spec_dict_round_trip():
    for spec in (scara_spec(), delta_spec()):
        assert spec_from_dict(spec_to_dict(spec)) == spec


def test_scara_link_length_invariant():
    with pytest.raises(ValueError):
        scara_spec(link_lengths=(100.0, 100.0))


def test_fk_ik_consistency_at_home():
    for spec in (scara_spec(), delta_spec()):
        state = home_state(spec)
        pose = forward_kinematics(spec, state.joints)
        joints = inverse_kinematics(spec, pose)
        again = forward_kinematics(spec, joints)
        assert pose.distance_xyz(again) < 1e-9


def test_busy_property():
    state = RobotState(joints=home_state(SPEC).joints, gripper=GRIP_CLOSING)
    assert state.busy
    assert not RobotState(joints=state.joints, gripper=GRIP_OPEN).busy
