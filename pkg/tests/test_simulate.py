import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robcons import networks
from robcons.errors import IntegrationDiverged, InvalidArgument
from robcons.networks import grid_id
from robcons.dynamics import Custom, InteractionRule, NetworkDynamics
from robcons.simulate import (
    BYZANTINE_X0,
    ByzantineOverride,
    FaultSignal,
    evaluate_fault_signal,
    byzantine_overrides,
    integrate,
    monitor_envelopes,
    run_byzantine_demo,
    unbounded_signals,
)

DRIFT = (FaultSignal.builtin(3, "drift_x4"), FaultSignal.builtin(4, "drift_x5"))


def test_fault_signal_values():
    assert evaluate_fault_signal(DRIFT[0], 0.0) == 15.0
    assert evaluate_fault_signal(DRIFT[1], 0.0) == 20.0
    c = FaultSignal.constant(0, 7.0)
    assert all(evaluate_fault_signal(c, t) == 7.0 for t in (0.0, 3.3, 40.0))
    e = FaultSignal.expression(0, "1 + t")
    assert evaluate_fault_signal(e, 2.0) == 3.0


def test_unbounded_signal_flagged_not_rejected():
    assert unbounded_signals([FaultSignal.expression(0, "t^6")], 40.0) == [0]
    assert unbounded_signals([FaultSignal.constant(0, 1.0)], 40.0) == []


def test_equilibrium_trajectory():
    traj = integrate(networks.ring5(), x0_healthy=[2.5] * 5, horizon=2.0)
    assert np.all(traj.states == 2.5)
    m = traj.monitors
    assert m.final_spread == 0.0 and m.consensus_reached and m.consensus_time == 0.0
    assert m.max_envelope_violation == 0.0 == m.min_envelope_violation


def test_trajectory_shape_and_grid():
    traj = integrate(networks.alltoall5_joint(), {3, 4}, DRIFT, x0_healthy=[35, 10, 5], horizon=1.0, step=0.1)
    assert traj.times.shape == (11,) and traj.states.shape == (11, 3) and traj.fault_values.shape == (11, 2)
    assert np.allclose(np.diff(traj.times), 0.1)
    assert traj.fault_values[0].tolist() == [15.0, 20.0]


def test_joint_network_converges_with_drift_faults():
    traj = integrate(networks.alltoall5_joint(), {3, 4}, DRIFT, x0_healthy=[35, 10, 5], horizon=10.0)
    m = traj.monitors
    assert m.final_spread < 1e-2
    assert 5 <= m.final_min <= m.final_max <= 35
    assert m.max_envelope_violation == 0.0 and m.min_envelope_violation == 0.0


def test_nonuniform_linear_network_fails_to_agree():
    from robcons.scenario import builtin_scenario
    sc = builtin_scenario("linear_weighted")
    traj = integrate(sc.dynamics, sc.fault_set, sc.signals, x0_healthy=sc.x0, horizon=10.0)
    assert traj.monitors.final_spread >= 0.5


def test_grid_counterexample_constant():
    from robcons.scenario import builtin_scenario
    traj = builtin_scenario("grid_counterexample").run()
    assert np.max(np.abs(traj.states - traj.states[0])) <= 1e-9
    assert traj.monitors.final_spread == pytest.approx(1.0)
    assert not traj.monitors.consensus_reached
    assert np.all(traj.states[:, traj.healthy.index(grid_id(2, 3))] == 0.0)


def test_byzantine_demo():
    assert not run_byzantine_demo().monitors.consensus_reached
    assert run_byzantine_demo(overrides=[]).monitors.consensus_reached
    assert run_byzantine_demo(overrides=byzantine_overrides(0.0)).monitors.consensus_reached


def test_byzantine_sign_swap_is_mirror_image():
    base = run_byzantine_demo()
    flipped = run_byzantine_demo(overrides=byzantine_overrides(-2.0), x0_healthy=[-v for v in BYZANTINE_X0])
    assert not flipped.monitors.consensus_reached
    assert np.array_equal(flipped.states, -base.states)


def test_override_validation():
    with pytest.raises(InvalidArgument):
        ByzantineOverride(1, 1, offset=1.0)
    with pytest.raises(InvalidArgument):
        ByzantineOverride(1, 2)


def test_absolute_override_changes_receiver_view():
    centre = grid_id(2, 2)
    ov = [ByzantineOverride(centre, grid_id(2, 3), absolute="5")]
    base = integrate(networks.grid3x3(), {centre}, [FaultSignal.constant(centre, 0.0)],
                     x0_healthy=BYZANTINE_X0, horizon=1.0)
    lied = integrate(networks.grid3x3(), {centre}, [FaultSignal.constant(centre, 0.0)], ov,
                     x0_healthy=BYZANTINE_X0, horizon=1.0)
    assert not np.array_equal(base.states, lied.states)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_last_valid_time():
    def blowup(x, group, target):
        return x[..., target] ** 2 + x[..., list(group)[0]] ** 2
    dyn = NetworkDynamics(2, (InteractionRule(frozenset({1}), 0, Custom(blowup)),))
    with pytest.raises(IntegrationDiverged) as info:
        integrate(dyn, x0_healthy=[1.0, 1.0], horizon=40.0, step=0.01)
    assert 0 < info.value.last_valid_time < 40


def test_bad_inputs():
    with pytest.raises(InvalidArgument):
        integrate(networks.ring5(), x0_healthy=[1.0, 2.0])
    with pytest.raises(InvalidArgument):
        integrate(networks.ring5(), x0_healthy=[0.0] * 5, step=0.0)
    with pytest.raises(InvalidArgument):
        integrate(networks.alltoall5_joint(), {3, 4}, DRIFT[:1], x0_healthy=[1, 2, 3])


def test_step_halving_converges():
    args = dict(dyn=networks.alltoall5_joint(), fault_set={3, 4}, signals=DRIFT, x0_healthy=[35, 10, 5], horizon=5.0)
    coarse = integrate(step=0.01, **args)
    fine = integrate(step=0.005, **args)
    assert np.max(np.abs(coarse.states[-1] - fine.states[-1])) < 1e-4


def test_csv_export(tmp_path):
    traj = integrate(networks.alltoall5_joint(), {3, 4}, DRIFT, x0_healthy=[35, 10, 5], horizon=0.05)
    path = tmp_path / "t.csv"
    text = traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x_0,x_1,x_2,fault_3,fault_4"
    assert len(lines) == 7 and text == path.read_text()
    assert float(lines[1].split(",")[-2]) == 15.0


def test_monitor_counterexample_summary():
    from robcons.scenario import builtin_scenario
    traj = builtin_scenario("grid_counterexample").run()
    m = monitor_envelopes(traj, 1e-8)
    assert m.final_spread == pytest.approx(1.0) and not m.consensus_reached


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=5, max_size=5),
       st.lists(st.floats(0, 5, allow_nan=False), min_size=5, max_size=5))
def test_order_preservation(x, bump):
    # cooperative flows keep componentwise order between two trajectories
    dyn = networks.alltoall5_joint()
    lo = integrate(dyn, x0_healthy=x, horizon=2.0, step=0.02).states
    hi = integrate(dyn, x0_healthy=np.add(x, bump), horizon=2.0, step=0.02).states
    assert np.all(hi >= lo - 1e-9)
