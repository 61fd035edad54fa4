"""Fixed-step RK4 simulation of the healthy agents under fault signals.

Faulty agents are not integrated: their values are substituted from their
signals at every Runge-Kutta stage time.  Byzantine overrides change what a
particular receiver sees of a particular sender, again at every stage.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dynamics import NetworkDynamics, assemble_rhs
from .errors import IntegrationDiverged, InvalidArgument
from .expr import eval_expression, parse_signal, to_text

log = logging.getLogger(__name__)

__all__ = [
    "FaultSignal",
    "ByzantineOverride",
    "MonitorSummary",
    "Trajectory",
    "evaluate_fault_signal",
    "drift_x4",
    "drift_x5",
    "integrate",
    "integrate_batch",
    "monitor_envelopes",
    "monitor_arrays",
    "unbounded_signals",
    "run_byzantine_demo",
    "byzantine_overrides",
]

DEFAULT_STEP = 0.01
DEFAULT_HORIZON = 40.0
DEFAULT_EPSILON = 1e-2

SIGNAL_KINDS = ("constant", "expression", "drift_x4", "drift_x5")


def drift_x4(t):
    t = np.asarray(t, dtype=float)
    return 15 + (np.cos(3 * t) - 1) / 9 + t * np.sin(3 * t) / 3 + np.power(t, 3.0) / 150


def drift_x5(t):
    t = np.asarray(t, dtype=float)
    return 20 + np.sin(2 * t) / 4 + t * (2 * np.power(np.sin(t), 2.0) - 1) / 2


@dataclass(frozen=True)
class FaultSignal:
    """Time evolution broadcast by one faulty agent."""

    agent: int
    kind: str = "constant"
    value: float = 0.0
    text: str | None = None

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise InvalidArgument(f"unknown signal kind {self.kind!r}")
        if self.kind == "expression":
            if self.text is None:
                raise InvalidArgument("expression signal needs text")
            object.__setattr__(self, "_tree", parse_signal(self.text))

    @classmethod
    def constant(cls, agent, value):
        return cls(int(agent), "constant", float(value))

    @classmethod
    def expression(cls, agent, text):
        return cls(int(agent), "expression", 0.0, text)

    @classmethod
    def builtin(cls, agent, name):
        return cls(int(agent), name)

    def describe(self):
        if self.kind == "constant":
            return self.value
        if self.kind == "expression":
            return self.text
        return self.kind


def evaluate_fault_signal(sig: FaultSignal, t):
    """Signal value at ``t`` (scalar or array of times)."""
    if np.any(np.asarray(t) < 0):
        raise InvalidArgument("signals are defined for t >= 0")
    if sig.kind == "constant":
        out = np.full(np.shape(t), sig.value, dtype=float)
    elif sig.kind == "expression":
        out = eval_expression(sig._tree, t)
    elif sig.kind == "drift_x4":
        out = drift_x4(t)
    else:
        out = drift_x5(t)
    return float(out) if np.ndim(t) == 0 else np.asarray(out, dtype=float)


@dataclass(frozen=True)
class ByzantineOverride:
    """Receiver sees the sender's broadcast shifted by ``offset``, or ``absolute(t)`` instead."""

    sender: int
    receiver: int
    offset: float | None = None
    absolute: str | None = None

    def __post_init__(self):
        if self.sender == self.receiver:
            raise InvalidArgument("override sender and receiver must differ")
        if (self.offset is None) == (self.absolute is None):
            raise InvalidArgument("override needs exactly one of offset / absolute")
        if self.absolute is not None:
            object.__setattr__(self, "_tree", parse_signal(self.absolute))

    def seen_value(self, broadcast, t):
        if self.offset is not None:
            return broadcast + self.offset
        return eval_expression(self._tree, t)


@dataclass
class MonitorSummary:
    max_envelope_violation: float
    min_envelope_violation: float
    final_spread: float
    spread_series: np.ndarray
    consensus_reached: bool
    consensus_time: float | None
    final_max: float = math.nan
    final_min: float = math.nan
    tolerance: float = 0.0
    epsilon: float = DEFAULT_EPSILON

    def to_dict(self) -> dict:
        return {
            "max_envelope_violation": self.max_envelope_violation,
            "min_envelope_violation": self.min_envelope_violation,
            "final_spread": self.final_spread,
            "final_max": self.final_max,
            "final_min": self.final_min,
            "consensus_reached": self.consensus_reached,
            "consensus_time": self.consensus_time,
            "tolerance": self.tolerance,
            "epsilon": self.epsilon,
        }


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    fault_values: np.ndarray
    healthy: tuple[int, ...]
    faults: tuple[int, ...]
    monitors: MonitorSummary | None = None
    labels: tuple[str, ...] = field(default=())

    def header(self) -> list[str]:
        return (["t"] + [f"x_{h}" for h in self.healthy]
                + [f"fault_{f}" for f in self.faults])

    def to_csv(self, dest=None) -> str:
        """Write ``t, x_<id>..., fault_<id>...`` rows; returns the text too."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for k, t in enumerate(self.times):
            row = [t, *self.states[k], *self.fault_values[k]]
            writer.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        return text


def monitor_arrays(times, states, tolerance: float, epsilon: float = DEFAULT_EPSILON) -> MonitorSummary:
    states = np.asarray(states, dtype=float)
    if states.shape[0] == 0:
        raise InvalidArgument("empty trajectory")
    top = states.max(axis=1)
    bottom = states.min(axis=1)
    rise = float(np.max(np.diff(top), initial=0.0))
    drop = float(np.max(-np.diff(bottom), initial=0.0))
    spread = top - bottom
    below = spread < epsilon
    # first index from which the spread stays below epsilon
    if below[-1]:
        above = np.flatnonzero(~below)
        start = 0 if above.size == 0 else int(above[-1]) + 1
        reached, when = True, float(times[start])
    else:
        reached, when = False, None
    return MonitorSummary(
        max_envelope_violation=rise if rise > tolerance else 0.0,
        min_envelope_violation=drop if drop > tolerance else 0.0,
        final_spread=float(spread[-1]),
        spread_series=spread,
        consensus_reached=reached,
        consensus_time=when,
        final_max=float(top[-1]),
        final_min=float(bottom[-1]),
        tolerance=tolerance,
        epsilon=epsilon,
    )


def monitor_envelopes(traj: Trajectory, tolerance: float, epsilon: float = DEFAULT_EPSILON) -> MonitorSummary:
    """Envelope and consensus monitors over the healthy agents.

    A violation is the largest one-step rise of the healthy maximum (or fall
    of the minimum) when it exceeds ``tolerance``; otherwise it is 0.
    """
    return monitor_arrays(traj.times, traj.states, tolerance, epsilon)


def unbounded_signals(signals: Iterable[FaultSignal], horizon: float, samples: int = 401,
                      growth: float = 10.0) -> list[int]:
    """Agents whose sampled magnitude late in the horizon dwarfs the early one."""
    t = np.linspace(0.0, horizon, samples)
    flagged = []
    for sig in signals:
        v = np.abs(evaluate_fault_signal(sig, t))
        if not np.all(np.isfinite(v)):
            flagged.append(sig.agent)
            continue
        early = v[: samples // 2].max()
        late = v[-max(1, samples // 10):].max()
        if late > growth * max(early, 1.0):
            flagged.append(sig.agent)
    return flagged


def _steps(horizon, step):
    if not step > 0:
        raise InvalidArgument("step must be positive")
    if not horizon >= step:
        raise InvalidArgument("horizon must be at least one step")
    n = int(round(horizon / step))
    if abs(n * step - horizon) > 1e-9 * max(1.0, horizon):
        raise InvalidArgument("horizon must be an integer multiple of step")
    return n


def _partition(dyn: NetworkDynamics, fault_set: Iterable[int]):
    faults = tuple(sorted(set(int(f) for f in fault_set)))
    for f in faults:
        if not 0 <= f < dyn.n_agents:
            raise InvalidArgument(f"fault agent {f} out of range")
    healthy = tuple(a for a in range(dyn.n_agents) if a not in faults)
    if not healthy:
        raise InvalidArgument("no healthy agents left")
    return healthy, faults


def _signal_table(signals: Sequence[FaultSignal], faults, t_half):
    by_agent = {}
    for s in signals:
        if s.agent in by_agent:
            raise InvalidArgument(f"two signals for agent {s.agent}")
        by_agent[s.agent] = s
    missing = [f for f in faults if f not in by_agent]
    extra = [a for a in by_agent if a not in faults]
    if missing or extra:
        raise InvalidArgument(f"signals must cover the fault set exactly "
                              f"(missing {missing}, not faulty {extra})")
    table = np.empty((len(t_half), len(faults)))
    for c, f in enumerate(faults):
        table[:, c] = evaluate_fault_signal(by_agent[f], t_half)
    return table


def _override_plan(overrides, faults, n, t_half):
    plan = {}
    for ov in overrides:
        if ov.sender not in faults:
            raise InvalidArgument(f"override sender {ov.sender} is not faulty")
        if not 0 <= ov.receiver < n:
            raise InvalidArgument(f"override receiver {ov.receiver} out of range")
        table = None if ov.absolute is None else np.broadcast_to(
            eval_expression(ov._tree, t_half), t_half.shape)
        plan.setdefault(ov.receiver, []).append((ov.sender, ov.offset, table))
    return sorted(plan.items())


def integrate_batch(dyn: NetworkDynamics, fault_set: Iterable[int], fault_tables: np.ndarray,
                    x0_healthy: np.ndarray, horizon: float = DEFAULT_HORIZON,
                    step: float = DEFAULT_STEP, overrides: Sequence[ByzantineOverride] = ()):
    """Integrate a batch of runs at once.

    ``fault_tables`` holds fault values on the half-step grid, shape
    ``(batch, 2*steps + 1, n_faults)`` or without the batch axis (shared).
    ``x0_healthy`` has shape ``(batch, n_healthy)``.  Returns the time grid
    and the full-state array ``(batch, steps + 1, n_agents)``.
    """
    healthy, faults = _partition(dyn, fault_set)
    nsteps = _steps(horizon, step)
    h = float(step)
    t_half = np.arange(2 * nsteps + 1) * (h / 2)
    x0 = np.atleast_2d(np.asarray(x0_healthy, dtype=float))
    batch = x0.shape[0]
    if x0.shape[1] != len(healthy):
        raise InvalidArgument(f"x0 has {x0.shape[1]} entries for {len(healthy)} healthy agents")
    table = np.asarray(fault_tables, dtype=float)
    if table.ndim == 2:
        table = np.broadcast_to(table, (batch,) + table.shape)
    if table.shape != (batch, len(t_half), len(faults)):
        raise InvalidArgument(f"fault table shape {table.shape} does not match the run")

    rhs = assemble_rhs(dyn)
    hidx = np.array(healthy, dtype=int)
    fidx = np.array(faults, dtype=int)
    plan = _override_plan(overrides, set(faults), dyn.n_agents, t_half)

    def deriv(x, k):
        d = rhs(x)
        for receiver, mods in plan:
            seen = x.copy()
            for sender, offset, tab in mods:
                seen[:, sender] = x[:, sender] + offset if tab is None else tab[k]
            d[:, receiver] = rhs(seen)[:, receiver]
        if fidx.size:
            d[:, fidx] = 0.0
        return d

    def with_faults(x, k):
        if fidx.size:
            x[:, fidx] = table[:, k, :]
        return x

    out = np.empty((batch, nsteps + 1, dyn.n_agents))
    x = np.zeros((batch, dyn.n_agents))
    x[:, hidx] = x0
    with_faults(x, 0)
    out[:, 0] = x
    for m in range(nsteps):
        k = 2 * m
        # overflow shows up as a non-finite state and is reported below
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = deriv(x, k)
            k2 = deriv(with_faults(x + (h / 2) * k1, k + 1), k + 1)
            k3 = deriv(with_faults(x + (h / 2) * k2, k + 1), k + 1)
            k4 = deriv(with_faults(x + h * k3, k + 2), k + 2)
            x = with_faults(x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4), k + 2)
        if not np.isfinite(x[:, hidx]).all():
            raise IntegrationDiverged(f"non-finite state after t={m * h:g}", m * h)
        out[:, m + 1] = x
    return np.arange(nsteps + 1) * h, out


def integrate(dyn: NetworkDynamics, fault_set: Iterable[int] = (), signals: Sequence[FaultSignal] = (),
              overrides: Sequence[ByzantineOverride] = (), x0_healthy=None,
              horizon: float = DEFAULT_HORIZON, step: float = DEFAULT_STEP,
              epsilon: float = DEFAULT_EPSILON, tolerance: float | None = None) -> Trajectory:
    """Classical RK4 on the healthy coordinates; monitors are attached."""
    healthy, faults = _partition(dyn, fault_set)
    nsteps = _steps(horizon, step)
    t_half = np.arange(2 * nsteps + 1) * (step / 2)
    table = _signal_table(signals, faults, t_half)
    flagged = unbounded_signals([s for s in signals], horizon)
    if flagged:
        log.warning("fault signals of agents %s grow strongly over the horizon", flagged)
    if x0_healthy is None:
        raise InvalidArgument("x0_healthy is required")
    x0 = np.asarray(x0_healthy, dtype=float)
    if x0.shape != (len(healthy),):
        raise InvalidArgument(f"x0 has shape {x0.shape}, expected ({len(healthy)},)")
    times, full = integrate_batch(dyn, faults, table, x0[None, :], horizon, step, overrides)
    full = full[0]
    states = full[:, list(healthy)]
    fault_values = full[:, list(faults)]
    tol = 1e-6 * step if tolerance is None else tolerance
    return Trajectory(times, states, fault_values, healthy, faults,
                      monitor_arrays(times, states, tol, epsilon), dyn.labels)


# Healthy initial state of the Byzantine grid demo, row-major without (2,2).
BYZANTINE_X0 = (0.5, -0.5, 1.0, 0.8, -0.8, -1.0, 0.5, -0.5)


def byzantine_overrides(offset: float = 2.0):
    from .networks import grid_id
    centre = grid_id(2, 2)
    up = [grid_id(1, 2), grid_id(2, 1)]
    down = [grid_id(3, 2), grid_id(2, 3)]
    return ([ByzantineOverride(centre, r, offset=offset) for r in up]
            + [ByzantineOverride(centre, r, offset=-offset) for r in down])


def run_byzantine_demo(gridnet: NetworkDynamics | None = None,
                       overrides: Sequence[ByzantineOverride] | None = None,
                       x0_healthy=BYZANTINE_X0, horizon: float = DEFAULT_HORIZON,
                       step: float = DEFAULT_STEP, epsilon: float = DEFAULT_EPSILON) -> Trajectory:
    """Grid agent (2,2) sits at 0 but tells (1,2),(2,1) it is at +2 and (3,2),(2,3) it is at -2."""
    from .networks import grid3x3, grid_id
    dyn = grid3x3() if gridnet is None else gridnet
    centre = grid_id(2, 2)
    if overrides is None:
        overrides = byzantine_overrides()
    return integrate(dyn, {centre}, [FaultSignal.constant(centre, 0.0)], overrides,
                     x0_healthy, horizon, step, epsilon)
