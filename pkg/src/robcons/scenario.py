"""Runnable scenarios and their JSON file format.

A scenario file is a JSON object::

    {
      "format": "robcons-scenario",
      "version": 1,
      "name": "joint_drift",
      "network": {"generator": "alltoall5_joint"},
      "faults": ["4", "5"],
      "signals": {"4": "drift_x4", "5": "20 + sin(2*t)/4"},
      "overrides": [{"sender": "(2,2)", "receiver": "(1,2)", "offset": 2.0}],
      "initial": {"1": 35, "2": 10, "3": 5},
      "integration": {"horizon": 40, "step": 0.01, "epsilon": 0.01}
    }

``network`` is either a generator reference or an explicit description with
``n_agents``, optional ``labels``, ``rules`` (``{"group": [ids], "target":
id, "rate": "maxmin" | {"linear": w}}``, 0-based ids) and optional
``aggregators`` (one ``{"kind": ..., "weights": [...], "sat_level": ...}``
per agent).  Agents in ``faults``, ``signals``, ``overrides`` and
``initial`` are referred to by label.  A signal is a number (constant), one
of the built-in names ``drift_x4`` / ``drift_x5``, or any other string,
which is parsed as an expression in ``t``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import (AGGREGATOR_KINDS, Aggregator, InteractionRule, LinearPair, MaxMinJoint,
                       NetworkDynamics)
from .errors import InvalidArgument, ParseError, RobconsError, ScenarioError
from .networks import builtin_network, grid3x3, grid_id
from .simulate import (DEFAULT_EPSILON, DEFAULT_HORIZON, DEFAULT_STEP, ByzantineOverride,
                       FaultSignal, byzantine_overrides, integrate, BYZANTINE_X0)

__all__ = [
    "FORMAT_TAG",
    "FORMAT_VERSION",
    "Scenario",
    "load_scenario",
    "save_scenario",
    "scenario_to_dict",
    "scenario_from_dict",
    "builtin_scenario",
    "BUILTIN_SCENARIOS",
    "LINEAR_WEIGHTS",
]

FORMAT_TAG = "robcons-scenario"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Scenario:
    name: str
    dynamics: NetworkDynamics
    fault_set: frozenset[int]
    signals: tuple[FaultSignal, ...]
    overrides: tuple[ByzantineOverride, ...] = ()
    x0: tuple[float, ...] = ()
    horizon: float = DEFAULT_HORIZON
    step: float = DEFAULT_STEP
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        object.__setattr__(self, "fault_set", frozenset(int(f) for f in self.fault_set))
        object.__setattr__(self, "signals", tuple(sorted(self.signals, key=lambda s: s.agent)))
        object.__setattr__(self, "overrides", tuple(self.overrides))
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        problems = _validate(self)
        if problems:
            raise ScenarioError(problems)

    @property
    def healthy(self) -> tuple[int, ...]:
        return tuple(a for a in range(self.dynamics.n_agents) if a not in self.fault_set)

    def run(self):
        return integrate(self.dynamics, self.fault_set, self.signals, self.overrides,
                         list(self.x0), self.horizon, self.step, self.epsilon)


def _validate(sc: Scenario) -> list[str]:
    problems = []
    n = sc.dynamics.n_agents
    labels = sc.dynamics.labels
    bad = sorted(f for f in sc.fault_set if not 0 <= f < n)
    if bad:
        problems.append(f"fault agents out of range: {bad}")
    if len(sc.fault_set) >= n:
        problems.append("fault set leaves no healthy agent")
    covered = [s.agent for s in sc.signals]
    for f in sorted(sc.fault_set - set(covered)):
        name = labels[f] if 0 <= f < n else str(f)
        problems.append(f"missing signal for fault agent {name}")
    for a in sorted(set(covered) - sc.fault_set):
        name = labels[a] if 0 <= a < n else str(a)
        problems.append(f"signal given for non-faulty agent {name}")
    if len(covered) != len(set(covered)):
        problems.append("more than one signal for the same agent")
    for ov in sc.overrides:
        if ov.sender not in sc.fault_set:
            problems.append(f"override sender {ov.sender} is not faulty")
        if not 0 <= ov.receiver < n:
            problems.append(f"override receiver {ov.receiver} out of range")
    healthy = n - len(sc.fault_set)
    if len(sc.x0) != healthy:
        problems.append(f"initial state has {len(sc.x0)} values for {healthy} healthy agents")
    if not sc.step > 0:
        problems.append("step must be positive")
    if not sc.horizon >= sc.step:
        problems.append("horizon must be at least one step")
    if not sc.epsilon > 0:
        problems.append("epsilon must be positive")
    return problems


def _network_to_dict(dyn: NetworkDynamics) -> dict:
    if dyn.source is not None:
        return {"generator": dyn.source}
    rules = []
    for r in dyn.rules:
        if isinstance(r.rate, MaxMinJoint):
            rate = "maxmin"
        elif isinstance(r.rate, LinearPair):
            rate = {"linear": r.rate.weight}
        else:
            raise ScenarioError([f"rule {sorted(r.group)} -> {r.target} has a rate that cannot be saved"])
        rules.append({"group": sorted(r.group), "target": r.target, "rate": rate})
    aggs = []
    for a in dyn.aggregators:
        entry = {"kind": a.kind}
        if a.weights is not None:
            entry["weights"] = list(a.weights)
        if a.kind == "saturated_sum":
            entry["sat_level"] = a.sat_level
        aggs.append(entry)
    return {"n_agents": dyn.n_agents, "labels": list(dyn.labels), "rules": rules, "aggregators": aggs}


def _network_from_dict(data, problems) -> NetworkDynamics | None:
    if not isinstance(data, dict):
        problems.append("'network' must be an object")
        return None
    try:
        if "generator" in data:
            return builtin_network(data["generator"])
        rules = []
        for k, r in enumerate(data.get("rules", [])):
            rate = r.get("rate", "maxmin")
            if rate == "maxmin":
                kind = MaxMinJoint()
            elif isinstance(rate, dict) and "linear" in rate:
                kind = LinearPair(float(rate["linear"]))
            else:
                problems.append(f"rule {k}: unknown rate {rate!r}")
                continue
            rules.append(InteractionRule(frozenset(r["group"]), r["target"], kind))
        aggs = None
        if "aggregators" in data:
            aggs = []
            for a in data["aggregators"]:
                if a.get("kind") not in AGGREGATOR_KINDS:
                    problems.append(f"unknown aggregator kind {a.get('kind')!r}")
                    return None
                w = a.get("weights")
                aggs.append(Aggregator(a["kind"], None if w is None else tuple(w),
                                       float(a.get("sat_level", 1.0))))
        labels = data.get("labels")
        return NetworkDynamics(int(data["n_agents"]), tuple(rules),
                               None if aggs is None else tuple(aggs),
                               None if labels is None else tuple(labels))
    except (RobconsError, KeyError, TypeError, ValueError) as exc:
        problems.append(f"network: {exc}")
        return None


def _resolve(dyn, token, problems, what):
    if isinstance(token, int) and not isinstance(token, bool):
        if 0 <= token < dyn.n_agents:
            return token
        problems.append(f"{what}: agent id {token} out of range")
        return None
    try:
        return dyn.to_petri_net().agent_id(str(token))
    except InvalidArgument:
        problems.append(f"{what}: unknown agent {token!r}")
        return None


def scenario_to_dict(sc: Scenario) -> dict:
    labels = sc.dynamics.labels
    signals = {}
    for s in sc.signals:
        signals[labels[s.agent]] = s.describe()
    overrides = []
    for ov in sc.overrides:
        entry = {"sender": labels[ov.sender], "receiver": labels[ov.receiver]}
        if ov.offset is not None:
            entry["offset"] = ov.offset
        else:
            entry["absolute"] = ov.absolute
        overrides.append(entry)
    return {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "name": sc.name,
        "network": _network_to_dict(sc.dynamics),
        "faults": [labels[f] for f in sorted(sc.fault_set)],
        "signals": signals,
        "overrides": overrides,
        "initial": {labels[h]: v for h, v in zip(sc.healthy, sc.x0)},
        "integration": {"horizon": sc.horizon, "step": sc.step, "epsilon": sc.epsilon},
    }


def _signal_from(agent, value, problems):
    try:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return FaultSignal.constant(agent, value)
        if isinstance(value, str):
            if value.strip() in ("drift_x4", "drift_x5"):
                return FaultSignal.builtin(agent, value.strip())
            return FaultSignal.expression(agent, value)
        problems.append(f"signal for agent {agent}: unsupported value {value!r}")
    except ParseError as exc:
        problems.append(f"signal for agent {agent}: {exc}")
    return None


def scenario_from_dict(data: dict) -> Scenario:
    problems = []
    if not isinstance(data, dict):
        raise ScenarioError(["scenario document must be a JSON object"])
    if data.get("format") != FORMAT_TAG:
        problems.append(f"format tag must be {FORMAT_TAG!r}")
    if data.get("version") != FORMAT_VERSION:
        raise ScenarioError(problems + [
            f"schema version {data.get('version')!r} not supported (expected {FORMAT_VERSION})"])
    dyn = _network_from_dict(data.get("network"), problems)
    if dyn is None:
        raise ScenarioError(problems or ["missing network"])

    faults = set()
    for tok in data.get("faults", []):
        a = _resolve(dyn, tok, problems, "faults")
        if a is not None:
            faults.add(a)
    signals = []
    for tok, value in (data.get("signals") or {}).items():
        a = _resolve(dyn, tok, problems, "signals")
        if a is not None:
            sig = _signal_from(a, value, problems)
            if sig is not None:
                signals.append(sig)
    overrides = []
    for k, ov in enumerate(data.get("overrides") or []):
        s = _resolve(dyn, ov.get("sender"), problems, f"override {k}")
        r = _resolve(dyn, ov.get("receiver"), problems, f"override {k}")
        if s is None or r is None:
            continue
        try:
            overrides.append(ByzantineOverride(s, r, ov.get("offset"), ov.get("absolute")))
        except RobconsError as exc:
            problems.append(f"override {k}: {exc}")
    initial = data.get("initial", {})
    x0 = []
    if isinstance(initial, list):
        x0 = [float(v) for v in initial]
    else:
        given = {}
        for tok, value in initial.items():
            a = _resolve(dyn, tok, problems, "initial")
            if a is not None:
                given[a] = float(value)
        for h in range(dyn.n_agents):
            if h in faults:
                if h in given:
                    problems.append(f"initial value given for faulty agent {dyn.labels[h]}")
                continue
            if h not in given:
                problems.append(f"missing initial value for agent {dyn.labels[h]}")
            else:
                x0.append(given[h])
    integ = data.get("integration", {})
    kwargs = dict(horizon=float(integ.get("horizon", DEFAULT_HORIZON)),
                  step=float(integ.get("step", DEFAULT_STEP)),
                  epsilon=float(integ.get("epsilon", DEFAULT_EPSILON)))
    try:
        sc = Scenario(str(data.get("name", "unnamed")), dyn, frozenset(faults), tuple(signals),
                      tuple(overrides), tuple(x0), **kwargs)
    except ScenarioError as exc:
        raise ScenarioError(problems + exc.problems) from None
    if problems:
        raise ScenarioError(problems)
    return sc


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}: invalid JSON ({exc})"]) from None
    return scenario_from_dict(data)


# Unit weights cannot separate the healthy agents: every faulty agent pulls
# all of them equally.  Here agent 1 listens mostly to agent 4 and agent 3
# mostly to agent 5, so disagreeing faults drag them apart.
LINEAR_WEIGHTS = {(i, j): 1.0 for i in range(5) for j in range(5) if i != j}
LINEAR_WEIGHTS.update({(0, 3): 3.0, (0, 4): 0.25, (2, 3): 0.25, (2, 4): 3.0})


def _linear_weighted_network():
    rules = tuple(InteractionRule(frozenset({j}), i, LinearPair(w)) for (i, j), w in LINEAR_WEIGHTS.items())
    return NetworkDynamics(5, rules, labels=("1", "2", "3", "4", "5"))


def _drift_faults():
    return (FaultSignal.builtin(3, "drift_x4"), FaultSignal.builtin(4, "drift_x5"))


def _linear_weighted():
    return Scenario("linear_weighted", _linear_weighted_network(), frozenset({3, 4}), _drift_faults(), (), (35, 10, 5))


def _linear_unit():
    return Scenario("linear_unit", builtin_network("linear_alltoall"), frozenset({3, 4}),
                    _drift_faults(), (), (35, 10, 5))


def _joint_drift():
    return Scenario("joint_drift", builtin_network("alltoall5_joint"), frozenset({3, 4}),
                    _drift_faults(), (), (35, 10, 5))


def _grid_counterexample():
    faults = frozenset({grid_id(2, 2), grid_id(3, 3)})
    start = {grid_id(1, 1): 1, grid_id(1, 2): 1, grid_id(3, 1): 1, grid_id(3, 2): 1,
             grid_id(2, 3): 0, grid_id(1, 3): 0.5, grid_id(2, 1): 0.5}
    healthy = [a for a in range(9) if a not in faults]
    return Scenario("grid_counterexample", grid3x3(), faults,
                    tuple(FaultSignal.constant(f, 0.0) for f in sorted(faults)), (),
                    tuple(start[h] for h in healthy))


def _grid_byzantine():
    centre = grid_id(2, 2)
    return Scenario("grid_byzantine", grid3x3(), frozenset({centre}), (FaultSignal.constant(centre, 0.0),),
                    tuple(byzantine_overrides()), BYZANTINE_X0)


def _grid_honest():
    sc = _grid_byzantine()
    return Scenario("grid_honest", sc.dynamics, sc.fault_set, sc.signals, (), sc.x0)


BUILTIN_SCENARIOS = {
    "linear_weighted": _linear_weighted,
    "linear_unit": _linear_unit,
    "joint_drift": _joint_drift,
    "grid_byzantine": _grid_byzantine,
    "grid_honest": _grid_honest,
    "grid_counterexample": _grid_counterexample,
}


def builtin_scenario(name: str) -> Scenario:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise InvalidArgument(f"unknown scenario {name!r}; known: {', '.join(BUILTIN_SCENARIOS)}") from None
