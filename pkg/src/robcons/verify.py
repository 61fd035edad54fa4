"""Randomised invariant suites shared by ``robcons verify`` and the tests.

Every suite is a pure function of its seed and returns a JSON-ready dict
with at least ``suite``, ``seed``, ``passed`` and ``cases``.
"""
from __future__ import annotations

import itertools

import numpy as np

from . import networks
from .dynamics import Aggregator, InteractionRule, MaxMinJoint, NetworkDynamics
from .petri import PetriNet, Transition, check_robust_consensuability, exhaustive_consensuability_oracle
from .simulate import DEFAULT_STEP, integrate_batch, monitor_arrays, drift_x4, drift_x5

__all__ = [
    "DEFAULT_SEED",
    "SUITES",
    "random_net",
    "random_joint_dynamics",
    "random_signal_tables",
    "suite_petri_oracle",
    "suite_envelopes",
    "suite_agreement",
    "run_suite",
]

DEFAULT_SEED = 20240917


def random_net(rng: np.random.Generator, n_places: int, max_in: int = 3, max_group: int = 3) -> PetriNet:
    """Random net whose transitions into a place never nest (so all are minimal)."""
    transitions = []
    for target in range(n_places):
        others = [a for a in range(n_places) if a != target]
        groups = []
        for _ in range(int(rng.integers(0, max_in + 1))):
            size = int(rng.integers(1, min(max_group, len(others)) + 1))
            g = frozenset(int(a) for a in rng.choice(others, size=size, replace=False))
            if any(g <= h or h <= g for h in groups):
                continue
            groups.append(g)
        transitions.extend(Transition(g, target) for g in groups)
    return PetriNet(n_places, tuple(transitions))


def random_joint_dynamics(rng: np.random.Generator, net: PetriNet) -> NetworkDynamics:
    """Max-min joint rates on ``net`` with a random non-cubic aggregator per agent."""
    rules = tuple(InteractionRule(t.inputs, t.output, MaxMinJoint()) for t in net.transitions)
    counts = [sum(1 for t in net.transitions if t.output == i) for i in range(net.n_agents)]
    aggs = []
    for i in range(net.n_agents):
        kind = rng.choice(["weighted_sum", "min_plus_max", "saturated_sum"])
        weights = tuple(float(w) for w in rng.uniform(0.5, 2.0, counts[i])) if counts[i] else None
        if kind == "weighted_sum":
            aggs.append(Aggregator.weighted_sum(weights))
        elif kind == "saturated_sum":
            aggs.append(Aggregator.saturated_sum(weights, float(rng.uniform(0.5, 5.0))))
        else:
            aggs.append(Aggregator.min_plus_max())
    return NetworkDynamics(net.n_agents, rules, tuple(aggs), net.labels)


def random_signal_tables(rng: np.random.Generator, batch: int, n_faults: int,
                         horizon: float, step: float, bound: float = 10.0) -> np.ndarray:
    """Bounded fault signals ``c + a*sin(w t + phi)`` sampled on the half-step grid."""
    nsteps = int(round(horizon / step))
    t = np.arange(2 * nsteps + 1) * (step / 2)
    c = rng.uniform(-bound, bound, (batch, 1, n_faults))
    a = rng.uniform(0.0, bound / 2, (batch, 1, n_faults))
    w = rng.uniform(0.2, 3.0, (batch, 1, n_faults))
    phi = rng.uniform(0, 2 * np.pi, (batch, 1, n_faults))
    return c + a * np.sin(w * t[None, :, None] + phi)


def _oracle_cases(seed, n_random, max_places, max_faults):
    yield "chain3", networks.chain3().to_petri_net()
    yield "ring5", networks.ring5().to_petri_net()
    yield "grid3x3", networks.grid3x3().to_petri_net()
    yield "alltoall5_joint", networks.alltoall5_joint().to_petri_net()
    yield "arcp:n=5,trim=1", networks.arcp(5, 1).to_petri_net()
    rng = np.random.default_rng(seed)
    for k in range(n_random):
        n = int(rng.integers(2, max_places + 1))
        yield f"random-{k}", random_net(rng, n)


def suite_petri_oracle(seed: int = DEFAULT_SEED, n_random: int = 200, max_places: int = 12,
                       max_faults: int = 2) -> dict:
    """Checker against exhaustive oracle on named and random nets."""
    disagreements = []
    cases = robust = 0
    for name, net in _oracle_cases(seed, n_random, max_places, max_faults):
        for k in range(min(max_faults, net.n_agents - 1) + 1):
            for faults in itertools.combinations(range(net.n_agents), k):
                fast = check_robust_consensuability(net, faults).verdict
                slow = exhaustive_consensuability_oracle(net, faults)
                cases += 1
                robust += fast
                if fast != slow:
                    disagreements.append({"net": name, "faults": list(faults),
                                          "checker": fast, "oracle": slow})
    return {"suite": "petri-oracle", "seed": seed, "passed": not disagreements,
            "cases": cases, "robust_cases": robust, "disagreements": disagreements,
            "nets": n_random + 5}


def _healthy_siphon_scenarios(rng, count, max_places=8):
    made = 0
    while made < count:
        n = int(rng.integers(3, max_places + 1))
        net = random_net(rng, n)
        if not net.transitions:
            continue
        for _ in range(10):
            k = int(rng.integers(1, min(2, n - 1) + 1))
            faults = tuple(sorted(int(a) for a in rng.choice(n, size=k, replace=False)))
            healthy = net.all_mask & ~net.mask(faults)
            if net.is_controlled_mask(healthy):
                break
        else:
            continue
        made += 1
        yield net, faults


def suite_envelopes(seed: int = DEFAULT_SEED, scenarios: int = 50, runs_per_scenario: int = 4,
                    horizon: float = 10.0, step: float = DEFAULT_STEP) -> dict:
    """Healthy max never rises and min never falls when the healthy set is a siphon."""
    rng = np.random.default_rng(seed)
    tol = 1e-6 * step
    failures = []
    worst = 0.0
    for idx, (net, faults) in enumerate(_healthy_siphon_scenarios(rng, scenarios)):
        dyn = random_joint_dynamics(rng, net)
        nh = net.n_agents - len(faults)
        tables = random_signal_tables(rng, runs_per_scenario, len(faults), horizon, step)
        x0 = rng.uniform(-10, 10, (runs_per_scenario, nh))
        times, full = integrate_batch(dyn, faults, tables, x0, horizon, step)
        healthy = [a for a in range(net.n_agents) if a not in faults]
        for r in range(runs_per_scenario):
            m = monitor_arrays(times, full[r][:, healthy], tol)
            worst = max(worst, m.max_envelope_violation, m.min_envelope_violation)
            if m.max_envelope_violation or m.min_envelope_violation:
                failures.append({"scenario": idx, "run": r, "faults": list(faults),
                                 "max_rise": m.max_envelope_violation,
                                 "min_drop": m.min_envelope_violation})
    return {"suite": "envelopes", "seed": seed, "passed": not failures,
            "cases": scenarios * runs_per_scenario, "tolerance": tol,
            "worst_violation": worst, "failures": failures}


def agreement_scenarios():
    """(name, dynamics, fault set) for every built-in case the checker calls robust."""
    nets = [
        ("chain3", networks.chain3(), 0),
        ("ring5", networks.ring5(), 1),
        ("alltoall5_joint", networks.alltoall5_joint(), 2),
        ("grid3x3", networks.grid3x3(), 2),
        ("arcp:n=5,trim=1", networks.arcp(5, 1), 2),
    ]
    for name, dyn, max_faults in nets:
        net = dyn.to_petri_net()
        for k in range(max_faults + 1):
            for faults in itertools.combinations(range(dyn.n_agents), k):
                if check_robust_consensuability(net, faults).verdict:
                    yield name, dyn, faults


def suite_agreement(seed: int = DEFAULT_SEED, trials: int = 20, horizon: float = 40.0,
                    step: float = DEFAULT_STEP, epsilon: float = 1e-2, random_nets: int = 10) -> dict:
    """Every checker-robust scenario reaches healthy consensus in simulation."""
    rng = np.random.default_rng(seed)
    cases = list(agreement_scenarios())
    made = 0
    while made < random_nets:
        net = random_net(rng, int(rng.integers(3, 8)))
        k = int(rng.integers(0, 2))
        faults = tuple(sorted(int(a) for a in rng.choice(net.n_agents, size=k, replace=False)))
        if check_robust_consensuability(net, faults).verdict:
            cases.append((f"random-{made}", random_joint_dynamics(rng, net), faults))
            made += 1
    failures = []
    results = []
    for name, dyn, faults in cases:
        nh = dyn.n_agents - len(faults)
        tables = random_signal_tables(rng, trials, len(faults), horizon, step)
        x0 = rng.uniform(-10, 10, (trials, nh))
        times, full = integrate_batch(dyn, faults, tables, x0, horizon, step)
        healthy = [a for a in range(dyn.n_agents) if a not in faults]
        spreads = np.ptp(full[:, -1, healthy], axis=1)
        worst = float(spreads.max())
        labels = [dyn.labels[f] for f in faults]
        results.append({"network": name, "faults": labels, "worst_final_spread": worst})
        if worst >= epsilon:
            failures.append({"network": name, "faults": labels, "worst_final_spread": worst})
    return {"suite": "agreement", "seed": seed, "passed": not failures,
            "cases": len(cases) * trials, "scenarios": results, "failures": failures,
            "epsilon": epsilon}


def suite_examples(seed: int = DEFAULT_SEED) -> dict:
    """Exact structural facts of the worked examples."""
    from .networks import grid_id
    grid = networks.grid3x3().to_petri_net()
    checks = {}
    checks["grid_no_faults"] = check_robust_consensuability(grid, ()).verdict
    checks["grid_single_faults_robust"] = sum(
        check_robust_consensuability(grid, (a,)).verdict for a in range(9)) == 9
    checks["grid_pairs_fragile"] = sum(
        check_robust_consensuability(grid, f).verdict
        for f in itertools.combinations(range(9), 2)) == 0
    rep = check_robust_consensuability(grid, (grid_id(2, 2), grid_id(3, 3)))
    checks["grid_diagonal_witness"] = rep.witness is not None and rep.witness[0].places == {grid_id(2, 3)}
    a5 = networks.alltoall5_joint().to_petri_net()
    checks["alltoall5_two_faults"] = all(
        check_robust_consensuability(a5, f).verdict for f in itertools.combinations(range(5), 2))
    t = np.linspace(0, 1, 3)
    checks["fault_signals_start"] = bool(drift_x4(t)[0] == 15 and drift_x5(t)[0] == 20)
    return {"suite": "examples", "seed": seed, "passed": all(checks.values()),
            "cases": len(checks), "checks": checks}


SUITES = {
    "petri-oracle": suite_petri_oracle,
    "envelopes": suite_envelopes,
    "agreement": suite_agreement,
    "examples": suite_examples,
}


def run_suite(name: str, seed: int = DEFAULT_SEED) -> list[dict]:
    names = list(SUITES) if name == "all" else [name]
    return [SUITES[n](seed=seed) for n in names]
