"""Interaction rates, per-agent aggregators and the assembled vector field.

An agent's derivative is ``F_i(f_1(x), ..., f_k(x))`` where each ``f`` is
the rate of one minimal influence ``J -> i`` and ``F_i`` is the agent's
aggregator.  Vector fields produced here accept states with any number of
leading batch axes: ``x.shape == (..., n_agents)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import InvalidArgument
from .petri import PetriNet, Transition

__all__ = [
    "MaxMinJoint",
    "LinearPair",
    "ArcpImplicit",
    "Custom",
    "InteractionRule",
    "Aggregator",
    "NetworkDynamics",
    "VectorField",
    "InfluenceProbeResult",
    "CooperativityResult",
    "joint_rate",
    "linear_rate",
    "aggregate",
    "assemble_rhs",
    "probe_joint_influence",
    "probe_cooperativity",
]


@dataclass(frozen=True)
class MaxMinJoint:
    """``max_j min(x_j - x_i, 0) + min_j max(x_j - x_i, 0)`` over the group."""


@dataclass(frozen=True)
class LinearPair:
    weight: float

    def __post_init__(self):
        if not self.weight > 0:
            raise InvalidArgument(f"linear weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class ArcpImplicit:
    """Topology-only marker: the rate lives in a whole-network implicit field."""


@dataclass(frozen=True)
class Custom:
    """User rate ``func(x, group, target)``; ``x`` has shape ``(..., n)``.

    Assumed Lipschitz and non-decreasing in every non-target coordinate;
    neither property is checked here (use :func:`probe_cooperativity`).
    """

    func: Callable
    name: str = "custom"


RateKind = Union[MaxMinJoint, LinearPair, ArcpImplicit, Custom]


@dataclass(frozen=True)
class InteractionRule:
    group: frozenset[int]
    target: int
    rate: RateKind = MaxMinJoint()

    def __post_init__(self):
        object.__setattr__(self, "group", frozenset(int(g) for g in self.group))
        object.__setattr__(self, "target", int(self.target))
        if not self.group:
            raise InvalidArgument("interaction group must be non-empty")
        if self.target in self.group:
            raise InvalidArgument(f"target {self.target} belongs to its own group")
        if isinstance(self.rate, LinearPair) and len(self.group) != 1:
            raise InvalidArgument("linear pair rules need a single-agent group")

    def sort_key(self):
        return (self.target, len(self.group), tuple(sorted(self.group)))


def joint_rate(group: Iterable[int], target: int, x) -> float:
    group = sorted(set(group))
    if not group:
        raise InvalidArgument("group must be non-empty")
    if target in group:
        raise InvalidArgument("target must not belong to the group")
    x = np.asarray(x, dtype=float)
    d = x[group] - x[target]
    return float(np.max(np.minimum(d, 0.0)) + np.min(np.maximum(d, 0.0)))


def linear_rate(weight: float, source: int, target: int, x) -> float:
    if not weight > 0:
        raise InvalidArgument("weight must be positive")
    x = np.asarray(x, dtype=float)
    return float(weight * (x[source] - x[target]))


AGGREGATOR_KINDS = ("weighted_sum", "min_plus_max", "saturated_sum", "cubed_sum")


@dataclass(frozen=True)
class Aggregator:
    """Combines an agent's incoming rates; ``weights=None`` means all ones."""

    kind: str = "weighted_sum"
    weights: tuple[float, ...] | None = None
    sat_level: float = 1.0

    def __post_init__(self):
        if self.kind not in AGGREGATOR_KINDS:
            raise InvalidArgument(f"unknown aggregator kind {self.kind!r}")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if not all(v > 0 for v in w):
                raise InvalidArgument("aggregator weights must be positive")
            if self.kind == "min_plus_max":
                raise InvalidArgument("min_plus_max takes no weights")
            object.__setattr__(self, "weights", w)
        if not self.sat_level > 0:
            raise InvalidArgument("saturation level must be positive")

    @classmethod
    def weighted_sum(cls, weights=None):
        return cls("weighted_sum", None if weights is None else tuple(weights))

    @classmethod
    def min_plus_max(cls):
        return cls("min_plus_max")

    @classmethod
    def saturated_sum(cls, weights=None, sat_level=1.0):
        return cls("saturated_sum", None if weights is None else tuple(weights), sat_level)

    @classmethod
    def cubed_sum(cls, weights=None):
        return cls("cubed_sum", None if weights is None else tuple(weights))

    def weight_vector(self, arity: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(arity)
        if len(self.weights) != arity:
            raise InvalidArgument(
                f"aggregator has {len(self.weights)} weights but receives {arity} rates")
        return np.asarray(self.weights)


def aggregate(agg: Aggregator, rates) -> float | np.ndarray:
    """Apply ``agg`` along the last axis of ``rates``."""
    rates = np.asarray(rates, dtype=float)
    arity = rates.shape[-1]
    if arity == 0:
        raise InvalidArgument("aggregator needs at least one rate")
    if agg.kind == "min_plus_max":
        out = rates.min(axis=-1) + rates.max(axis=-1)
    else:
        w = agg.weight_vector(arity)
        if agg.kind == "saturated_sum":
            rates = np.clip(rates, -agg.sat_level, agg.sat_level)
        out = rates @ w
        if agg.kind == "cubed_sum":
            out = out ** 3
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class NetworkDynamics:
    """Agents, their minimal-influence rules and one aggregator per agent.

    ``implicit_rhs`` replaces rule-by-rule assembly for networks whose rates
    are not separable per rule (rules then carry :class:`ArcpImplicit` and
    only describe the topology).  ``source`` records the generator string
    the network came from, if any.
    """

    n_agents: int
    rules: tuple[InteractionRule, ...]
    aggregators: tuple[Aggregator, ...] | None = None
    labels: tuple[str, ...] | None = None
    implicit_rhs: Callable | None = None
    source: str | None = None

    def __post_init__(self):
        n = int(self.n_agents)
        if n < 1:
            raise InvalidArgument("need at least one agent")
        rules = tuple(sorted(self.rules, key=InteractionRule.sort_key))
        seen = set()
        for r in rules:
            for a in (*r.group, r.target):
                if not 0 <= a < n:
                    raise InvalidArgument(f"agent id {a} out of range [0, {n})")
            if (r.group, r.target) in seen:
                raise InvalidArgument(f"duplicate rule {sorted(r.group)} -> {r.target}")
            seen.add((r.group, r.target))
        implicit = [isinstance(r.rate, ArcpImplicit) for r in rules]
        if any(implicit):
            if not all(implicit) or self.implicit_rhs is None:
                raise InvalidArgument("implicit-rate rules need an implicit_rhs on every rule")
        aggs = self.aggregators
        if aggs is None:
            aggs = tuple(Aggregator() for _ in range(n))
        aggs = tuple(aggs)
        if len(aggs) != n:
            raise InvalidArgument("need exactly one aggregator per agent")
        counts = [0] * n
        for r in rules:
            counts[r.target] += 1
        for i, agg in enumerate(aggs):
            if agg.weights is not None and len(agg.weights) != counts[i]:
                raise InvalidArgument(
                    f"agent {i}: {len(agg.weights)} aggregator weights for {counts[i]} rules")
        labels = tuple(str(i) for i in range(n)) if self.labels is None else tuple(self.labels)
        if len(labels) != n or len(set(labels)) != n:
            raise InvalidArgument("labels must be unique and one per agent")
        object.__setattr__(self, "n_agents", n)
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "aggregators", aggs)
        object.__setattr__(self, "labels", labels)

    def __eq__(self, other):
        if not isinstance(other, NetworkDynamics):
            return NotImplemented
        return (self.n_agents, self.rules, self.aggregators, self.labels, self.source,
                self.implicit_rhs) == (other.n_agents, other.rules, other.aggregators,
                                       other.labels, other.source, other.implicit_rhs)

    __hash__ = None

    def rules_into(self, agent: int) -> list[InteractionRule]:
        return [r for r in self.rules if r.target == agent]

    def to_petri_net(self) -> PetriNet:
        return PetriNet(self.n_agents,
                        tuple(Transition(r.group, r.target) for r in self.rules),
                        self.labels)

    @property
    def is_implicit(self) -> bool:
        return self.implicit_rhs is not None


class VectorField:
    """Callable ``x -> dx/dt`` for a :class:`NetworkDynamics`."""

    def __init__(self, dyn: NetworkDynamics):
        self.dyn = dyn
        self.n = dyn.n_agents
        if dyn.is_implicit:
            return
        rules = dyn.rules
        self.n_rules = len(rules)
        joint = [k for k, r in enumerate(rules) if isinstance(r.rate, MaxMinJoint)]
        self._joint_idx = np.array(joint, dtype=int)
        if joint:
            gmax = max(len(rules[k].group) for k in joint)
            groups = np.zeros((len(joint), gmax), dtype=int)
            valid = np.zeros((len(joint), gmax), dtype=bool)
            for row, k in enumerate(joint):
                members = sorted(rules[k].group)
                groups[row, :len(members)] = members
                groups[row, len(members):] = members[0]
                valid[row, :len(members)] = True
            self._joint_groups = groups
            self._joint_valid = valid
            self._joint_targets = np.array([rules[k].target for k in joint], dtype=int)
        linear = [k for k, r in enumerate(rules) if isinstance(r.rate, LinearPair)]
        self._lin_idx = np.array(linear, dtype=int)
        self._lin_src = np.array([next(iter(rules[k].group)) for k in linear], dtype=int)
        self._lin_tgt = np.array([rules[k].target for k in linear], dtype=int)
        self._lin_w = np.array([rules[k].rate.weight for k in linear], dtype=float)
        self._custom = [(k, rules[k]) for k, r in enumerate(rules) if isinstance(r.rate, Custom)]

        n, R = self.n, self.n_rules
        weights = np.zeros((R, n))
        sat = np.full(R, np.inf)
        self._cubed = np.zeros(n, dtype=bool)
        self._mpm_agents = []
        for i, agg in enumerate(dyn.aggregators):
            ks = [k for k, r in enumerate(rules) if r.target == i]
            if not ks:
                continue
            if agg.kind == "min_plus_max":
                self._mpm_agents.append((i, np.array(ks, dtype=int)))
                continue
            weights[ks, i] = agg.weight_vector(len(ks))
            if agg.kind == "saturated_sum":
                sat[ks] = agg.sat_level
            elif agg.kind == "cubed_sum":
                self._cubed[i] = True
        self._weights = weights
        self._sat = sat
        self._any_sat = bool(np.isfinite(sat).any())

    def rates(self, x: np.ndarray) -> np.ndarray:
        """All rule rates in canonical rule order, shape ``(..., n_rules)``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (self.n_rules,))
        if self._joint_idx.size:
            d = x[..., self._joint_groups] - x[..., self._joint_targets][..., None]
            lo = np.where(self._joint_valid, np.minimum(d, 0.0), -np.inf).max(axis=-1)
            hi = np.where(self._joint_valid, np.maximum(d, 0.0), np.inf).min(axis=-1)
            out[..., self._joint_idx] = lo + hi
        if self._lin_idx.size:
            out[..., self._lin_idx] = self._lin_w * (x[..., self._lin_src] - x[..., self._lin_tgt])
        for k, rule in self._custom:
            out[..., k] = rule.rate.func(x, rule.group, rule.target)
        return out

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise InvalidArgument(f"state has {x.shape[-1]} entries, expected {self.n}")
        if self.dyn.is_implicit:
            return np.asarray(self.dyn.implicit_rhs(x), dtype=float)
        r = self.rates(x)
        if self._any_sat:
            r = np.clip(r, -self._sat, self._sat)
        out = r @ self._weights
        if self._cubed.any():
            out[..., self._cubed] = out[..., self._cubed] ** 3
        for i, ks in self._mpm_agents:
            sub = r[..., ks]
            out[..., i] = sub.min(axis=-1) + sub.max(axis=-1)
        return out


def assemble_rhs(dyn: NetworkDynamics) -> VectorField:
    return VectorField(dyn)


@dataclass
class InfluenceProbeResult:
    holds: bool
    minimal: bool
    margin: float
    violations: list[tuple[float, float, float]] = field(default_factory=list)
    min_ratio: float = 0.0


def _probe_grid(rhs: VectorField, n: int, group: Sequence[int], target: int, grid: np.ndarray):
    xi, xj = np.meshgrid(grid, grid, indexing="ij")
    xi, xj = xi.ravel(), xj.ravel()
    states = np.repeat(xj[:, None], n, axis=1)
    states[:, list(group)] = xi[:, None]
    f = rhs(states)[:, target]
    off = xi != xj
    signed = np.sign(xi - xj) * f
    return xi[off], xj[off], f[off], signed[off]


def probe_joint_influence(dyn: NetworkDynamics, group: Iterable[int], target: int,
                          interval=(-10.0, 10.0), grid_points: int = 41,
                          max_violations: int = 25) -> InfluenceProbeResult:
    """Grid check that ``group`` jointly influences ``target``.

    States follow the template where the group sits at a common value and
    every other agent, the target included, sits at the target's value.
    The influence holds when the target's derivative points strictly toward
    the group at every off-diagonal grid point.
    """
    group = sorted(set(int(g) for g in group))
    lo, hi = interval
    if grid_points < 3:
        raise InvalidArgument("grid_points must be at least 3")
    if not lo < hi:
        raise InvalidArgument("interval must satisfy lo < hi")
    if not group or target in group:
        raise InvalidArgument("group must be non-empty and exclude the target")
    rhs = assemble_rhs(dyn)
    grid = np.linspace(lo, hi, grid_points)

    def holds_for(g):
        _, _, _, signed = _probe_grid(rhs, dyn.n_agents, g, target, grid)
        return bool((signed > 0).all())

    xi, xj, f, signed = _probe_grid(rhs, dyn.n_agents, group, target, grid)
    bad = np.flatnonzero(signed <= 0)
    holds = bad.size == 0
    violations = [(float(xi[k]), float(xj[k]), float(f[k])) for k in bad[:max_violations]]
    margin = float(signed.min()) if holds else 0.0
    ratio = float((signed / np.abs(xi - xj)).min()) if holds else 0.0
    minimal = holds and not any(
        holds_for(sub)
        for r in range(1, len(group))
        for sub in itertools.combinations(group, r))
    return InfluenceProbeResult(holds, minimal, margin, violations, ratio)


@dataclass
class CooperativityResult:
    ok: bool
    counterexample: dict | None = None

    def __bool__(self):
        return self.ok


def probe_cooperativity(dyn: NetworkDynamics, samples: int = 100, interval=(-10.0, 10.0),
                        seed: int = 0, rel_step: float = 1e-5, tol: float = 1e-9) -> CooperativityResult:
    """Finite-difference check that raising one agent never lowers another's rate.

    A violation is reported only if it reproduces at one of three jittered
    nearby states, which filters out isolated rounding artefacts.
    """
    if samples < 1:
        raise InvalidArgument("samples must be >= 1")
    rhs = assemble_rhs(dyn)
    n = dyn.n_agents
    rng = np.random.default_rng(seed)
    lo, hi = interval

    def worst(x):
        """Most negative off-diagonal sensitivity at each state in ``x``."""
        base = rhs(x)
        steps = rel_step * np.maximum(1.0, np.abs(x))
        res = np.full((x.shape[0], n, n), np.inf)
        for k in range(n):
            bumped = x.copy()
            bumped[:, k] += steps[:, k]
            diff = rhs(bumped) - base
            diff[:, k] = np.inf
            res[:, k, :] = diff
        return res

    xs = rng.uniform(lo, hi, size=(samples, n))
    diffs = worst(xs)
    for s, k, i in zip(*np.nonzero(diffs < -tol)):
        jitter = xs[s] + rng.normal(scale=1e-3, size=(3, n))
        again = worst(jitter)[:, k, i]
        if (again < -tol).any():
            return CooperativityResult(False, {
                "state": xs[s].tolist(), "raised_agent": int(k), "affected_agent": int(i),
                "change": float(diffs[s, k, i])})
    return CooperativityResult(True)
