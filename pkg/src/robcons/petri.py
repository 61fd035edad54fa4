"""Petri-net view of a joint-agent interaction topology.

Places are agents, and every minimal joint influence ``J -> i`` is a
transition with input places ``J`` and the single output place ``i``.  All
set computations run on integer bitmasks internally; the public functions
accept and return ordinary Python sets.

Terminology used throughout:

* ``I(S)``: transitions whose output lies in ``S`` (input transitions of S).
* ``O(S)``: transitions with at least one input in ``S``.
* ``S`` is a siphon when ``I(S) ⊆ O(S)``, and an F-controlled siphon when
  ``I(S) ⊆ O(S) ∪ O(F)``.  ``F`` is then called a switch of ``S``.
"""
from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidArgument, UnsupportedSize

__all__ = [
    "Transition",
    "PetriNet",
    "ControlledSiphonCertificate",
    "ConsensuabilityReport",
    "input_transitions",
    "output_transitions",
    "is_siphon",
    "is_controlled_siphon",
    "minimal_switches",
    "minimal_hitting_sets",
    "minimal_siphons",
    "enumerate_minimal_controlled_siphons",
    "check_robust_consensuability",
    "exhaustive_consensuability_oracle",
    "parse_net",
    "format_net",
]

ORACLE_MAX_PLACES = 16


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _to_set(mask: int) -> frozenset[int]:
    return frozenset(_bits(mask))


@dataclass(frozen=True)
class Transition:
    """One minimal influence: the group ``inputs`` drives agent ``output``."""

    inputs: frozenset[int]
    output: int

    def __post_init__(self):
        object.__setattr__(self, "inputs", frozenset(int(i) for i in self.inputs))
        object.__setattr__(self, "output", int(self.output))
        if not self.inputs:
            raise InvalidArgument("transition needs a non-empty input set")
        if self.output in self.inputs:
            raise InvalidArgument(f"transition output {self.output} is also one of its inputs")

    def sort_key(self):
        return (self.output, len(self.inputs), tuple(sorted(self.inputs)))

    def __repr__(self):
        return f"Transition({sorted(self.inputs)} -> {self.output})"


@dataclass(frozen=True, eq=False)
class PetriNet:
    n_agents: int
    transitions: tuple[Transition, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        n = int(self.n_agents)
        if n < 1:
            raise InvalidArgument("a net needs at least one place")
        trans = tuple(sorted(self.transitions, key=Transition.sort_key))
        seen = set()
        for t in trans:
            for p in (*t.inputs, t.output):
                if not 0 <= p < n:
                    raise InvalidArgument(f"agent id {p} out of range [0, {n})")
            key = (t.inputs, t.output)
            if key in seen:
                raise InvalidArgument(f"duplicate transition {t!r}")
            seen.add(key)
        labels = tuple(str(i) for i in range(n)) if self.labels is None else tuple(self.labels)
        if len(labels) != n or len(set(labels)) != n:
            raise InvalidArgument("labels must be unique and one per agent")
        object.__setattr__(self, "n_agents", n)
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "labels", labels)

        in_masks = [sum(1 << p for p in t.inputs) for t in trans]
        into = [0] * n      # bitmask over transitions whose output is p
        out_of = [0] * n    # bitmask over transitions having p as an input
        incoming = [[] for _ in range(n)]
        for k, t in enumerate(trans):
            into[t.output] |= 1 << k
            incoming[t.output].append(in_masks[k])
            for p in t.inputs:
                out_of[p] |= 1 << k
        object.__setattr__(self, "_in_masks", in_masks)
        object.__setattr__(self, "_into", into)
        object.__setattr__(self, "_out_of", out_of)
        object.__setattr__(self, "_incoming", [tuple(v) for v in incoming])

    def __eq__(self, other):
        if not isinstance(other, PetriNet):
            return NotImplemented
        return (self.n_agents, self.transitions, self.labels) == (
            other.n_agents, other.transitions, other.labels)

    def __hash__(self):
        return hash((self.n_agents, self.transitions, self.labels))

    @property
    def all_mask(self) -> int:
        return (1 << self.n_agents) - 1

    def mask(self, agents: Iterable[int]) -> int:
        m = 0
        for a in agents:
            if isinstance(a, bool) or not isinstance(a, (int, np.integer)):
                raise InvalidArgument(f"agent id must be an integer, got {a!r}")
            if not 0 <= a < self.n_agents:
                raise InvalidArgument(f"agent id {a} out of range [0, {self.n_agents})")
            m |= 1 << int(a)
        return m

    def transitions_of(self, tmask: int) -> frozenset[Transition]:
        return frozenset(self.transitions[k] for k in _bits(tmask))

    def inputs_tmask(self, smask: int) -> int:
        m = 0
        for p in _bits(smask):
            m |= self._into[p]
        return m

    def outputs_tmask(self, smask: int) -> int:
        m = 0
        for p in _bits(smask):
            m |= self._out_of[p]
        return m

    def is_controlled_mask(self, smask: int, fmask: int = 0) -> bool:
        covered = smask | fmask
        for p in _bits(smask):
            for im in self._incoming[p]:
                if not im & covered:
                    return False
        return True

    def label_set(self, agents: Iterable[int]) -> list[str]:
        return [self.labels[a] for a in sorted(agents)]

    def agent_id(self, token: str) -> int:
        """Resolve a label (or, failing that, a plain 0-based index)."""
        token = token.strip()
        try:
            return self.labels.index(token)
        except ValueError:
            pass
        compact = token.replace(" ", "")
        for k, lab in enumerate(self.labels):
            if lab.replace(" ", "") == compact:
                return k
        raise InvalidArgument(f"unknown agent {token!r}")


def input_transitions(net: PetriNet, S: Iterable[int]) -> frozenset[Transition]:
    return net.transitions_of(net.inputs_tmask(net.mask(S)))


def output_transitions(net: PetriNet, S: Iterable[int]) -> frozenset[Transition]:
    return net.transitions_of(net.outputs_tmask(net.mask(S)))


def is_siphon(net: PetriNet, S: Iterable[int]) -> bool:
    smask = net.mask(S)
    if not smask:
        raise InvalidArgument("siphons are non-empty")
    return net.is_controlled_mask(smask)


def is_controlled_siphon(net: PetriNet, S: Iterable[int], switch: Iterable[int] = ()) -> bool:
    smask, fmask = net.mask(S), net.mask(switch)
    if not smask:
        raise InvalidArgument("controlled siphons are non-empty")
    if smask & fmask:
        raise InvalidArgument("place set and switch overlap")
    return net.is_controlled_mask(smask, fmask)


def minimal_hitting_sets(family: Sequence[int]) -> list[int]:
    """Inclusion-minimal bitmasks meeting every member of ``family``.

    Berge's incremental algorithm; an empty member makes the family unhittable.
    """
    hitting = [0]
    for edge in sorted(set(family), key=lambda e: (bin(e).count("1"), e)):
        if not edge:
            return []
        grown = set()
        for h in hitting:
            if h & edge:
                grown.add(h)
            else:
                grown.update(h | (1 << b) for b in _bits(edge))
        hitting = _minimal_masks(grown)
    return hitting


def _minimal_masks(masks: Iterable[int]) -> list[int]:
    ordered = sorted(set(masks), key=lambda m: (bin(m).count("1"), m))
    kept: list[int] = []
    for m in ordered:
        if not any(k & m == k for k in kept):
            kept.append(m)
    return kept


def _switch_masks(net: PetriNet, smask: int, pool: int) -> list[int]:
    uncovered = net.inputs_tmask(smask) & ~net.outputs_tmask(smask)
    family = [net._in_masks[k] & pool for k in _bits(uncovered)]
    return minimal_hitting_sets(family)


def minimal_switches(net: PetriNet, S: Iterable[int], fault_pool: Iterable[int]) -> list[frozenset[int]]:
    """All inclusion-minimal switches for ``S`` drawn from ``fault_pool``.

    Returns ``[frozenset()]`` for a siphon and ``[]`` when no subset of the
    pool can cover the transitions entering ``S`` from outside.
    """
    smask, pool = net.mask(S), net.mask(fault_pool)
    if not smask:
        raise InvalidArgument("place set must be non-empty")
    if smask & pool:
        raise InvalidArgument("place set and fault pool overlap")
    return [_to_set(m) for m in sorted(_switch_masks(net, smask, pool), key=_mask_key)]


def _mask_key(m: int):
    return (bin(m).count("1"), sorted(_bits(m)))


def _minimal_controlled_masks(net: PetriNet, allowed: int, fmask: int) -> list[int]:
    """Minimal F-controlled siphons contained in ``allowed``.

    Breadth-first growth from single places: while some transition into the
    current set is neither fed by the set nor by ``fmask``, branch on its
    admissible inputs.  Every minimal set is reached from any of its members,
    and BFS order plus superset pruning keeps only minimal ones.
    """
    found: list[int] = []
    seen = set()
    queue = deque(1 << p for p in _bits(allowed))
    while queue:
        s = queue.popleft()
        if s in seen:
            continue
        seen.add(s)
        if any(m & s == m for m in found):
            continue
        cover = s | fmask
        best = None
        for p in _bits(s):
            for im in net._incoming[p]:
                if im & cover:
                    continue
                choices = im & allowed
                if not choices:
                    best = 0
                    break
                if best is None or bin(choices).count("1") < bin(best).count("1"):
                    best = choices
            if best == 0:
                break
        if best is None:
            found.append(s)
        elif best:
            for q in _bits(best):
                nxt = s | (1 << q)
                if nxt not in seen:
                    queue.append(nxt)
    return _minimal_masks(found)


def minimal_siphons(net: PetriNet, within: Iterable[int] | None = None) -> list[frozenset[int]]:
    allowed = net.all_mask if within is None else net.mask(within)
    return [_to_set(m) for m in sorted(_minimal_controlled_masks(net, allowed, 0), key=_mask_key)]


@dataclass(frozen=True)
class ControlledSiphonCertificate:
    places: frozenset[int]
    switch: frozenset[int]
    uncovered_when_switch_removed: Mapping[int, Transition] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.places:
            raise InvalidArgument("certificate place set is empty")
        if self.places & self.switch:
            raise InvalidArgument("certificate places and switch overlap")

    def sort_key(self):
        return (len(self.places), tuple(sorted(self.places)),
                len(self.switch), tuple(sorted(self.switch)))

    def __hash__(self):
        return hash((self.places, self.switch))

    def to_dict(self, net: PetriNet) -> dict:
        return {
            "places": net.label_set(self.places),
            "switch": net.label_set(self.switch),
            "switch_witnesses": {
                net.labels[f]: {"inputs": net.label_set(t.inputs), "output": net.labels[t.output]}
                for f, t in sorted(self.uncovered_when_switch_removed.items())
            },
        }


def _certificate(net: PetriNet, smask: int, swmask: int) -> ControlledSiphonCertificate:
    uncovered = net.inputs_tmask(smask) & ~net.outputs_tmask(smask)
    witnesses = {}
    for f in _bits(swmask):
        rest = swmask & ~(1 << f)
        missing = uncovered & ~net.outputs_tmask(rest)
        # minimality of the switch guarantees a transition only f covers
        k = next(k for k in _bits(missing) if net._in_masks[k] & (1 << f))
        witnesses[f] = net.transitions[k]
    return ControlledSiphonCertificate(_to_set(smask), _to_set(swmask), witnesses)


def _subsets(mask: int):
    items = list(_bits(mask))
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            yield sum(1 << b for b in combo)


def _certificate_masks(net: PetriNet, pool: int) -> list[tuple[int, int]]:
    healthy = net.all_mask & ~pool
    pairs = set()
    for sub in _subsets(pool):
        for s in _minimal_controlled_masks(net, healthy, sub):
            for sw in _switch_masks(net, s, sub):
                pairs.add((s, sw))
    return sorted(pairs, key=lambda p: (_mask_key(p[0]), _mask_key(p[1])))


def enumerate_minimal_controlled_siphons(net: PetriNet, fault_pool: Iterable[int] = ()) -> list[ControlledSiphonCertificate]:
    """Certificates (S, F') with S outside the pool, minimal among
    F'-controlled siphons, and F' a minimal switch of S.  Canonically ordered."""
    pool = net.mask(fault_pool)
    return [_certificate(net, s, sw) for s, sw in _certificate_masks(net, pool)]


@dataclass
class ConsensuabilityReport:
    verdict: bool
    healthy_is_siphon: bool
    witness: tuple[ControlledSiphonCertificate, ControlledSiphonCertificate] | None
    enumerated_pairs: int
    fault_set: frozenset[int] = frozenset()
    certificates: list[ControlledSiphonCertificate] = field(default_factory=list)
    scope: str = "certificates restricted to place sets inside the healthy set"

    @property
    def reason(self) -> str:
        if self.verdict:
            return "robust"
        if not self.healthy_is_siphon:
            return "healthy-set-not-siphon"
        return "disjoint-controlled-siphons"

    def to_dict(self, net: PetriNet) -> dict:
        return {
            "verdict": "ROBUST" if self.verdict else "NOT-ROBUST",
            "robust": self.verdict,
            "reason": self.reason,
            "fault_set": net.label_set(self.fault_set),
            "healthy_is_siphon": self.healthy_is_siphon,
            "witness": None if self.witness is None else [c.to_dict(net) for c in self.witness],
            "enumerated_pairs": self.enumerated_pairs,
            "certificates": [c.to_dict(net) for c in self.certificates],
            "scope": self.scope,
        }


def check_robust_consensuability(net: PetriNet, fault_set: Iterable[int] = ()) -> ConsensuabilityReport:
    """Decide robust consensuability of ``net`` against faults in ``fault_set``.

    The healthy set must be a siphon, and no two minimal controlled-siphon
    certificates may have both disjoint place sets and disjoint switches.
    Restricting to minimal certificates loses nothing: any violating pair
    shrinks to a violating pair of minimal ones.
    """
    fmask = net.mask(fault_set)
    if fmask == net.all_mask:
        raise InvalidArgument("fault set must leave at least one healthy agent")
    faults = _to_set(fmask)
    healthy = net.all_mask & ~fmask
    if not net.is_controlled_mask(healthy):
        return ConsensuabilityReport(False, False, None, 0, faults)

    masks = _certificate_masks(net, fmask)
    best = None
    examined = 0
    for a in range(len(masks)):
        s1, f1 = masks[a]
        for b in range(a + 1, len(masks)):
            s2, f2 = masks[b]
            examined += 1
            if s1 & s2 or f1 & f2:
                continue
            key = (bin(s1 | s2).count("1"), a, b)
            if best is None or key < best:
                best = key
    certs = [_certificate(net, s, sw) for s, sw in masks]
    if best is None:
        return ConsensuabilityReport(True, True, None, examined, faults, certs)
    _, a, b = best
    return ConsensuabilityReport(False, True, (certs[a], certs[b]), examined, faults, certs)


def _controlled_table(members: np.ndarray, net: PetriNet, fmask: int) -> np.ndarray:
    """Boolean vector over all subsets: is the subset an fmask-controlled siphon."""
    ok = members.any(axis=1)
    for k, t in enumerate(net.transitions):
        if net._in_masks[k] & fmask:
            continue
        fed = members[:, sorted(t.inputs)].any(axis=1)
        ok &= ~members[:, t.output] | fed
    return ok


def _exists_subset(table: np.ndarray, nbits: int) -> np.ndarray:
    """out[m] = any(table[s] for s ⊆ m), by a sum-over-subsets sweep."""
    out = table.copy()
    for b in range(nbits):
        view = out.reshape(-1, 2, 1 << b)
        view[:, 1, :] |= view[:, 0, :]
    return out


def exhaustive_consensuability_oracle(net: PetriNet, fault_set: Iterable[int] = ()) -> bool:
    """Brute-force decision of robust consensuability.

    Tests the controlled-siphon definition on every non-empty subset of the
    healthy set for every switch drawn from the fault set, with no
    minimality reasoning, then looks for a pair with disjoint place sets and
    disjoint switches.
    """
    if net.n_agents > ORACLE_MAX_PLACES:
        raise UnsupportedSize(f"exhaustive oracle limited to {ORACLE_MAX_PLACES} places")
    fmask = net.mask(fault_set)
    if fmask == net.all_mask:
        raise InvalidArgument("fault set must leave at least one healthy agent")
    healthy = [p for p in range(net.n_agents) if not fmask >> p & 1]
    m = len(healthy)
    codes = np.arange(1 << m)
    members = np.zeros((1 << m, net.n_agents), dtype=bool)
    for j, p in enumerate(healthy):
        members[:, p] = (codes >> j) & 1 == 1

    full = (1 << m) - 1
    if not _controlled_table(members, net, 0)[full]:
        return False
    switches = list(_subsets(fmask))
    tables = {sw: _controlled_table(members, net, sw) for sw in switches}
    reach = {sw: _exists_subset(tables[sw], m) for sw in switches}
    for f1 in switches:
        for f2 in switches:
            if f1 & f2:
                continue
            s1 = np.flatnonzero(tables[f1])
            if reach[f2][full ^ s1].any():
                return False
    return True


_NET_LINE = re.compile(r"^\s*\[([^\]]*)\]\s*->\s*(\d+)\s*$")


def parse_net(text: str) -> PetriNet:
    """Read the plain-text net format::

        n_agents: 3
        [0] -> 1
        [0, 1] -> 2
    """
    n = None
    transitions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("n_agents"):
            _, _, value = line.partition(":")
            try:
                n = int(value)
            except ValueError:
                raise InvalidArgument(f"line {lineno}: bad n_agents value") from None
            continue
        match = _NET_LINE.match(line)
        if not match:
            raise InvalidArgument(f"line {lineno}: expected '[j1,j2,...] -> i', got {raw!r}")
        try:
            inputs = [int(tok) for tok in match.group(1).split(",") if tok.strip()]
        except ValueError:
            raise InvalidArgument(f"line {lineno}: non-integer agent id") from None
        transitions.append(Transition(frozenset(inputs), int(match.group(2))))
    if n is None:
        raise InvalidArgument("missing 'n_agents:' line")
    return PetriNet(n, tuple(transitions))


def format_net(net: PetriNet) -> str:
    lines = [f"n_agents: {net.n_agents}"]
    for t in net.transitions:
        lines.append(f"[{','.join(str(i) for i in sorted(t.inputs))}] -> {t.output}")
    return "\n".join(lines) + "\n"
