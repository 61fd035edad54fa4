"""Built-in networks: every topology used in the worked examples.

Agent ids are 0-based everywhere; labels carry the human names (``"1"`` ..
``"n"`` for the small nets, ``"(i,j)"`` with 1-based row/column for the grid).
"""
from __future__ import annotations

import itertools

from .arcp import ArcpConfig, as_network_dynamics
from .dynamics import Aggregator, InteractionRule, LinearPair, MaxMinJoint, NetworkDynamics
from .errors import InvalidArgument

__all__ = [
    "GENERATORS", "builtin_network", "parse_generator", "grid_id", "grid_label",
    "chain3", "ring5", "alltoall5_joint", "grid3x3", "linear_alltoall", "arcp",
]


def grid_id(row: int, col: int, size: int = 3) -> int:
    """0-based id of grid agent ``(row, col)`` given 1-based coordinates."""
    if not (1 <= row <= size and 1 <= col <= size):
        raise InvalidArgument(f"grid coordinates ({row},{col}) outside 1..{size}")
    return (row - 1) * size + (col - 1)


def grid_label(agent: int, size: int = 3) -> str:
    return f"({agent // size + 1},{agent % size + 1})"


def _numbered(n):
    return tuple(str(i + 1) for i in range(n))


def _joint(n, pairs, source, aggregators=None):
    rules = tuple(InteractionRule(frozenset(g), t, MaxMinJoint()) for g, t in pairs)
    return NetworkDynamics(n, rules, aggregators, _numbered(n), source=source)


def chain3() -> NetworkDynamics:
    # {1} -> 2, {1,2} -> 3
    return _joint(3, [({0}, 1), ({0, 1}, 2)], "chain3")


def ring5() -> NetworkDynamics:
    # {1,2} -> 3, {2,3} -> 4, ..., {5,1} -> 2
    pairs = [({k % 5, (k + 1) % 5}, (k + 2) % 5) for k in range(5)]
    return _joint(5, pairs, "ring5")


def alltoall5_joint(n: int = 5, group_size: int = 3) -> NetworkDynamics:
    if not 1 <= group_size <= n - 1:
        raise InvalidArgument("group_size must lie in [1, n-1]")
    pairs = [(set(J), i) for i in range(n)
             for J in itertools.combinations([a for a in range(n) if a != i], group_size)]
    source = "alltoall5_joint" if (n, group_size) == (5, 3) else f"alltoall5_joint:n={n},group_size={group_size}"
    return _joint(n, pairs, source)


def grid3x3(size: int = 3) -> NetworkDynamics:
    """Each agent is driven jointly by the rest of its column and by the rest of its row."""
    idx = range(1, size + 1)
    rules = []
    for i, j in itertools.product(idx, idx):
        column = frozenset(grid_id(r, j, size) for r in idx if r != i)
        row = frozenset(grid_id(i, c, size) for c in idx if c != j)
        rules.append(InteractionRule(column, grid_id(i, j, size)))
        rules.append(InteractionRule(row, grid_id(i, j, size)))
    labels = tuple(grid_label(a, size) for a in range(size * size))
    source = "grid3x3" if size == 3 else f"grid3x3:size={size}"
    return NetworkDynamics(size * size, tuple(rules), None, labels, source=source)


def linear_alltoall(n: int = 5, weight: float = 1.0) -> NetworkDynamics:
    rules = tuple(InteractionRule(frozenset({j}), i, LinearPair(float(weight)))
                  for i in range(n) for j in range(n) if j != i)
    source = "linear_alltoall" if (n, weight) == (5, 1.0) else f"linear_alltoall:n={n},weight={weight!r}"
    return NetworkDynamics(n, rules, tuple(Aggregator() for _ in range(n)), _numbered(n), source=source)


def arcp(n: int = 5, trim: int = 1) -> NetworkDynamics:
    return as_network_dynamics(ArcpConfig(int(n), int(trim)))


GENERATORS = {
    "chain3": (chain3, {}),
    "ring5": (ring5, {}),
    "alltoall5_joint": (alltoall5_joint, {"n": int, "group_size": int}),
    "grid3x3": (grid3x3, {"size": int}),
    "linear_alltoall": (linear_alltoall, {"n": int, "weight": float}),
    "arcp": (arcp, {"n": int, "trim": int}),
}


def parse_generator(text: str) -> tuple[str, dict]:
    """Split ``"arcp:n=5,trim=1"`` into ``("arcp", {"n": 5, "trim": 1})``."""
    name, _, rest = text.strip().partition(":")
    if name not in GENERATORS:
        raise InvalidArgument(f"unknown generator {name!r}; known: {', '.join(GENERATORS)}")
    _, types = GENERATORS[name]
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        key = key.strip()
        if not eq or key not in types:
            raise InvalidArgument(f"bad parameter {item!r} for generator {name!r}")
        try:
            params[key] = types[key](value)
        except ValueError:
            raise InvalidArgument(f"bad value for {key!r}: {value!r}") from None
    return name, params


def builtin_network(name: str, params: dict | None = None) -> NetworkDynamics:
    """Build a named network; ``name`` may carry inline ``key=value`` params."""
    base, inline = parse_generator(name)
    inline.update(params or {})
    factory, types = GENERATORS[base]
    unknown = set(inline) - set(types)
    if unknown:
        raise InvalidArgument(f"unknown parameters for {base!r}: {sorted(unknown)}")
    return factory(**inline)
