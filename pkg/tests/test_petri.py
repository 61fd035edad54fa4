import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robcons.errors import InvalidArgument, UnsupportedSize
from robcons.petri import (
    PetriNet,
    Transition,
    check_robust_consensuability,
    enumerate_minimal_controlled_siphons,
    exhaustive_consensuability_oracle,
    format_net,
    input_transitions,
    is_controlled_siphon,
    is_siphon,
    minimal_hitting_sets,
    minimal_siphons,
    minimal_switches,
    output_transitions,
    parse_net,
)
from robcons.verify import random_net
from conftest import g


def T(inputs, output):
    return Transition(frozenset(inputs), output)


# --- transitions -----------------------------------------------------------

def test_input_transitions_chain(chain):
    assert input_transitions(chain, {0}) == frozenset()
    assert input_transitions(chain, {1, 2}) == frozenset(chain.transitions)


def test_input_transitions_grid(grid):
    ts = input_transitions(grid, g((2, 3)))
    assert {t.inputs for t in ts} == {frozenset(g((2, 1), (2, 2))), frozenset(g((1, 3), (3, 3)))}


def test_output_transitions(chain, ring):
    assert output_transitions(chain, {0}) == frozenset(chain.transitions)
    assert output_transitions(chain, {2}) == frozenset()
    # {2,3} -> 4 and {3,4} -> 5 in 1-based labels
    assert output_transitions(ring, {2}) == {T({1, 2}, 3), T({2, 3}, 4)}


def test_out_of_range_agent_rejected(chain):
    with pytest.raises(InvalidArgument):
        input_transitions(chain, {7})
    with pytest.raises(InvalidArgument):
        output_transitions(chain, {-1})


def test_net_construction_checks():
    with pytest.raises(InvalidArgument):
        PetriNet(2, (T({0}, 0),))
    with pytest.raises(InvalidArgument):
        PetriNet(2, (T({0}, 1), T({0}, 1)))
    with pytest.raises(InvalidArgument):
        PetriNet(2, (T({3}, 1),))


# --- siphons ---------------------------------------------------------------

def test_is_siphon_examples(chain, grid):
    assert is_siphon(chain, {0})
    assert not is_siphon(chain, {1, 2})
    assert is_siphon(grid, g((1, 1), (1, 2), (2, 1), (2, 2)))


def test_is_siphon_empty_rejected(chain):
    with pytest.raises(InvalidArgument):
        is_siphon(chain, set())


def test_controlled_siphon_examples(grid):
    assert is_controlled_siphon(grid, g((2, 3)), g((2, 2), (3, 3)))
    assert is_controlled_siphon(grid, g((1, 1), (1, 2), (2, 1)), g((2, 2)))
    assert not is_controlled_siphon(grid, g((2, 3)), g((2, 2)))


def test_controlled_siphon_overlap_rejected(grid):
    with pytest.raises(InvalidArgument):
        is_controlled_siphon(grid, g((2, 3)), g((2, 3)))


def test_minimal_switches_examples(grid):
    siphon = g((1, 1), (1, 2), (2, 1), (2, 2))
    assert minimal_switches(grid, siphon, g((3, 3))) == [frozenset()]
    assert minimal_switches(grid, g((2, 3)), g((2, 2), (3, 3))) == [frozenset(g((2, 2), (3, 3)))]
    assert minimal_switches(grid, g((1, 1), (1, 2), (2, 1)), g((2, 2))) == [frozenset(g((2, 2)))]
    assert minimal_switches(grid, g((2, 3)), g((2, 2))) == []


def test_minimal_switches_match_exhaustive(grid):
    pool = sorted(g((2, 2), (3, 3), (1, 1)))
    for r in range(1, 4):
        for S in itertools.combinations(sorted(set(range(9)) - set(pool)), r):
            works = [frozenset(c) for k in range(len(pool) + 1)
                     for c in itertools.combinations(pool, k)
                     if is_controlled_siphon(grid, S, c)]
            expected = sorted((w for w in works if not any(v < w for v in works)), key=sorted)
            assert sorted(minimal_switches(grid, S, pool), key=sorted) == expected


def test_minimal_hitting_sets():
    # family {0,1}, {1,2} -> minimal hitting sets {1}, {0,2}
    assert sorted(minimal_hitting_sets([0b011, 0b110])) == [0b010, 0b101]
    assert minimal_hitting_sets([]) == [0]


def test_enumerate_chain_no_pool(chain):
    certs = enumerate_minimal_controlled_siphons(chain, ())
    assert [(c.places, c.switch) for c in certs] == [(frozenset({0}), frozenset())]


def test_enumerate_grid_no_pool_layouts(grid):
    certs = enumerate_minimal_controlled_siphons(grid, ())
    assert all(not c.switch for c in certs)
    # every occupied row and column holds exactly two agents
    for c in certs:
        rows = [sum(1 for a in c.places if a // 3 == r) for r in range(3)]
        cols = [sum(1 for a in c.places if a % 3 == k) for k in range(3)]
        assert set(rows) <= {0, 2} and set(cols) <= {0, 2}
    sizes = sorted(len(c.places) for c in certs)
    assert sizes == [4] * 9 + [6] * 6


def test_enumerate_grid_pool_contains_single(grid):
    certs = enumerate_minimal_controlled_siphons(grid, g((2, 2), (3, 3)))
    assert any(c.places == frozenset(g((2, 3))) and c.switch == frozenset(g((2, 2), (3, 3)))
               for c in certs)


def test_minimal_siphons_grid(grid):
    sip = minimal_siphons(grid)
    assert len(sip) == 15
    assert all(is_siphon(grid, s) for s in sip)


# --- consensuability -------------------------------------------------------

def test_grid_single_fault_robust(grid):
    rep = check_robust_consensuability(grid, g((2, 2)))
    assert rep.verdict and rep.witness is None and rep.reason == "robust"


def test_grid_diagonal_pair_witness(grid):
    rep = check_robust_consensuability(grid, g((2, 2), (3, 3)))
    assert not rep.verdict and rep.healthy_is_siphon
    a, b = rep.witness
    assert a.places == frozenset(g((2, 3))) and a.switch == frozenset(g((2, 2), (3, 3)))
    assert b.places == frozenset(g((1, 1), (1, 2), (3, 1), (3, 2))) and b.switch == frozenset()
    assert not (a.places & b.places) and not (a.switch & b.switch)


def test_grid_same_row_pair(grid):
    rep = check_robust_consensuability(grid, g((2, 1), (2, 2)))
    assert not rep.verdict and not rep.healthy_is_siphon
    assert rep.reason == "healthy-set-not-siphon"


def test_all_faulty_rejected(chain):
    with pytest.raises(InvalidArgument):
        check_robust_consensuability(chain, {0, 1, 2})


def test_oracle_examples(grid, chain, ring):
    assert exhaustive_consensuability_oracle(grid, g((2, 2)))
    assert exhaustive_consensuability_oracle(grid, ())
    for net in (chain, ring, grid):
        for k in range(3):
            for F in itertools.combinations(range(net.n_agents), k):
                if k == net.n_agents:
                    continue
                assert (check_robust_consensuability(net, F).verdict
                        == exhaustive_consensuability_oracle(net, F))


def test_oracle_size_guard():
    big = PetriNet(17, (T({0}, 1),))
    with pytest.raises(UnsupportedSize):
        exhaustive_consensuability_oracle(big, ())


def test_net_text_round_trip(grid):
    assert parse_net(format_net(grid)).transitions == grid.transitions


def test_report_json(grid):
    d = check_robust_consensuability(grid, g((2, 2), (3, 3))).to_dict(grid)
    assert d["verdict"] == "NOT-ROBUST"
    assert d["witness"][0]["places"] == ["(2,3)"]


# --- properties ------------------------------------------------------------

nets = st.builds(lambda seed, n: random_net(np.random.default_rng(seed), n),
                 st.integers(0, 2**32 - 1), st.integers(2, 8))


def _subsets(draw, universe):
    return {a for a in universe if draw(st.booleans())}


@st.composite
def net_and_sets(draw):
    net = draw(nets)
    n = net.n_agents
    S = _subsets(draw, range(n)) or {0}
    rest = [a for a in range(n) if a not in S]
    F1 = _subsets(draw, rest)
    F2 = F1 | _subsets(draw, rest)
    return net, S, F1, F2


@settings(max_examples=200, deadline=None)
@given(net_and_sets())
def test_monotonicity_of_control(case):
    net, S, F1, F2 = case
    if is_controlled_siphon(net, S, F1):
        assert is_controlled_siphon(net, S, F2)


@settings(max_examples=200, deadline=None)
@given(net_and_sets())
def test_empty_switch_is_siphon(case):
    net, S, _, _ = case
    assert is_controlled_siphon(net, S, ()) == is_siphon(net, S)


@st.composite
def net_two_sets_fault(draw):
    net = draw(nets)
    n = net.n_agents
    F = _subsets(draw, range(n))
    rest = [a for a in range(n) if a not in F]
    if not rest:
        F, rest = set(), list(range(n))
    S1 = _subsets(draw, rest) or {rest[0]}
    S2 = _subsets(draw, rest) or {rest[-1]}
    return net, S1, S2, F


@settings(max_examples=200, deadline=None)
@given(net_two_sets_fault())
def test_union_closure(case):
    net, S1, S2, F = case
    if is_controlled_siphon(net, S1, F) and is_controlled_siphon(net, S2, F):
        assert is_controlled_siphon(net, S1 | S2, F)


@settings(max_examples=100, deadline=None)
@given(nets, st.data())
def test_certificate_soundness(net, data):
    k = data.draw(st.integers(0, min(3, net.n_agents - 1)))
    pool = data.draw(st.sets(st.integers(0, net.n_agents - 1), min_size=k, max_size=k))
    for c in enumerate_minimal_controlled_siphons(net, pool):
        assert not (c.places & c.switch) and c.switch <= pool
        assert is_controlled_siphon(net, c.places, c.switch)
        for f in c.switch:
            assert not is_controlled_siphon(net, c.places, c.switch - {f})


def test_oracle_equivalence_random_nets():
    rng = np.random.default_rng(7)
    nets_checked = 0
    for _ in range(200):
        net = random_net(rng, int(rng.integers(2, 13)))
        nets_checked += 1
        for k in range(min(3, net.n_agents - 1) + 1):
            combos = list(itertools.combinations(range(net.n_agents), k))
            if len(combos) > 40:
                combos = [combos[i] for i in rng.choice(len(combos), 40, replace=False)]
            for F in combos:
                assert (check_robust_consensuability(net, F).verdict
                        == exhaustive_consensuability_oracle(net, F)), (format_net(net), F)
    assert nets_checked >= 200


def _grid_criterion(S):
    rows = {}
    cols = {}
    for a in S:
        rows.setdefault(a // 3, set()).add(a)
        cols.setdefault(a % 3, set()).add(a)
    return all(len(v) >= 2 for v in rows.values()) and all(len(v) >= 2 for v in cols.values())


def test_grid_criterion_all_subsets(grid):
    for mask in range(1, 2**9):
        S = {a for a in range(9) if mask >> a & 1}
        assert is_siphon(grid, S) == _grid_criterion(S), S
