import itertools
import random
from fractions import Fraction

import pytest

from guardomq.catalog import clique_instance
from guardomq.errors import PreconditionError, ThresholdExceeded
from guardomq.query import CQ
from guardomq.relstruct import Fact
from guardomq.width import (
    CostFunction,
    Hypergraph,
    TreeDecomposition,
    decomposition_from_ordering,
    edge_cover_number,
    f_width,
    hypergraph_of,
    smw_bracket,
    treewidth_exact,
    validate_cost_function,
    validate_tree_decomposition,
)


def clique(i):
    return Hypergraph(range(i), itertools.combinations(range(i), 2))


def random_graph(rng, n, p):
    edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
    return Hypergraph(range(n), edges)


def _elim_bags(h, order):
    adj = {v: set() for v in h.vertices}
    for e in h.edges:
        for a in e:
            adj[a] |= set(e) - {a}
    bags = []
    for v in order:
        nb = adj.pop(v)
        bags.append(frozenset(nb | {v}))
        for a in nb:
            adj[a] = (adj[a] | nb) - {a, v}
    return bags


def brute_width(h, cost):
    """Minimum over all elimination orderings, tried one by one."""
    return min(max(cost(b) for b in _elim_bags(h, order)) for order in itertools.permutations(sorted(h.vertices)))


def test_treewidth_matches_permutation_oracle():
    rng = random.Random(3)
    for _ in range(25):
        h = random_graph(rng, rng.randint(1, 6), 0.5)
        w, td = treewidth_exact(h)
        assert w == brute_width(h, len)
        assert validate_tree_decomposition(h, td)
        assert td.width() == w


def test_fwidth_matches_permutation_oracle():
    rng = random.Random(5)
    for _ in range(15):
        h = random_graph(rng, rng.randint(1, 6), 0.6)
        f = CostFunction.half_cardinality(h.vertices)
        w, td = f_width(h, f)
        assert w == brute_width(h, f)
        assert validate_tree_decomposition(h, td)


def test_edge_cover_bracket_upper_matches_oracle():
    rng = random.Random(9)
    for _ in range(10):
        h = random_graph(rng, rng.randint(2, 5), 0.7)
        h = Hypergraph(frozenset().union(*h.edges) if h.edges else [], h.edges)
        if not h.edges:
            continue
        b = smw_bracket(h, [CostFunction.half_cardinality(h.vertices)])
        assert b.upper == brute_width(h, edge_cover_number(h))
        assert b.lower <= b.upper


@pytest.mark.parametrize("i", range(2, 7))
def test_clique_widths(i):
    h = clique(i)
    assert f_width(h, CostFunction.half_cardinality(h.vertices))[0] == Fraction(i, 2)
    assert treewidth_exact(h)[0] == i


def test_guarded_clique_bracket():
    c = clique_instance(4)
    h = hypergraph_of(c.q_guarded)
    b = smw_bracket(h, [CostFunction.half_cardinality(h.vertices)])
    assert b.upper == 1
    assert b.rejected and b.rejected[0][0] == "half-cardinality"


def test_cost_validation_flags_non_submodular():
    h = Hypergraph("ab", [("a", "b")])
    bad = CostFunction.table("ab", {(): 0, ("a",): 0, ("b",): 0, ("a", "b"): 1})
    rep = validate_cost_function(bad, h)
    assert rep.monotone and not rep.submodular
    with pytest.raises(PreconditionError):
        f_width(h, bad)


def test_decomposition_validator_reports_violations():
    h = Hypergraph("abc", [("a", "b"), ("b", "c")])
    td = TreeDecomposition({0: frozenset("ab"), 1: frozenset("c"), 2: frozenset("a")}, {0: None, 1: 0, 2: 1}, 0)
    v = validate_tree_decomposition(h, td)
    kinds = {k for k, _ in v.violations}
    assert "uncovered-edge" in kinds and "disconnected-vertex" in kinds
    ok = decomposition_from_ordering(h, ["a", "c", "b"])
    assert validate_tree_decomposition(h, ok)


def test_threshold_guard():
    with pytest.raises(ThresholdExceeded):
        treewidth_exact(clique(15))


def test_hypergraph_of_cq():
    q = CQ([Fact("R", ("X", "Y")), Fact("S", ("Y", "Z", "Z"))])
    h = hypergraph_of(q)
    assert h.vertices == {"X", "Y", "Z"}
    assert frozenset({"Y", "Z"}) in h.edges
