from hypothesis import given, settings
from hypothesis import strategies as st

from guardomq.query import CQ, UCQ, contractions, set_partitions, subqueries, evaluate_ucq
from guardomq.relstruct import Fact, find_isomorphism
from guardomq.textformat import parse_cq, parse_facts

BELL = [1, 1, 2, 5, 15, 52, 203]


@given(st.integers(0, 6))
def test_set_partitions_count_bell_numbers(n):
    assert sum(1 for _ in set_partitions(list(range(n)))) == BELL[n]


def test_canonical_renaming_is_stable_and_iso():
    q = parse_cq("T(Z,X), R(X,Y), S(Y,Z)")
    c = q.canonical()
    assert c.canonical() == c
    assert set(c.variables) == {"V0", "V1", "V2"}
    assert find_isomorphism(q.canonical_db(), c.canonical_db())


def test_canonical_identifies_renamed_copies():
    a = parse_cq("R(X,Y), R(Y,Z)")
    b = parse_cq("R(B,C), R(A,B)")
    assert a.canonical() == b.canonical()


def test_contractions_of_an_edge():
    q = parse_cq("R(X,Y)")
    got = {str(c) for c in contractions(q)}
    assert got == {"R(V0,V1)", "R(V0,V0)"}


def test_contractions_dedup_up_to_renaming():
    q = parse_cq("R(X,Y), R(Y,Z)")
    cs = list(contractions(q))
    for i, a in enumerate(cs):
        for b in cs[i + 1:]:
            assert not find_isomorphism(a.canonical_db(), b.canonical_db())


@settings(max_examples=20)
@given(st.integers(1, 5))
def test_subqueries_count(n):
    q = CQ([Fact("R", (f"X{k}", f"X{k + 1}")) for k in range(n)])
    assert sum(1 for _ in subqueries(q)) == 2 ** n - 1


def test_ucq_evaluation():
    u = UCQ([parse_cq("R(X,X)"), parse_cq("P(X)")])
    assert evaluate_ucq(u, parse_facts("P(a)."))
    assert not evaluate_ucq(u, parse_facts("R(a,b)."))


def test_clique_contractions_count_partitions_up_to_iso():
    q = parse_cq("R(X,Y), R(Y,X)")
    assert len(list(contractions(q))) == 2
