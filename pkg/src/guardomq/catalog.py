"""Small worked instances used by tests, the acceptance suite and the CLI."""
from __future__ import annotations

from dataclasses import dataclass

from .chase import OMQ, TGD, Ontology
from .query import CQ, UCQ
from .relstruct import Fact, Schema, Structure
from .textformat import parse_cq, parse_facts, parse_ontology


@dataclass(frozen=True)
class TriangleInstance:
    """Triangle query whose S and T atoms are only derivable.

    ``D1`` collapses the triangle onto a loop; ``D2`` keeps it spread out and
    ``D`` is a diversification of ``D2`` that drops the U fact.
    """

    omq: OMQ
    D1: Structure
    D2: Structure
    D: Structure
    q_loop: CQ


def triangle_instance() -> TriangleInstance:
    ontology = parse_ontology("U(X,Y,Z), V(X,Z) -> T(X,Z).\nW(X,Y,Z) -> S(Y,Z).")
    q = parse_cq("R(X,Y), S(Y,Z), T(Z,X)")
    omq = OMQ(ontology, Schema(R=2, U=3, V=2, W=3), UCQ([q]), "triangle")
    return TriangleInstance(
        omq=omq,
        D1=parse_facts("R(a,b). W(d,b,a). U(a,d,a). V(a,a)."),
        D2=parse_facts("R(a,b). W(d,b,c). U(c,d,a). V(c,a)."),
        D=parse_facts("R(a,b). W(d,b,c). V(c,a)."),
        q_loop=parse_cq("R(X,Y), S(Y,X), T(X,X)"),
    )


def _pairs(n):
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


@dataclass(frozen=True)
class CliqueInstance:
    """The i-clique family: S_i derives an R-clique, T is stored."""

    i: int
    omq: OMQ
    guarded_omq: OMQ
    base: Structure
    guard_db: Structure
    q: CQ
    q_guarded: CQ


def clique_instance(i: int) -> CliqueInstance:
    if i < 2:
        raise ValueError("the clique family starts at i = 2")
    s = f"S{i}"
    xs = [f"X{k}" for k in range(1, i + 1)]
    cs = [f"a{k}" for k in range(1, i + 1)]
    r_atoms = [Fact("R", (xs[a - 1], xs[b - 1])) for a, b in _pairs(i)]
    t_atoms = [Fact("T", (xs[a - 1], xs[b - 1])) for a, b in _pairs(i)]
    guard = Fact(s, tuple(xs))
    ontology = Ontology([TGD([guard], r_atoms)], f"O{i}")
    schema = Schema({s: i, "T": 2})
    q = CQ(r_atoms + t_atoms, f"q{i}")
    q_guarded = CQ([guard] + r_atoms + t_atoms, f"q{i}g")
    base = Structure([Fact(s, tuple(cs))] + [Fact("T", (cs[a - 1], cs[b - 1])) for a, b in _pairs(i)])
    return CliqueInstance(
        i=i,
        omq=OMQ(ontology, schema, UCQ([q]), f"clique{i}"),
        guarded_omq=OMQ(ontology, schema, UCQ([q_guarded]), f"clique{i}g"),
        base=base,
        guard_db=Structure([Fact(s, tuple(cs))]),
        q=q,
        q_guarded=q_guarded,
    )


@dataclass(frozen=True)
class ChainInstance:
    """Reachability from an A-marked start to a C-marked R-loop."""

    omq: OMQ
    n: int
    D: Structure


def chain_instance(n: int) -> ChainInstance:
    ontology = parse_ontology("A(X), R(X,Y) -> B(Y).\nB(X), R(X,Y) -> B(Y).")
    q = parse_cq("B(X), R(X,X), C(X)")
    facts = [Fact("A", ("x0",)), Fact("C", (f"x{n}",)), Fact("R", (f"x{n}", f"x{n}"))]
    facts += [Fact("R", (f"x{k}", f"x{k + 1}")) for k in range(n)]
    # R must be storable for the chain to exist at all
    omq = OMQ(ontology, Schema(A=1, C=1, R=2), UCQ([q]), "chain")
    return ChainInstance(omq, n, Structure(facts))


@dataclass(frozen=True)
class UnaryPairInstance:
    """Two equivalent OMQs over a single binary relation."""

    derived: OMQ
    plain: OMQ
    D: Structure


def unary_pair_instance() -> UnaryPairInstance:
    schema = Schema(R=2)
    derived = OMQ(parse_ontology("R(X,Y) -> A(X)."), schema, UCQ([parse_cq("A(X)")]), "derived")
    plain = OMQ(Ontology(), schema, UCQ([parse_cq("R(X,Y)")]), "plain")
    return UnaryPairInstance(derived, plain, parse_facts("R(a,a)."))


def single_edge_omq() -> OMQ:
    return OMQ(Ontology(), Schema(R=2), UCQ([parse_cq("R(X,Y)")]), "edge")
