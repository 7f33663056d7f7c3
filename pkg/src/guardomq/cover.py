"""Cover CQs built from (extended) characteristic databases."""
from __future__ import annotations

import itertools
from collections.abc import Iterable
from dataclasses import dataclass, field

from .chase import GDLOG, OMQ, eval_omq, run_chase
from .errors import BudgetExceeded, PreconditionError, SchemaError
from .query import CQ, UCQ
from .relstruct import Fact, Homomorphism, Structure, find_isomorphism, is_igs, iter_homomorphisms
from .unravel import (
    ExtResult,
    QiVerdict,
    ext,
    is_diversification,
    is_qi_bounded,
    minimal_diversifications_bounded,
)
from .width import Hypergraph, TreeDecomposition, validate_tree_decomposition


@dataclass
class CharDBSpec:
    """A supplied characteristic database with its machine-checked side conditions."""

    D: Structure
    up: Homomorphism
    D0: Structure
    qi_verdict: QiVerdict | None = None
    mdiv_verified: bool = False
    depth: int | None = None
    name: str | None = None

    def __post_init__(self):
        if not isinstance(self.up, Homomorphism):
            self.up = Homomorphism(self.D, self.D0, self.up)
        else:
            self.up = Homomorphism(self.D, self.D0, self.up.mapping)

    def verify(self) -> bool:
        return is_diversification(self.D, self.up, self.D0)

    @property
    def qi_status(self) -> str:
        return self.qi_verdict.status if self.qi_verdict is not None else "unknown"


def identity_spec(D: Structure, D0: Structure, **kwargs) -> CharDBSpec:
    return CharDBSpec(D, {c: c for c in D.domain}, D0, **kwargs)


def checked_spec(
    D: Structure,
    up,
    D0: Structure,
    omq: OMQ,
    qi_bound: int,
    mdiv_budget: int,
    depth: int | None = None,
) -> CharDBSpec:
    """Build a spec and run the bounded qi and minimality checks on it."""
    spec = CharDBSpec(D, up, D0, depth=depth)
    if not spec.verify():
        raise PreconditionError("(D, up) is not a diversification of D0")
    spec.qi_verdict = is_qi_bounded(D0, omq, qi_bound)
    report = minimal_diversifications_bounded(D0, omq, mdiv_budget, depth)
    spec.mdiv_verified = any(find_isomorphism(w.D, D) is not None for w in report.witnesses)
    return spec


def propose_specs(omq: OMQ, base: Structure, qi_bound: int, mdiv_budget: int, depth=None) -> list[CharDBSpec]:
    """Convenience search: minimal diversifications of a qi base database."""
    verdict = is_qi_bounded(base, omq, qi_bound)
    if verdict.status != "qi-within-bound":
        return []
    report = minimal_diversifications_bounded(base, omq, mdiv_budget, depth)
    return [
        CharDBSpec(w.D, w.up, base, verdict, True, depth) for w in report.witnesses
    ]


# ---------------------------------------------------------------------------
# guard sets


def _maximal_guards(dplus: Structure) -> list[Fact]:
    sets = {f.terms for f in dplus.facts}
    maximal = {s for s in sets if not any(s < t for t in sets)}
    return sorted(f for f in dplus.facts if f.terms in maximal)


def minimal_guard_sets(hp: Iterable[Fact], D: Structure, dplus: Structure) -> list[frozenset]:
    """Every subset-minimal S with D ⊆ S ⊆ D+ guarding each atom of ``hp``.

    An atom is guarded by a fact of S whose argument set contains the atom's
    arguments and is a maximal guarded set of D+.
    """
    if not D.facts <= dplus.facts:
        raise PreconditionError("D must be contained in D+")
    guards = _maximal_guards(dplus)
    base = set(D.facts)
    open_atoms = []
    for atom in sorted(set(hp)):
        options = [g for g in guards if atom.terms <= g.terms]
        if not options:
            raise PreconditionError(f"atom {atom} has no maximal guard in D+")
        if any(g in base for g in options):
            continue
        open_atoms.append(frozenset(options))
    if not open_atoms:
        return [frozenset(base)]
    pool = sorted(frozenset().union(*open_atoms))
    found = []
    for k in range(1, len(pool) + 1):
        for combo in itertools.combinations(pool, k):
            chosen = frozenset(combo)
            if any(prev <= chosen for prev in found):
                continue
            if all(opts & chosen for opts in open_atoms):
                found.append(chosen)
    return [frozenset(base) | f for f in found]


# ---------------------------------------------------------------------------
# cover CQs


@dataclass
class CoverCQ:
    cq: CQ
    source: CQ
    h: dict
    S: frozenset
    image: frozenset
    spec: CharDBSpec = field(repr=False)

    @property
    def facts(self) -> frozenset:
        return self.image | self.S


@dataclass
class CoverResult:
    cqs: list
    over_budget: list
    homomorphisms: int
    ext: ExtResult = field(repr=False)

    def __iter__(self):
        return iter(self.cqs)

    def __len__(self):
        return len(self.cqs)

    def ucq(self) -> UCQ:
        return UCQ([c.cq for c in self.cqs])


def cover_cqs_from(
    omq: OMQ,
    spec: CharDBSpec,
    depth: int | None = None,
    size_budget: int | None = None,
    hom_cap: int | None = 10000,
) -> CoverResult:
    """Cover CQs h(p) ∪ S for every disjunct p and match h into the extension's chase."""
    if omq.ontology.kind != GDLOG:
        raise PreconditionError("covers are built for GDLog ontologies")
    if not spec.verify():
        raise PreconditionError("the characteristic database is not a diversification")
    depth = depth if depth is not None else spec.depth
    e = ext(spec.D, spec.up, spec.D0, omq, depth)
    chased = run_chase(omq.ontology, e.structure).structure
    out = []
    over = []
    count = 0
    for p in omq.query:
        for hom in iter_homomorphisms(p.canonical_db(), chased):
            count += 1
            if hom_cap is not None and count > hom_cap:
                raise BudgetExceeded(f"more than {hom_cap} query matches; raise hom_cap")
            image = frozenset(hom.image().facts)
            for S in minimal_guard_sets(image, spec.D, e.structure):
                cq = CQ(image | S).canonical()
                entry = CoverCQ(cq, p, dict(hom.mapping), S, image, spec)
                if size_budget is not None and len(cq) > size_budget:
                    over.append(entry)
                    continue
                out.append(entry)
    unique = []
    for entry in sorted(out, key=lambda c: (len(c.cq), str(c.cq))):
        if not any(find_isomorphism(entry.cq.canonical_db(), u.cq.canonical_db()) for u in unique):
            unique.append(entry)
    return CoverResult(unique, over, count, e)


def cover_omq(omq: OMQ, cover: CoverResult | Iterable[CoverCQ], name=None) -> OMQ:
    cqs = [c.cq for c in cover]
    if not cqs:
        raise PreconditionError("no cover CQs to build an OMQ from")
    return OMQ(omq.ontology, omq.schema, UCQ(cqs), name or f"{omq.name or 'Q'}_cover")


# ---------------------------------------------------------------------------
# adornments


@dataclass
class AdornmentCheck:
    valid: bool
    reasons: list

    def __bool__(self):
        return self.valid


def validate_extended_adornment(
    p: CQ,
    td: TreeDecomposition,
    S: Structure,
    up,
    D0: Structure,
    omq: OMQ,
) -> AdornmentCheck:
    """Check an extended adornment (td, S, up, D0) of ``p`` and its validity.

    The decomposition is checked over the constants of p and S with the atoms
    of p as edges. Minimality of S is required only for facts outside the
    root bag, since the root part is fixed to the diversified database.
    """
    reasons = []
    root_bag = td.bags.get(td.root, frozenset())
    h = Hypergraph(p.canonical_db().domain | S.domain, (a.terms for a in p.atoms))
    tdv = validate_tree_decomposition(h, td)
    if not tdv.valid:
        reasons.extend(f"decomposition: {kind} {w}" for kind, w in tdv.violations)

    def guarded(xs):
        return any(xs <= f.terms for f in S.facts)

    for a in sorted(p.atoms):
        if not guarded(a.terms):
            reasons.append(f"atom {a} is not guarded in S")
    for node, bag in td.bags.items():
        if node != td.root and not guarded(bag):
            reasons.append(f"bag {sorted(bag)} of node {node} is not guarded in S")
    root_part = S.restrict(root_bag)
    for f in sorted(S.facts - root_part.facts):
        rest = S.without([f])
        if all(any(a.terms <= g.terms for g in rest.facts) for a in p.atoms) and all(
            any(bag <= g.terms for g in rest.facts) for n, bag in td.bags.items() if n != td.root
        ):
            reasons.append(f"S is not minimal: {f} can be dropped")
    up_h = up if isinstance(up, Homomorphism) else Homomorphism(S, D0, up)
    up_h = Homomorphism(S, D0, up_h.mapping)
    if not up_h.is_valid():
        reasons.append("up is not a homomorphism from S into D0")
    elif not is_igs(up_h):
        reasons.append("up is not injective on guarded sets of S")
    elif not is_diversification(root_part, up_h.restrict(root_part.domain), D0):
        reasons.append("the root part of S is not a diversification of D0")
    if not reasons:
        chased = run_chase(omq.ontology, D0).structure
        for a in sorted(p.atoms):
            img = a.rename(up_h.mapping)
            if img not in chased.facts:
                reasons.append(f"{img} is not entailed by D0")
    return AdornmentCheck(not reasons, reasons)


def adornment_from_cover(entry: CoverCQ, e: ExtResult):
    """Rebuild (p, td, S, up) from a cover CQ's provenance.

    The root bag holds the diversified database's constants; every other fact
    of S becomes a node, joined by a maximum-overlap spanning tree.
    """
    S = Structure(entry.S)
    p = CQ(entry.image)
    root = frozenset(entry.spec.D.domain)
    extra = sorted({f.terms for f in entry.S - entry.spec.D.facts} - {root}, key=sorted)
    bags = {0: root}
    for i, b in enumerate(extra, start=1):
        bags[i] = b
    parent = {0: None}
    in_tree = {0}
    todo = set(bags) - in_tree
    while todo:
        best = max(
            ((len(bags[a] & bags[b]), -b, -a, b, a) for b in todo for a in in_tree),
        )
        _, _, _, b, a = best
        parent[b] = a
        in_tree.add(b)
        todo.discard(b)
    td = TreeDecomposition(bags, parent, 0)
    up = {c: e.to_base(c) for c in S.domain | p.canonical_db().domain}
    return p, td, S, up


# ---------------------------------------------------------------------------
# corpus-based equivalence refutation


@dataclass
class EquivResult:
    status: str  # no-counterexample | counterexample
    database: Structure | None = None
    side: str | None = None  # which OMQ holds on the counterexample
    examined: int = 0

    def __bool__(self):
        return self.status == "no-counterexample"


def check_equiv_on_corpus(q1: OMQ, q2: OMQ, corpus: Iterable[Structure]) -> EquivResult:
    if dict(q1.schema) != dict(q2.schema):
        raise SchemaError("the OMQs have different data schemas")
    if q1.ontology.kind != GDLOG or q2.ontology.kind != GDLOG:
        raise PreconditionError("corpus equivalence needs GDLog ontologies")
    n = 0
    for db in corpus:
        n += 1
        a = eval_omq(q1, db)
        b = eval_omq(q2, db)
        if a != b:
            return EquivResult("counterexample", db, "left" if a else "right", n)
    return EquivResult("no-counterexample", examined=n)
