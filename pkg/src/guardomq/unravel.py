"""Guarded unravelings, ext(), diversifications and query-initial checks."""
from __future__ import annotations

import itertools
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field

from .chase import GDLOG, OMQ, eval_omq, run_chase
from .errors import BudgetExceeded, PreconditionError
from .query import CQ, contractions, evaluate_cq, evaluate_ucq
from .relstruct import (
    Constant,
    Fact,
    Homomorphism,
    Structure,
    core_of,
    find_isomorphism,
    is_igs,
    is_injective_only,
    iter_homomorphisms,
    kernel,
    maximal_guarded_sets,
)
from .width import TreeDecomposition

DEFAULT_DEPTH_CAP = 4


def _as_hom(up, source: Structure, target: Structure) -> Homomorphism:
    if isinstance(up, Homomorphism):
        return Homomorphism(source, target, up.mapping)
    return Homomorphism(source, target, up)


def diversification_groups(db: Structure) -> list[frozenset]:
    """Constant sets a diversification map must be injective on."""
    return [f.terms for f in db.facts] + [kernel(db)]


# ---------------------------------------------------------------------------
# guarded unraveling


@dataclass
class UnravelingResult:
    structure: Structure
    decomposition: TreeDecomposition
    root: int
    depth: int
    stabilized: bool
    certified: bool
    origin_map: dict  # constant -> constant of the unravelled database
    sequences: dict = field(repr=False)  # node -> tuple of maximal guarded sets
    complete_tree: bool = False


class _CopyNamer:
    def __init__(self, taken):
        self.taken = set(taken)
        self.counts = defaultdict(int)

    def __call__(self, original):
        while True:
            self.counts[original] += 1
            name = f"{original}'{self.counts[original]}"
            if name not in self.taken:
                self.taken.add(name)
                return Constant(name, "unravel-copy")


def _unravel_tree(db: Structure, root_set: frozenset, depth: int):
    """Build the truncated unraveling; returns facts, bags, parents, origin map."""
    mgs = maximal_guarded_sets(db)
    namer = _CopyNamer(db.domain)
    facts = set(db.restrict(root_set).facts)
    bags = {0: root_set}
    parent = {0: None}
    sequences = {0: (root_set,)}
    origin = {c: c for c in root_set}
    # node -> (tail, mapping tail constant -> name used at that node)
    frontier = [(0, root_set, {c: c for c in root_set})]
    nxt_id = 1
    grew = False
    for _ in range(depth):
        new_frontier = []
        for node, tail, mapping in frontier:
            for b2 in mgs:
                if b2 == tail or not (b2 & tail):
                    continue
                m2 = {}
                for c in sorted(b2):
                    if c in tail:
                        m2[c] = mapping[c]
                    else:
                        m2[c] = namer(c)
                        origin[m2[c]] = c
                for f in db.restrict(b2).facts:
                    facts.add(f.rename(m2))
                bags[nxt_id] = frozenset(m2.values())
                parent[nxt_id] = node
                sequences[nxt_id] = sequences[node] + (b2,)
                new_frontier.append((nxt_id, b2, m2))
                nxt_id += 1
        frontier = new_frontier
        if not frontier:
            break
    else:
        grew = bool(frontier) and any(
            b2 != tail and (b2 & tail) for _, tail, _ in frontier for b2 in mgs
        )
    complete = not grew
    return Structure(facts, db.schema), bags, parent, sequences, origin, complete


def _subquery_gap(omq: OMQ, small_chase: Structure, big_chase: Structure):
    """First sub-query of a disjunct entailed by ``big`` but not by ``small``."""
    for p in omq.query:
        atoms = sorted(p.atoms)
        known = []  # atom sets already shown to hold in small
        for k in range(len(atoms), 0, -1):
            for combo in itertools.combinations(atoms, k):
                s = frozenset(combo)
                if any(s <= kset for kset in known):
                    continue
                sub = CQ(combo)
                if evaluate_cq(sub, big_chase):
                    if evaluate_cq(sub, small_chase):
                        known.append(s)
                    else:
                        return sub
    return None


def guarded_unraveling(
    db: Structure,
    root_set,
    depth: int | None = None,
    omq: OMQ | None = None,
    depth_cap: int = DEFAULT_DEPTH_CAP,
) -> UnravelingResult:
    """Guarded unraveling of ``db`` at ``root_set`` truncated at ``depth``.

    With ``depth=None`` the smallest depth from 1 to ``depth_cap`` is used at
    which the truncation derives every chase fact of the full database over
    the root set and either entails every sub-query the full database entails
    (``certified``) or entails the same sub-queries as one level shallower
    (``stabilized``). Past the cap ``stabilized`` is False.
    """
    root_set = frozenset(root_set)
    if not any(root_set <= f.terms for f in db.facts):
        raise PreconditionError(f"{sorted(root_set)} is not a guarded set of the database")
    ontology = omq.ontology if omq is not None else None
    if ontology is not None and ontology.kind != GDLOG:
        raise PreconditionError("unraveling checks need a GDLog ontology")

    def build(d):
        return _unravel_tree(db, root_set, d)

    def chase_of(s):
        return run_chase(ontology, s).structure if ontology is not None else s

    full_chase = chase_of(db) if omq is not None else None
    root_facts = (
        {f for f in full_chase.facts if f.terms <= root_set} if full_chase is not None else set()
    )

    def certified_at(struct_chase):
        if omq is None:
            return False
        if not root_facts <= struct_chase.facts:
            return False
        return _subquery_gap(omq, struct_chase, full_chase) is None

    if depth is not None:
        built = build(depth)
        struct = built[0]
        stabilized = certified = built[5]
        if omq is not None:
            ch = chase_of(struct)
            certified = built[5] or certified_at(ch)
            if depth == 0:
                stabilized = certified
            else:
                prev = chase_of(build(depth - 1)[0])
                same_root = {f for f in prev.facts if f.terms <= root_set} == {
                    f for f in ch.facts if f.terms <= root_set
                }
                stabilized = certified or (same_root and _subquery_gap(omq, prev, ch) is None)
        return _result(built, depth, stabilized, certified)

    prev_chase = chase_of(build(0)[0])
    last = None
    for d in range(1, max(1, depth_cap) + 1):
        built = build(d)
        ch = chase_of(built[0])
        if built[5] or certified_at(ch):
            return _result(built, d, True, True)
        stable = (
            omq is not None
            and root_facts <= ch.facts
            and root_facts <= prev_chase.facts
            and _subquery_gap(omq, prev_chase, ch) is None
        )
        if stable:
            return _result(built, d, True, False)
        last = (built, d)
        prev_chase = ch
    built, d = last
    return _result(built, d, False, False)


def _result(built, depth, stabilized, certified):
    struct, bags, parent, sequences, origin, complete = built
    td = TreeDecomposition(dict(bags), dict(parent), 0)
    return UnravelingResult(struct, td, 0, depth, stabilized, certified, origin, sequences, complete)


# ---------------------------------------------------------------------------
# ext


@dataclass
class Attachment:
    guarded_set: frozenset
    image: frozenset  # up(guarded_set)
    added: frozenset  # constants introduced by this attachment
    to_base: dict  # added constant -> constant of the base database
    unraveling: UnravelingResult = field(repr=False)


@dataclass
class ExtResult:
    structure: Structure
    database: Structure
    base: Structure
    up: Homomorphism
    attachments: list
    to_base: Homomorphism  # the whole extension mapped into the base
    depth: int | None
    stabilized: bool

    def attachment_of(self, constant):
        for i, att in enumerate(self.attachments):
            if constant in att.added:
                return i
        return None


def ext(
    db: Structure,
    up,
    base: Structure,
    omq: OMQ | None = None,
    depth: int | None = None,
    cache: dict | None = None,
    depth_cap: int = DEFAULT_DEPTH_CAP,
) -> ExtResult:
    """Glue to every maximal guarded set of ``db`` a renamed unraveling of ``base``."""
    up = _as_hom(up, db, base)
    if not up.is_valid():
        raise PreconditionError("up is not a homomorphism into the base database")
    if not is_igs(up):
        raise PreconditionError("up is not injective on guarded sets")
    if depth is None and omq is None:
        raise PreconditionError("ext needs a depth or an OMQ to choose one")
    cache = {} if cache is None else cache
    namer = _CopyNamer(db.domain)
    facts = set(db.facts)
    to_base = dict(up.mapping)
    attachments = []
    stabilized = True
    for gs in maximal_guarded_sets(db):
        image = frozenset(up(c) for c in gs)
        key = (image, depth, id(omq), depth_cap)
        unr = cache.get(key)
        if unr is None:
            unr = guarded_unraveling(base, image, depth, omq, depth_cap)
            cache[key] = unr
        stabilized &= unr.stabilized
        back = {up(c): c for c in gs}
        rename = {}
        added = {}
        for c in sorted(unr.structure.domain):
            if c in back:
                rename[c] = back[c]
            else:
                new = namer(unr.origin_map[c])
                rename[c] = new
                added[new] = unr.origin_map[c]
        for f in unr.structure.facts:
            facts.add(f.rename(rename))
        to_base.update(added)
        attachments.append(Attachment(gs, image, frozenset(added), added, unr))
    struct = Structure(facts, db.schema.union(base.schema))
    used_depth = depth if depth is not None else max((a.unraveling.depth for a in attachments), default=0)
    return ExtResult(
        struct, db, base, up, attachments, Homomorphism(struct, base, to_base), used_depth, stabilized
    )


# ---------------------------------------------------------------------------
# diversifications


def is_diversification(db: Structure, up, base: Structure) -> bool:
    up = _as_hom(up, db, base)
    return up.is_valid() and is_igs(up) and up.is_injective_on(kernel(db))


def diversification_maps(db: Structure, base: Structure):
    """All maps witnessing ``db`` as a diversification of ``base``."""
    return iter_homomorphisms(db, base, distinct=diversification_groups(db))


def precedes(db: Structure, base: Structure, budget: int | None = None) -> Homomorphism | None:
    """A witness for db ⪯ base, or None when there is none."""
    for n, h in enumerate(diversification_maps(db, base)):
        if budget is not None and n >= budget:
            raise BudgetExceeded(f"more than {budget} candidate maps")
        return h
    return None


def strictly_precedes(a: Structure, b: Structure) -> bool:
    return precedes(a, b) is not None and precedes(b, a) is None


def in_div(db, up, base, omq: OMQ, depth: int | None = None, cache=None) -> bool:
    if not is_diversification(db, up, base):
        raise PreconditionError("(db, up) is not a diversification of the base database")
    if not db.facts:
        return False
    e = ext(db, up, base, omq, depth, cache)
    return bool(eval_omq(omq, e.structure))


@dataclass
class DiversificationWitness:
    D: Structure
    up: Homomorphism
    D0: Structure

    def __repr__(self):
        return f"DiversificationWitness(D={self.D}, up={dict(self.up.mapping)})"


# ---------------------------------------------------------------------------
# bounded enumeration of databases mapping into a given one


def _labelings(domain, k):
    """Non-decreasing tuples of length k over the sorted domain."""
    return itertools.combinations_with_replacement(sorted(domain), k)


def _label_names(labels, fresh_prefix=None):
    """Names for the k labels: the first copy keeps its target's name."""
    names = []
    seen = set()
    extra = 0
    for t in labels:
        if t not in seen:
            seen.add(t)
            names.append(t)
        elif fresh_prefix is None:
            names.append(Constant(f"{t}~{len(names)}", "fresh-diversify"))
        else:
            names.append(Constant(f"{fresh_prefix}{extra}", "fresh-diversify"))
            extra += 1
    return names


def preimage(db: Structure, names, labels, igs_only=False) -> list[Fact]:
    """All facts over ``names`` whose image under names->labels lies in ``db``."""
    g = dict(zip(names, labels))
    inv = defaultdict(list)
    for n, t in g.items():
        inv[t].append(n)
    out = []
    for f in sorted(db.facts):
        pools = [inv.get(a, []) for a in f.args]
        if any(not p for p in pools):
            continue
        for combo in itertools.product(*pools):
            if igs_only and len(set(combo)) != len(set(f.args)):
                continue
            out.append(Fact(f.relation, combo))
    return sorted(set(out))


def _covering_subsets(facts, names, min_size=1):
    names = frozenset(names)
    for k in range(min_size, len(facts) + 1):
        for combo in itertools.combinations(facts, k):
            if frozenset(a for f in combo for a in f.args) == names:
                yield combo


# ---------------------------------------------------------------------------
# query-initial databases


def io_signature(omq: OMQ, chase_structure: Structure, pool=None) -> frozenset:
    """Contractions (of any disjunct) that map injectively only into the chase."""
    pool = pool if pool is not None else contraction_pool(omq)
    return frozenset(p for p in pool if is_injective_only(p.canonical_db(), chase_structure))


def contraction_pool(omq: OMQ) -> list[CQ]:
    seen = []
    for d in omq.query:
        for c in contractions(d):
            if c not in seen:
                seen.append(c)
    return seen


@dataclass
class QiVerdict:
    status: str  # qi-within-bound | not-qi | unknown
    bound: int
    witness: Structure | None = None
    contraction: CQ | None = None
    discrepancies: tuple = ()
    witness_map: dict | None = None
    examined: int = 0

    def __bool__(self):
        return self.status == "qi-within-bound"


def is_qi_bounded(db: Structure, omq: OMQ, bound: int, budget: int | None = None) -> QiVerdict:
    """Search databases with at most ``bound`` constants that map into ``db``.

    Candidates are enumerated up to renaming: a non-decreasing labelling of
    k fresh names by constants of ``db`` fixes the preimage structure, and
    every subset of it using all k names is a candidate.
    """
    if omq.ontology.kind != GDLOG:
        raise PreconditionError("the qi check needs a GDLog ontology")
    omq.check_database(db)
    if not eval_omq(omq, db):
        raise PreconditionError("the database does not entail the OMQ")
    pool = contraction_pool(omq)
    reference = io_signature(omq, run_chase(omq.ontology, db).structure, pool)
    examined = 0
    for k in range(1, bound + 1):
        for labels in _labelings(db.domain, k):
            names = [Constant(f"x{i}") for i in range(k)]
            cand = preimage(db, names, labels)
            if not cand or not evaluate_ucq(omq.query, run_chase(omq.ontology, Structure(cand)).structure):
                continue
            for combo in _covering_subsets(cand, names):
                examined += 1
                if budget is not None and examined > budget:
                    return QiVerdict("unknown", bound, examined=examined)
                dp = Structure(combo, omq.schema)
                ch = run_chase(omq.ontology, dp).structure
                if not evaluate_ucq(omq.query, ch):
                    continue
                sig = io_signature(omq, ch, pool)
                if sig != reference:
                    diff = tuple(p for p in pool if (p in sig) != (p in reference))
                    return QiVerdict(
                        "not-qi", bound, dp, diff[0], diff, dict(zip(names, labels)), examined
                    )
    return QiVerdict("qi-within-bound", bound, examined=examined)


# ---------------------------------------------------------------------------
# minimal diversifications


@dataclass
class MdivReport:
    witnesses: list
    searched: int
    in_div: int
    budget: int
    note: str = "minimal relative to the searched candidates only"


def enumerate_diversifications(base: Structure, budget: int):
    """All diversifications of ``base`` with at most ``budget`` constants, up to renaming."""
    for k in range(1, budget + 1):
        for labels in _labelings(base.domain, k):
            names = _label_names(labels, fresh_prefix="f")
            cand = preimage(base, names, labels, igs_only=True)
            g = dict(zip(names, labels))
            for combo in _covering_subsets(cand, names):
                d = Structure(combo, base.schema)
                ker = kernel(d)
                if len({g[c] for c in ker}) != len(ker):
                    continue
                yield d, Homomorphism(d, base, g)


def minimal_diversifications_bounded(
    base: Structure,
    omq: OMQ,
    domain_budget: int,
    depth: int | None = None,
) -> MdivReport:
    omq.check_database(base)
    if not eval_omq(omq, base):
        raise PreconditionError("the base database does not entail the OMQ")
    cache = {}
    members = []
    searched = 0
    for d, up in enumerate_diversifications(base, domain_budget):
        searched += 1
        if in_div(d, up, base, omq, depth, cache):
            members.append((d, up))
    n_div = len(members)
    cores = [(d, up) for d, up in members if len(core_of(d)[0]) == len(d)]
    minimal = []
    for d, up in cores:
        below = any(
            precedes(d2, d) is not None and precedes(d, d2) is None for d2, _ in members if d2 != d
        )
        if not below:
            minimal.append((d, up))
    unique = []
    for d, up in sorted(minimal, key=lambda x: (len(x[0].domain), len(x[0]), str(x[0]))):
        if not any(find_isomorphism(d, u.D) is not None for u in unique):
            unique.append(DiversificationWitness(d, up, base))
    return MdivReport(unique, searched, n_div, domain_budget)


# ---------------------------------------------------------------------------
# constructive diversification from a query homomorphism


@dataclass
class DiversifyResult:
    D: Structure
    down: Homomorphism
    violations: list
    ext: ExtResult | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return not self.violations


def diversify_from_hom(
    omq: OMQ,
    db: Structure,
    up,
    base: Structure,
    h: Mapping,
    p: CQ,
    ext_result: ExtResult | None = None,
    depth: int | None = None,
    strict: bool = True,
) -> DiversifyResult:
    """Build a diversification of ``db`` kept alive by a query match ``h``.

    ``h`` maps the variables of ``p`` into the chase of ``ext(db, up, base)``.
    Facts of ``db`` touching ran(h) are kept with their untouched constants
    renamed apart; every attachment hit by ``h`` gets one fresh copy of its
    guard fact in which only hit constants keep their names.
    """
    up = _as_hom(up, db, base)
    e = ext_result if ext_result is not None else ext(db, up, base, omq, depth)
    chase_ext = run_chase(omq.ontology, e.structure).structure
    hh = Homomorphism(p.canonical_db(), chase_ext, h)
    if not hh.is_valid():
        raise PreconditionError("h is not a homomorphism into the chase of the extension")
    rng = frozenset(h[v] for v in p.variables)
    dom_d = db.domain
    hit = rng & dom_d
    groups = defaultdict(list)  # attachment index -> variables
    for v in p.variables:
        c = h[v]
        if c in dom_d:
            continue
        i = e.attachment_of(c)
        if i is None:
            raise PreconditionError(f"{c} is neither in the database nor in an attachment")
        groups[i].append(v)

    counter = itertools.count()
    taken = set(dom_d) | set(e.structure.domain)

    def fresh(original):
        while True:
            name = f"{original}^{next(counter)}"
            if name not in taken:
                taken.add(name)
                return Constant(name, "fresh-diversify"), original

    down = {c: c for c in hit}
    facts = []
    for f in sorted(db.facts):
        if not (f.terms & rng):
            continue
        renamed = {}
        for c in f.terms - rng:
            new, orig = fresh(c)
            renamed[c] = new
            down[new] = orig
        facts.append(f.rename(renamed))
    for i in sorted(groups):
        gs = e.attachments[i].guarded_set
        b = {}
        for c in gs:
            if c in rng:
                b[c] = c
            else:
                new, orig = fresh(c)
                b[c] = new
                down[new] = orig
        guard = next(f for f in sorted(db.facts) if f.terms == gs)
        renamed = dict(b)
        for c in guard.terms - gs:
            new, orig = fresh(c)
            renamed[c] = new
            down[new] = orig
        facts.append(guard.rename(renamed))
    d_new = Structure(facts, db.schema)
    down = {c: down[c] for c in d_new.domain}
    down_h = Homomorphism(d_new, db, down)
    violations = []
    ker = kernel(d_new)
    if any(down[c] != c for c in ker):
        violations.append("down is not the identity on the kernel")
    if not is_diversification(d_new, down_h, db):
        violations.append("(D', down) is not a diversification of D")
    if not ker <= hit:
        violations.append("kernel of D' is not inside ran(h) ∩ adom(D)")
    composed = down_h.then(up)
    if not d_new.facts:
        violations.append("D' is empty")
    elif not is_igs(composed):
        violations.append("up o down is not injective on guarded sets")
    else:
        e2 = ext(d_new, composed, base, omq, e.depth)
        if not eval_omq(omq, e2.structure):
            violations.append("ext(D', up o down, D0) does not entail the OMQ")
    if strict and violations:
        raise AssertionError("; ".join(violations))
    return DiversifyResult(d_new, down_h, violations, e)
