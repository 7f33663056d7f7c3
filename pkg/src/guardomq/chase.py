"""Tuple-generating dependencies, the oblivious chase and OMQ evaluation."""
from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field

from .errors import BudgetRequired, PreconditionError, SchemaError
from .query import UCQ, as_ucq, evaluate_ucq
from .relstruct import Constant, Fact, Schema, Structure

GDLOG = "GDLog"
GTGD = "GTGD"
UNRESTRICTED = "unrestricted"


class TGD:
    """A rule ``body -> exists z. head`` over variables."""

    __slots__ = ("body", "head", "universals", "frontier", "existentials", "_kind", "_guard")

    def __init__(self, body: Iterable, head: Iterable):
        body = tuple(sorted({Fact(a[0], tuple(a[1])) for a in body}))
        head = tuple(sorted({Fact(a[0], tuple(a[1])) for a in head}))
        if not body or not head:
            raise PreconditionError("a rule needs a nonempty body and head")
        self.body = body
        self.head = head
        bvars = {v for f in body for v in f.args}
        hvars = {v for f in head for v in f.args}
        self.universals = frozenset(bvars)
        self.frontier = frozenset(bvars & hvars)
        self.existentials = frozenset(hvars - bvars)
        self._guard = next((f for f in body if self.universals <= f.terms), None)
        if self._guard is None:
            self._kind = "unguarded"
        elif self.existentials:
            self._kind = "guarded"
        else:
            self._kind = "datalog-guarded"

    @property
    def kind(self) -> str:
        return self._kind

    @property
    def guard(self) -> Fact | None:
        return self._guard

    def __eq__(self, other):
        if not isinstance(other, TGD):
            return NotImplemented
        return (self.body, self.head) == (other.body, other.head)

    def __hash__(self):
        return hash((self.body, self.head))

    def __repr__(self):
        return f"TGD({self})"

    def __str__(self):
        ex = ""
        if self.existentials:
            ex = "exists " + ",".join(sorted(self.existentials)) + ": "
        return f"{', '.join(map(str, self.body))} -> {ex}{', '.join(map(str, self.head))}"


def classify(rule: TGD) -> tuple[str, Fact | None]:
    """Return the rule's class and its guard atom (None when unguarded)."""
    return rule.kind, rule.guard


class Ontology:
    __slots__ = ("rules", "name")

    def __init__(self, rules: Iterable[TGD] = (), name: str | None = None):
        self.rules = tuple(rules)
        self.name = name

    @property
    def kind(self) -> str:
        kinds = {r.kind for r in self.rules}
        if kinds <= {"datalog-guarded"}:
            return GDLOG
        if kinds <= {"datalog-guarded", "guarded"}:
            return GTGD
        return UNRESTRICTED

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def __eq__(self, other):
        if not isinstance(other, Ontology):
            return NotImplemented
        return set(self.rules) == set(other.rules)

    def __hash__(self):
        return hash(frozenset(self.rules))

    def __repr__(self):
        return f"Ontology([{'; '.join(map(str, self.rules))}])"

    def relations(self) -> frozenset:
        return frozenset(f.relation for r in self.rules for f in r.body + r.head)


@dataclass(frozen=True)
class OMQ:
    ontology: Ontology
    schema: Schema
    query: UCQ
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "query", as_ucq(self.query))
        if not isinstance(self.schema, Schema):
            object.__setattr__(self, "schema", Schema(self.schema))

    def check_database(self, db: Structure) -> None:
        for f in db.facts:
            if f.relation not in self.schema:
                raise SchemaError(f"relation {f.relation} is not in the data schema {{{self.schema}}}")
            self.schema.check(f)

    def size(self) -> int:
        rules = sum(len(r.body) + len(r.head) for r in self.ontology)
        return rules + sum(len(p) for p in self.query)


@dataclass
class ChaseResult:
    structure: Structure
    levels: dict = field(repr=False)
    complete: bool
    rounds: int

    def level(self, k: int) -> Structure:
        """The chase prefix after ``k`` rounds."""
        return Structure(f for f, lv in self.levels.items() if lv <= k)


def _match(atoms, start, assign, index, pinned=None, pinned_facts=None):
    """Backtracking join of ``atoms`` against ``index`` (relation -> arg tuples)."""
    if start == len(atoms):
        yield assign
        return
    atom = atoms[start]
    pool = pinned_facts if start == pinned else index.get(atom.relation, ())
    for t in pool:
        new = assign
        ok = True
        for v, c in zip(atom.args, t):
            bound = new.get(v)
            if bound is None:
                if new is assign:
                    new = dict(assign)
                new[v] = c
            elif bound != c:
                ok = False
                break
        if ok:
            yield from _match(atoms, start + 1, new, index, pinned, pinned_facts)


class _NullFactory:
    def __init__(self, taken):
        self.taken = set(taken)
        self.counter = 0

    def __call__(self):
        while True:
            name = f"n{self.counter}"
            self.counter += 1
            if name not in self.taken:
                self.taken.add(name)
                return Constant(name, "chase-null")


def run_chase(
    ontology: Ontology,
    db: Structure,
    depth_budget: int | None = None,
    reverse: bool = False,
    naive: bool = False,
) -> ChaseResult:
    """Oblivious chase, semi-naive by default.

    Each round fires only triggers using at least one fact that is new since
    the previous round. Datalog-guarded ontologies run to the fixpoint; other
    ontologies need ``depth_budget`` rounds at most.
    """
    kind = ontology.kind
    if kind != GDLOG and depth_budget is None:
        raise BudgetRequired(f"ontology is {kind}; the chase needs a depth budget")
    rules = list(ontology.rules)
    if reverse:
        rules.reverse()
    levels = {f: 0 for f in db.facts}
    index = defaultdict(list)
    for f in sorted(db.facts):
        index[f.relation].append(f.args)
    delta = defaultdict(list)
    for r, lst in index.items():
        delta[r] = list(lst)
    fresh = _NullFactory(db.domain)
    fired = set()
    rnd = 0
    complete = False
    while depth_budget is None or rnd < depth_budget:
        rnd += 1
        new_facts = []
        new_set = set()
        for ri, rule in enumerate(rules):
            order = sorted(rule.universals)
            triggers = []
            if naive:
                triggers.extend(_match(rule.body, 0, {}, index))
            else:
                for j, atom in enumerate(rule.body):
                    if delta.get(atom.relation):
                        triggers.extend(_match(rule.body, 0, {}, index, j, delta[atom.relation]))
            for assign in triggers:
                key = (ri, tuple(assign[v] for v in order))
                if key in fired:
                    continue
                fired.add(key)
                full = dict(assign)
                for z in sorted(rule.existentials):
                    full[z] = fresh()
                for h in rule.head:
                    f = h.rename(full)
                    if f not in levels and f not in new_set:
                        new_set.add(f)
                        new_facts.append(f)
        if not new_facts:
            complete = True
            rnd -= 1
            break
        delta = defaultdict(list)
        for f in new_facts:
            levels[f] = rnd
            index[f.relation].append(f.args)
            delta[f.relation].append(f.args)
    result = Structure(levels)
    if kind == GDLOG:
        _assert_guarded_derivations(db, result)
    return ChaseResult(result, levels, complete, rnd)


def _assert_guarded_derivations(db, result):
    guards = [f.terms for f in db.facts]
    for f in result.facts - db.facts:
        if not any(f.terms <= g for g in guards):
            raise AssertionError(f"derived fact {f} is not inside a guarded set of the input")


def eval_omq(omq: OMQ, db: Structure, depth_budget: int | None = None) -> bool | None:
    """True/False when decided, None when a truncated chase did not find a match."""
    omq.check_database(db)
    res = run_chase(omq.ontology, db, depth_budget)
    if evaluate_ucq(omq.query, res.structure):
        return True
    return False if res.complete else None


def chase_structure(ontology: Ontology, db: Structure, depth_budget: int | None = None) -> Structure:
    return run_chase(ontology, db, depth_budget).structure


def atomic_consequences(ontology: Ontology, db: Structure, targets) -> set[Fact]:
    if ontology.kind != GDLOG:
        raise PreconditionError("atomic consequences are only computed for GDLog ontologies")
    targets = frozenset(targets)
    return {f for f in run_chase(ontology, db).structure.facts if f.terms <= targets}


def entails_atom(ontology: Ontology, db: Structure, atom: Fact) -> bool:
    return atom in run_chase(ontology, db).structure.facts
