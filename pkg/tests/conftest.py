import random
import sys
from pathlib import Path

import pytest

from guardomq.chase import TGD, Ontology
from guardomq.relstruct import Fact, Schema, Structure

DATA = Path(__file__).resolve().parent.parent / "data"


def random_structure(rng: random.Random, schema: dict, n_const: int, n_facts: int, prefix="c") -> Structure:
    consts = [f"{prefix}{k}" for k in range(n_const)]
    rels = sorted(schema.items())
    facts = set()
    for _ in range(n_facts):
        rel, arity = rng.choice(rels)
        facts.add(Fact(rel, tuple(rng.choice(consts) for _ in range(arity))))
    return Structure(facts, Schema(schema))


def random_gdlog(rng: random.Random, edb: dict, idb: dict, n_rules: int) -> Ontology:
    """Random guarded Datalog rules; the guard is an EDB atom over all body variables."""
    rels = sorted({**edb, **idb}.items())
    rules = []
    for _ in range(n_rules):
        g_rel, g_ar = rng.choice(sorted(edb.items()))
        vs = [f"X{k}" for k in range(g_ar)]
        guard = Fact(g_rel, tuple(rng.choice(vs) for _ in range(g_ar)))
        used = sorted(guard.terms)
        body = [guard]
        for _ in range(rng.randint(0, 2)):
            rel, ar = rng.choice(rels)
            body.append(Fact(rel, tuple(rng.choice(used) for _ in range(ar))))
        h_rel, h_ar = rng.choice(sorted(idb.items()))
        head = Fact(h_rel, tuple(rng.choice(used) for _ in range(h_ar)))
        rules.append(TGD(body, [head]))
    return Ontology(rules)


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
