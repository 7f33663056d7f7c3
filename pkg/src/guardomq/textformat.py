"""Plain-text formats for structures, ontologies, queries and OMQs.

A file is a sequence of sections. A section starts with a header line
``@structure NAME``, ``@ontology NAME``, ``@query NAME``, ``@omq NAME`` or
``@chardb NAME``; text before the first header belongs to an implicit section
whose kind comes from the file extension and whose name is the file stem.
Statements end with ``.``; ``%`` starts a comment.

    @structure D2
    schema R/2, U/3, V/2, W/3.
    R(a,b). W(d,b,c). U(c,d,a). V(c,a).

    @ontology O
    U(X,Y,Z), V(X,Z) -> T(X,Z).
    W(X,Y,Z) -> S(Y,Z).
    R(X,Y) -> exists Z: S(Y,Z).

    @query q
    q :- R(X,Y), S(Y,Z), T(Z,X).

    @omq Q
    schema R/2, U/3, V/2, W/3.
    ontology O.
    query q.

    @chardb C
    database D.  base D2.  map a->a, b->b, c->c, d->d.  depth 2.

Inside facts every term is a constant; inside rules and queries every term is
a variable, so case carries no meaning.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .chase import OMQ, TGD, Ontology
from .errors import ParseError, SchemaError
from .query import CQ, UCQ
from .relstruct import Fact, Schema, Structure

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<comment>%[^\n]*)|(?P<arrow>->)|(?P<turn>:-)"
    r"|(?P<punct>[(),.:/])|(?P<ident>[A-Za-z0-9_'\[\]|~#^]+)"
)

SECTION_KINDS = ("structure", "ontology", "query", "omq", "chardb")
_EXTENSIONS = {
    ".db": "structure", ".facts": "structure", ".rules": "ontology", ".ont": "ontology",
    ".cq": "query", ".ucq": "query", ".q": "query", ".omq": "omq", ".chardb": "chardb",
}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line0: int = 1, path=None) -> list[Token]:
    out = []
    pos = 0
    line, col = line0, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, path)
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            out.append(Token(s if kind == "punct" else kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    return out


def _statements(tokens: list[Token], path):
    stmt = []
    depth = 0
    for t in tokens:
        if t.kind == "(":
            depth += 1
        elif t.kind == ")":
            depth -= 1
        if t.kind == "." and depth == 0:
            if stmt:
                yield stmt
            stmt = []
        else:
            stmt.append(t)
    if stmt:
        t = stmt[-1]
        raise ParseError("statement is missing its terminating '.'", t.line, t.col, path)


class _Cursor:
    def __init__(self, tokens, path):
        self.toks = tokens
        self.i = 0
        self.path = path

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def done(self):
        return self.i >= len(self.toks)

    def error(self, msg, tok=None):
        tok = tok or self.peek() or (self.toks[-1] if self.toks else None)
        if tok is None:
            return ParseError(msg, path=self.path)
        return ParseError(msg, tok.line, tok.col, self.path)

    def expect(self, kind):
        t = self.peek()
        if t is None or t.kind != kind:
            found = "end of statement" if t is None else repr(t.text)
            raise self.error(f"expected {kind!r}, found {found}")
        self.i += 1
        return t

    def accept(self, kind):
        t = self.peek()
        if t is not None and t.kind == kind:
            self.i += 1
            return t
        return None

    def atom(self) -> Fact:
        name = self.expect("ident")
        self.expect("(")
        args = [self.expect("ident").text]
        while self.accept(","):
            args.append(self.expect("ident").text)
        self.expect(")")
        return Fact(name.text, tuple(args))

    def atoms(self, stop=()) -> list[Fact]:
        out = [self.atom()]
        while self.accept(","):
            out.append(self.atom())
        if not self.done() and self.peek().kind not in stop:
            raise self.error(f"unexpected {self.peek().text!r}")
        return out


@dataclass
class ChardbEntry:
    name: str
    database: str
    base: str
    mapping: dict | None = None
    depth: int | None = None


@dataclass
class Workspace:
    structures: dict = field(default_factory=dict)
    ontologies: dict = field(default_factory=dict)
    queries: dict = field(default_factory=dict)
    omqs: dict = field(default_factory=dict)
    chardbs: dict = field(default_factory=dict)

    def lookup(self, kind: str, name: str):
        registry = getattr(self, kind)
        if name not in registry:
            known = ", ".join(sorted(registry)) or "none"
            raise KeyError(f"no {kind[:-1]} named {name!r} (known: {known})")
        return registry[name]

    def merge(self, other: Workspace):
        for kind in ("structures", "ontologies", "queries", "omqs", "chardbs"):
            getattr(self, kind).update(getattr(other, kind))


def _keyword(stmt, word):
    return stmt and stmt[0].kind == "ident" and stmt[0].text == word and (
        len(stmt) == 1 or stmt[1].kind != "("
    )


def _parse_schema(cur: _Cursor) -> Schema:
    cur.expect("ident")
    arities = {}
    while True:
        name = cur.expect("ident")
        cur.expect("/")
        num = cur.expect("ident")
        if not num.text.isdigit() or int(num.text) < 1:
            raise cur.error(f"arity of {name.text} must be a positive integer", num)
        if name.text in arities and arities[name.text] != int(num.text):
            raise cur.error(f"relation {name.text} declared twice with different arities", name)
        arities[name.text] = int(num.text)
        if not cur.accept(","):
            break
    if not cur.done():
        raise cur.error(f"unexpected {cur.peek().text!r}")
    return Schema(arities)


def _parse_rule(cur: _Cursor) -> TGD:
    body = cur.atoms(stop=("arrow",))
    cur.expect("arrow")
    declared = set()
    t0, t1 = cur.peek(), cur.peek(1)
    if t0 is not None and t0.text == "exists" and t1 is not None and t1.kind == "ident":
        cur.i += 1
        declared.add(cur.expect("ident").text)
        while cur.accept(","):
            declared.add(cur.expect("ident").text)
        cur.expect(":")
    head = cur.atoms()
    rule = TGD(body, head)
    clash = declared & rule.universals
    if clash:
        raise cur.error(f"existential variable {sorted(clash)[0]} also occurs in the body", t0)
    return rule


def _parse_disjunct(cur: _Cursor) -> CQ:
    name = cur.expect("ident")
    cur.expect("turn")
    return CQ(cur.atoms(), name.text)


def _reference(cur: _Cursor) -> str:
    cur.expect("ident")
    ref = cur.expect("ident").text
    if not cur.done():
        raise cur.error(f"unexpected {cur.peek().text!r}")
    return ref


class _SectionParser:
    def __init__(self, ws: Workspace, errors: list, path):
        self.ws = ws
        self.errors = errors
        self.path = path

    def run(self, kind, name, header_tok, tokens):
        handler = getattr(self, f"_{kind}")
        try:
            statements = list(_statements(tokens, self.path))
        except ParseError as e:
            self.errors.append(e)
            return
        handler(name, header_tok, statements)

    def _each(self, statements, fn):
        for stmt in statements:
            cur = _Cursor(stmt, self.path)
            try:
                fn(stmt, cur)
            except ParseError as e:
                self.errors.append(e)
            except SchemaError as e:
                self.errors.append(ParseError(str(e), stmt[0].line, stmt[0].col, self.path))

    def _structure(self, name, tok, statements):
        schema = None
        facts = []

        def one(stmt, cur):
            nonlocal schema
            if _keyword(stmt, "schema"):
                schema = _parse_schema(cur)
                return
            for f in cur.atoms():
                if schema is not None:
                    if f.relation not in schema:
                        raise cur.error(f"undeclared relation {f.relation}", stmt[0])
                    if schema[f.relation] != len(f.args):
                        raise cur.error(
                            f"arity mismatch: {f} has {len(f.args)} arguments, "
                            f"{f.relation} is declared with arity {schema[f.relation]}",
                            stmt[0],
                        )
                facts.append((f, stmt[0]))

        self._each(statements, one)
        try:
            if schema is None:
                schema = Schema.infer(f for f, _ in facts)
            self.ws.structures[name] = Structure((f for f, _ in facts), schema)
        except SchemaError as e:
            self.errors.append(ParseError(str(e), tok.line, tok.col, self.path))

    def _ontology(self, name, tok, statements):
        rules = []
        self._each(statements, lambda stmt, cur: rules.append(_parse_rule(cur)))
        self.ws.ontologies[name] = Ontology(rules, name)

    def _query(self, name, tok, statements):
        ds = []
        self._each(statements, lambda stmt, cur: ds.append(_parse_disjunct(cur)))
        if ds:
            self.ws.queries[name] = UCQ(ds, name)
        else:
            self.errors.append(ParseError(f"query {name} has no disjuncts", tok.line, tok.col, self.path))

    def _omq(self, name, tok, statements):
        entry = {"schema": None, "ontology": None, "query": None, "rules": [], "disjuncts": []}

        def one(stmt, cur):
            if _keyword(stmt, "schema"):
                entry["schema"] = _parse_schema(cur)
            elif _keyword(stmt, "ontology"):
                entry["ontology"] = (_reference(cur), stmt[0])
            elif _keyword(stmt, "query"):
                entry["query"] = (_reference(cur), stmt[0])
            elif any(t.kind == "turn" for t in stmt):
                entry["disjuncts"].append(_parse_disjunct(cur))
            else:
                entry["rules"].append(_parse_rule(cur))

        self._each(statements, one)
        entry["tok"] = tok
        self.ws.omqs[name] = entry

    def _chardb(self, name, tok, statements):
        entry = ChardbEntry(name, "", "")

        def one(stmt, cur):
            if _keyword(stmt, "database"):
                entry.database = _reference(cur)
            elif _keyword(stmt, "base"):
                entry.base = _reference(cur)
            elif _keyword(stmt, "depth"):
                d = _reference(cur)
                if not d.isdigit():
                    raise cur.error("depth must be a nonnegative integer", stmt[1])
                entry.depth = int(d)
            elif _keyword(stmt, "map"):
                cur.expect("ident")
                mapping = {}
                while True:
                    src = cur.expect("ident").text
                    cur.expect("arrow")
                    mapping[src] = cur.expect("ident").text
                    if not cur.accept(","):
                        break
                if not cur.done():
                    raise cur.error(f"unexpected {cur.peek().text!r}")
                entry.mapping = mapping
            else:
                raise cur.error(f"unknown chardb statement starting with {stmt[0].text!r}", stmt[0])

        self._each(statements, one)
        if not entry.database or not entry.base:
            self.errors.append(
                ParseError(f"chardb {name} needs both 'database' and 'base'", tok.line, tok.col, self.path)
            )
            return
        entry.tok = tok
        self.ws.chardbs[name] = entry


def _split_sections(text: str, default_kind, default_name, path):
    sections = []
    current = [default_kind, default_name, None, 1, []]
    lines = text.split("\n")
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("@"):
            sections.append(current)
            parts = stripped[1:].split()
            tok = Token("header", stripped, lineno, line.index("@") + 1)
            if len(parts) != 2 or parts[0] not in SECTION_KINDS:
                raise ParseError(
                    "section header must be '@<kind> <name>' with kind in " + ", ".join(SECTION_KINDS),
                    lineno, tok.col, path,
                )
            current = [parts[0], parts[1], tok, lineno + 1, []]
        else:
            current[4].append(line)
    sections.append(current)
    return sections


def parse_text(text: str, path=None, default_kind=None, default_name="main", ws=None, errors=None) -> Workspace:
    """Parse one document into a workspace (references are resolved by :func:`resolve`)."""
    own = errors is None
    errors = [] if own else errors
    ws = ws if ws is not None else Workspace()
    try:
        sections = _split_sections(text, default_kind, default_name, path)
    except ParseError as e:
        errors.append(e)
        sections = []
    parser = _SectionParser(ws, errors, path)
    for kind, name, tok, start, body in sections:
        body_text = "\n".join(body)
        try:
            tokens = tokenize(body_text, start, path)
        except ParseError as e:
            errors.append(e)
            continue
        if not tokens:
            if kind is not None and tok is not None:
                parser.run(kind, name, tok or Token("header", "", start, 1), tokens)
            continue
        if kind is None:
            errors.append(ParseError("content before the first section header", tokens[0].line, tokens[0].col, path))
            continue
        parser.run(kind, name, tok or Token("header", "", start, 1), tokens)
    if own:
        resolve(ws, errors)
        if errors:
            raise _combined(errors)
    return ws


def _combined(errors):
    if len(errors) == 1:
        return errors[0]
    err = ParseError("; ".join(str(e) for e in errors))
    err.errors = list(errors)
    return err


def resolve(ws: Workspace, errors: list) -> None:
    """Turn raw OMQ entries into :class:`OMQ` objects and check references."""
    for name, entry in list(ws.omqs.items()):
        if isinstance(entry, OMQ):
            continue
        tok = entry["tok"]
        loc = (tok.line, tok.col)
        rules = list(entry["rules"])
        if entry["ontology"] is not None:
            ref, t = entry["ontology"]
            if ref not in ws.ontologies:
                errors.append(ParseError(f"dangling reference to ontology {ref}", t.line, t.col))
                del ws.omqs[name]
                continue
            rules = list(ws.ontologies[ref].rules) + rules
        disjuncts = list(entry["disjuncts"])
        if entry["query"] is not None:
            ref, t = entry["query"]
            if ref not in ws.queries:
                errors.append(ParseError(f"dangling reference to query {ref}", t.line, t.col))
                del ws.omqs[name]
                continue
            disjuncts = list(ws.queries[ref].disjuncts) + disjuncts
        if entry["schema"] is None or not disjuncts:
            errors.append(ParseError(f"omq {name} needs a schema and a query", *loc))
            del ws.omqs[name]
            continue
        ws.omqs[name] = OMQ(Ontology(rules, name), entry["schema"], UCQ(disjuncts, name), name)
    for name, entry in ws.chardbs.items():
        tok = getattr(entry, "tok", None)
        for ref in (entry.database, entry.base):
            if ref not in ws.structures:
                line, col = (tok.line, tok.col) if tok else (None, None)
                errors.append(ParseError(f"chardb {name}: dangling reference to structure {ref}", line, col))


def parse_workspace(paths) -> Workspace:
    """Load several files into one workspace; raises ParseError listing every problem."""
    ws = Workspace()
    errors = []
    for p in paths:
        p = Path(p)
        try:
            text = p.read_text()
        except OSError as e:
            errors.append(ParseError(f"cannot read file: {e.strerror}", path=str(p)))
            continue
        parse_text(text, str(p), _EXTENSIONS.get(p.suffix), p.stem, ws, errors)
    resolve(ws, errors)
    if errors:
        raise _combined(errors)
    return ws


# ---------------------------------------------------------------------------
# serialization


def _atoms(atoms) -> str:
    return ", ".join(str(a) for a in sorted(atoms))


def serialize_structure(s: Structure, name="D", with_schema=True) -> str:
    lines = [f"@structure {name}"]
    if with_schema and len(s.schema):
        lines.append(f"schema {s.schema}.")
    lines.extend(f"{f}." for f in s)
    return "\n".join(lines) + "\n"


def serialize_rule(r: TGD) -> str:
    return str(r) + "."


def serialize_ontology(o: Ontology, name="O") -> str:
    return "\n".join([f"@ontology {name}"] + [serialize_rule(r) for r in o.rules]) + "\n"


def serialize_ucq(q: UCQ, name="q") -> str:
    return "\n".join([f"@query {name}"] + [f"{name} :- {_atoms(d.atoms)}." for d in q]) + "\n"


def serialize_omq(omq: OMQ, name="Q") -> str:
    lines = [f"@omq {name}", f"schema {omq.schema}."]
    lines.extend(serialize_rule(r) for r in omq.ontology.rules)
    lines.extend(f"q :- {_atoms(d.atoms)}." for d in omq.query)
    return "\n".join(lines) + "\n"


def serialize_chardb(name, database, base, mapping=None, depth=None) -> str:
    lines = [f"@chardb {name}", f"database {database}.", f"base {base}."]
    if mapping:
        lines.append("map " + ", ".join(f"{k}->{v}" for k, v in sorted(mapping.items())) + ".")
    if depth is not None:
        lines.append(f"depth {depth}.")
    return "\n".join(lines) + "\n"


def parse_structure(text: str) -> Structure:
    ws = parse_text(text, default_kind="structure", default_name="main")
    return next(iter(ws.structures.values()))


def parse_ontology(text: str) -> Ontology:
    ws = parse_text(text, default_kind="ontology", default_name="main")
    return next(iter(ws.ontologies.values()))


def parse_ucq(text: str) -> UCQ:
    ws = parse_text(text, default_kind="query", default_name="main")
    return next(iter(ws.queries.values()))


def parse_cq(text: str) -> CQ:
    """Parse a bare atom list such as ``R(X,Y), S(Y,Z)``."""
    toks = tokenize(text.strip().rstrip("."))
    return CQ(_Cursor(toks, None).atoms())


def parse_facts(text: str) -> Structure:
    """Parse a bare fact list such as ``R(a,b), S(b,c)`` or ``R(a,b). S(b,c).``"""
    facts = []
    for stmt in _statements(tokenize(text.strip().rstrip(".") + "."), None):
        facts.extend(_Cursor(stmt, None).atoms())
    return Structure(facts)


def parse_omq(text: str) -> OMQ:
    ws = parse_text(text, default_kind="omq", default_name="main")
    return next(iter(ws.omqs.values()))
