"""Command line interface.

Every command reads one or more workspace files (``-f``) and refers to their
entries by name; when a registry holds a single entry the name may be
omitted. ``--machine`` switches to the line-oriented ``key=value`` report.
Exit codes: 0 success, 1 negative verdict, 2 error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from fractions import Fraction
from functools import singledispatch

from .chase import ChaseResult, eval_omq, run_chase
from .corpus import all_databases, minimal_models
from .cover import (
    AdornmentCheck,
    CharDBSpec,
    CoverResult,
    EquivResult,
    adornment_from_cover,
    check_equiv_on_corpus,
    cover_cqs_from,
    validate_extended_adornment,
)
from .errors import GuardOMQError, ParseError
from .query import as_cq, contractions
from .reduction import (
    ReductionInstance,
    ReductionReport,
    first_hom,
    generate_random_csp,
    verify_reduction_instance,
)
from .relstruct import Structure, core_of, find_homomorphism, product
from .textformat import parse_workspace, serialize_structure, serialize_ucq
from .unravel import (
    ExtResult,
    MdivReport,
    QiVerdict,
    UnravelingResult,
    ext,
    guarded_unraveling,
    in_div,
    is_diversification,
    is_qi_bounded,
    minimal_diversifications_bounded,
)
from .width import (
    CostFunction,
    WidthBracket,
    f_width,
    hypergraph_of,
    smw_bracket,
    treewidth_exact,
)

DEFAULTS = {
    "depth_cap": 4,
    "qi_bound": 4,
    "mdiv_budget": 4,
    "constants": 5,
    "facts": 8,
    "plant": 0.3,
    "hom_limit": 1,
}


# ---------------------------------------------------------------------------
# reports


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "unknown"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple, set, frozenset)):
        return ",".join(str(x) for x in sorted(v, key=str)) or "-"
    return str(v).replace(" ", "")


def _kv(pairs: dict) -> str:
    return " ".join(f"{k}={_fmt(v)}" for k, v in pairs.items())


@dataclass
class Verdict:
    """A generic named result: key/value pairs plus optional attached text."""

    fields: dict
    body: str = ""
    positive: bool = True


@singledispatch
def format_report(result, mode: str = "human", params: dict | None = None) -> str:
    raise TypeError(f"no report format for {type(result).__name__}")


def _emit(fields: dict, body: str, mode: str, params: dict | None) -> str:
    if mode == "machine":
        head = dict(fields)
        for k, v in sorted((params or {}).items()):
            head.setdefault(f"param.{k}", v)
        return _kv(head) + ("\n" + body.rstrip("\n") if body else "") + "\n"
    lines = [f"{k.replace('_', ' ')}: {_fmt(v)}" for k, v in fields.items()]
    if body:
        lines.append(body.rstrip("\n"))
    return "\n".join(lines) + "\n"


@format_report.register
def _(r: Verdict, mode="human", params=None):
    return _emit(r.fields, r.body, mode, params)


@format_report.register
def _(r: Structure, mode="human", params=None):
    return _emit({"facts": len(r.facts), "constants": len(r.domain)}, serialize_structure(r, "result"), mode, params)


@format_report.register
def _(r: ChaseResult, mode="human", params=None):
    fields = {"complete": r.complete, "rounds": r.rounds, "facts": len(r.structure.facts)}
    return _emit(fields, serialize_structure(r.structure, "chase"), mode, params)


@format_report.register
def _(r: WidthBracket, mode="human", params=None):
    fields = {"lower": r.lower, "upper": r.upper, "lower_witness": f"f:{r.lower_witness}", "method": r.method}
    if r.rejected:
        fields["rejected"] = [tag for tag, _ in r.rejected]
    return _emit(fields, "", mode, params)


@format_report.register
def _(r: QiVerdict, mode="human", params=None):
    fields = {"status": r.status, "bound": r.bound, "examined": r.examined}
    body = ""
    if r.witness is not None:
        fields["contraction"] = str(r.contraction)
        body = serialize_structure(r.witness, "witness")
    return _emit(fields, body, mode, params)


@format_report.register
def _(r: MdivReport, mode="human", params=None):
    fields = {"witnesses": len(r.witnesses), "searched": r.searched, "in_div": r.in_div, "budget": r.budget}
    body = "".join(serialize_structure(w.D, f"mdiv{k}") for k, w in enumerate(r.witnesses))
    return _emit(fields, body, mode, params)


@format_report.register
def _(r: UnravelingResult, mode="human", params=None):
    fields = {
        "depth": r.depth,
        "stabilized": r.stabilized,
        "certified": r.certified,
        "facts": len(r.structure.facts),
        "nodes": len(r.decomposition.bags),
    }
    return _emit(fields, serialize_structure(r.structure, "unraveling"), mode, params)


@format_report.register
def _(r: ExtResult, mode="human", params=None):
    fields = {
        "depth": r.depth,
        "stabilized": r.stabilized,
        "attachments": len(r.attachments),
        "facts": len(r.structure.facts),
    }
    return _emit(fields, serialize_structure(r.structure, "ext"), mode, params)


@format_report.register
def _(r: CoverResult, mode="human", params=None):
    fields = {"cqs": len(r.cqs), "matches": r.homomorphisms, "over_budget": len(r.over_budget)}
    body = serialize_ucq(r.ucq(), "cover") if r.cqs else ""
    return _emit(fields, body, mode, params)


@format_report.register
def _(r: AdornmentCheck, mode="human", params=None):
    return _emit({"valid": r.valid}, "\n".join(r.reasons), mode, params)


@format_report.register
def _(r: EquivResult, mode="human", params=None):
    fields = {"status": r.status, "examined": r.examined}
    body = ""
    if r.database is not None:
        fields["side"] = r.side
        body = serialize_structure(r.database, "counterexample")
    return _emit(fields, body, mode, params)


@format_report.register
def _(r: ReductionReport, mode="human", params=None):
    fields = {"csp": r.csp_answer, "omq": r.omq_answer, "agree": r.agree}
    fields.update({f"size.{k}": v for k, v in r.sizes.items()})
    if r.bundle is not None:
        fields["bundle"] = str(r.bundle)
    return _emit(fields, "\n".join(r.notes), mode, params)


# ---------------------------------------------------------------------------
# workspace helpers


class CliError(Exception):
    pass


def _pick(ws, kind, name):
    registry = getattr(ws, kind)
    if name is None:
        if len(registry) != 1:
            known = ", ".join(sorted(registry)) or "none"
            raise CliError(f"name a {kind[:-1]} explicitly (available: {known})")
        return next(iter(registry.values()))
    try:
        return ws.lookup(kind, name)
    except KeyError as e:
        raise CliError(e.args[0]) from None


def _structure(ws, name):
    return _pick(ws, "structures", name)


def _spec(ws, name) -> CharDBSpec:
    entry = _pick(ws, "chardbs", name)
    d = ws.structures[entry.database]
    d0 = ws.structures[entry.base]
    mapping = entry.mapping or {c: c for c in d.domain}
    return CharDBSpec(d, mapping, d0, depth=entry.depth, name=entry.name)


def _query_like(ws, args):
    if args.query:
        return as_cq(_pick(ws, "queries", args.query).disjuncts[0])
    if args.db:
        return _structure(ws, args.db)
    if ws.queries:
        return as_cq(_pick(ws, "queries", None).disjuncts[0])
    return _structure(ws, None)


# ---------------------------------------------------------------------------
# commands


def cmd_eval(ws, a):
    q = _pick(ws, "omqs", a.omq)
    v = eval_omq(q, _structure(ws, a.db), a.depth_budget)
    return Verdict({"answer": v}, positive=bool(v))


def cmd_chase(ws, a):
    if a.omq:
        ont = _pick(ws, "omqs", a.omq).ontology
    else:
        ont = _pick(ws, "ontologies", a.ontology)
    return run_chase(ont, _structure(ws, a.db), a.depth_budget)


def cmd_hom(ws, a):
    src, tgt = _structure(ws, a.source), _structure(ws, a.target)
    homs = find_homomorphism(src, tgt, a.mode, limit=a.limit)
    body = "\n".join(", ".join(f"{k}->{v}" for k, v in sorted(h.mapping.items())) for h in homs)
    return Verdict({"found": bool(homs), "count": len(homs)}, body, bool(homs))


def cmd_core(ws, a):
    core, _ = core_of(_structure(ws, a.db))
    return core


def cmd_product(ws, a):
    p, _, _ = product(_structure(ws, a.left), _structure(ws, a.right))
    return p


def cmd_contract(ws, a):
    q = as_cq(_pick(ws, "queries", a.query).disjuncts[0])
    cs = list(contractions(q))
    return Verdict({"contractions": len(cs)}, "\n".join(str(c) for c in cs))


def cmd_width(ws, a):
    x = _query_like(ws, a)
    h = hypergraph_of(x)
    if a.measure == "tw":
        w, _ = treewidth_exact(h)
        return Verdict({"treewidth": w})
    half = CostFunction.half_cardinality(h.vertices)
    if a.measure == "fwidth":
        f = half if a.cost == "half" else CostFunction.cardinality(h.vertices)
        w, _ = f_width(h, f)
        return Verdict({"fwidth": w, "f": f.tag})
    return smw_bracket(h, [half])


def cmd_unravel(ws, a):
    db = _structure(ws, a.db)
    root = frozenset(a.root.split(","))
    omq = _pick(ws, "omqs", a.omq) if (a.omq or a.depth is None) else None
    return guarded_unraveling(db, root, a.depth, omq, a.depth_cap)


def cmd_ext(ws, a):
    spec = _spec(ws, a.chardb)
    omq = _pick(ws, "omqs", a.omq) if (a.omq or (a.depth or spec.depth) is None) else None
    return ext(spec.D, spec.up, spec.D0, omq, a.depth or spec.depth, depth_cap=a.depth_cap)


def cmd_divcheck(ws, a):
    spec = _spec(ws, a.chardb)
    div = is_diversification(spec.D, spec.up, spec.D0)
    fields = {"diversification": div}
    positive = div
    if div and (a.omq or ws.omqs):
        member = in_div(spec.D, spec.up, spec.D0, _pick(ws, "omqs", a.omq), a.depth or spec.depth)
        fields["in_div"] = member
        positive = member
    return Verdict(fields, positive=positive)


def cmd_qicheck(ws, a):
    return is_qi_bounded(_structure(ws, a.db), _pick(ws, "omqs", a.omq), a.bound, a.budget)


def cmd_mdiv(ws, a):
    return minimal_diversifications_bounded(_structure(ws, a.db), _pick(ws, "omqs", a.omq), a.budget, a.depth)


def cmd_cover(ws, a):
    return cover_cqs_from(_pick(ws, "omqs", a.omq), _spec(ws, a.chardb), a.depth, a.size_budget, a.hom_cap)


def cmd_adorn_check(ws, a):
    omq = _pick(ws, "omqs", a.omq)
    spec = _spec(ws, a.chardb)
    res = cover_cqs_from(omq, spec, a.depth)
    reasons = []
    for k, entry in enumerate(res):
        p, td, S, up = adornment_from_cover(entry, res.ext)
        chk = validate_extended_adornment(p, td, Structure(S), up, spec.D0, omq)
        reasons.extend(f"cover {k}: {r}" for r in chk.reasons)
    return AdornmentCheck(not reasons, reasons)


def cmd_equiv_corpus(ws, a):
    q1, q2 = _pick(ws, "omqs", a.left), _pick(ws, "omqs", a.right)
    if a.corpus == "all":
        corpus = all_databases(q1.schema, a.constants)
    else:
        corpus = _chain(minimal_models(q1, a.constants), minimal_models(q2, a.constants))
    return check_equiv_on_corpus(q1, q2, corpus)


def _chain(*its):
    for it in its:
        yield from it


def cmd_reduce(ws, a):
    spec = _spec(ws, a.chardb)
    inst = ReductionInstance(spec.D, _structure(ws, a.csp), _pick(ws, "omqs", a.omq), spec, a.depth)
    solver = first_hom if a.oracle else None
    return verify_reduction_instance(inst, solver, a.bundle_dir)


def cmd_verify_reduction(ws, a):
    spec = _spec(ws, a.chardb)
    omq = _pick(ws, "omqs", a.omq)
    params = {"constants": a.constants, "facts": a.facts, "plant": a.plant, "schema": omq.schema}
    agree = total = pos = 0
    cache = {}
    failures = []
    for seed in range(a.seed, a.seed + a.count):
        s, b = generate_random_csp(seed, params, [spec])
        inst = ReductionInstance(s.D, b, omq, s, a.depth, seed=seed)
        r = verify_reduction_instance(inst, first_hom, a.bundle_dir, cache)
        total += 1
        pos += bool(r.csp_answer)
        if r.agree:
            agree += 1
        else:
            failures.append(seed)
    fields = {"instances": total, "agree": agree, "csp_positive": pos, "rate": Fraction(agree, total or 1)}
    body = ("disagreeing seeds: " + ",".join(map(str, failures))) if failures else ""
    return Verdict(fields, body, not failures)


def cmd_gen_csp(ws, a):
    spec = _spec(ws, a.chardb)
    schema = _pick(ws, "omqs", a.omq).schema if (a.omq or ws.omqs) else None
    params = {"constants": a.constants, "facts": a.facts, "plant": a.plant, "schema": schema}
    _, b = generate_random_csp(a.seed, params, [spec])
    return Verdict({"facts": len(b.facts)}, serialize_structure(b, f"B{a.seed}"))


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="guardomq", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-f", "--file", action="append", required=True, help="workspace file (repeatable)")
    common.add_argument("--machine", action="store_true", help="key=value output")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    p = add("eval", cmd_eval, "evaluate an OMQ on a database")
    p.add_argument("--omq")
    p.add_argument("--db")
    p.add_argument("--depth-budget", type=int)

    p = add("chase", cmd_chase, "chase a database")
    p.add_argument("--ontology")
    p.add_argument("--omq")
    p.add_argument("--db")
    p.add_argument("--depth-budget", type=int)

    p = add("hom", cmd_hom, "search homomorphisms")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--mode", choices=["any", "injective"], default="any")
    p.add_argument("--limit", type=int, default=DEFAULTS["hom_limit"])

    p = add("core", cmd_core, "compute the core")
    p.add_argument("--db")

    p = add("product", cmd_product, "direct product of two structures")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)

    p = add("contract", cmd_contract, "list contractions of a CQ")
    p.add_argument("--query")

    p = add("width", cmd_width, "width measures")
    p.add_argument("measure", choices=["tw", "fwidth", "bracket"])
    p.add_argument("--query")
    p.add_argument("--db")
    p.add_argument("--cost", choices=["half", "card"], default="half")

    p = add("unravel", cmd_unravel, "guarded unraveling")
    p.add_argument("--db")
    p.add_argument("--root", required=True, help="comma separated guarded set")
    p.add_argument("--omq")
    p.add_argument("--depth", type=int)
    p.add_argument("--depth-cap", type=int, default=DEFAULTS["depth_cap"])

    for name, fn, help_ in (
        ("ext", cmd_ext, "extension of a characteristic database"),
        ("divcheck", cmd_divcheck, "diversification and div membership"),
        ("cover", cmd_cover, "cover CQs"),
        ("adorn-check", cmd_adorn_check, "validate adornments of the cover CQs"),
    ):
        p = add(name, fn, help_)
        p.add_argument("--chardb")
        p.add_argument("--omq")
        p.add_argument("--depth", type=int)
        if name == "ext":
            p.add_argument("--depth-cap", type=int, default=DEFAULTS["depth_cap"])
        if name == "cover":
            p.add_argument("--size-budget", type=int)
            p.add_argument("--hom-cap", type=int, default=10000)

    p = add("qicheck", cmd_qicheck, "bounded query-initiality check")
    p.add_argument("--omq")
    p.add_argument("--db")
    p.add_argument("--bound", type=int, default=DEFAULTS["qi_bound"])
    p.add_argument("--budget", type=int)

    p = add("mdiv", cmd_mdiv, "bounded minimal diversifications")
    p.add_argument("--omq")
    p.add_argument("--db")
    p.add_argument("--budget", type=int, default=DEFAULTS["mdiv_budget"])
    p.add_argument("--depth", type=int)

    p = add("equiv-corpus", cmd_equiv_corpus, "refute equivalence on a corpus")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--constants", type=int, default=3)
    p.add_argument("--corpus", choices=["minimal", "all"], default="minimal")

    p = add("reduce", cmd_reduce, "reduce one CSP instance and compare")
    p.add_argument("--chardb")
    p.add_argument("--omq")
    p.add_argument("--csp", required=True, help="right-hand structure B")
    p.add_argument("--depth", type=int)
    p.add_argument("--oracle", action="store_true", help="use the all-functions CSP solver")
    p.add_argument("--bundle-dir")

    for name, fn, help_ in (
        ("verify-reduction", cmd_verify_reduction, "batch of random reduction instances"),
        ("gen-csp", cmd_gen_csp, "generate a random right-hand structure"),
    ):
        p = add(name, fn, help_)
        p.add_argument("--chardb")
        p.add_argument("--omq")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--constants", type=int, default=DEFAULTS["constants"])
        p.add_argument("--facts", type=int, default=DEFAULTS["facts"])
        p.add_argument("--plant", type=float, default=DEFAULTS["plant"])
        if name == "verify-reduction":
            p.add_argument("--count", type=int, default=200)
            p.add_argument("--depth", type=int)
            p.add_argument("--bundle-dir")
    return ap


_NEGATIVE = {
    QiVerdict: lambda r: r.status != "not-qi",
    EquivResult: lambda r: r.status == "no-counterexample",
    AdornmentCheck: lambda r: r.valid,
    ReductionReport: lambda r: r.agree is not False,
    CoverResult: lambda r: bool(r.cqs),
    MdivReport: lambda r: bool(r.witnesses),
    Verdict: lambda r: r.positive,
}


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    params = {
        k: v for k, v in vars(args).items()
        if k not in ("fn", "machine", "command", "file") and v is not None
    }
    try:
        ws = parse_workspace(args.file)
        result = args.fn(ws, args)
    except (GuardOMQError, ParseError, CliError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    sys.stdout.write(format_report(result, "machine" if args.machine else "human", params))
    ok = _NEGATIVE.get(type(result), lambda r: True)(result)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
