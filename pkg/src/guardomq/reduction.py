"""From a CSP instance (D, B) with D characteristic for Q to an OMQ instance."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .chase import GDLOG, OMQ, eval_omq
from .cover import CharDBSpec
from .errors import PreconditionError
from .relstruct import Fact, Homomorphism, Schema, Structure, is_core, is_igs, maps_to, naive_homomorphisms, product
from .textformat import serialize_chardb, serialize_omq, serialize_structure
from .unravel import ext


def strip_noninjective(prod: Structure, proj: Homomorphism) -> Structure:
    """Keep the facts on which ``proj`` is injective."""
    kept = [f for f in prod.facts if proj.is_injective_on(f.terms)]
    return Structure(kept, prod.schema)


@dataclass
class ReductionInstance:
    D: Structure
    B: Structure
    omq: OMQ
    spec: CharDBSpec
    depth: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.spec.D != self.D:
            raise PreconditionError("the characteristic database must be the left-hand structure D")
        if not is_core(self.D):
            raise PreconditionError("D must be a core")


@dataclass
class ReductionReport:
    D2: Structure
    D2plus: Structure
    omq_answer: bool | None
    csp_answer: bool | None = None
    depth: int | None = None
    sizes: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    bundle: Path | None = None

    @property
    def agree(self) -> bool | None:
        if self.csp_answer is None or self.omq_answer is None:
            return None
        return self.csp_answer == self.omq_answer


def spec_depth(omq: OMQ, spec: CharDBSpec) -> int:
    if spec.depth is None:
        spec.depth = ext(spec.D, spec.up, spec.D0, omq).depth
    return spec.depth


def reduce_csp_to_omq(inst: ReductionInstance, cache: dict | None = None) -> ReductionReport:
    omq, spec = inst.omq, inst.spec
    if omq.ontology.kind != GDLOG:
        raise PreconditionError("the reduction is implemented for GDLog ontologies")
    if not spec.verify():
        raise PreconditionError("the characteristic database does not verify as a diversification")
    depth = inst.depth if inst.depth is not None else spec_depth(omq, spec)
    prod, left, _ = product(inst.D, inst.B)
    d2 = strip_noninjective(prod, left)
    pi = Homomorphism(d2, inst.D, {c: left(c) for c in d2.domain})
    if not (pi.is_valid() and is_igs(pi)):
        raise AssertionError("projection of the stripped product is not i.g.s.")
    notes = []
    if inst.depth is not None and spec.depth is not None and inst.depth != spec.depth:
        notes.append(f"depth {inst.depth} differs from the characteristic database depth {spec.depth}")
    sizes = {"D": len(inst.D.facts), "B": len(inst.B.facts), "D2": len(d2.facts)}
    if sizes["D2"] > sizes["D"] * sizes["B"]:
        raise AssertionError("D2 exceeds |D|*|B| facts")
    if not d2.facts:
        sizes["D2plus"] = 0
        return ReductionReport(d2, d2, False, depth=depth, sizes=sizes, notes=notes)
    g = pi.then(spec.up)
    e = ext(d2, g, spec.D0, omq, depth, cache)
    sizes["D2plus"] = len(e.structure.facts)
    return ReductionReport(d2, e.structure, eval_omq(omq, e.structure), depth=depth, sizes=sizes, notes=notes)


def write_bundle(inst: ReductionInstance, report: ReductionReport, bundle_dir) -> Path:
    """Dump the instance in the text formats with a manifest."""
    out = Path(bundle_dir) / f"reduction-{inst.seed if inst.seed is not None else 'manual'}"
    out.mkdir(parents=True, exist_ok=True)
    (out / "instance.txt").write_text(
        serialize_omq(inst.omq, "Q")
        + serialize_structure(inst.D, "D")
        + serialize_structure(inst.spec.D0, "D0")
        + serialize_structure(inst.B, "B")
        + serialize_chardb("spec", "D", "D0", dict(inst.spec.up.mapping), report.depth)
    )
    (out / "D2plus.txt").write_text(serialize_structure(report.D2plus, "D2plus"))
    manifest = {
        "seed": inst.seed,
        "depth": report.depth,
        "csp": report.csp_answer,
        "omq": report.omq_answer,
        "qi": inst.spec.qi_status,
        "mdiv_verified": inst.spec.mdiv_verified,
        "sizes": report.sizes,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def verify_reduction_instance(inst: ReductionInstance, csp_solver=None, bundle_dir=None, cache=None) -> ReductionReport:
    """Run the reduction and compare against a direct homomorphism test D -> B.

    ``csp_solver(D, B)`` may be any callable returning a truthy witness or
    None; the default is the backtracking search.
    """
    report = reduce_csp_to_omq(inst, cache)
    if csp_solver is None:
        report.csp_answer = maps_to(inst.D, inst.B)
    else:
        report.csp_answer = csp_solver(inst.D, inst.B) is not None
    if report.agree is False:
        unchecked = []
        if inst.spec.qi_status != "qi-within-bound":
            unchecked.append("qi")
        if not inst.spec.mdiv_verified:
            unchecked.append("mdiv")
        report.notes.append(
            "disagreement; side conditions only bounded or unchecked: " + (", ".join(unchecked) or "none")
        )
        if bundle_dir is not None:
            report.bundle = write_bundle(inst, report, bundle_dir)
    return report


def first_hom(D: Structure, B: Structure):
    """Adapter turning the all-functions enumerator into a csp_solver."""
    return next(naive_homomorphisms(D, B), None)


def generate_random_csp(seed: int, params: dict, pool: list) -> tuple[CharDBSpec, Structure]:
    """A deterministic (spec, B) pair for ``seed``.

    params: ``constants``, ``facts``, ``schema`` (defaults to D's schema) and
    ``plant`` (probability of embedding a random image of D into B).
    """
    if not pool:
        raise PreconditionError("the characteristic database pool is empty")
    n_const = int(params.get("constants", 5))
    n_facts = int(params.get("facts", 8))
    if n_const < 1 or n_facts < 0:
        raise PreconditionError("constants must be positive and facts non-negative")
    rng = random.Random(seed)
    spec = pool[rng.randrange(len(pool))]
    schema = params.get("schema") or spec.D.schema
    schema = schema if isinstance(schema, Schema) else Schema(schema)
    consts = [f"b{k}" for k in range(n_const)]
    facts = set()
    if n_facts and rng.random() < float(params.get("plant", 0.0)):
        m = {c: rng.choice(consts) for c in sorted(spec.D.domain)}
        facts |= {f.rename(m) for f in spec.D.facts if f.relation in schema}
    rels = sorted(schema.items())
    attempts = 0
    while len(facts) < n_facts and attempts < 50 * n_facts:
        attempts += 1
        rel, arity = rng.choice(rels)
        facts.add(Fact(rel, tuple(rng.choice(consts) for _ in range(arity))))
    facts = sorted(facts)[:n_facts] if len(facts) > n_facts else sorted(facts)
    return spec, Structure(facts, schema)
