import json

import pytest

from guardomq.catalog import clique_instance, triangle_instance
from guardomq.cover import identity_spec
from guardomq.errors import PreconditionError
from guardomq.reduction import (
    ReductionInstance,
    first_hom,
    generate_random_csp,
    reduce_csp_to_omq,
    strip_noninjective,
    verify_reduction_instance,
    write_bundle,
)
from guardomq.relstruct import Structure, is_isomorphic, product
from guardomq.textformat import parse_facts, parse_workspace

T = triangle_instance()
SPEC = identity_spec(T.D, T.D2)


def test_strip_examples():
    p, left, _ = product(parse_facts("R(a,b)."), parse_facts("R(c,c)."))
    assert len(strip_noninjective(p, left)) == 1
    p, left, _ = product(parse_facts("R(a,a)."), parse_facts("R(c,d)."))
    assert len(strip_noninjective(p, left)) == 0
    empty = Structure([])
    p, left, _ = product(empty, empty)
    assert len(strip_noninjective(p, left)) == 0


def test_self_csp_on_triangle():
    r = verify_reduction_instance(ReductionInstance(T.D, T.D, T.omq, SPEC))
    assert r.csp_answer and r.omq_answer and r.agree
    assert is_isomorphic(r.D2, T.D)


def test_clique_self_csp():
    c = clique_instance(2)
    spec = identity_spec(c.guard_db, c.base)
    r = verify_reduction_instance(ReductionInstance(c.guard_db, c.guard_db, c.omq, spec))
    assert r.csp_answer and r.omq_answer


def test_no_w_fact_means_no():
    b = parse_facts("R(x,y). V(u,x).")
    r = verify_reduction_instance(ReductionInstance(T.D, b, T.omq, SPEC))
    assert not any(f.relation == "W" for f in r.D2.facts)
    assert r.omq_answer is False and r.csp_answer is False


def test_disjoint_copy_and_wrong_relation():
    b = parse_facts("R(p,q). W(r,q,s). V(s,p). R(z,z).")
    assert verify_reduction_instance(ReductionInstance(T.D, b, T.omq, SPEC)).omq_answer
    r = verify_reduction_instance(ReductionInstance(T.D, parse_facts("U(x,y,z)."), T.omq, SPEC))
    assert r.csp_answer is False and r.omq_answer is False


def test_seeded_batch_agrees_with_oracle():
    cache = {}
    for seed in range(40):
        spec, b = generate_random_csp(seed, {"constants": 4, "facts": 6, "plant": 0.3, "schema": T.omq.schema}, [SPEC])
        r = verify_reduction_instance(ReductionInstance(spec.D, b, T.omq, spec, seed=seed), first_hom, cache=cache)
        assert r.agree, seed
        assert r.sizes["D2"] <= r.sizes["D"] * r.sizes["B"]


def test_generator_contract():
    params = {"constants": 3, "facts": 5}
    assert generate_random_csp(4, params, [SPEC]) == generate_random_csp(4, params, [SPEC])
    assert len(generate_random_csp(4, {"constants": 3, "facts": 0}, [SPEC])[1]) == 0
    with pytest.raises(PreconditionError):
        generate_random_csp(0, params, [])
    assert {generate_random_csp(s, params, [SPEC])[0].D for s in range(5)} == {T.D}


def test_instance_requires_core():
    d = parse_facts("R(a,b). R(c,b).")
    with pytest.raises(PreconditionError):
        ReductionInstance(d, d, T.omq, identity_spec(d, d))


def test_bundle_is_loadable(tmp_path):
    inst = ReductionInstance(T.D, T.D, T.omq, SPEC, seed=9)
    r = reduce_csp_to_omq(inst)
    out = write_bundle(inst, r, tmp_path)
    ws = parse_workspace([out / "instance.txt", out / "D2plus.txt"])
    assert ws.structures["B"] == T.D
    assert json.loads((out / "manifest.json").read_text())["seed"] == 9
