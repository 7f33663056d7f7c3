import pytest

from conftest import DATA
from guardomq.catalog import chain_instance, clique_instance, triangle_instance
from guardomq.errors import ParseError
from guardomq.textformat import (
    parse_omq,
    parse_ontology,
    parse_structure,
    parse_text,
    parse_ucq,
    parse_workspace,
    serialize_omq,
    serialize_ontology,
    serialize_structure,
    serialize_ucq,
)


def test_fact_file_parses():
    s = parse_structure("R(a,b). W(d,b,c). V(c,a).")
    assert len(s) == 3


def test_rule_with_lowercase_variables_is_guarded():
    rule = parse_ontology("U(x,y,z), V(x,z) -> T(x,z).").rules[0]
    assert rule.kind == "datalog-guarded"


def test_existential_rule():
    rule = parse_ontology("R(X,Y) -> exists Z: S(Y,Z).").rules[0]
    assert rule.existentials == {"Z"}


def test_arity_mismatch_is_positioned():
    with pytest.raises(ParseError) as e:
        parse_text("schema R/2.\nR(a,b,c).", path="x.db", default_kind="structure")
    assert e.value.line == 2 and "arity" in str(e.value)


def test_undeclared_relation():
    with pytest.raises(ParseError):
        parse_text("schema R/2.\nS(a).", default_kind="structure")


def test_syntax_error_has_column():
    with pytest.raises(ParseError) as e:
        parse_text("R(a,b", default_kind="structure")
    assert e.value.line == 1


def test_dangling_reference(tmp_path):
    f = tmp_path / "x.omq"
    f.write_text("@omq Q\nschema R/2.\nontology Missing.\nq :- R(X,Y).\n")
    with pytest.raises(ParseError) as e:
        parse_workspace([f])
    assert "dangling" in str(e.value)


@pytest.mark.parametrize("omq", [triangle_instance().omq, clique_instance(3).omq, chain_instance(2).omq])
def test_round_trips(omq):
    assert parse_omq(serialize_omq(omq)) == omq
    assert parse_ontology(serialize_ontology(omq.ontology)).rules == omq.ontology.rules
    assert parse_ucq(serialize_ucq(omq.query)) == omq.query


def test_structure_round_trip_with_odd_names():
    s = parse_structure("R([a|b],c'1). S(a^0).")
    assert parse_structure(serialize_structure(s)) == s


def test_data_files_load():
    ws = parse_workspace([DATA / "triangle.txt", DATA / "clique3.txt"])
    assert {"Q", "Q3"} <= set(ws.omqs)
    assert ws.chardbs["C"].base in ws.structures
