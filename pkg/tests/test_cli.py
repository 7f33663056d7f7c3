import pytest

from conftest import DATA
from guardomq.cli import format_report, main
from guardomq.width import WidthBracket, TreeDecomposition
from fractions import Fraction

TRI = ["-f", str(DATA / "triangle.txt")]
CLQ = ["-f", str(DATA / "clique3.txt")]


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_eval_exit_codes(capsys):
    assert run(capsys, "eval", *TRI, "--omq", "Q", "--db", "D1")[0] == 0
    code, out = run(capsys, "eval", *TRI, "--omq", "Q", "--db", "D", "--machine")
    assert code == 1 and out.startswith("answer=false")


def test_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.db"
    bad.write_text("schema R/2.\nR(a,b,c).\n")
    assert main(["core", "-f", str(bad)]) == 2
    assert main(["eval", *TRI, "--omq", "Q", "--db", "missing"]) == 2


def test_bracket_report(capsys):
    code, out = run(capsys, "width", "bracket", *CLQ, "--query", "K", "--machine")
    assert code == 0
    assert out.startswith("lower=2 upper=2 lower_witness=f:half-cardinality")
    assert "param.measure=bracket" in out


def test_reduction_report(capsys):
    code, out = run(capsys, "reduce", *TRI, "--omq", "Q", "--chardb", "C", "--csp", "B", "--machine")
    assert code == 0 and out.startswith("csp=true omq=true agree=true")


def test_qicheck_includes_witness(capsys):
    code, out = run(capsys, "qicheck", *TRI, "--omq", "Q", "--db", "D1", "--machine")
    assert code == 1 and "status=not-qi" in out and "@structure witness" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["chase", "--omq", "Q", "--db", "D2"],
        ["hom", "--source", "D2", "--target", "D1"],
        ["core", "--db", "D1"],
        ["product", "--left", "D", "--right", "B"],
        ["unravel", "--db", "D2", "--root", "c,a", "--omq", "Q"],
        ["ext", "--chardb", "C", "--omq", "Q"],
        ["divcheck", "--chardb", "C", "--omq", "Q"],
        ["mdiv", "--omq", "Q", "--db", "D2"],
        ["cover", "--omq", "Q", "--chardb", "C"],
        ["adorn-check", "--omq", "Q", "--chardb", "C"],
        ["verify-reduction", "--omq", "Q", "--chardb", "C", "--count", "5"],
        ["gen-csp", "--omq", "Q", "--chardb", "C", "--seed", "2"],
    ],
)
def test_commands_succeed_and_are_deterministic(capsys, argv):
    c1, o1 = run(capsys, argv[0], *TRI, *argv[1:], "--machine")
    c2, o2 = run(capsys, argv[0], *TRI, *argv[1:], "--machine")
    assert c1 == 0 and o1 == o2


def test_clique_commands(capsys):
    assert run(capsys, "width", "tw", *CLQ, "--query", "K")[1].strip() == "treewidth: 4"
    code, out = run(capsys, "contract", *CLQ, "--query", "K", "--machine")
    assert code == 0 and out.startswith("contractions=")
    assert run(capsys, "cover", *CLQ, "--omq", "Q3", "--chardb", "C")[0] == 0


def test_equiv_corpus_command(capsys, tmp_path):
    f = tmp_path / "cov.omq"
    f.write_text(
        "@omq Q3c\nschema S3/3, T/2.\nS3(X1,X2,X3) -> R(X1,X2), R(X1,X3), R(X2,X3).\n"
        "q :- S3(X1,X2,X3), R(X1,X2), R(X1,X3), R(X2,X3), T(X1,X2), T(X1,X3), T(X2,X3).\n"
    )
    code, out = run(capsys, "equiv-corpus", *CLQ, "-f", str(f), "--left", "Q3", "--right", "Q3c",
                    "--constants", "4", "--machine")
    assert code == 1 and "status=counterexample" in out


def test_format_report_human_mode():
    td = TreeDecomposition({0: frozenset()}, {0: None}, 0)
    b = WidthBracket(Fraction(1), "half-cardinality", td, Fraction(3, 2), td)
    assert "upper: 3/2" in format_report(b)
    assert format_report(b, "machine").startswith("lower=1 upper=3/2")
