import pytest

from engine.errors import ParseError, UnsupportedConstruct
from engine.kernel import Atom, Exists, F, Lit, T, U
from frontend.parser import parse, parse_structure
from frontend.printer import format_problem

HEADER = """
vocabulary {
    open P/1, E/2
    defined Q/1
}
domain {
    D = {a, b}
}
"""


def _theory(body):
    return HEADER + "theory {\n" + body + "\n}\n"


class TestProblems:
    @staticmethod
    def test_ex33(ex33):
        problem, structure = ex33
        voc = problem.vocabulary
        assert voc.elements == ["d1", "d2"]
        assert voc.is_open("edge") and voc.is_defined("R")
        assert len(problem.sentences) == 1
        assert [r.id for r in problem.definitions[0]] == ["1", "2", "3", "4"]
        assert isinstance(problem.definitions[0][0].body, Exists)
        assert structure.value(Atom("edge", (0, 1))) is U

    @staticmethod
    def test_round_trip(ex33):
        problem, _ = ex33
        text = format_problem(problem.vocabulary, problem.sentences, problem.definitions)
        again, _ = parse(text)
        assert again.ast() == problem.ast()

    @staticmethod
    def test_integer_domain():
        text = """
        vocabulary { open P/1 }
        domain { N = 0..3 }
        theory { ?n in N: P(n). }
        """
        problem, _ = parse(text)
        assert problem.vocabulary.elements == ["0", "1", "2", "3"]
        assert len(problem.vocabulary.domains["N"]) == 4

    @staticmethod
    def test_equality_builtin():
        problem, _ = parse(_theory("!x in D: P(x) | x ~= a."))
        body = problem.sentences[0].child
        assert Lit("=", ("x", 0), False) in body.children


class TestErrors:
    @staticmethod
    @pytest.mark.parametrize("body", [
        "P(a, b).",
        "P(c).",
        "S(a).",
        "define { Q(a) <- Q. }",
        "define { P(a) <- true. }",
        "!x in D: P(x)",
    ])
    def test_rejected(body):
        with pytest.raises(ParseError):
            parse(_theory(body))

    @staticmethod
    def test_no_goal():
        with pytest.raises(ParseError, match="no goal"):
            parse(HEADER + "theory { }")

    @staticmethod
    def test_theory_before_vocabulary():
        with pytest.raises(ParseError, match="before vocabulary"):
            parse("theory { A. }")

    @staticmethod
    def test_error_location():
        with pytest.raises(ParseError) as info:
            parse(_theory("P(c)."))
        assert info.value.line == 10

    @staticmethod
    @pytest.mark.parametrize("body", [
        "!x in D: P(f(x)).",
        "#count{x : P(x)} = 1.",
        "!x in D: P(x) => Q(x).",
        "!x in D: E(x, x) + 1.",
    ])
    def test_unsupported(body):
        with pytest.raises(UnsupportedConstruct):
            parse(_theory(body))


class TestStructures:
    @staticmethod
    def test_tables():
        problem, _ = parse(_theory("?x in D: Q(x)."))
        s = parse_structure("P = {a}\n~P = {b}\nE := {(a,b)}\n", problem.vocabulary)
        assert s.value(Atom("P", (0,))) is T
        assert s.value(Atom("P", (1,))) is F
        assert s.value(Atom("E", (0, 1))) is T
        assert s.value(Atom("E", (1, 0))) is F

    @staticmethod
    @pytest.mark.parametrize("text", [
        "Q = {a}",
        "P = {(a,b)}",
        "P = {c}",
        "P = {a}\n~P = {a}",
        "~E := {(a,a)}",
    ])
    def test_rejected(text):
        problem, _ = parse(_theory("?x in D: Q(x)."))
        with pytest.raises(ParseError):
            parse_structure(text, problem.vocabulary)
