from engine.kernel import Atom, Bindings, DomainLiteral, Exists, Lit, Or, PartialStructure, Rule
from frontend.parser import parse, parse_structure
from frontend.printer import emit_model, format_definition, format_formula, format_stats, format_structure


def _with_sentence(sentence):
    return ("vocabulary {\n    open edge/2\n    defined C1/0, C2/0, root/1, R/1\n}\n"
            "domain {\n    D = {d1, d2}\n}\n"
            "theory {\n    " + sentence + ".\n}\n")


def _model(ex33, true_atoms):
    problem, _ = ex33
    preds = [p.name for p in problem.vocabulary.user_predicates()]
    model = PartialStructure(2, preds)
    for atom in true_atoms:
        model.assign(DomainLiteral(atom, True))
    return problem.vocabulary, model


class TestEmitModel:
    @staticmethod
    def test_sat(ex33):
        voc, model = _model(ex33, [Atom("R", (1,)), Atom("R", (0,)), Atom("edge", (0, 1))])
        assert emit_model(model, ["R", "edge"], voc) == "SAT\nR(d1)\nR(d2)\nedge(d1,d2)\n"
        assert emit_model(model, ["edge"], voc) == "SAT\nedge(d1,d2)\n"

    @staticmethod
    def test_unsat(ex33):
        voc, model = _model(ex33, [])
        assert emit_model(None, ["R"], voc, "UNSAT") == "UNSAT\n"
        assert emit_model(model, ["R"], voc, "UNSAT") == "UNSAT\n"


class TestFormatting:
    @staticmethod
    def test_nested_quantifier_is_parenthesized(ex33):
        problem, _ = ex33
        voc = problem.vocabulary
        d = voc.domains["D"]
        phi = Or((Exists(Bindings(("x",), (d,)), Lit("R", ("x",))), Lit("C1")))
        text = format_formula(phi, voc)
        assert text.startswith("(")
        again, _ = parse(_with_sentence(text))
        assert again.sentences[0] == phi

    @staticmethod
    def test_structure_round_trip(ex33):
        problem, _ = ex33
        voc = problem.vocabulary
        s = parse_structure("edge = {(d1,d2)}\n~edge = {(d2,d2)}\n", voc)
        again = parse_structure(format_structure(s, voc), voc)
        assert set(again.literals()) == set(s.literals())

    @staticmethod
    def test_closed_tables_use_exact_assignment(ex33):
        voc, model = _model(ex33, [Atom("edge", (0, 1))])
        assert "edge := {(d1,d2)}" in format_structure(model, voc, ["edge"])

    @staticmethod
    def test_definition_dump(ex33_theory):
        voc = ex33_theory.vocabulary
        rules = [Rule("5b", Lit("A"), Lit("B")), Rule("1", Lit("pt"), Lit("C1")), Rule("5a", Lit("C"), Lit("B"))]
        lines = format_definition(rules, voc).splitlines()
        assert [line.split()[0] for line in lines] == ["(1)", "(5a)", "(5b)"]

    @staticmethod
    def test_stats():
        assert format_stats({"status": "SAT", "conflicts": 3}) == "status: SAT\nconflicts: 3\n"
