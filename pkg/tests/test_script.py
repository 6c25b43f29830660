import pytest

from config.settings import HeuristicsConfig
from engine.errors import ParseError
from engine.kernel import Atom, DomainLiteral
from frontend.script import Script, load_script, parse_literal, parse_script


class TestLiterals:
    @staticmethod
    def test_signs(ex33_theory):
        voc = ex33_theory.vocabulary
        assert parse_literal("edge(d2,d1)", voc) == DomainLiteral(Atom("edge", (1, 0)), True)
        assert parse_literal("~root(d1)", voc) == DomainLiteral(Atom("root", (0,)), False)
        assert parse_literal("!R(d2)", voc) == DomainLiteral(Atom("R", (1,)), False)
        assert parse_literal("C1", voc) == DomainLiteral(Atom("C1"), True)

    @staticmethod
    @pytest.mark.parametrize("text", ["S(d1)", "R(d3)", "R(d1,d2)", "edge(d1", "R d1"])
    def test_rejected(ex33_theory, text):
        with pytest.raises(ParseError):
            parse_literal(text, ex33_theory.vocabulary)


class TestScripts:
    @staticmethod
    def test_trace_file(ex33_theory, ex33_text):
        script = parse_script(ex33_text[2], ex33_theory.vocabulary)
        assert [e.kind for e in script.entries] == ["decide"] * 5
        assert script.entries[0].literal == DomainLiteral(Atom("root", (0,)), False)
        config = script.apply(HeuristicsConfig())
        assert config.exists_batch == 1
        assert config.disjunct_batch == 1
        assert config.small_formula_threshold == 0
        assert config.stop_early

    @staticmethod
    def test_instantiate(ex33_theory):
        script = parse_script("instantiate 5 d2\n# comment only\n", ex33_theory.vocabulary)
        entry = script.entries[0]
        assert entry.kind == "instantiate"
        assert entry.rule_id == "5"
        assert entry.args == (1,)

    @staticmethod
    @pytest.mark.parametrize("text", [
        "set no-such-knob 3",
        "set exists-batch 0",
        "set mode sideways",
        "guess R(d1)",
        "instantiate",
        "instantiate 5 d9",
    ])
    def test_rejected(ex33_theory, text):
        with pytest.raises(ParseError):
            parse_script(text, ex33_theory.vocabulary)

    @staticmethod
    def test_error_line(ex33_theory):
        with pytest.raises(ParseError) as info:
            parse_script("decide R(d1)\n\ndecide Z\n", ex33_theory.vocabulary)
        assert info.value.line == 3

    @staticmethod
    def test_no_script(ex33_theory):
        assert load_script(None, ex33_theory.vocabulary) == Script()
