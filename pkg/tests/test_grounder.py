import pytest

from engine.errors import ResourceExhausted, UsageError
from engine.grounder import Grounder, child_id, estimate_size, full_ground, ground_simplify
from engine.kernel import (And, Atom, Definition, DomainLiteral, Exists, FALSE, Lit, Or, PartialStructure, TRUE)
from frontend.parser import parse


def _grounder(theory, structure=None, **options):
    vocabulary = theory.vocabulary.copy()
    return Grounder(vocabulary, Definition(), theory.definition.copy(), structure, **options)


class TestEstimates:
    @staticmethod
    def test_ex33_sizes(ex33_theory):
        d = ex33_theory.definition
        assert estimate_size(d.get("2")) == pytest.approx(3.0)
        assert estimate_size(d.get("3")) == pytest.approx(5.0)

    @staticmethod
    def test_sizes_grow_with_the_domain(ex33_text):
        text = ex33_text[0].replace("D = {d1, d2}", "D = {d1, d2, d3, d4}")
        problem, _ = parse(text)
        d = problem.canonical().definition
        assert estimate_size(d.get("2")) == pytest.approx(5.0)
        assert estimate_size(d.get("3")) == pytest.approx(17.0)

    @staticmethod
    def test_child_ids():
        assert child_id("5", 0) == "5a"
        assert child_id("5", 1) == "5b"
        assert child_id("5", 26) == "5[26]"


class TestGroundOne:
    @staticmethod
    def test_goal_rule_stays_whole(ex33_theory):
        g = _grounder(ex33_theory)
        step = g.ground_one(ex33_theory.definition.get("1"))
        assert [r.id for r in step.ground] == ["1"]
        assert step.ground[0].body == And((Lit("C1"), Lit("C2")))
        assert step.delayed == []

    @staticmethod
    def test_universal_body_is_expanded(ex33_theory):
        g = _grounder(ex33_theory)
        step = g.ground_one(ex33_theory.definition.get("3"))
        body = step.ground[0].body
        assert isinstance(body, And)
        assert len(body.children) == 4
        assert Or((Lit("edge", (0, 1), False), Lit("edge", (1, 0)))) in body.children

    @staticmethod
    def test_directed_grounding_of_a_true_head(ex33_theory):
        g = _grounder(ex33_theory, exists_batch=1)
        structure = PartialStructure(2)
        structure.assign(DomainLiteral(Atom("C1"), True))
        step = g.ground_one_directed(ex33_theory.definition.get("2"), structure)
        ground = step.ground[0]
        assert ground.id == "2a"
        assert ground.body == Or((And((Lit("root", (0,), False), Lit("R", (0,)))), Lit("_T1")))
        assert [r.id for r in step.delayed] == ["2b"]
        rest = step.delayed[0].body
        assert isinstance(rest, Exists)
        assert list(rest.bind) == [(1,)]

    @staticmethod
    def test_directed_needs_a_value(ex33_theory):
        g = _grounder(ex33_theory)
        with pytest.raises(UsageError):
            g.ground_one_directed(ex33_theory.definition.get("2"), PartialStructure(2))


class TestSplitting:
    @staticmethod
    def test_split_instance(ex33_theory):
        g = _grounder(ex33_theory)
        rule = g.split(DomainLiteral(Atom("R", (0,)), True))
        assert rule.id == "5a"
        assert rule.head == Lit("R", (0,))
        assert rule.is_ground()
        assert "5" not in g.d_delayed
        rest = g.d_delayed.get("5b")
        assert list(rest.bind) == [(1,)]
        assert g.d_delayed.rule_for(Atom("R", (1,))).id == "5b"

    @staticmethod
    def test_split_undefined(ex33_theory):
        g = _grounder(ex33_theory)
        with pytest.raises(UsageError):
            g.split(DomainLiteral(Atom("edge", (0, 1)), True))

    @staticmethod
    def test_small_rules_are_grounded_fully(ex33_theory):
        g = _grounder(ex33_theory, PartialStructure(2))
        assert g.is_small(ex33_theory.definition.get("3"))
        result = g.split_and_ground(DomainLiteral(Atom("C2"), True), PartialStructure(2))
        assert result.how == "full"
        assert all(r.is_ground() for r in result.ground)
        assert g.d_ground.rule_for(Atom("C2")) is not None


class TestSimplify:
    @staticmethod
    def test_known_literals_fold():
        s = PartialStructure(2)
        s.assign(DomainLiteral(Atom("P", (0,)), True))
        assert ground_simplify(Lit("P", (0,)), s) == TRUE
        assert ground_simplify(Lit("P", (0,), False), s) == FALSE
        assert ground_simplify(Or((Lit("P", (0,), False), Lit("Q", (1,)))), s) == Lit("Q", (1,))
        assert ground_simplify(Lit("=", (0, 1)), None) == FALSE


class TestFullGrounding:
    @staticmethod
    def test_every_defined_atom_gets_a_ground_rule(ex33_theory, ex33):
        vocabulary = ex33_theory.vocabulary.copy()
        d_ground, stats = full_ground(ex33_theory.definition, vocabulary, ex33[1])
        assert all(r.is_ground() for r in d_ground)
        for atom in (Atom("C1"), Atom("C2"), Atom("root", (0,)), Atom("root", (1,)), Atom("R", (0,)),
                     Atom("R", (1,)), Atom("pt")):
            assert d_ground.rule_for(atom) is not None
        assert stats["ground_rules"] == len(d_ground)
        assert stats["ground_atoms"] >= 11

    @staticmethod
    def test_budget(ex33_theory):
        with pytest.raises(ResourceExhausted) as info:
            full_ground(ex33_theory.definition, ex33_theory.vocabulary.copy(), max_ground_atoms=3)
        assert info.value.stats["ground_atoms"] > 3
