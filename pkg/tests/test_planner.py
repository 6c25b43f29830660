import pytest

from engine.justify import SymbolicLiteralSet
from engine.kernel import Atom, Bindings, DomainLiteral, DomainSet, Lit, Rule
from engine.planner import NodeType, Planner, RuleNode, exp_size, justification_factor

C1 = DomainLiteral(Atom("C1"), True)
C2 = DomainLiteral(Atom("C2"), True)


def _ex33_planner(make_manager, ex33_text):
    _, _, manager = make_manager(ex33_text[0])
    manager.structure.assign(C1)
    manager.structure.assign(C2)
    return manager, Planner(manager)


class TestCost:
    @staticmethod
    def test_expected_sizes():
        rule = Rule("9", Lit("A"), Lit("B"))
        pos = SymbolicLiteralSet((Lit("B"),))
        neg = SymbolicLiteralSet((Lit("B", (), False),))
        assert exp_size(rule, NodeType.NONE, size=8) == pytest.approx(8)
        assert exp_size(rule, NodeType.UNKNOWN, size=8) == pytest.approx(0.8)
        assert exp_size(rule, NodeType.TRUE, [pos], size=8) == pytest.approx(0.168)
        assert exp_size(rule, NodeType.FALSE, [neg], size=8) == pytest.approx(0.168)

    @staticmethod
    def test_justification_factor():
        bind = Bindings(("x",), (DomainSet.interval(0, 3),))
        dj = SymbolicLiteralSet((Lit("P", ("x",)), Lit("Q", ("x",), False)), bind)
        assert justification_factor(dj) == pytest.approx(1.0)

    @staticmethod
    def test_node_names():
        assert str(RuleNode("3", NodeType.TRUE)) == "<3,T>"
        assert str(RuleNode("5", NodeType.UNKNOWN)) == "<5,U>"


class TestPlanning:
    @staticmethod
    def test_selection(make_manager, ex33_text):
        _, planner = _ex33_planner(make_manager, ex33_text)
        graph = planner.build_plan_graph()
        selection = planner.solve_plan(graph)
        assert {str(n) for n in selection.rule_nodes} == {"<3,T>", "<4,U>", "<5,U>"}
        assert selection.cost == pytest.approx(2.527, abs=1e-3)
        assert selection.dump(graph)["cost"] == pytest.approx(2.527, abs=1e-3)

    @staticmethod
    def test_apply_selection(make_manager, ex33_text):
        manager, planner = _ex33_planner(make_manager, ex33_text)
        graph = planner.build_plan_graph()
        installed = planner.apply_selection(planner.solve_plan(graph), graph)
        assert RuleNode("3", NodeType.TRUE) in installed
        assert manager.graph.get(C2).lits == (Lit("edge", ("x", "y"), False),)
        assert C1 in manager.queue
        assert C2 not in manager.queue
