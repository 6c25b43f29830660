import pytest

from bench.harness import MODES
from bench.oracle import oracle_solve
from config.settings import HeuristicsConfig
from engine.clauses import Clause
from engine.errors import ResourceExhausted, UsageError
from engine.kernel import Atom, DomainLiteral, PartialStructure, T
from engine.search import SAT, UNSAT, LazyMX, VariableOrder, lazy_mx, solve
from frontend.parser import parse
from frontend.script import parse_script

CONTRADICTION = """
vocabulary {
    open P/0
}
theory {
    false.
}
"""

# P is only defined on the sub-domain S
PARTIAL_RULE = """
vocabulary {
    open Q/1
    defined P/1
}
domain {
    D = {a, b}
    S = {a}
}
theory {
    %s
    define {
        !x in S: P(x) <- Q(x).
    }
}
"""

# the body of S(a) holds whatever P and Q are, but no single literal of it is forced
TAUTOLOGICAL_LOOP = """
vocabulary {
    open P/1, Q/1
    defined S/1
}
domain {
    D = {a, b}
}
theory {
    S(a).
    define {
        !x in D: S(x) <- S(x) | (~Q(b) | P(a)) | (~P(a) | S(b)).
    }
}
"""

OPEN_PAIR = """
vocabulary {
    open P/0, Q/0
}
theory {
    P | Q.
}
"""


class TestVariableOrder:
    @staticmethod
    def test_bumped_variable_first():
        order = VariableOrder()
        for var in (1, 2, 3):
            order.add(var)
        order.bump(2)
        assert order.pop_best(lambda v: True) == 2

    @staticmethod
    def test_ties_prefer_lower_variable():
        order = VariableOrder()
        order.add(2)
        order.add(1)
        assert order.pop_best(lambda v: True) == 1
        assert order.best_of([3, 2]) == 2

    @staticmethod
    def test_penalized_variables():
        order = VariableOrder(penalty=0.1)
        order.add(1, penalized=True)
        order.add(2)
        order.bump(1)
        order.bump(2)
        assert order.priority(1) == pytest.approx(0.1)
        assert order.best_of([1, 2]) == 2


class TestLazyMX:
    @staticmethod
    def test_defined_atom_in_input(ex33_theory):
        structure = PartialStructure(len(ex33_theory.vocabulary.elements))
        structure.assign(DomainLiteral(Atom("R", (0,)), True))
        with pytest.raises(UsageError):
            LazyMX(ex33_theory, structure)

    @staticmethod
    def test_contradiction():
        problem, structure = parse(CONTRADICTION)
        result = lazy_mx(problem.canonical(), structure)
        assert result.status == UNSAT

    @staticmethod
    def test_ground_atom_budget(ex33):
        problem, structure = ex33
        with pytest.raises(ResourceExhausted) as info:
            lazy_mx(problem.canonical(), structure, HeuristicsConfig(max_ground_atoms=1))
        assert info.value.stats["reason"] == "max ground atoms exceeded"
        assert info.value.stats["status"] == "RESOURCE"

    @staticmethod
    def test_stats_document(ex33):
        problem, structure = ex33
        result = lazy_mx(problem.canonical(), structure)
        assert result.status == SAT
        for key in ("status", "mode", "ground_atoms", "ground_rules", "decisions", "conflicts", "time"):
            assert key in result.stats
        assert result.stats["mode"] == "lazy"


class TestSolve:
    @staticmethod
    def test_replayed_trace(ex33, ex33_text):
        problem, structure = ex33
        theory = problem.canonical()
        script = parse_script(ex33_text[2], theory.vocabulary)
        config = script.apply(HeuristicsConfig())
        assert config.exists_batch == 1
        result = solve(theory, structure, config, script.entries, check=True)
        assert result.status == SAT
        assert result.checked
        assert "1" in result.state.d_ground
        assert "2a" in result.state.d_ground
        assert result.model.value(Atom("edge", (0, 1))) is T
        assert result.model.value(Atom("edge", (1, 0))) is T

    @staticmethod
    @pytest.mark.parametrize("mode", ["lazy", "eager", "naive-lazy", "late"])
    def test_modes_agree(ex33, mode):
        problem, structure = ex33
        result = solve(problem.canonical(), structure, HeuristicsConfig(mode=mode), check=True)
        assert result.status == SAT
        assert result.checked

    @staticmethod
    def test_global_plan(ex33):
        problem, structure = ex33
        result = solve(problem.canonical(), structure, HeuristicsConfig(global_plan=True), check=True)
        assert result.status == SAT
        assert "rule_nodes" in result.plan

    @staticmethod
    def test_output_symbols(ex33):
        problem, structure = ex33
        result = solve(problem.canonical(), structure, output_symbols=["R"])
        assert result.status == SAT
        assert {a.pred for a in result.model.true_atoms()} <= {"R"}
        assert result.model.value(Atom("R", (0,))) is T


class TestUncoveredAtoms:
    @staticmethod
    @pytest.mark.parametrize("mode", MODES)
    def test_atom_outside_rule_domain_is_false(mode):
        problem, structure = parse(PARTIAL_RULE % "P(b).")
        theory = problem.canonical()
        assert oracle_solve(theory, structure).status == UNSAT
        result = solve(theory, structure, HeuristicsConfig(mode=mode))
        assert result.status == UNSAT
        assert result.stats["uncovered_atoms"] >= 1

    @staticmethod
    @pytest.mark.parametrize("mode", MODES)
    def test_atom_inside_rule_domain(mode):
        problem, structure = parse(PARTIAL_RULE % "P(a) & ~P(b).")
        result = solve(problem.canonical(), structure, HeuristicsConfig(mode=mode), check=True)
        assert result.status == SAT
        assert result.checked
        assert result.model.value(Atom("P", (0,))) is T
        assert result.model.value(Atom("Q", (0,))) is T


class TestLoopCheck:
    @staticmethod
    @pytest.mark.parametrize("mode", MODES)
    def test_open_body_atoms_are_decided(mode):
        problem, structure = parse(TAUTOLOGICAL_LOOP)
        config = HeuristicsConfig(mode=mode, time_limit=30, debug_checks=True)
        result = solve(problem.canonical(), structure, config, check=True)
        assert result.status == SAT
        assert result.checked
        assert result.stats["loop_nogoods"] <= 2


class TestModelTest:
    @staticmethod
    @pytest.mark.parametrize("stop_early", [True, False])
    def test_false_clause_becomes_pending_conflict(stop_early):
        problem, structure = parse(OPEN_PAIR)
        engine = LazyMX(problem.canonical(), structure, HeuristicsConfig(stop_early=stop_early))
        assert engine._setup()
        store = engine.store
        assert store.propagate() is None
        p = store.var(Atom("P"))
        store.new_level()
        store.assign(-p)
        # added behind the watches, so only the model test can see it
        clause = Clause([p], False, None)
        store.clauses.append(clause)
        assert store.all_assigned()
        assert engine._unsatisfied_vars() == ([], clause)
        assert not engine.is_model()
        assert engine._pending is clause
        assert engine.resolve(engine._pending)
        assert store.value(p) is True
        assert store.level == 0
