import pytest

from engine.clauses import ClauseStore
from engine.errors import InvariantViolation
from engine.kernel import And, Atom, DomainLiteral, F, Lit, Or, PartialStructure, Rule, T, U


def _store():
    s = PartialStructure(1)
    return s, ClauseStore(s)


class TestPropagation:
    @staticmethod
    def test_conflict_and_first_uip():
        _, store = _store()
        a, b = store.var(Atom("a")), store.var(Atom("b"))
        assert store.add_clause([-a, b]) is None
        assert store.add_clause([-a, -b]) is None
        store.new_level()
        store.assign(a)
        conflict = store.propagate()
        assert sorted(conflict.lits) == sorted([-a, -b])
        assert store.value(b) is True
        learned, level = store.analyze(conflict)
        assert learned == [-a]
        assert level == 0

    @staticmethod
    def test_assignments_are_mirrored():
        s, store = _store()
        a = store.var(Atom("a"))
        store.new_level()
        store.assign(-a)
        assert s.value(Atom("a")) is F
        assert store.backtrack(0) == [-a]
        assert s.value(Atom("a")) is U
        assert store.value(a) is None

    @staticmethod
    def test_known_atoms_are_level_zero():
        s, store = _store()
        s.assign(DomainLiteral(Atom("p"), True))
        p = store.var(Atom("p"))
        assert store.value(p) is True
        assert store.level_of(p) == 0


class TestClausification:
    @staticmethod
    def test_conjunctive_rule():
        _, store = _store()
        store.add_rule(Rule("1", Lit("H"), And((Lit("A"), Lit("B")))))
        assert store.stats.problem == 3
        assert store.stats.aux_vars == 0

    @staticmethod
    def test_nested_body_gets_aux_variable():
        _, store = _store()
        store.add_rule(Rule("1", Lit("H"), Or((And((Lit("A"), Lit("B"))), Lit("C")))))
        assert store.stats.aux_vars == 1
        assert store.num_vars == 5

    @staticmethod
    def test_unit_rule_propagates_head():
        s, store = _store()
        store.add_rule(Rule("1", Lit("H"), Lit("A")))
        store.new_level()
        store.assign(store.var(Atom("A")))
        assert store.propagate() is None
        assert s.value(Atom("H")) is T


class TestBackjumpSupport:
    @staticmethod
    def test_stale_conflict_is_settled():
        _, store = _store()
        a, b = store.var(Atom("a")), store.var(Atom("b"))
        clause = store.add_clause([a, b])
        store.new_level()
        store.assign(-a)
        store.new_level()
        store.assign(-b)
        assert store.is_falsified(clause)
        assert store.falsified() is clause
        store.backtrack(1)
        assert not store.is_falsified(clause)
        assert store.falsified() is None
        assert store.settle(clause) is None
        assert store.value(b) is True
        assert clause in store.late

    @staticmethod
    def test_asserting_literal_must_be_free():
        _, store = _store()
        a, b = store.var(Atom("a")), store.var(Atom("b"))
        store.new_level()
        store.assign(a)
        with pytest.raises(InvariantViolation):
            store.add_learned([a, -b])
        learned = store.add_learned([b, -a])
        assert store.value(b) is True
        assert learned in store.learned
