from engine.justify import (JUST_FALSE, ChangeQueue, JustificationFormula, SymbolicLiteralSet, justifies,
                            query_violated)
from engine.kernel import Atom, Bindings, DomainLiteral, DomainSet, Lit, Or, PartialStructure

EITHER_RULE = """
vocabulary {
    open P/1, Q/2, R/2
    defined H/0
}
domain {
    D = {%s}
}
theory {
    H.
    define {
        H <- (!x in D: ~P(x)) | (!u v in D: Q(u,v) & ~R(u,v)).
    }
}
"""

H = DomainLiteral(Atom("H"), True)


def _either(make_manager, elements="d1, d2"):
    theory, grounder, manager = make_manager(EITHER_RULE % elements)
    body = grounder.d_delayed.get("2").body
    return theory, grounder, manager, body


def _dl(pred, *args, sign=True):
    return DomainLiteral(Atom(pred, tuple(args)), sign)


class TestJustifies:
    @staticmethod
    def _defined(atom):
        return atom.pred in ("a", "b")

    @staticmethod
    def test_chain_to_open_literal():
        edges = {_dl("a"): [_dl("b")], _dl("b"): [_dl("p")]}
        assert justifies(edges, [_dl("a")], TestJustifies._defined)

    @staticmethod
    def test_positive_cycle_is_unfounded():
        edges = {_dl("a"): [_dl("b")], _dl("b"): [_dl("a")]}
        assert not justifies(edges, [_dl("a")], TestJustifies._defined)

    @staticmethod
    def test_negative_cycle():
        edges = {_dl("a", sign=False): [_dl("b", sign=False)], _dl("b", sign=False): [_dl("a", sign=False)]}
        assert justifies(edges, [_dl("a", sign=False)], TestJustifies._defined)
        assert not justifies(edges, [_dl("a", sign=False)], TestJustifies._defined, acyclic=True)

    @staticmethod
    def test_missing_edge():
        edges = {_dl("a"): [_dl("b")]}
        assert not justifies(edges, [_dl("a")], TestJustifies._defined)

    @staticmethod
    def test_inconsistent_leaves():
        edges = {_dl("a"): [_dl("p"), _dl("p", sign=False)]}
        assert not justifies(edges, [_dl("a")], TestJustifies._defined)


class TestDirectJustifications:
    @staticmethod
    def test_symbolic_set_denotation():
        both = DomainSet.interval(0, 2)
        dj = SymbolicLiteralSet((Lit("edge", ("x", "y"), False),), Bindings(("x", "y"), (both, both)))
        assert len(set(dj.denotation())) == 4
        assert dj.estimate() == 4
        assert dj.contains(_dl("edge", 1, 0, sign=False))
        assert not dj.contains(_dl("edge", 1, 0))

    @staticmethod
    def test_query_violated():
        jf = JustificationFormula(Or((Lit("R", ("x",)), Lit("S", ("x",)))), Bindings(("x",), (DomainSet.of([0]),)))
        s = PartialStructure(1)
        s.assign(_dl("R", 0, sign=False))
        assert not query_violated(jf, s)
        s.assign(_dl("S", 0, sign=False))
        assert query_violated(jf, s)
        assert not query_violated(jf, s, _dl("P", 0))

    @staticmethod
    def test_change_queue_is_a_set():
        q = ChangeQueue()
        assert q.push(_dl("a"))
        assert not q.push(_dl("a"))
        assert len(q) == 1
        assert q.pop() == _dl("a")
        assert not q


class TestBuildDjust:
    @staticmethod
    def test_initial_justification(make_manager, ex33_text):
        _, _, manager = make_manager(ex33_text[0])
        seed = manager.init_just(_dl("root", 1))
        assert seed.lits == ()
        assert list(seed.bind) == [(1,)]

    @staticmethod
    def test_first_disjunct(make_manager):
        _, _, manager, body = _either(make_manager)
        dj = manager.build_djust(H, body, manager.init_just(H))
        assert dj.lits == (Lit("P", ("x",), False),)
        assert len(dj.bind) == 2

    @staticmethod
    def test_falls_back_to_second_disjunct(make_manager):
        _, _, manager, body = _either(make_manager)
        manager.structure.assign(_dl("P", 0))
        dj = manager.build_djust(H, body, manager.init_just(H))
        assert dj.lits == (Lit("Q", ("u", "v")), Lit("R", ("u", "v"), False))

    @staticmethod
    def test_no_justification(make_manager):
        _, _, manager, body = _either(make_manager)
        manager.structure.assign(_dl("P", 0))
        manager.structure.assign(_dl("Q", 0, 0, sign=False))
        assert manager.build_djust(H, body, manager.init_just(H)) is JUST_FALSE
        assert manager.stats["justification_failures"] == 1


class TestMaintenance:
    @staticmethod
    def test_falsified_justification_is_queued(make_manager):
        _, _, manager, body = _either(make_manager)
        manager.graph.set(H, manager.build_djust(H, body, manager.init_just(H)))
        manager.structure.assign(_dl("P", 0))
        manager.check_literal(_dl("P", 0))
        assert H in manager.queue

    @staticmethod
    def test_unknown_head_drops_invalid_justification(make_manager):
        _, _, manager, body = _either(make_manager)
        manager.graph.set(H, manager.build_djust(H, body, manager.init_just(H)))
        manager.structure.assign(_dl("P", 0))
        assert manager.lazy_ground(H) is None
        assert not manager.graph.has(H)

    @staticmethod
    def test_true_head_is_rejustified(make_manager):
        _, _, manager, body = _either(make_manager)
        manager.structure.assign(H)
        assert manager.lazy_ground(H) is None
        assert manager.graph.get(H).lits == (Lit("P", ("x",), False),)
        assert len(manager.d_ground) == 0

    @staticmethod
    def test_violation_triggers_body_split(make_manager):
        _, grounder, manager, body = _either(make_manager, "d1, d2, d3")
        manager.graph.set(H, manager.build_djust(H, body, manager.init_just(H)))
        manager.structure.assign(H)
        manager.structure.assign(_dl("P", 0))
        manager.check_literal(_dl("P", 0))
        result = manager.lazy_ground(manager.queue.pop())
        assert result.how == "body-split"
        assert "2a" in grounder.d_ground
        assert "2b" in grounder.d_delayed
        assert "2" not in grounder.d_delayed
        inherited = manager.graph.get(_dl("_T1"))
        assert inherited.lits == (Lit("P", ("x",), False),)
        assert list(inherited.bind) == [(1,), (2,)]
