"""Every mode against brute-force enumeration on small theories."""

import pytest

from bench.generators import InstanceSpec
from bench.harness import MODES, load_instance
from bench.oracle import oracle_solve
from config.settings import HeuristicsConfig
from engine.search import SAT, solve
from frontend.parser import parse

HEADER = """
vocabulary {
    open P/1, Q/1, E/2
    defined %s
}
domain {
    D = {a, b}
}
"""

PROBLEMS = {
    "choice": ("S/1", """
        !x in D: P(x) | Q(x).
        ?x in D: ~P(x).
        ?x in D: S(x).
        define { !x in D: S(x) <- P(x). }
    """),
    "contradiction": ("S/1", """
        !x in D: P(x).
        ?x in D: ~P(x).
        define { !x in D: S(x) <- Q(x). }
    """),
    "closure": ("T/2", """
        ?x y in D: E(x,y).
        !x in D: ~T(x,x).
        define {
            !x y in D: T(x,y) <- E(x,y) | ?z in D: E(x,z) & T(z,y).
        }
    """),
    "forced-cycle": ("T/2", """
        ?x in D: T(x,x).
        !x y in D: ~E(x,y).
        define {
            !x y in D: T(x,y) <- E(x,y) | ?z in D: E(x,z) & T(z,y).
        }
    """),
    "negated-definition": ("S/1", """
        !x in D: S(x) | Q(x).
        ?x in D: ~S(x) & ~Q(x).
        define { !x in D: S(x) <- ~P(x). }
    """),
    "odd-loop": ("A/0", """
        define { A <- ~A. }
    """),
    "even-loop": ("A/0, B/0", """
        define {
            A <- ~B.
            B <- ~A.
        }
    """),
    "stratified": ("Reach/1, Un/1", """
        Un(b).
        ?x in D: E(x,x).
        define {
            !x in D: Reach(x) <- x = a | ?y in D: Reach(y) & E(y,x).
        }
        define {
            !x in D: Un(x) <- ~Reach(x).
        }
    """),
}


def _problem(name):
    defined, body = PROBLEMS[name]
    return HEADER % defined + "theory {\n" + body + "\n}\n"


@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_mode_matches_oracle(name, mode):
    problem, structure = parse(_problem(name))
    theory = problem.canonical()
    expected = oracle_solve(theory, structure).status
    result = solve(theory, structure, HeuristicsConfig(mode=mode), check=True)
    assert result.status == expected
    if result.status == SAT:
        assert result.checked


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_global_plan_matches_oracle(name):
    problem, structure = parse(_problem(name))
    theory = problem.canonical()
    expected = oracle_solve(theory, structure).status
    assert solve(theory, structure, HeuristicsConfig(global_plan=True), check=True).status == expected


@pytest.mark.parametrize("seed", range(5))
def test_seeds_agree(seed):
    problem, structure = parse(_problem("closure"))
    theory = problem.canonical()
    result = solve(theory, structure, HeuristicsConfig(seed=seed, polarity_true_prob=0.5), check=True)
    assert result.status == SAT and result.checked


@pytest.mark.parametrize("family", ["exists", "forall", "lup-pair", "nested-forall", "forall-or", "reach"])
def test_generated_families(family):
    spec = InstanceSpec(family, 2, arity=1 if family != "reach" else None)
    theory, structure = load_instance(spec)
    expected = oracle_solve(theory, structure).status
    for mode in MODES:
        assert solve(theory, structure, HeuristicsConfig(mode=mode), check=True).status == expected


class TestScaling:
    @staticmethod
    @pytest.mark.slow
    def test_lazy_grounds_less_on_existentials():
        theory, structure = load_instance(InstanceSpec("exists", 30))
        lazy = solve(theory, structure, HeuristicsConfig(mode="lazy"))
        assert lazy.status == SAT
        assert lazy.stats["ground_atoms"] < 30 ** 3

    @staticmethod
    @pytest.mark.slow
    def test_reach_large_domain():
        theory, structure = load_instance(InstanceSpec("reach", 60))
        lazy = solve(theory, structure, HeuristicsConfig(mode="lazy"), check=True)
        assert lazy.status == SAT and lazy.checked
        eager = solve(theory, structure, HeuristicsConfig(mode="eager"))
        assert eager.status == SAT
        assert lazy.stats["ground_atoms"] <= eager.stats["ground_atoms"]

    @staticmethod
    @pytest.mark.slow
    def test_nested_forall_stays_small():
        theory, structure = load_instance(InstanceSpec("nested-forall", 40))
        result = solve(theory, structure, HeuristicsConfig(mode="lazy"), check=True)
        assert result.status == SAT and result.checked
        assert result.stats["ground_atoms"] < 40 ** 3
