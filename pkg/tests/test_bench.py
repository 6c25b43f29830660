import io

import pytest

from bench.generators import FAMILIES, InstanceSpec, family_name, generate
from bench.harness import (CSV_FIELDS, MODES, RunReport, compare, grounding_estimate, load_instance, run_instance,
                           sweep, write_csv, write_stats)
from bench.oracle import oracle_solve
from config.settings import HeuristicsConfig
from engine.errors import UsageError
from frontend.parser import parse

TWO_DEFINITIONS = """
vocabulary {
    open Q/0, R/0
    defined P/0
}
theory {
    define {
        P <- Q.
    }
    define {
        P <- R.
    }
}
"""


class TestGenerators:
    @staticmethod
    @pytest.mark.parametrize("family", list(FAMILIES))
    def test_every_family_parses(family):
        problem_text, structure_text = generate(InstanceSpec(family, 3))
        problem, _ = parse(problem_text, structure_text)
        assert problem.canonical().definition.get("1") is not None

    @staticmethod
    def test_deterministic_per_seed():
        a = generate(InstanceSpec("coloring", 6, seed=4))
        assert generate(InstanceSpec("coloring", 6, seed=4)) == a
        assert generate(InstanceSpec("coloring", 6, seed=5)) != a

    @staticmethod
    def test_names_and_numbers():
        assert InstanceSpec("reach", 3).name == "reach-3-s0"
        assert InstanceSpec("exists", 5, 2, 4).name == "exists-5-a4-s2"
        assert family_name("5") == "nested-forall"
        assert family_name("forall-or") == "forall-or"
        with pytest.raises(UsageError):
            family_name("7")

    @staticmethod
    @pytest.mark.parametrize("spec", [
        InstanceSpec("exists", -1),
        InstanceSpec("exists", 3, arity=0),
        InstanceSpec("reach", 0),
        InstanceSpec("sudoku", 3),
    ])
    def test_invalid(spec):
        with pytest.raises(UsageError):
            generate(spec)

    @staticmethod
    def test_arity():
        problem_text, _ = generate(InstanceSpec("forall", 2, arity=5))
        assert "P/5" in problem_text


class TestOracle:
    @staticmethod
    def test_ex33(ex33):
        problem, structure = ex33
        result = oracle_solve(problem.canonical(), structure)
        assert result.status == "SAT"
        assert result.count == 4
        assert result.unknown_atoms == 4

    @staticmethod
    def test_single_model():
        problem, structure = parse("vocabulary { open P/1 }\ndomain { D = {d} }\ntheory { P(d). }\n")
        assert oracle_solve(problem.canonical(), structure).count == 1

    @staticmethod
    def test_separate_definitions_of_one_symbol():
        problem, structure = parse(TWO_DEFINITIONS)
        result = oracle_solve(problem.canonical(), structure, keep_models=True)
        assert result.count == 2
        assert len(result.models) == 2

    @staticmethod
    def test_empty_domain_is_unsat():
        theory, structure = load_instance(InstanceSpec("exists", 0))
        assert oracle_solve(theory, structure).status == "UNSAT"

    @staticmethod
    def test_limit(ex33):
        problem, structure = ex33
        with pytest.raises(UsageError):
            oracle_solve(problem.canonical(), structure, limit=3)


class TestHarness:
    @staticmethod
    def test_report_row():
        report = RunReport("reach-3-s0", "reach", 3, 0, "lazy", "SAT", 0.1234567, 10, 4, 12.34567,
                           stats={"status": "SAT"})
        row = report.row()
        assert tuple(row) == CSV_FIELDS
        assert row["agrees"] == ""
        assert row["time"] == 0.123457
        assert row["eager_estimate"] == 12.346
        report.agrees = False
        assert report.row()["agrees"] == "false"

    @staticmethod
    def test_grounding_estimate(ex33_theory):
        assert grounding_estimate(ex33_theory) == pytest.approx(20.0)

    @staticmethod
    def test_run_instance():
        report = run_instance(InstanceSpec("forall-or", 3), "lazy", check=True)
        assert report.status == "SAT"
        assert report.mode == "lazy"
        assert report.stats["status"] == "SAT"

    @staticmethod
    def test_resource_report():
        report = run_instance(InstanceSpec("reach", 4), "eager", HeuristicsConfig(max_ground_atoms=2))
        assert report.status == "RESOURCE"
        assert report.stats["reason"] == "max ground atoms exceeded"

    @staticmethod
    def test_compare_with_oracle():
        reports = compare(InstanceSpec("lup-pair", 2, arity=1), MODES, oracle=True, check=True)
        assert [r.mode for r in reports] == list(MODES)
        assert all(r.oracle == "SAT" and r.agrees for r in reports)

    @staticmethod
    def test_sweep_and_reports(tmp_path):
        reports = sweep("forall", [1, 2], ["lazy", "eager"])
        assert [(r.size, r.mode) for r in reports] == [(1, "lazy"), (1, "eager"), (2, "lazy"), (2, "eager")]
        buffer = io.StringIO()
        write_csv(reports, buffer)
        lines = buffer.getvalue().splitlines()
        assert lines[0] == ",".join(CSV_FIELDS)
        assert len(lines) == 5
        paths = write_stats(reports, str(tmp_path / "stats"))
        assert len(paths) == 4
