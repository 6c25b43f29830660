import csv
import json

from bench.harness import CSV_FIELDS
from frontend.cli import EXIT_RESOURCE, EXIT_SAT, EXIT_UNSAT, EXIT_USAGE, main

UNSAT_PROBLEM = """
vocabulary {
    open P/0
}
theory {
    P & ~P.
}
"""


class TestSolve:
    @staticmethod
    def test_trace_run(ex33_paths, capsys):
        thy, structure, trace = ex33_paths
        assert main(["solve", thy, structure, "--script", trace, "--check"]) == EXIT_SAT
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "SAT"
        assert "edge(d1,d2)" in out
        assert "edge(d2,d1)" in out
        assert "% model check: passed" in out

    @staticmethod
    def test_output_symbols(ex33_paths, capsys):
        thy, structure, _ = ex33_paths
        assert main(["solve", thy, structure, "--output-symbols", "root"]) == EXIT_SAT
        assert capsys.readouterr().out == "SAT\nroot(d1)\n"

    @staticmethod
    def test_unknown_output_symbol(ex33_paths, capsys):
        thy, _, _ = ex33_paths
        assert main(["solve", thy, "--output-symbols", "nope"]) == EXIT_USAGE
        assert "nope" in capsys.readouterr().err

    @staticmethod
    def test_unsat(tmp_path, capsys):
        path = tmp_path / "unsat.thy"
        path.write_text(UNSAT_PROBLEM, encoding="utf-8")
        assert main(["solve", str(path)]) == EXIT_UNSAT
        assert capsys.readouterr().out == "UNSAT\n"

    @staticmethod
    def test_stats_document(ex33_paths, tmp_path):
        thy, structure, _ = ex33_paths
        stats = tmp_path / "run.json"
        assert main(["solve", thy, structure, "--check", "--stats", str(stats)]) == EXIT_SAT
        doc = json.loads(stats.read_text(encoding="utf-8"))
        assert doc["status"] == "SAT"
        assert doc["checked"] is True

    @staticmethod
    def test_resource_budget(ex33_paths, capsys):
        thy, structure, _ = ex33_paths
        assert main(["solve", thy, structure, "--max-ground-atoms", "1"]) == EXIT_RESOURCE
        assert capsys.readouterr().out == "UNKNOWN\n"

    @staticmethod
    def test_modes(ex33_paths, capsys):
        thy, structure, _ = ex33_paths
        for flags in (["--mode", "eager"], ["--late"], ["--mode", "naive-lazy"], ["--global-plan", "on"]):
            assert main(["solve", thy, structure, "--check"] + flags) == EXIT_SAT
        assert capsys.readouterr().out.count("% model check: passed") == 4


class TestErrors:
    @staticmethod
    def test_missing_subcommand():
        assert main([]) == EXIT_USAGE

    @staticmethod
    def test_missing_file(tmp_path):
        assert main(["solve", str(tmp_path / "absent.thy")]) == EXIT_USAGE

    @staticmethod
    def test_parse_error(tmp_path, capsys):
        path = tmp_path / "bad.thy"
        path.write_text("vocabulary { open P/1 }\ntheory { P(a). }\n", encoding="utf-8")
        assert main(["solve", str(path)]) == EXIT_USAGE
        assert "unknown symbol a" in capsys.readouterr().err

    @staticmethod
    def test_unknown_preset(ex33_paths, tmp_path, monkeypatch):
        monkeypatch.setattr("config.presets.PRESETS_FILE", str(tmp_path / "presets.json"))
        thy, structure, _ = ex33_paths
        assert main(["solve", thy, structure, "--preset", "no-such-preset"]) == EXIT_USAGE


class TestOtherCommands:
    @staticmethod
    def test_ground(ex33_paths, capsys):
        thy, structure, _ = ex33_paths
        assert main(["ground", thy, structure]) == 0
        out = capsys.readouterr().out
        assert "% ground rules:" in out
        assert "% ground atoms:" in out
        assert "% estimate:" in out
        assert "(1) pt <- C1 & C2." in out

    @staticmethod
    def test_oracle(ex33_paths, capsys):
        thy, structure, _ = ex33_paths
        assert main(["oracle", thy, structure]) == EXIT_SAT
        assert capsys.readouterr().out == "SAT\nmodels: 4\n"

    @staticmethod
    def test_bench(tmp_path):
        out = tmp_path / "report.csv"
        stats_dir = tmp_path / "stats"
        code = main(["bench", "--family", "reach", "--sizes", "2,3", "--modes", "lazy,eager", "--oracle",
                     "--out", str(out), "--stats-dir", str(stats_dir)])
        assert code == 0
        with open(out, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        assert tuple(rows[0].keys()) == CSV_FIELDS
        assert len(rows) == 4
        assert all(r["status"] == "SAT" and r["agrees"] == "true" for r in rows)
        assert len(list(stats_dir.iterdir())) == 4

    @staticmethod
    def test_bench_rejects_unknown_mode():
        assert main(["bench", "--family", "1", "--sizes", "2", "--modes", "lazy,warp"]) == EXIT_USAGE
