"""
Comparison harness: runs the engine modes on generated instances and
reports verdicts, grounding sizes and times.
"""

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import IO, Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from config.settings import HeuristicsConfig
from engine.errors import ResourceExhausted
from engine.grounder import estimate_size
from engine.kernel import PartialStructure
from engine.normalize import CanonicalTheory
from engine.search import solve
from frontend.parser import parse

from .generators import InstanceSpec, generate
from .oracle import oracle_solve

LOG = logging.getLogger(__name__)

MODES = ("lazy", "eager", "naive-lazy", "late")
CSV_FIELDS = ("instance", "family", "size", "seed", "mode", "status", "time", "ground_atoms", "ground_rules",
              "eager_estimate", "oracle", "agrees")


@dataclass
class RunReport:
    instance: str
    family: str
    size: int
    seed: int
    mode: str
    status: str
    time: float
    ground_atoms: int = 0
    ground_rules: int = 0
    eager_estimate: float = 0.0
    oracle: str = ""
    agrees: Optional[bool] = None
    stats: Dict[str, Any] = field(default_factory=dict)

    def row(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("stats")
        data["time"] = round(self.time, 6)
        data["eager_estimate"] = round(self.eager_estimate, 3)
        data["agrees"] = "" if self.agrees is None else str(self.agrees).lower()
        return data


def grounding_estimate(theory: CanonicalTheory) -> float:
    """Estimated atom count of the full grounding."""
    return sum(estimate_size(rule) for rule in theory.definition)


def load_instance(spec: InstanceSpec) -> Tuple[CanonicalTheory, PartialStructure]:
    problem_text, structure_text = generate(spec)
    problem, structure = parse(problem_text, structure_text)
    return problem.canonical(), structure


def run_instance(spec: InstanceSpec, mode: str, config: Optional[HeuristicsConfig] = None,
                 check: bool = False) -> RunReport:
    """One engine run; budget failures become a ``RESOURCE`` report."""
    theory, structure = load_instance(spec)
    config = (config or HeuristicsConfig()).updated(mode=mode, seed=spec.seed)
    estimate = grounding_estimate(theory)
    started = time.perf_counter()
    try:
        result = solve(theory, structure, config, check=check)
    except ResourceExhausted as e:
        LOG.warning("%s/%s: %s", spec.name, mode, e.reason)
        return RunReport(spec.name, spec.family, spec.size, spec.seed, mode, "RESOURCE",
                         time.perf_counter() - started, e.stats.get("ground_atoms", 0),
                         e.stats.get("ground_rules", 0), estimate, stats=e.stats)
    elapsed = time.perf_counter() - started
    stats = result.stats
    return RunReport(spec.name, spec.family, spec.size, spec.seed, mode, result.status, elapsed,
                     stats.get("ground_atoms", 0), stats.get("ground_rules", 0), estimate, stats=stats)


def _run(args: Tuple[InstanceSpec, str, Optional[Dict[str, Any]], bool]) -> RunReport:
    spec, mode, config_data, check = args
    config = HeuristicsConfig(**config_data) if config_data is not None else None
    return run_instance(spec, mode, config, check)


def compare(spec: InstanceSpec, modes: Sequence[str] = MODES, config: Optional[HeuristicsConfig] = None,
            oracle: bool = False, check: bool = False, jobs: int = 1) -> List[RunReport]:
    """
    Run every mode on one instance with the same seed.

    With ``oracle`` the verdicts are compared against brute-force enumeration.
    """
    config_data = config.model_dump() if config is not None else None
    work = [(spec, mode, config_data, check) for mode in modes]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run, work))
    else:
        reports = [_run(w) for w in work]
    if oracle:
        theory, structure = load_instance(spec)
        expected = oracle_solve(theory, structure).status
        for report in reports:
            report.oracle = expected
            report.agrees = report.status == expected if report.status in ("SAT", "UNSAT") else None
    verdicts = {r.status for r in reports if r.status in ("SAT", "UNSAT")}
    if len(verdicts) > 1:
        LOG.warning("%s: modes disagree: %s", spec.name, {r.mode: r.status for r in reports})
    return reports


def sweep(family: str, sizes: Iterable[int], modes: Sequence[str] = MODES, seed: int = 0,
          arity: Optional[int] = None, config: Optional[HeuristicsConfig] = None,
          oracle: bool = False, jobs: int = 1) -> List[RunReport]:
    reports: List[RunReport] = []
    for size in sizes:
        spec = InstanceSpec(family, size, seed, arity)
        reports.extend(compare(spec, modes, config, oracle=oracle, jobs=jobs))
    return reports


def write_csv(reports: Sequence[RunReport], out: Union[str, IO[str]]) -> None:
    if isinstance(out, str):
        with open(out, "w", encoding="utf-8", newline="") as f:
            write_csv(reports, f)
        return
    writer = csv.DictWriter(out, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for report in reports:
        writer.writerow(report.row())


def write_stats(reports: Sequence[RunReport], directory: str) -> List[str]:
    """One JSON stats document per run; returns the written paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for report in reports:
        path = os.path.join(directory, f"{report.instance}-{report.mode}.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report.stats, f, indent=4, sort_keys=True)
        paths.append(path)
    return paths
