"""
Benchmark instance generators.

Every family returns problem and structure text; the output depends only
on (family, size, seed, arity).
"""

import logging
import random
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

from engine.errors import UsageError

LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    size: int
    seed: int = 0
    arity: Optional[int] = None

    @property
    def name(self) -> str:
        arity = f"-a{self.arity}" if self.arity is not None else ""
        return f"{self.family}-{self.size}{arity}-s{self.seed}"


def _elements(prefix: str, n: int) -> List[str]:
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def _set(names: List[str]) -> str:
    return "{" + ", ".join(names) + "}"


def _vars(prefix: str, n: int) -> List[str]:
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def _problem(opens: List[str], defined: List[str], domains: Dict[str, List[str]],
             sentences: List[str], rules: Optional[List[str]] = None) -> str:
    lines = ["vocabulary {"]
    if opens:
        lines.append("    open " + ", ".join(opens))
    if defined:
        lines.append("    defined " + ", ".join(defined))
    lines.append("}")
    lines.append("domain {")
    for name, elems in domains.items():
        lines.append(f"    {name} = {_set(elems)}")
    lines.append("}")
    lines.append("theory {")
    lines.extend(f"    {s}." for s in sentences)
    if rules:
        lines.append("    define {")
        lines.extend(f"        {r}." for r in rules)
        lines.append("    }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _table(pred: str, rows: List[Tuple[str, ...]]) -> str:
    return f"{pred} := {{" + ", ".join("(" + ",".join(r) + ")" for r in rows) + "}"


# -- crafted families --------------------------------------------------------

def exists(spec: InstanceSpec) -> Tuple[str, str]:
    k = spec.arity or 3
    xs = " ".join(_vars("x", k))
    atom = f"P({','.join(_vars('x', k))})"
    return _problem([f"P/{k}"], [], {"D": _elements("d", spec.size)}, [f"?{xs} in D: {atom}"]), ""


def inductive(spec: InstanceSpec) -> Tuple[str, str]:
    k = spec.arity or 3
    xs = " ".join(_vars("x", k))
    args = ",".join(_vars("x", k))
    rule = f"!{xs} in D: P({args}) <- P({args}) | Q({args})"
    return _problem([f"Q/{k}"], [f"P/{k}"], {"D": _elements("d", spec.size)}, [], [rule]), ""


def universal(spec: InstanceSpec) -> Tuple[str, str]:
    k = spec.arity or 3
    xs = " ".join(_vars("x", k))
    atom = f"P({','.join(_vars('x', k))})"
    return _problem([f"P/{k}"], [], {"D": _elements("d", spec.size)}, [f"!{xs} in D: {atom}"]), ""


def _nested(k: int) -> str:
    xs = _vars("x", k)
    return f"!{' '.join(xs)} in D: ~R({','.join(xs)}) | !y in D: P({','.join(xs)},y)"


def lup_pair(spec: InstanceSpec) -> Tuple[str, str]:
    k = spec.arity or 2
    xs = _vars("x", k)
    sentences = [f"!{' '.join(xs)} in D: ~R({','.join(xs)})", _nested(k)]
    return _problem([f"R/{k}", f"P/{k + 1}"], [], {"D": _elements("d", spec.size)}, sentences), ""


def nested_forall(spec: InstanceSpec) -> Tuple[str, str]:
    k = spec.arity or 2
    return _problem([f"R/{k}", f"P/{k + 1}"], [], {"D": _elements("d", spec.size)}, [_nested(k)]), ""


def forall_or(spec: InstanceSpec) -> Tuple[str, str]:
    k = spec.arity or 2
    xs = _vars("x", k)
    args = ",".join(xs)
    sentence = f"!{' '.join(xs)} in D: R({args}) | S({args})"
    return _problem([f"R/{k}", f"S/{k}"], [], {"D": _elements("d", spec.size)}, [sentence]), ""


# -- application families ----------------------------------------------------

def reach(spec: InstanceSpec) -> Tuple[str, str]:
    """Dynamic reachability: a graph whose reachable part is symmetric and misses some node."""
    elems = _elements("d", spec.size)
    if not elems:
        raise UsageError("reach needs at least one element")
    rules = [
        "C1 <- ?x in D: ~root(x) & R(x)",
        "C2 <- !x y in D: ~edge(x,y) | edge(y,x)",
        f"!x in D: root(x) <- x = {elems[0]}",
        "!x in D: R(x) <- root(x) | ?y in D: edge(x,y) & R(y)",
    ]
    return _problem(["edge/2"], ["root/1", "R/1", "C1/0", "C2/0"], {"D": elems}, ["C1 & C2"], rules), ""


def coloring(spec: InstanceSpec) -> Tuple[str, str]:
    rng = random.Random(spec.seed)
    nodes = _elements("n", spec.size)
    colours = _elements("c", spec.arity or 3)
    edges = sorted({tuple(sorted(rng.sample(nodes, 2))) for _ in range(2 * spec.size)} if len(nodes) > 1 else set())
    sentences = [
        "!n in N: ?c in C: color(n,c)",
        "!n in N, c e in C: ~color(n,c) | ~color(n,e) | c = e",
        "!n m in N, c in C: ~edge(n,m) | ~color(n,c) | ~color(m,c)",
    ]
    problem = _problem(["edge/2", "color/2"], [], {"N": nodes, "C": colours}, sentences)
    return problem, _table("edge", edges) + "\n"


def disj_sched(spec: InstanceSpec) -> Tuple[str, str]:
    """Unit-length actions on a timeline of ``size`` points with disjointness and precedence pairs."""
    rng = random.Random(spec.seed)
    actions = _elements("a", spec.arity or 4)
    times = [f"t{i}" for i in range(spec.size)]
    pairs = [(a, b) for i, a in enumerate(actions) for b in actions[i + 1:]]
    disj = sorted(p for p in pairs if rng.random() < 0.5)
    prec = sorted(p for p in pairs if p not in disj and rng.random() < 0.3)
    lt = [(t, u) for i, t in enumerate(times) for u in times[i + 1:]]
    sentences = [
        "!a in A: ?t in T: start(a,t)",
        "!a in A, t u in T: ~start(a,t) | ~start(a,u) | t = u",
        "!a b in A, t in T: ~disj(a,b) | ~start(a,t) | ~start(b,t)",
        "!a b in A, t u in T: ~prec(a,b) | ~start(a,t) | ~start(b,u) | lt(t,u)",
    ]
    problem = _problem(["start/2", "disj/2", "prec/2", "lt/2"], [], {"A": actions, "T": times}, sentences)
    structure = "\n".join([_table("disj", disj), _table("prec", prec), _table("lt", lt)]) + "\n"
    return problem, structure


FAMILIES: Dict[str, Callable[[InstanceSpec], Tuple[str, str]]] = {
    "exists": exists,
    "inductive": inductive,
    "forall": universal,
    "lup-pair": lup_pair,
    "nested-forall": nested_forall,
    "forall-or": forall_or,
    "reach": reach,
    "coloring": coloring,
    "disj-sched": disj_sched,
}

# crafted benchmarks are also addressed by number
FAMILY_NUMBERS = {"1": "exists", "2": "inductive", "3": "forall", "4": "lup-pair", "5": "nested-forall",
                  "6": "forall-or"}


def family_name(name: str) -> str:
    name = FAMILY_NUMBERS.get(str(name), str(name))
    if name not in FAMILIES:
        raise UsageError(f"unknown family {name!r}; known: {', '.join(FAMILIES)}")
    return name


def generate(spec: InstanceSpec) -> Tuple[str, str]:
    """
    Problem and structure text for ``spec``.

    Raises:
        UsageError: Unknown family or invalid size/arity
    """
    family = family_name(spec.family)
    if spec.size < 0:
        raise UsageError(f"invalid size {spec.size}")
    if spec.arity is not None and spec.arity < 1:
        raise UsageError(f"invalid arity {spec.arity}")
    problem, structure = FAMILIES[family](spec)
    LOG.debug("generated %s (%d bytes)", spec.name, len(problem) + len(structure))
    return problem, structure
