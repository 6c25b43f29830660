"""
Global justification planning.

Before search starts, candidate justifications for every D_d rule are
collected into a graph of rule nodes and justification nodes, and a
selection minimizing the expected grounding size seeds J.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from .grounder import estimate_size
from .justify import JustificationManager, SymbolicLiteralSet, patterns_overlap
from .kernel import (And, Atom, Bindings, Definition, DomainLiteral, Exists, Forall, Formula, Lit, Or,
                     PartialStructure, Rule, T, F, negate)

LOG = logging.getLogger(__name__)

P_VAL = 0.1
P_TR = 0.3
CANDIDATE_CAP = 4
MAX_JUSTIFICATIONS = 2
EXACT_RULE_LIMIT = 20


class NodeType(str, Enum):
    NONE = "n"
    UNKNOWN = "U"
    TRUE = "T"
    FALSE = "F"


@dataclass(frozen=True)
class RuleNode:
    rule_id: str
    t: NodeType

    def __str__(self) -> str:
        return f"<{self.rule_id},{self.t.value}>"


@dataclass(frozen=True)
class JustNode:
    index: int
    rule_id: str
    sign: bool
    dj: SymbolicLiteralSet


@dataclass
class PlanGraph:
    """Rule nodes, justification nodes and the three edge kinds."""

    rules: Dict[str, Rule] = field(default_factory=dict)
    sizes: Dict[str, float] = field(default_factory=dict)
    rule_nodes: List[RuleNode] = field(default_factory=list)
    just_nodes: List[JustNode] = field(default_factory=list)
    valid: Dict[RuleNode, List[int]] = field(default_factory=dict)
    conflicts: Set[FrozenSet[Hashable]] = field(default_factory=set)
    depends: Dict[int, Set[RuleNode]] = field(default_factory=dict)

    def conflict(self, a: Hashable, b: Hashable) -> bool:
        return frozenset((a, b)) in self.conflicts

    def nodes_for(self, rule_id: str) -> List[RuleNode]:
        return [n for n in self.rule_nodes if n.rule_id == rule_id]


@dataclass
class Selection:
    """Chosen rule nodes with their justification nodes and the total cost."""

    rule_nodes: Tuple[RuleNode, ...] = ()
    just_nodes: Dict[RuleNode, Tuple[int, ...]] = field(default_factory=dict)
    cost: float = 0.0

    def dump(self, graph: PlanGraph) -> Dict[str, object]:
        return {
            "cost": round(self.cost, 6),
            "rule_nodes": [str(n) for n in self.rule_nodes],
            "justifications": {str(n): [graph.just_nodes[i].index for i in idx] for n, idx in self.just_nodes.items()},
        }


# ---------------------------------------------------------------------------
# Cost
# ---------------------------------------------------------------------------

def justification_factor(dj: SymbolicLiteralSet, p_tr: float = P_TR) -> float:
    pos = sum(1 for lit in dj.lits if lit.sign and not lit.is_builtin)
    neg = sum(1 for lit in dj.lits if not lit.sign and not lit.is_builtin)
    return (1 - p_tr) * pos + p_tr * neg


def exp_size(rule: Rule, t: NodeType, justifications: Sequence[SymbolicLiteralSet] = (),
             p_val: float = P_VAL, p_tr: float = P_TR, size: Optional[float] = None) -> float:
    """
    Expected grounding size of ``rule`` under a selection type.

    Args:
        rule: A D_d rule
        t: n (not delayed), U (no justification), T or F
        justifications: Selected justifications (T and F only)
        p_val: Probability that an atom gets a value
        p_tr: Probability that an assigned atom is true
        size: Size to weigh; defaults to estimate_size(rule)
    """
    size = estimate_size(rule) if size is None else size
    if t is NodeType.NONE:
        return size
    if t is NodeType.UNKNOWN:
        return size * p_val
    weight = p_tr if t is NodeType.TRUE else 1 - p_tr
    return size * p_val * weight * math.prod(justification_factor(j, p_tr) for j in justifications)


def compressed_size(rule: Rule) -> float:
    return float(math.ceil(math.log2(max(estimate_size(rule), 1.0))))


# ---------------------------------------------------------------------------
# Graph construction
# ---------------------------------------------------------------------------

def _conflicting(a: SymbolicLiteralSet, b: SymbolicLiteralSet) -> bool:
    for p in a.lits:
        for q in b.lits:
            if p.pred == q.pred and p.sign != q.sign and not p.is_builtin \
                    and patterns_overlap(p, a.bind, q, b.bind):
                return True
    return False


def _mentions_head(dj: SymbolicLiteralSet, rule: Rule, sign: Optional[bool]) -> bool:
    """Whether ``dj`` holds a literal over the head of ``rule`` (with ``sign``, or either)."""
    for lit in dj.lits:
        if lit.pred != rule.pred or sign is not None and lit.sign != sign:
            continue
        if patterns_overlap(lit, dj.bind, rule.head, rule.bind):
            return True
    return False


class Planner:
    """
    Builds and solves the optimal-justification problem for one engine.

    Args:
        manager: Justification manager whose structure and D_d are planned over
        p_val: Probability that an atom gets a value
        p_tr: Probability that an assigned atom is true
    """

    def __init__(self, manager: JustificationManager, p_val: float = P_VAL, p_tr: float = P_TR):
        self.manager = manager
        self.p_val = p_val
        self.p_tr = p_tr

    # -- candidates --------------------------------------------------------

    def _alternatives(self, phi: Formula, acc: SymbolicLiteralSet) -> List[SymbolicLiteralSet]:
        if isinstance(phi, Lit):
            if phi.is_builtin:
                return [acc.with_literal(phi)] if self.manager.builtin_holds(phi, acc.bind) else []
            if self.manager.false_instances(phi, acc.bind, 1):
                return []
            for q in acc.lits:
                if q.pred == phi.pred and q.sign != phi.sign and patterns_overlap(phi, acc.bind, q, acc.bind):
                    return []
            return [acc.with_literal(phi)]
        if isinstance(phi, (Forall, Exists)):
            return self._alternatives(phi.child, acc.with_block(phi.bind))
        if isinstance(phi, And):
            partial = [acc]
            for child in phi.children:
                partial = [r for p in partial for r in self._alternatives(child, p)][:CANDIDATE_CAP]
                if not partial:
                    break
            return partial
        out: List[SymbolicLiteralSet] = []
        for child in phi.children:
            out.extend(self._alternatives(child, acc))
        return out[:CANDIDATE_CAP]

    def candidates(self, rule: Rule, sign: bool) -> List[SymbolicLiteralSet]:
        """Candidate justifications for every head instance of ``rule`` at once."""
        body = rule.body if sign else negate(rule.body)
        seed = SymbolicLiteralSet((), rule.bind)
        found = []
        for dj in self._alternatives(body, seed):
            # a positive literal of the rule's own head would be circular
            if sign and _mentions_head(dj, rule, True):
                continue
            found.append(dj)
        return found[:CANDIDATE_CAP]

    def build_plan_graph(self, definition: Optional[Definition] = None,
                         structure: Optional[PartialStructure] = None) -> PlanGraph:
        definition = definition if definition is not None else self.manager.d_delayed
        structure = structure if structure is not None else self.manager.structure
        graph = PlanGraph()
        for rule in definition:
            graph.rules[rule.id] = rule
            graph.sizes[rule.id] = estimate_size(rule)
            known = structure.value(rule.head.atom()) if rule.is_ground() else None
            if known is T:
                kinds = [NodeType.TRUE]
            elif known is F:
                kinds = [NodeType.FALSE]
            else:
                kinds = [NodeType.TRUE, NodeType.FALSE, NodeType.UNKNOWN]
            for t in kinds:
                node = RuleNode(rule.id, t)
                if t is NodeType.UNKNOWN:
                    graph.rule_nodes.append(node)
                    continue
                cands = self.candidates(rule, t is NodeType.TRUE)
                if not cands:
                    continue
                graph.rule_nodes.append(node)
                graph.valid[node] = []
                for dj in cands:
                    idx = len(graph.just_nodes)
                    graph.just_nodes.append(JustNode(idx, rule.id, t is NodeType.TRUE, dj))
                    graph.valid[node].append(idx)

        for rule_id in graph.rules:
            for a, b in itertools.combinations(graph.nodes_for(rule_id), 2):
                graph.conflicts.add(frozenset((a, b)))
        for a, b in itertools.combinations(graph.just_nodes, 2):
            if _conflicting(a.dj, b.dj):
                graph.conflicts.add(frozenset((a.index, b.index)))
        for node in graph.rule_nodes:
            rule = graph.rules[node.rule_id]
            for jn in graph.just_nodes:
                if node.t is NodeType.UNKNOWN:
                    clash = _mentions_head(jn.dj, rule, None)
                else:
                    clash = _mentions_head(jn.dj, rule, node.t is not NodeType.TRUE)
                if clash:
                    graph.conflicts.add(frozenset((node, jn.index)))
                if node.t is not NodeType.UNKNOWN and _mentions_head(jn.dj, rule, node.t is NodeType.TRUE):
                    graph.depends.setdefault(jn.index, set()).add(node)
        LOG.debug("plan graph: %d rule nodes, %d justification nodes, %d conflicts",
                  len(graph.rule_nodes), len(graph.just_nodes), len(graph.conflicts))
        return graph

    # -- solving -----------------------------------------------------------

    def _options(self, graph: PlanGraph, rule_id: str, sizes: Dict[str, float]) -> List[Tuple[float, Optional[RuleNode], Tuple[int, ...]]]:
        rule = graph.rules[rule_id]
        size = sizes[rule_id]
        out = [(exp_size(rule, NodeType.NONE, size=size), None, ())]
        for node in graph.nodes_for(rule_id):
            if node.t is NodeType.UNKNOWN:
                out.append((exp_size(rule, node.t, (), self.p_val, self.p_tr, size), node, ()))
                continue
            idxs = graph.valid.get(node, [])
            for k in range(1, MAX_JUSTIFICATIONS + 1):
                for combo in itertools.combinations(idxs, k):
                    if any(graph.conflict(a, b) for a, b in itertools.combinations(combo, 2)):
                        continue
                    if any(graph.conflict(node, j) for j in combo):
                        continue
                    djs = [graph.just_nodes[j].dj for j in combo]
                    out.append((exp_size(rule, node.t, djs, self.p_val, self.p_tr, size), node, combo))
        out.sort(key=lambda o: o[0])
        return out

    @staticmethod
    def _compatible(graph: PlanGraph, chosen: Sequence[Tuple[Optional[RuleNode], Tuple[int, ...]]],
                    option: Tuple[Optional[RuleNode], Tuple[int, ...]]) -> bool:
        node, justs = option
        new = ([node] if node is not None else []) + list(justs)
        for other_node, other_justs in chosen:
            old = ([other_node] if other_node is not None else []) + list(other_justs)
            for a in new:
                for b in old:
                    if graph.conflict(a, b):
                        return False
        return True

    @staticmethod
    def _acyclic(graph: PlanGraph, chosen: Iterable[Tuple[Optional[RuleNode], Tuple[int, ...]]]) -> bool:
        """No positive or mixed cycle over the valid and depends-on edges of the selection."""
        chosen = list(chosen)
        selected = {node for node, _ in chosen if node is not None}
        dig = nx.DiGraph()
        for node, justs in chosen:
            for j in justs:
                dig.add_edge(node, j)
                for target in graph.depends.get(j, ()):
                    if target in selected:
                        dig.add_edge(j, target)
        for comp in nx.strongly_connected_components(dig):
            first = next(iter(comp))
            if len(comp) == 1 and not dig.has_edge(first, first):
                continue
            if any(isinstance(n, RuleNode) and n.t is NodeType.TRUE for n in comp):
                return False
        return True

    def solve_plan(self, graph: PlanGraph) -> Selection:
        """
        Minimize the summed expected size over the selection constraints.

        Exact branch-and-bound up to EXACT_RULE_LIMIT rules, greedy descent
        beyond. Sizes are compressed to ⌈log2 size⌉.
        """
        rule_ids = list(graph.rules)
        sizes = {rid: compressed_size(graph.rules[rid]) for rid in rule_ids}
        options = {rid: self._options(graph, rid, sizes) for rid in rule_ids}
        if len(rule_ids) <= EXACT_RULE_LIMIT:
            best = self._branch_and_bound(graph, rule_ids, options)
        else:
            best = self._greedy(graph, rule_ids, options)
        cost, picks = best
        selection = Selection(tuple(node for node, _ in picks if node is not None),
                              {node: justs for node, justs in picks if node is not None and justs}, cost)
        LOG.debug("plan selection %s cost %.4f", [str(n) for n in selection.rule_nodes], cost)
        return selection

    def _branch_and_bound(self, graph, rule_ids, options):
        floor = [min(o[0] for o in options[rid]) for rid in rule_ids]
        rest = [sum(floor[i:]) for i in range(len(rule_ids) + 1)]
        best_cost = math.inf
        best: List[Tuple[Optional[RuleNode], Tuple[int, ...]]] = []

        def search(i: int, cost: float, chosen: List[Tuple[Optional[RuleNode], Tuple[int, ...]]]) -> None:
            nonlocal best_cost, best
            if cost + rest[i] >= best_cost - 1e-12:
                return
            if i == len(rule_ids):
                best_cost, best = cost, list(chosen)
                return
            for opt_cost, node, justs in options[rule_ids[i]]:
                option = (node, justs)
                if not self._compatible(graph, chosen, option):
                    continue
                chosen.append(option)
                if self._acyclic(graph, chosen):
                    search(i + 1, cost + opt_cost, chosen)
                chosen.pop()

        search(0, 0.0, [])
        return best_cost, best

    def _greedy(self, graph, rule_ids, options):
        current = {rid: options[rid][[o[1] for o in options[rid]].index(None)] for rid in rule_ids}
        improved = True
        while improved:
            improved = False
            best_gain, best_move = 0.0, None
            for rid in rule_ids:
                others = [(o[1], o[2]) for r, o in current.items() if r != rid]
                for opt in options[rid]:
                    gain = current[rid][0] - opt[0]
                    if gain <= best_gain or not self._compatible(graph, others, (opt[1], opt[2])):
                        continue
                    if self._acyclic(graph, others + [(opt[1], opt[2])]):
                        best_gain, best_move = gain, (rid, opt)
            if best_move is not None:
                current[best_move[0]] = best_move[1]
                improved = True
        return sum(o[0] for o in current.values()), [(o[1], o[2]) for o in current.values()]

    # -- applying ----------------------------------------------------------

    def apply_selection(self, selection: Selection, graph: PlanGraph) -> List[RuleNode]:
        """
        Seed J from the selection; returns the rule nodes that were installed.

        Every justification is checked again with full validity. Nodes that
        fail stay unjustified, and all true literals defined in D_d without
        a justification are queued.
        """
        mgr = self.manager
        pending = [n for n in selection.rule_nodes if n.t in (NodeType.TRUE, NodeType.FALSE)]
        installed: List[RuleNode] = []
        progress = True
        while pending and progress:
            progress = False
            for node in list(pending):
                rule = mgr.d_delayed.get(node.rule_id)
                if rule is None:
                    pending.remove(node)
                    continue
                parts = tuple(graph.just_nodes[j].dj for j in selection.just_nodes.get(node, ()))
                sign = node.t is NodeType.TRUE
                head = next(rule.head_atoms(), None)
                if head is None or not parts:
                    pending.remove(node)
                    continue
                target = DomainLiteral(head, sign)
                if mgr.valid(target, parts if len(parts) > 1 else parts[0], owner=("plan", node.rule_id)):
                    mgr.install_rule_justification(rule, sign, parts)
                    installed.append(node)
                    pending.remove(node)
                    progress = True
        for node in pending:
            LOG.debug("plan justification for %s rejected", node)
        for lit in list(mgr.structure.literals()):
            if mgr.d_delayed.defines(lit.atom) and mgr.structure.is_true(lit) and not mgr.graph.has(lit):
                mgr.queue.push(lit)
        return installed

    def plan(self) -> Tuple[PlanGraph, Selection, List[RuleNode]]:
        graph = self.build_plan_graph()
        selection = self.solve_plan(graph)
        installed = self.apply_selection(selection, graph)
        self.manager.stats["plan_installed"] += len(installed)
        return graph, selection, installed
