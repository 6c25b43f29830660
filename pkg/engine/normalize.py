"""
Canonical form {pt, D}: one atomic goal and one disjoint NNF definition.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from .errors import ParseError, UsageError
from .kernel import (And, Bindings, Definition, DomainSet, Exists, Forall, Formula, Lit, Or, Predicate,
                     PredicateKind, Rule, TRUE, Vocabulary, conj, disj, exists, forall, free_vars,
                     literals, negate, rename_vars)

LOG = logging.getLogger(__name__)

GOAL = "pt"


class Totality(str, Enum):
    TOTAL = "total"
    UNKNOWN = "unknown"


@dataclass
class CanonicalTheory:
    """
    Goal atom plus one merged definition.

    Args:
        goal: Name of the 0-ary goal predicate
        definition: Disjoint rule set, goal rule first
        vocabulary: Symbols including the goal and renamed copies
        original_predicates: Predicate names present in the input
        eager_rules: Rule ids from definitions whose totality is unknown
        renamed: Renamed copy -> original predicate
    """

    goal: str
    definition: Definition
    vocabulary: Vocabulary
    original_predicates: FrozenSet[str]
    eager_rules: FrozenSet[str] = frozenset()
    renamed: Dict[str, str] = field(default_factory=dict)

    @property
    def goal_rule(self) -> Rule:
        return self.definition.get("1")


# ---------------------------------------------------------------------------
# Dependency analysis
# ---------------------------------------------------------------------------

def dependency_graph(definition: Iterable[Rule], defined: Optional[Set[str]] = None) -> nx.DiGraph:
    """Signed predicate dependency graph: head -> defined body predicate."""
    rules = list(definition)
    defined = defined if defined is not None else {r.pred for r in rules}
    graph = nx.DiGraph()
    graph.add_nodes_from(defined)
    for rule in rules:
        for lit in literals(rule.body):
            if lit.pred not in defined:
                continue
            if graph.has_edge(rule.pred, lit.pred):
                graph[rule.pred][lit.pred]["negative"] |= not lit.sign
                graph[rule.pred][lit.pred]["positive"] |= lit.sign
            else:
                graph.add_edge(rule.pred, lit.pred, negative=not lit.sign, positive=lit.sign)
    return graph


def recursive_components(graph: nx.DiGraph) -> Dict[str, int]:
    """Predicate -> component index, for predicates on a dependency cycle."""
    out: Dict[str, int] = {}
    for idx, comp in enumerate(nx.strongly_connected_components(graph)):
        if len(comp) > 1 or any(graph.has_edge(n, n) for n in comp):
            for node in comp:
                out[node] = idx
    return out


def totality_check(definition: Iterable[Rule]) -> Totality:
    """
    Non-recursive, positive and stratified definitions are total.

    A negative dependency inside a strongly connected component defeats
    stratification; such definitions are reported unknown.
    """
    graph = dependency_graph(definition)
    component = {}
    for idx, comp in enumerate(nx.strongly_connected_components(graph)):
        for node in comp:
            component[node] = idx
    for head, body, data in graph.edges(data=True):
        if data["negative"] and component[head] == component[body]:
            LOG.debug("negative cycle through %s -> %s", head, body)
            return Totality.UNKNOWN
    return Totality.TOTAL


# ---------------------------------------------------------------------------
# Rule shape
# ---------------------------------------------------------------------------

def normalize_head(rule: Rule, universe: DomainSet) -> Rule:
    """Rewrite the head to distinct variables; constants become singleton domains."""
    bind = rule.bind
    body = rule.body
    args: List[str] = []
    seen: Set[str] = set()
    used = set(bind.vars) | free_vars(rule.body)
    for pos, term in enumerate(rule.head.args):
        if isinstance(term, str) and term not in seen:
            if term not in bind.vars:
                bind = bind.extend(term, universe)
            seen.add(term)
            args.append(term)
            continue
        fresh = _fresh_name(f"h{pos}", used)
        used.add(fresh)
        if isinstance(term, int):
            bind = bind.extend(fresh, DomainSet.of([term]))
        else:
            bind = bind.extend(fresh, bind.domain_of(term))
            body = conj(Lit("=", (term, fresh)), body)
        args.append(fresh)
    order = [bind.vars.index(a) for a in args]
    if sorted(order) != list(range(len(bind.vars))):
        raise UsageError(f"rule {rule.id}: quantified variables missing from head")
    bind = Bindings(tuple(args), tuple(bind.domains[i] for i in order), bind.excluded)
    return Rule(rule.id, Lit(rule.head.pred, tuple(args)), body, bind)


def _fresh_name(base: str, used: Set[str]) -> str:
    if base not in used:
        return base
    for k in itertools.count(1):
        name = f"{base}{k}"
        if name not in used:
            return name
    raise AssertionError("unreachable")


def alpha_rename(rule: Rule) -> Rule:
    """Give every quantifier in the body a variable name unused elsewhere in the rule."""
    used: Set[str] = set(rule.bind.vars)

    def walk(phi: Formula) -> Formula:
        if isinstance(phi, Lit):
            return phi
        if isinstance(phi, (And, Or)):
            return type(phi)(tuple(walk(c) for c in phi.children))
        mapping = {}
        for v in phi.bind.vars:
            if v in used:
                mapping[v] = _fresh_name(v, used)
            used.add(mapping.get(v, v))
        inner = rename_vars(phi.child, mapping) if mapping else phi.child
        bind = phi.bind
        if mapping:
            bind = Bindings(tuple(mapping.get(v, v) for v in bind.vars), bind.domains,
                            frozenset(tuple(sorted((mapping.get(v, v), e) for v, e in ex)) for ex in bind.excluded))
        return type(phi)(bind, walk(inner))

    return Rule(rule.id, rule.head, walk(rule.body), rule.bind)


def fuse_blocks(phi: Formula) -> Formula:
    """Merge directly nested quantifiers of the same kind into one block."""
    if isinstance(phi, Lit):
        return phi
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(fuse_blocks(c) for c in phi.children))
    child = fuse_blocks(phi.child)
    if type(child) is type(phi):
        return type(phi)(phi.bind.extend_block(child.bind), child.child)
    return type(phi)(phi.bind, child)


def simplify(phi: Formula) -> Formula:
    """Apply the smart-constructor reductions bottom-up."""
    if isinstance(phi, Lit):
        if phi.pred == "=" and phi.is_ground():
            return TRUE if (phi.args[0] == phi.args[1]) == phi.sign else disj()
        if phi.pred in ("true", "false") and not phi.args:
            return TRUE if (phi.pred == "true") == phi.sign else disj()
        return phi
    if isinstance(phi, And):
        return conj(*(simplify(c) for c in phi.children))
    if isinstance(phi, Or):
        return disj(*(simplify(c) for c in phi.children))
    if isinstance(phi, Forall):
        return forall(phi.bind, simplify(phi.child))
    return exists(phi.bind, simplify(phi.child))


# ---------------------------------------------------------------------------
# Disjointness
# ---------------------------------------------------------------------------

def _aligned(rule: Rule, target_vars: Sequence[str]) -> Rule:
    """Rename the head variables of ``rule`` to ``target_vars`` position-wise."""
    mapping = {a: t for a, t in zip(rule.head.args, target_vars) if a != t}
    if not mapping:
        return rule
    # keep body quantifiers clear of the new head names
    clash = set(target_vars) - set(rule.head.args)
    renamed = alpha_rename(Rule(rule.id, rule.head, rule.body,
                                Bindings(rule.bind.vars + tuple(sorted(clash)),
                                         rule.bind.domains + tuple(DomainSet() for _ in clash))))
    body = rename_vars(renamed.body, mapping)
    bind = Bindings(tuple(mapping.get(v, v) for v in rule.bind.vars), rule.bind.domains,
                    frozenset(tuple(sorted((mapping.get(v, v), e) for v, e in ex)) for ex in rule.bind.excluded))
    return Rule(rule.id, Lit(rule.pred, tuple(target_vars)), body, bind)


def _intersection(a: Bindings, b: Bindings) -> Bindings:
    domains = tuple(da.intersect(db) for da, db in zip(a.domains, b.domains))
    return Bindings(a.vars, domains, a.excluded | b.excluded)


def _minus_tuples(bind: Bindings, tuples: Iterable[Tuple[int, ...]]) -> Bindings:
    for values in tuples:
        bind = bind.minus(dict(zip(bind.vars, values)))
    return bind


def make_disjoint(definition: Iterable[Rule]) -> List[Rule]:
    """
    Replace overlapping rules of one predicate by disjoint ones.

    An overlapping pair over D1 and D2 becomes three rules: D1 & D2 with the
    disjunction of both bodies, D1 - D2 and D2 - D1. Unary heads use domain
    set algebra; wider heads exclude the enumerated overlap tuples.
    """
    out: List[Rule] = []
    for rule in definition:
        pending = [rule]
        while pending:
            new = pending.pop(0)
            for idx, old in enumerate(out):
                if old is None or old.pred != new.pred:
                    continue
                new_a = _aligned(new, old.head.args)
                common = _intersection(old.bind, new_a.bind)
                if common.is_empty():
                    continue
                overlap = list(common)
                LOG.debug("rules %s and %s overlap on %d tuples", old.id, new.id, len(overlap))
                if len(old.bind.vars) == 1:
                    var = old.bind.vars[0]
                    d_old, d_new = old.bind.domains[0], new_a.bind.domains[0]
                    shared = common.domains[0]
                    old_rest = Bindings((var,), (d_old.difference(shared),))
                    new_rest = Bindings((var,), (d_new.difference(shared),))
                else:
                    old_rest = _minus_tuples(old.bind, overlap)
                    new_rest = _minus_tuples(new_a.bind, overlap)
                merged = Rule(old.id, old.head, disj(old.body, new_a.body), common)
                out[idx] = merged
                if not old_rest.is_empty():
                    out.append(Rule(old.id, old.head, old.body, old_rest))
                new = Rule(new.id, new_a.head, new_a.body, new_rest) if not new_rest.is_empty() else None
                if new is None:
                    break
            else:
                out.append(new)
    return [r for r in out if r is not None]


# ---------------------------------------------------------------------------
# Canonical theory
# ---------------------------------------------------------------------------

def _rename_pred(phi: Formula, old: str, new: str) -> Formula:
    if isinstance(phi, Lit):
        return Lit(new, phi.args, phi.sign) if phi.pred == old else phi
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(_rename_pred(c, old, new) for c in phi.children))
    return type(phi)(phi.bind, _rename_pred(phi.child, old, new))


def _equivalence(pred: Predicate, copy: str, universe: DomainSet) -> Formula:
    names = tuple(f"e{i}" for i in range(pred.arity))
    a = Lit(pred.name, names)
    b = Lit(copy, names)
    body = conj(disj(a.negate(), b), disj(a, b.negate()))
    return forall(Bindings(names, tuple(universe for _ in names)), body)


def canonical_rule(rule: Rule, universe: DomainSet) -> Rule:
    rule = normalize_head(rule, universe)
    rule = alpha_rename(rule)
    return Rule(rule.id, rule.head, simplify(fuse_blocks(rule.body)), rule.bind)


def to_canonical(sentences: Sequence[Formula], definitions: Sequence[Sequence[Rule]],
                 vocabulary: Vocabulary) -> CanonicalTheory:
    """
    Build {pt, D} from parsed sentences and definitions.

    Args:
        sentences: Closed NNF sentences
        definitions: Rule lists, one per ``define`` block, in source order
        vocabulary: Symbols of the parsed problem (copied, not modified)

    Returns:
        The canonical theory; goal rule id "1", user rules "2", "3", ...
    """
    if not sentences and not any(definitions):
        raise ParseError("no goal")
    voc = vocabulary.copy()
    original = frozenset(p.name for p in voc.user_predicates())
    universe = voc.universe
    for phi in sentences:
        for lit in literals(phi):
            if lit.pred not in voc.predicates:
                raise UsageError(f"unknown predicate {lit.pred}")

    sentences = list(sentences)
    renamed: Dict[str, str] = {}
    seen_defined: Set[str] = set()
    blocks: List[List[Rule]] = []
    for block in definitions:
        rules = list(block)
        heads = {r.pred for r in rules}
        for pred_name in sorted(heads & seen_defined):
            copy = pred_name + "'"
            while copy in voc.predicates:
                copy += "'"
            pred = voc.predicate(pred_name)
            voc.add_predicate(Predicate(copy, pred.arity, PredicateKind.DEFINED))
            renamed[copy] = pred_name
            rules = [Rule(r.id, _rename_pred(r.head, pred_name, copy), _rename_pred(r.body, pred_name, copy), r.bind)
                     for r in rules]
            sentences.append(_equivalence(pred, copy, universe))
            LOG.debug("renamed second definition of %s to %s", pred_name, copy)
        seen_defined |= {r.pred for r in rules}
        blocks.append(rules)

    goal = GOAL if GOAL not in voc.predicates else "_" + GOAL
    voc.add_predicate(Predicate(goal, 0, PredicateKind.TSEITIN))
    goal_body = simplify(conj(*sentences)) if sentences else TRUE
    goal_rule = alpha_rename(Rule("1", Lit(goal), fuse_blocks(goal_body)))
    goal_rule = Rule("1", goal_rule.head, simplify(goal_rule.body))

    merged = Definition([goal_rule])
    eager: Set[str] = set()
    next_id = 2
    for rules in blocks:
        shaped = [canonical_rule(r, universe) for r in rules]
        disjoint = make_disjoint(shaped)
        status = totality_check(disjoint)
        for rule in disjoint:
            rule = rule.with_id(str(next_id))
            next_id += 1
            merged.add(rule)
            if status is Totality.UNKNOWN:
                eager.add(rule.id)
    LOG.debug("canonical theory: %d rules, %d eager", len(merged), len(eager))
    return CanonicalTheory(goal, merged, voc, original, frozenset(eager), renamed)
