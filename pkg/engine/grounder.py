"""
Grounding transformations.

One-step grounding, value-directed grounding, instance splitting, body
splitting, size estimation and the eager full grounding. Ground rules keep
their rule form; clausification happens in the search module.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple, Union

from .errors import ResourceExhausted, UsageError
from .justify import SymbolicLiteralSet, unify
from .kernel import (And, Atom, Bindings, Definition, DomainLiteral, Exists, F, Forall, Formula, Lit, Or,
                     PartialStructure, Rule, T, TRUE, FALSE, Vocabulary, builtin_value, conj, disj, exists, forall,
                     is_quantifier_free, literals, substitute)

LOG = logging.getLogger(__name__)


def child_id(rule_id: str, index: int) -> str:
    """Suffix for derived rules: a..z, then [n]."""
    if index < 26:
        return rule_id + chr(ord("a") + index)
    return f"{rule_id}[{index}]"


class TseitinEntry(NamedTuple):
    rule_id: str
    origin: Formula
    origin_rule: str


class TseitinRegistry:
    """
    Bookkeeping for introduced tseitin symbols.

    ``scc_key`` maps every tseitin to the user predicate whose rule it was
    split from, so recursion analysis stays at predicate level.
    """

    def __init__(self):
        self.entries: Dict[str, TseitinEntry] = {}
        self.scc_key: Dict[str, str] = {}

    def register(self, name: str, rule_id: str, origin: Formula, origin_rule: str, owner: str) -> None:
        if name in self.entries:
            raise UsageError(f"tseitin {name} defined twice")
        self.entries[name] = TseitinEntry(rule_id, origin, origin_rule)
        self.scc_key[name] = self.scc_key.get(owner, owner)

    def key(self, pred: str) -> str:
        return self.scc_key.get(pred, pred)

    def __contains__(self, name: object) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class GroundStep:
    """⟨G, R⟩: variable-free part and delayed rules."""

    ground: List[Union[Rule, Formula]] = field(default_factory=list)
    delayed: List[Rule] = field(default_factory=list)


@dataclass
class GroundResult:
    """Outcome of one split_and_ground call, already applied to D_g and D_d."""

    ground: List[Rule] = field(default_factory=list)
    delayed: List[Rule] = field(default_factory=list)
    inherited: List[Tuple[DomainLiteral, SymbolicLiteralSet]] = field(default_factory=list)
    how: str = "ground"


# ---------------------------------------------------------------------------
# Size estimation
# ---------------------------------------------------------------------------

def _log(n: float) -> float:
    return max(1.0, math.log2(n)) if n > 0 else 1.0


def estimate_size(x: Union[Rule, Formula]) -> float:
    """Expected number of atoms in a (partial) grounding."""
    if isinstance(x, Rule):
        inner = estimate_size(x.body) + 1
        return len(x.bind) * inner if x.bind.vars else inner
    if isinstance(x, Lit):
        return 1.0
    if isinstance(x, And):
        return sum(estimate_size(c) for c in x.children) if x.children else 1.0
    if isinstance(x, Or):
        if not x.children:
            return 1.0
        n = len(x.children)
        return _log(n) * sum(estimate_size(c) for c in x.children) / n
    if isinstance(x, Forall):
        return len(x.bind) * estimate_size(x.child)
    factor = math.prod(_log(len(d)) for d in x.bind.domains)
    return factor * estimate_size(x.child)


# ---------------------------------------------------------------------------
# Ground simplification
# ---------------------------------------------------------------------------

def ground_simplify(phi: Formula, structure: Optional[PartialStructure]) -> Formula:
    """
    Replace ground literals known in ``structure`` (and builtins) by true/false.

    Returns ``phi`` itself when nothing changes so hand-built nesting survives.
    """
    if isinstance(phi, Lit):
        if not phi.is_ground():
            return phi
        if phi.is_builtin:
            value = builtin_value(phi.pred, phi.args)
        elif structure is not None:
            value = structure.value(phi.atom())
        else:
            return phi
        if value is T:
            return TRUE if phi.sign else FALSE
        if value is F:
            return FALSE if phi.sign else TRUE
        return phi
    if isinstance(phi, (And, Or)):
        children = tuple(ground_simplify(c, structure) for c in phi.children)
        if all(a is b for a, b in zip(children, phi.children)):
            return phi
        return conj(*children) if isinstance(phi, And) else disj(*children)
    child = ground_simplify(phi.child, structure)
    if child is phi.child:
        return phi
    return forall(phi.bind, child) if isinstance(phi, Forall) else exists(phi.bind, child)


def _hinted(bind: Bindings, hints: Sequence[Tuple[int, ...]]) -> List[Dict[str, int]]:
    return [dict(zip(bind.vars, h)) for h in hints if len(h) == len(bind.vars) and h in bind]


# ---------------------------------------------------------------------------
# Grounder
# ---------------------------------------------------------------------------

class Grounder:
    """
    Owns D_g, D_d and the tseitin registry of one engine.

    Args:
        vocabulary: Symbol table; fresh tseitins are added to it
        d_ground: Ground definition D_g (extended in place)
        d_delayed: Residual definition D_d (updated in place)
        initial: Input structure I_in used for ground simplification
        exists_batch: Instances grounded per directed ∃ step
        disjunct_batch: Disjuncts grounded per directed ∨ step
        small_formula_threshold: Fully ground rules estimated below this size (0 disables)
        max_ground_atoms: Budget on distinct ground atoms in D_g (None = unbounded)
    """

    def __init__(self, vocabulary: Vocabulary, d_ground: Definition, d_delayed: Definition,
                 initial: Optional[PartialStructure] = None, exists_batch: int = 10, disjunct_batch: int = 3,
                 small_formula_threshold: float = 1e4, max_ground_atoms: Optional[int] = None,
                 registry: Optional[TseitinRegistry] = None):
        self.vocabulary = vocabulary
        self.d_ground = d_ground
        self.d_delayed = d_delayed
        self.initial = initial
        self.exists_batch = exists_batch
        self.disjunct_batch = disjunct_batch
        self.small_formula_threshold = small_formula_threshold
        self.max_ground_atoms = max_ground_atoms
        self.registry = registry or TseitinRegistry()
        self.hints: Dict[str, List[Tuple[int, ...]]] = {}
        self.stats: Counter = Counter()
        self._atoms: Set[Atom] = set()

    # -- bookkeeping -------------------------------------------------------

    def _tseitin(self, body: Formula, rule_id: str, origin_rule: str, owner: str) -> Tuple[Lit, Rule]:
        pred = self.vocabulary.fresh_tseitin()
        self.registry.register(pred.name, rule_id, body, origin_rule, owner)
        self.stats["tseitins_introduced"] += 1
        head = Lit(pred.name)
        return head, Rule(rule_id, head, body)

    def _record_ground(self, rule: Rule) -> None:
        self._atoms.add(rule.head.atom())
        for lit in literals(rule.body):
            if not lit.is_builtin:
                self._atoms.add(lit.atom())
        self.stats["ground_rules"] += 1
        self.stats["ground_atoms"] = len(self._atoms)
        if self.max_ground_atoms is not None and len(self._atoms) > self.max_ground_atoms:
            raise ResourceExhausted("max ground atoms exceeded", dict(self.stats))

    def add_ground(self, rule: Rule) -> None:
        self.d_ground.add(rule)
        self._record_ground(rule)
        LOG.debug("D_g += %s", rule.id)

    # -- one step ----------------------------------------------------------

    def _inline_or_delay(self, phi: Formula, ids: "_IdSource", owner: str, origin_rule: str,
                         delayed: List[Rule]) -> Formula:
        phi = ground_simplify(phi, self.initial)
        if is_quantifier_free(phi):
            return phi
        head, rule = self._tseitin(phi, ids.next(), origin_rule, owner)
        delayed.append(rule)
        return head

    def ground_one(self, target: Union[Rule, Formula], ids: Optional["_IdSource"] = None) -> GroundStep:
        """
        Ground one level of a ground-headed rule or a closed formula.

        Quantifier-free subformulas stay inline; every quantified direct
        subformula (or quantifier instance) is named by a fresh tseitin.
        """
        if isinstance(target, Rule):
            if not target.head.is_ground():
                raise UsageError(f"rule {target.id} has a non-ground head")
            body, owner, origin = target.body, target.pred, target.id
            ids = ids or _IdSource(target.id)
        else:
            body, owner, origin = target, "", ""
            ids = ids or _IdSource("s")
        delayed: List[Rule] = []
        body = ground_simplify(body, self.initial)
        if isinstance(body, (And, Or)):
            children = tuple(self._inline_or_delay(c, ids, owner, origin, delayed) for c in body.children)
            if not all(a is b for a, b in zip(children, body.children)):
                body = type(body)(children)
        elif isinstance(body, (Forall, Exists)):
            children = tuple(self._inline_or_delay(substitute(body.child, theta), ids, owner, origin, delayed)
                             for theta in body.bind.assignments())
            body = conj(*children) if isinstance(body, Forall) else disj(*children)
        if isinstance(target, Rule):
            rule_id = ids.ground_id() if delayed or ids.used else target.id
            return GroundStep([Rule(rule_id, target.head, body)], delayed)
        return GroundStep([body], delayed)

    def is_small(self, rule: Rule) -> bool:
        """Below the small-formula threshold rules are grounded completely."""
        return self.small_formula_threshold > 0 and estimate_size(rule) < self.small_formula_threshold

    def can_direct(self, rule: Rule, structure: PartialStructure) -> bool:
        if not rule.head.is_ground():
            return False
        value = structure.value(rule.head.atom())
        body = ground_simplify(rule.body, self.initial)
        if value is T:
            return isinstance(body, (Or, Exists)) and bool(getattr(body, "children", True))
        if value is F:
            return isinstance(body, (And, Forall)) and bool(getattr(body, "children", True))
        return False

    def ground_one_directed(self, rule: Rule, structure: PartialStructure,
                            batch: Optional[int] = None, ids: Optional["_IdSource"] = None) -> GroundStep:
        """
        Ground ``batch`` disjuncts/instances of a valued head and delay the rest.

        A true head with a ∨/∃ body or a false head with a ∧/∀ body is
        required; the remainder goes behind one fresh tseitin placed last.
        """
        if not rule.head.is_ground():
            raise UsageError(f"rule {rule.id} has a non-ground head")
        value = structure.value(rule.head.atom())
        if value not in (T, F):
            raise UsageError(f"head of rule {rule.id} is unknown")
        body = ground_simplify(rule.body, self.initial)
        ids = ids or _IdSource(rule.id)
        owner, origin = rule.pred, rule.id
        delayed: List[Rule] = []
        if value is T and isinstance(body, Or) or value is F and isinstance(body, And):
            n = batch or self.disjunct_batch
            chosen, rest = list(body.children[:n]), list(body.children[n:])
            rest_formula = (disj if isinstance(body, Or) else conj)(*rest) if rest else None
        elif value is T and isinstance(body, Exists) or value is F and isinstance(body, Forall):
            n = batch or self.exists_batch
            picks = _hinted(body.bind, self.hints.get(rule.id, ()))
            for theta in body.bind.assignments():
                if len(picks) >= n:
                    break
                if theta not in picks:
                    picks.append(theta)
            picks = picks[:n]
            chosen = [substitute(body.child, theta) for theta in picks]
            remaining = body.bind
            for theta in picks:
                remaining = remaining.minus(theta)
            rest_formula = None
            if not remaining.is_empty():
                rest_formula = type(body)(remaining, body.child)
        else:
            raise UsageError(f"rule {rule.id}: body shape does not match head value {value}")
        parts = [self._inline_or_delay(c, ids, owner, origin, delayed) for c in chosen]
        if rest_formula is not None:
            head, rest_rule = self._tseitin(rest_formula, ids.next(), origin, owner)
            delayed.append(rest_rule)
            parts.append(head)
        combined = disj(*parts) if value is T else conj(*parts)
        rule_id = ids.ground_id() if delayed else rule.id
        return GroundStep([Rule(rule_id, rule.head, combined)], delayed)

    # -- splitting ---------------------------------------------------------

    def split(self, literal: DomainLiteral) -> Rule:
        """Split the instance defining ``literal`` off its D_d rule and return it."""
        rule = self.d_delayed.rule_for(literal.atom)
        if rule is None:
            raise UsageError(f"{literal.atom} is not defined in D_d")
        self.stats["splits"] += 1
        if not rule.bind.vars:
            self.d_delayed.remove(rule.id)
            return rule
        theta = rule.binding_for(literal.atom)
        residual = rule.bind.minus(theta)
        self.d_delayed.remove(rule.id)
        if not residual.is_empty():
            self.d_delayed.add(Rule(child_id(rule.id, 1), rule.head, rule.body, residual))
        return Rule(child_id(rule.id, 0), Lit(rule.pred, literal.atom.args), substitute(rule.body, theta))

    def body_split(self, rule: Rule, violation: DomainLiteral, j_old: SymbolicLiteralSet,
                   ids: "_IdSource") -> Optional[Tuple[Rule, List[Tuple[Rule, SymbolicLiteralSet]]]]:
        """
        Restructure ``rule`` around the instance of ``j_old`` hit by ``violation``.

        Every quantifier block on the path to the violating instance becomes
        ``T ∧ instance`` (∀) or ``T ∨ instance`` (∃), where ``T`` names the
        block minus the instance and inherits ``j_old`` restricted to it.
        Returns None when the violating binding is not unique.
        """
        hit = violation.negate()
        found: List[Dict[str, int]] = []
        for lit in j_old.lits:
            if lit.pred != hit.atom.pred or lit.sign != hit.sign:
                continue
            theta = unify(lit, hit.atom)
            if theta is None or not j_old.bind.contains_assignment(theta):
                continue
            if set(theta) != set(j_old.bind.vars):
                return None
            if theta not in found:
                found.append(theta)
        if len(found) != 1:
            return None
        theta = found[0]
        fixed = {v: e for v, e in theta.items() if v not in _bound_vars(rule.body)}
        created: List[Tuple[Rule, SymbolicLiteralSet]] = []

        def walk(phi: Formula, outer: Dict[str, int]) -> Formula:
            if isinstance(phi, Lit):
                return phi
            if isinstance(phi, (And, Or)):
                return type(phi)(tuple(walk(c, outer) if _bound_vars(c) & theta.keys() else c
                                       for c in phi.children))
            block = set(phi.bind.vars)
            if not block <= theta.keys():
                if block & theta.keys():
                    raise _PartialBlock()
                return phi
            here = {v: theta[v] for v in phi.bind.vars}
            rest = phi.bind.minus(here)
            if rest.is_empty():
                return walk(substitute(phi.child, here), {**outer, **here})
            head, trule = self._tseitin(type(phi)(rest, phi.child), ids.next(), rule.id, rule.pred)
            created.append((trule, _restrict_justification(j_old, {**fixed, **outer}, rest)))
            instance = walk(substitute(phi.child, here), {**outer, **here})
            return And((head, instance)) if isinstance(phi, Forall) else Or((head, instance))

        try:
            body = walk(rule.body, {})
        except _PartialBlock:
            return None
        self.stats["body_splits"] += 1
        return Rule(rule.id, rule.head, body, rule.bind), created

    def split_and_ground(self, literal: DomainLiteral, structure: PartialStructure,
                         violation: Optional[DomainLiteral] = None,
                         j_old: Optional[SymbolicLiteralSet] = None) -> GroundResult:
        """
        Split off the instance defining ``literal`` and ground part of it.

        Small instances are fully grounded, a known violation of the old
        justification triggers body splitting, a valued head uses directed
        grounding, and anything else gets one ground_one step.
        """
        rule = self.split(literal)
        ids = _IdSource(rule.id)
        result = GroundResult()
        if self.is_small(rule):
            result.how = "full"
            result.ground = self.full_ground_rule(rule)
            for r in result.ground:
                self.add_ground(r)
            return result
        step = None
        if violation is not None and j_old is not None:
            outcome = self.body_split(rule, violation, j_old, ids)
            if outcome is not None:
                rule, created = outcome
                result.how = "body-split"
                for trule, dj in created:
                    result.delayed.append(trule)
                    result.inherited.append((DomainLiteral(trule.head.atom(), True), dj))
                step = self.ground_one(rule, ids)
        if step is None and self.can_direct(rule, structure):
            result.how = "directed"
            step = self.ground_one_directed(rule, structure, ids=ids)
        if step is None:
            step = self.ground_one(rule, ids)
        for r in step.ground:
            self.add_ground(r)
            result.ground.append(r)
        result.delayed.extend(step.delayed)
        for r in result.delayed:
            self.d_delayed.add(r)
        LOG.debug("split_and_ground %s: %s -> D_g %s, D_d %s", literal, result.how,
                  [r.id for r in result.ground], [r.id for r in result.delayed])
        return result

    # -- full grounding ----------------------------------------------------

    def instances(self, rule: Rule) -> List[Rule]:
        if not rule.bind.vars:
            return [rule]
        out = []
        for i, theta in enumerate(rule.bind.assignments()):
            out.append(Rule(f"{rule.id}[{i}]", substitute(rule.head, theta), substitute(rule.body, theta)))
        return out

    def full_ground_rule(self, rule: Rule) -> List[Rule]:
        """Ground ``rule`` to a fixpoint; every produced rule is variable-free."""
        pending = self.instances(rule)
        done: List[Rule] = []
        while pending:
            current = pending.pop(0)
            step = self.ground_one(current)
            done.extend(step.ground)
            pending.extend(step.delayed)
        return done

    def full_ground_delayed(self, rule_ids: Optional[Sequence[str]] = None) -> List[Rule]:
        """Move (selected) D_d rules to D_g fully grounded."""
        targets = [self.d_delayed.get(rid) for rid in (rule_ids if rule_ids is not None else self.d_delayed.ids())]
        out = []
        for rule in targets:
            if rule is None:
                continue
            self.d_delayed.remove(rule.id)
            for r in self.full_ground_rule(rule):
                self.add_ground(r)
                out.append(r)
        return out


def full_ground(definition: Definition, vocabulary: Vocabulary,
                structure: Optional[PartialStructure] = None,
                max_ground_atoms: Optional[int] = None) -> Tuple[Definition, Counter]:
    """
    Eager baseline: ground the whole definition.

    Args:
        definition: Canonical definition
        vocabulary: Symbol table (receives the tseitins)
        structure: Input structure used for simplification
        max_ground_atoms: Budget; exceeding it raises ResourceExhausted

    Returns:
        The ground definition and the grounding statistics
    """
    grounder = Grounder(vocabulary, Definition(), definition.copy(), structure,
                        max_ground_atoms=max_ground_atoms)
    grounder.full_ground_delayed()
    return grounder.d_ground, grounder.stats


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

class _PartialBlock(Exception):
    pass


class _IdSource:
    """Allocates derived rule ids: tseitin rules take b, c, ...; the ground part takes a."""

    def __init__(self, base: str):
        self.base = base
        self.used = 0

    def next(self) -> str:
        self.used += 1
        return child_id(self.base, self.used)

    def ground_id(self) -> str:
        return child_id(self.base, 0)


def _bound_vars(phi: Formula) -> Set[str]:
    if isinstance(phi, Lit):
        return set()
    if isinstance(phi, (And, Or)):
        out: Set[str] = set()
        for c in phi.children:
            out |= _bound_vars(c)
        return out
    return set(phi.bind.vars) | _bound_vars(phi.child)


def _restrict_justification(j_old: SymbolicLiteralSet, fixed: Mapping[str, int], block: Bindings) -> SymbolicLiteralSet:
    """j_old with ``fixed`` substituted and the block variables narrowed to ``block``."""
    lits = tuple(substitute(l, fixed) for l in j_old.lits)
    bind = j_old.bind.drop(fixed)
    for var, dom in zip(block.vars, block.domains):
        if var in bind.vars:
            bind = bind.restrict(var, dom)
    bind = Bindings(bind.vars, bind.domains, bind.excluded | {
        ex for ex in block.excluded if all(v in bind.vars for v, _ in ex)})
    return SymbolicLiteralSet(lits, bind)
