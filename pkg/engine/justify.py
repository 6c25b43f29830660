"""
Justification manager.

Symbolic direct justifications, the justification graph with its reverse
watch index, the change queue, and the lazy grounding driver that keeps
every true literal defined in D_d justified or grounds part of its rule.
"""

import itertools
import logging
from collections import Counter, defaultdict, deque
from dataclasses import dataclass
from typing import (Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Set, Tuple, Union)

import networkx as nx

from .errors import InvariantViolation, UsageError
from .kernel import (And, Atom, Bindings, DomainLiteral, DomainSet, EMPTY_BINDINGS, Exists, F, Forall, Formula,
                     Lit, Or, PartialStructure, Rule, T, Vocabulary, builtin_value, evaluate, forall, literals,
                     negate, substitute)

LOG = logging.getLogger(__name__)

LARGE_DOMAIN = 100
DEFINED_INSTANCE_CAP = 100
OVERLAP_ENUM_CAP = 5000
BUILTIN_ENUM_CAP = 100_000


def unify(lit: Lit, atom: Atom) -> Optional[Dict[str, int]]:
    """Variable assignment that turns the pattern ``lit`` into ``atom``, or None."""
    if lit.pred != atom.pred or len(lit.args) != len(atom.args):
        return None
    theta: Dict[str, int] = {}
    for term, value in zip(lit.args, atom.args):
        if isinstance(term, str):
            if theta.setdefault(term, value) != value:
                return None
        elif term != value:
            return None
    return theta


def _admits(bind: Bindings, theta: Mapping[str, int]) -> bool:
    """True iff some tuple of ``bind`` agrees with the partial assignment."""
    if not bind.contains_assignment(theta):
        return False
    if set(bind.vars) <= theta.keys():
        return True
    if not bind.excluded:
        return all(len(d) > 0 for v, d in zip(bind.vars, bind.domains) if v not in theta)
    return not bind.fix(theta).is_empty()


def _pattern_match(lit: Lit, bind: Bindings, dl: DomainLiteral) -> Optional[Dict[str, int]]:
    if lit.sign != dl.sign:
        return None
    theta = unify(lit, dl.atom)
    if theta is None or not _admits(bind, theta):
        return None
    return theta


def _instances(lit: Lit, bind: Bindings, cap: int) -> List[DomainLiteral]:
    """Distinct ground instances of ``lit`` under ``bind``; at most ``cap + 1``."""
    names = list(dict.fromkeys(a for a in lit.args if isinstance(a, str)))
    for v in names:
        if v not in bind.vars:
            raise UsageError(f"variable {v} of {lit.pred} is unbound")
    out: List[DomainLiteral] = []
    for values in itertools.product(*(bind.domain_of(v) for v in names)):
        theta = dict(zip(names, values))
        if not _admits(bind, theta):
            continue
        out.append(substitute(lit, theta).domain_literal())
        if len(out) > cap:
            break
    return out


def _term_domain(term, bind: Bindings) -> Optional[DomainSet]:
    if isinstance(term, int):
        return DomainSet.of([term])
    if term in bind.vars:
        return bind.domain_of(term)
    return None


def patterns_overlap(p: Lit, p_bind: Bindings, q: Lit, q_bind: Bindings) -> bool:
    """
    Whether two literal patterns share a ground atom.

    Exact when the candidate tuples can be enumerated within
    OVERLAP_ENUM_CAP, otherwise answers True.
    """
    if p.pred != q.pred or len(p.args) != len(q.args):
        return False
    sets: List[DomainSet] = []
    for a, b in zip(p.args, q.args):
        da, db = _term_domain(a, p_bind), _term_domain(b, q_bind)
        if da is None and db is None:
            return True
        common = db if da is None else da if db is None else da.intersect(db)
        if not common:
            return False
        sets.append(common)
    size = 1
    for s in sets:
        size *= len(s)
    if size > OVERLAP_ENUM_CAP:
        return True
    for values in itertools.product(*sets):
        atom = Atom(p.pred, tuple(values))
        tp, tq = unify(p, atom), unify(q, atom)
        if tp is not None and tq is not None and _admits(p_bind, tp) and _admits(q_bind, tq):
            return True
    return False


# ---------------------------------------------------------------------------
# Direct justifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolicLiteralSet:
    """
    ⟨L,B⟩: the literals ``lθ`` for every ``l`` in L and every tuple θ of B.

    Args:
        lits: Literal patterns; every variable is bound in ``bind``
        bind: Bindings over the pattern variables
    """

    lits: Tuple[Lit, ...] = ()
    bind: Bindings = EMPTY_BINDINGS

    def with_literal(self, lit: Lit) -> "SymbolicLiteralSet":
        if lit in self.lits:
            return self
        return SymbolicLiteralSet(self.lits + (lit,), self.bind)

    def with_block(self, block: Bindings) -> "SymbolicLiteralSet":
        return SymbolicLiteralSet(self.lits, self.bind.extend_block(block))

    def fixed(self, assign: Mapping[str, int]) -> "SymbolicLiteralSet":
        return SymbolicLiteralSet(self.lits, self.bind.fix(assign))

    def without(self, assign: Mapping[str, int]) -> "SymbolicLiteralSet":
        return SymbolicLiteralSet(self.lits, self.bind.minus(assign))

    def patterns(self) -> List[Tuple[Lit, Bindings]]:
        return [(lit, self.bind) for lit in self.lits]

    def matches(self, dl: DomainLiteral) -> Iterator[Dict[str, int]]:
        for lit in self.lits:
            theta = _pattern_match(lit, self.bind, dl)
            if theta is not None:
                yield theta

    def contains(self, dl: DomainLiteral) -> bool:
        return next(self.matches(dl), None) is not None

    def denotation(self) -> Iterator[DomainLiteral]:
        seen: Set[DomainLiteral] = set()
        for lit in self.lits:
            for dl in _instances(lit, self.bind, len(self.bind) if self.bind.vars else 1):
                if dl not in seen:
                    seen.add(dl)
                    yield dl

    def estimate(self) -> int:
        return len(self.lits) * (len(self.bind) if self.bind.vars else 1)


@dataclass(frozen=True)
class JustificationFormula:
    """
    A formula entailing a rule body; the selected disjuncts and instances.

    Free variables of ``formula`` are bound by ``bind``. Its denotation is
    the set of non-false literals of its grounding.
    """

    formula: Formula
    bind: Bindings = EMPTY_BINDINGS

    def closed(self) -> Formula:
        return forall(self.bind, self.formula)

    def fixed(self, assign: Mapping[str, int]) -> "JustificationFormula":
        return JustificationFormula(self.formula, self.bind.fix(assign))

    def without(self, assign: Mapping[str, int]) -> "JustificationFormula":
        return JustificationFormula(self.formula, self.bind.minus(assign))

    def patterns(self) -> List[Tuple[Lit, Bindings]]:
        out: List[Tuple[Lit, Bindings]] = []

        def walk(phi: Formula, bind: Bindings) -> None:
            if isinstance(phi, Lit):
                out.append((phi, bind))
            elif isinstance(phi, (And, Or)):
                for c in phi.children:
                    walk(c, bind)
            else:
                walk(phi.child, bind.extend_block(Bindings(phi.bind.vars, phi.bind.domains)))

        walk(self.formula, self.bind)
        return out

    def contains(self, dl: DomainLiteral) -> bool:
        return any(_pattern_match(lit, b, dl) is not None for lit, b in self.patterns())

    def denotation(self, structure: Optional[PartialStructure] = None) -> Iterator[DomainLiteral]:
        seen: Set[DomainLiteral] = set()
        for lit, b in self.patterns():
            if lit.is_builtin:
                continue
            for dl in _instances(lit, b, len(b) if b.vars else 1):
                if dl in seen or structure is not None and structure.literal_value(dl) is F:
                    continue
                seen.add(dl)
                yield dl


class _Unjustifiable:
    """Marker stored in J for a literal whose build failed before grounding."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "FALSE"

    def __bool__(self) -> bool:
        return False


JUST_FALSE = _Unjustifiable()

DirectJustification = Union[SymbolicLiteralSet, JustificationFormula]
Justification = Union[DirectJustification, Tuple[DirectJustification, ...], _Unjustifiable]


def parts_of(dj: Optional[Justification]) -> Tuple[DirectJustification, ...]:
    """The union members of a justification (none for FALSE/None)."""
    if dj is None or dj is JUST_FALSE:
        return ()
    if isinstance(dj, tuple):
        return dj
    return (dj,)


def denotation(dj: Optional[Justification], structure: Optional[PartialStructure] = None) -> Iterator[DomainLiteral]:
    seen: Set[DomainLiteral] = set()
    for part in parts_of(dj):
        source = part.denotation(structure) if isinstance(part, JustificationFormula) else part.denotation()
        for dl in source:
            if dl not in seen and dl.atom.pred not in ("=", "true", "false"):
                seen.add(dl)
                yield dl


def query_violated(jf: JustificationFormula, structure: PartialStructure,
                   changed: Optional[DomainLiteral] = None) -> bool:
    """
    Whether ``jf`` became false.

    A changed literal whose negation does not occur in ``jf`` cannot falsify
    it, so the formula is only evaluated when it can.
    """
    if changed is not None and not jf.contains(changed.negate()):
        return False
    return evaluate(jf.closed(), structure) is F


@dataclass(frozen=True)
class RuleJustification:
    """
    One justification shared by every head instance of a D_d rule.

    Installed by the global planner; ``head_bind`` shrinks as instances are
    split off or invalidated.
    """

    rule_id: str
    pred: str
    sign: bool
    head_vars: Tuple[str, ...]
    head_bind: Bindings
    parts: Tuple[DirectJustification, ...]

    def covers(self, atom: Atom) -> Optional[Dict[str, int]]:
        if atom.pred != self.pred or len(atom.args) != len(self.head_vars):
            return None
        theta = dict(zip(self.head_vars, atom.args))
        return theta if self.head_bind.contains_assignment(theta) else None

    def for_atom(self, theta: Mapping[str, int]) -> Justification:
        parts = tuple(p.fixed(theta) for p in self.parts)
        return parts[0] if len(parts) == 1 else parts

    def exclude(self, theta: Mapping[str, int]) -> "RuleJustification":
        return RuleJustification(self.rule_id, self.pred, self.sign, self.head_vars, self.head_bind.minus(theta),
                                 tuple(p.without(theta) for p in self.parts))

    def atom(self, theta: Mapping[str, int]) -> Atom:
        return Atom(self.pred, tuple(theta[v] for v in self.head_vars))


def _patterns(part: DirectJustification) -> List[Tuple[Lit, Bindings]]:
    return part.patterns()


Owner = Union[DomainLiteral, int]


class JustificationGraph:
    """
    J: defined literal -> direct justification.

    Ground entries are keyed by domain literal; rule-level entries cover a
    whole head binding. The reverse watch index maps (predicate, sign of a
    true literal) to the owners having a pattern that literal would falsify.
    """

    def __init__(self):
        self._ground: Dict[DomainLiteral, Justification] = {}
        self._rules: Dict[int, RuleJustification] = {}
        self._next_rule = 0
        self._watch: Dict[Tuple[str, bool], Set[Owner]] = defaultdict(set)

    # -- index -------------------------------------------------------------

    def _keys(self, dj: Justification) -> Set[Tuple[str, bool]]:
        return {(lit.pred, not lit.sign) for part in parts_of(dj) for lit, _ in _patterns(part) if not lit.is_builtin}

    def _index(self, owner: Owner, dj: Justification) -> None:
        for key in self._keys(dj):
            self._watch[key].add(owner)

    def _unindex(self, owner: Owner, dj: Justification) -> None:
        for key in self._keys(dj):
            self._watch[key].discard(owner)

    # -- ground entries ----------------------------------------------------

    def set(self, lit: DomainLiteral, dj: Justification) -> None:
        self.remove(lit)
        self._ground[lit] = dj
        self._index(lit, dj)

    def remove(self, lit: DomainLiteral) -> Optional[Justification]:
        dj = self._ground.pop(lit, None)
        if dj is not None:
            self._unindex(lit, dj)
        return dj

    def items(self) -> Iterator[Tuple[DomainLiteral, Justification]]:
        return iter(list(self._ground.items()))

    # -- rule entries ------------------------------------------------------

    def add_rule_entry(self, entry: RuleJustification) -> int:
        idx = self._next_rule
        self._next_rule += 1
        self._rules[idx] = entry
        self._index(idx, entry.parts)
        return idx

    def replace_rule_entry(self, idx: int, entry: Optional[RuleJustification]) -> None:
        old = self._rules.pop(idx, None)
        if old is not None:
            self._unindex(idx, old.parts)
        if entry is not None and not entry.head_bind.is_empty():
            self._rules[idx] = entry
            self._index(idx, entry.parts)

    def rule_entry(self, idx: int) -> Optional[RuleJustification]:
        return self._rules.get(idx)

    def rule_entries(self) -> Iterator[Tuple[int, RuleJustification]]:
        return iter(list(self._rules.items()))

    def detach(self, atom: Atom) -> List[Tuple[DomainLiteral, Justification]]:
        """Remove ``atom`` from every rule-level entry; returns what covered it."""
        out = []
        for idx, entry in self.rule_entries():
            theta = entry.covers(atom)
            if theta is not None:
                out.append((DomainLiteral(atom, entry.sign), entry.for_atom(theta)))
                self.replace_rule_entry(idx, entry.exclude(theta))
        return out

    # -- lookup ------------------------------------------------------------

    def get(self, lit: DomainLiteral) -> Optional[Justification]:
        if lit in self._ground:
            return self._ground[lit]
        for entry in self._rules.values():
            if entry.sign == lit.sign:
                theta = entry.covers(lit.atom)
                if theta is not None:
                    return entry.for_atom(theta)
        return None

    def has(self, lit: DomainLiteral) -> bool:
        dj = self.get(lit)
        return dj is not None and dj is not JUST_FALSE

    def __contains__(self, lit: object) -> bool:
        return isinstance(lit, DomainLiteral) and self.has(lit)

    def __len__(self) -> int:
        return len(self._ground) + len(self._rules)

    def owner_justification(self, owner: Owner) -> Justification:
        if isinstance(owner, int):
            return self._rules[owner].parts
        return self._ground[owner]

    def opposite_owners(self, lit: Lit) -> Set[Owner]:
        """Owners holding a pattern of ``lit.pred`` with the opposite sign."""
        return set(self._watch.get((lit.pred, lit.sign), ()))

    def watchers(self, true_lit: DomainLiteral) -> List[Tuple[Owner, Dict[str, int]]]:
        """Owners whose justification contains the negation of ``true_lit``, with the matching binding."""
        hit = true_lit.negate()
        out: List[Tuple[Owner, Dict[str, int]]] = []
        for owner in list(self._watch.get((true_lit.atom.pred, true_lit.sign), ())):
            thetas = [theta for part in parts_of(self.owner_justification(owner))
                      for lit, bind in _patterns(part)
                      for theta in [_pattern_match(lit, bind, hit)] if theta is not None]
            if not thetas:
                continue
            if isinstance(owner, int):
                out.extend((owner, theta) for theta in thetas)
            else:
                out.append((owner, thetas[0]))
        return out

    def ground_edges(self, cap: int = 10_000) -> Dict[DomainLiteral, Set[DomainLiteral]]:
        """Ground view of J for checking; rule entries are expanded per head tuple."""
        edges: Dict[DomainLiteral, Set[DomainLiteral]] = {}
        for lit, dj in self._ground.items():
            if dj is not JUST_FALSE:
                edges[lit] = set(itertools.islice(denotation(dj), cap))
        for entry in self._rules.values():
            for theta in itertools.islice(entry.head_bind.assignments(), cap):
                lit = DomainLiteral(entry.atom(theta), entry.sign)
                edges.setdefault(lit, set(itertools.islice(denotation(entry.for_atom(theta)), cap)))
        return edges


class ChangeQueue:
    """FIFO of literals awaiting (re)justification, without duplicates."""

    def __init__(self):
        self._items: deque = deque()
        self._members: Set[DomainLiteral] = set()
        self.peak = 0

    def push(self, lit: DomainLiteral) -> bool:
        if lit in self._members:
            return False
        self._items.append(lit)
        self._members.add(lit)
        self.peak = max(self.peak, len(self._items))
        return True

    def pop(self) -> DomainLiteral:
        lit = self._items.popleft()
        self._members.discard(lit)
        return lit

    def clear(self) -> None:
        self._items.clear()
        self._members.clear()

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def __contains__(self, lit: object) -> bool:
        return lit in self._members

    def __iter__(self) -> Iterator[DomainLiteral]:
        return iter(list(self._items))


# ---------------------------------------------------------------------------
# Justifies
# ---------------------------------------------------------------------------

def justifies(edges: Mapping[DomainLiteral, Iterable[DomainLiteral]], targets: Iterable[DomainLiteral],
              is_defined: Callable[[Atom], bool], acyclic: bool = False) -> bool:
    """
    Check that a ground justification justifies ``targets``.

    Args:
        edges: Direct justification per defined literal
        targets: The literals to justify
        is_defined: Whether an atom is defined (others are leaves)
        acyclic: Reject every cycle, not only positive and mixed ones

    Returns:
        True iff the reachable subgraph is total, every target is
        well-founded and the reachable literals are consistent.
    """
    reached: Set[DomainLiteral] = set()
    stack = list(targets)
    graph = nx.DiGraph()
    while stack:
        lit = stack.pop()
        if lit in reached:
            continue
        reached.add(lit)
        if not is_defined(lit.atom):
            continue
        if lit not in edges:
            return False
        graph.add_node(lit)
        for child in edges[lit]:
            if is_defined(child.atom):
                graph.add_edge(lit, child)
            stack.append(child)
    if any(lit.negate() in reached for lit in reached):
        return False
    for comp in nx.strongly_connected_components(graph):
        node = next(iter(comp))
        if len(comp) == 1 and not graph.has_edge(node, node):
            continue
        if acyclic or any(lit.sign for lit in comp):
            return False
    return True


def _alternation_depth(phi: Formula) -> int:
    def walk(node: Formula, kind: Optional[bool]) -> int:
        if isinstance(node, Lit):
            return 0
        here = isinstance(node, (And, Forall))
        step = 0 if kind is None or kind == here else 1
        children = node.children if isinstance(node, (And, Or)) else (node.child,)
        return step + max((walk(c, here) for c in children), default=0)

    return walk(phi, None)


# ---------------------------------------------------------------------------
# Manager
# ---------------------------------------------------------------------------

class JustificationManager:
    """
    Maintains J and the change queue for one engine.

    Args:
        vocabulary: Symbol table of the canonical theory
        grounder: Owner of D_g and D_d; receives split_and_ground requests
        structure: The search structure I (shared, updated by the search)
        components: Predicate -> recursive component index of the input definition
        large_domain: ∃ blocks at least this big stay symbolic in build_djust
        depth_limit: Maximum connective alternations of a justification formula
        prefer_body_split: Body-split directly when a violation is known
        refuse_recursive_heads: Never justify literals of recursive predicates
        justification_formulas: Try a justification formula before ⟨L,B⟩
        approximate: Accept justifications with known violations
        approx_violations_budget: Maximum violations of an approximate justification
        naive: No justifications; every queued literal is grounded
    """

    def __init__(self, vocabulary: Vocabulary, grounder, structure: PartialStructure,
                 components: Optional[Mapping[str, int]] = None, large_domain: int = LARGE_DOMAIN,
                 depth_limit: int = 2, prefer_body_split: bool = True, refuse_recursive_heads: bool = False,
                 justification_formulas: bool = False, approximate: bool = False,
                 approx_violations_budget: int = 1, naive: bool = False):
        self.vocabulary = vocabulary
        self.grounder = grounder
        self.structure = structure
        self.components: Dict[str, int] = dict(components or {})
        self.large_domain = large_domain
        self.depth_limit = depth_limit
        self.prefer_body_split = prefer_body_split
        self.refuse_recursive_heads = refuse_recursive_heads
        self.justification_formulas = justification_formulas
        self.approximate = approximate
        self.approx_violations_budget = approx_violations_budget
        self.naive = naive
        self.graph = JustificationGraph()
        self.queue = ChangeQueue()
        self.stats: Counter = Counter()
        self._violations: Dict[DomainLiteral, DomainLiteral] = {}

    @property
    def d_ground(self):
        return self.grounder.d_ground

    @property
    def d_delayed(self):
        return self.grounder.d_delayed

    def _component(self, pred: str) -> Optional[int]:
        return self.components.get(self.grounder.registry.key(pred))

    def _same_component(self, a: str, b: str) -> bool:
        comp = self._component(a)
        return comp is not None and comp == self._component(b)

    # -- literal checks ----------------------------------------------------

    def builtin_holds(self, lit: Lit, bind: Bindings) -> bool:
        names = list(dict.fromkeys(a for a in lit.args if isinstance(a, str)))
        total = 1
        for v in names:
            total *= len(bind.domain_of(v))
        if total > BUILTIN_ENUM_CAP:
            return False
        for values in itertools.product(*(bind.domain_of(v) for v in names)):
            theta = dict(zip(names, values))
            args = tuple(theta[a] if isinstance(a, str) else a for a in lit.args)
            value = builtin_value(lit.pred, args)
            if (value is T) != lit.sign and _admits(bind, theta):
                return False
        return True

    def false_instances(self, lit: Lit, bind: Bindings, limit: int) -> List[DomainLiteral]:
        """Instances of ``lit`` false in I; stops after ``limit`` hits."""
        out: List[DomainLiteral] = []
        for args in list(self.structure.atoms(lit.pred, not lit.sign)):
            theta = unify(lit, Atom(lit.pred, args))
            if theta is not None and _admits(bind, theta):
                out.append(DomainLiteral(Atom(lit.pred, args), lit.sign))
                if len(out) >= limit:
                    return out
        if lit.sign and lit.pred in self.structure.closed:
            for dl in _instances(lit, bind, DEFINED_INSTANCE_CAP):
                if self.structure.literal_value(dl) is F and dl not in out:
                    out.append(dl)
                    if len(out) >= limit:
                        break
        return out

    def _opposite_in_graph(self, lit: Lit, bind: Bindings, owner: Optional[Owner]) -> bool:
        for other in self.graph.opposite_owners(lit):
            if other == owner:
                continue
            for part in parts_of(self.graph.owner_justification(other)):
                for q, q_bind in _patterns(part):
                    if q.pred == lit.pred and q.sign != lit.sign and patterns_overlap(lit, bind, q, q_bind):
                        return True
        return False

    def _safe(self, l: DomainLiteral, rule: Rule) -> bool:
        """A D_g-defined literal may appear in J(l) if it cannot loop back to l."""
        if not any(self.vocabulary.is_defined(x.pred) for x in literals(rule.body) if not x.is_builtin):
            return True
        return not self._same_component(rule.pred, l.atom.pred)

    def _defined_ok(self, l: DomainLiteral, lit: Lit, bind: Bindings) -> bool:
        if lit.is_builtin or not self.vocabulary.is_defined(lit.pred):
            return True
        found = _instances(lit, bind, DEFINED_INSTANCE_CAP)
        if len(found) > DEFINED_INSTANCE_CAP:
            return False
        for dl in found:
            if dl == l:
                return False
            grule = self.d_ground.rule_for(dl.atom)
            if grule is not None:
                if not self._safe(l, grule):
                    return False
            elif not (self.d_delayed.defines(dl.atom) and self.graph.has(dl)):
                return False
        return True

    def _pattern_ok(self, l: DomainLiteral, lit: Lit, bind: Bindings, owner: Optional[Owner],
                    check_false: bool = True) -> bool:
        if lit.is_builtin:
            return self.builtin_holds(lit, bind) if check_false else True
        if self._same_component(lit.pred, l.atom.pred):
            return False
        if check_false and self.false_instances(lit, bind, 1):
            return False
        if self._opposite_in_graph(lit, bind, owner):
            return False
        return self._defined_ok(l, lit, bind)

    @staticmethod
    def _self_consistent(patterns: List[Tuple[Lit, Bindings]]) -> bool:
        for (p, pb), (q, qb) in itertools.combinations(patterns, 2):
            if p.pred == q.pred and p.sign != q.sign and not p.is_builtin and patterns_overlap(p, pb, q, qb):
                return False
        return True

    def valid(self, l: DomainLiteral, dj: Justification, owner: Optional[Owner] = None) -> bool:
        """
        Whether ``dj`` may serve as J(l) in the current state.

        No literal of the denotation may be false in I, contradict another
        entry of J, be defined in D_g without being safe, be defined in D_d
        without a justification, or share the recursive component of ``l``.
        """
        owner = l if owner is None else owner
        if dj is None or dj is JUST_FALSE:
            return False
        patterns: List[Tuple[Lit, Bindings]] = []
        for part in parts_of(dj):
            formula = isinstance(part, JustificationFormula)
            if formula and evaluate(part.closed(), self.structure) is F:
                return False
            for lit, bind in _patterns(part):
                if not self._pattern_ok(l, lit, bind, owner, check_false=not formula):
                    return False
                patterns.append((lit, bind))
        return self._self_consistent(patterns)

    # -- building ----------------------------------------------------------

    def init_just(self, l: DomainLiteral) -> SymbolicLiteralSet:
        """⟨∅, {x1 ∈ {d1}, ..., xn ∈ {dn}}⟩ for the head binding of ``l``."""
        rule = self.d_delayed.rule_for(l.atom)
        if rule is None:
            raise UsageError(f"{l.atom.pred}{l.atom.args} is not defined in D_d")
        theta = rule.binding_for(l.atom)
        return SymbolicLiteralSet((), Bindings(rule.bind.vars, tuple(DomainSet.of([theta[v]]) for v in rule.bind.vars)))

    def _small(self, l: DomainLiteral) -> bool:
        rule = self.d_delayed.rule_for(l.atom)
        if rule is None:
            return False
        theta = rule.binding_for(l.atom)
        return self.grounder.is_small(Rule(rule.id, Lit(rule.pred, l.atom.args), substitute(rule.body, theta)))

    def _build(self, l: DomainLiteral, phi: Formula, acc: SymbolicLiteralSet,
               budget: int) -> Optional[Tuple[SymbolicLiteralSet, Tuple[DomainLiteral, ...]]]:
        if isinstance(phi, Lit):
            if phi.is_builtin:
                return (acc.with_literal(phi), ()) if self.builtin_holds(phi, acc.bind) else None
            bad = tuple(self.false_instances(phi, acc.bind, budget + 1))
            if len(bad) > budget:
                return None
            if not self._pattern_ok(l, phi, acc.bind, l, check_false=False):
                return None
            for q in acc.lits:
                if q.pred == phi.pred and q.sign != phi.sign and patterns_overlap(phi, acc.bind, q, acc.bind):
                    return None
            return acc.with_literal(phi), bad
        if isinstance(phi, Forall):
            return self._build(l, phi.child, acc.with_block(phi.bind), budget)
        if isinstance(phi, Exists):
            if len(phi.bind) >= self.large_domain:
                return self._build(l, phi.child, acc.with_block(phi.bind), budget)
            for values in phi.bind:
                single = Bindings(phi.bind.vars, tuple(DomainSet.of([v]) for v in values))
                found = self._build(l, phi.child, acc.with_block(single), budget)
                if found is not None:
                    return found
            return None
        if isinstance(phi, And):
            bad: Tuple[DomainLiteral, ...] = ()
            for child in phi.children:
                found = self._build(l, child, acc, budget - len(bad))
                if found is None:
                    return None
                acc, more = found
                bad += more
            return acc, bad
        for child in phi.children:
            found = self._build(l, child, acc, budget)
            if found is not None:
                return found
        return None

    def _select(self, l: DomainLiteral, phi: Formula, bind: Bindings) -> Optional[Formula]:
        if isinstance(phi, Lit):
            if phi.is_builtin:
                return phi
            return phi if self._pattern_ok(l, phi, bind, l, check_false=False) else None
        if isinstance(phi, And):
            kids = [self._select(l, c, bind) for c in phi.children]
            return None if any(k is None for k in kids) else And(tuple(kids))
        if isinstance(phi, Or):
            kids = [k for k in (self._select(l, c, bind) for c in phi.children) if k is not None]
            return Or(tuple(kids)) if kids else None
        inner = self._select(l, phi.child, bind.extend_block(Bindings(phi.bind.vars, phi.bind.domains)))
        return None if inner is None else type(phi)(phi.bind, inner)

    def _build_formula(self, l: DomainLiteral, phi: Formula, seed: SymbolicLiteralSet) -> Optional[JustificationFormula]:
        if _alternation_depth(phi) > self.depth_limit:
            return None
        kept = self._select(l, phi, seed.bind)
        if kept is None:
            return None
        jf = JustificationFormula(kept, seed.bind)
        return jf if self.valid(l, jf) else None

    def build_djust(self, l: DomainLiteral, phi: Formula, seed: SymbolicLiteralSet) -> Justification:
        """
        Search a valid direct justification of ``l`` from its (negated) body.

        Returns JUST_FALSE for small rules, for recursive heads when those
        are refused, in naive mode, and when every alternative is invalid.
        """
        self.stats["justification_builds"] += 1
        refused = (self.naive or self._small(l)
                   or self.refuse_recursive_heads and self._component(l.atom.pred) is not None)
        if not refused:
            if self.justification_formulas:
                jf = self._build_formula(l, phi, seed)
                if jf is not None:
                    return jf
            found = self._build(l, phi, seed, 0)
            if found is not None:
                return found[0]
        self.stats["justification_failures"] += 1
        return JUST_FALSE

    def approximate_justify(self, l: DomainLiteral, phi: Formula,
                            violations_budget: Optional[int] = None
                            ) -> Tuple[Justification, Tuple[DomainLiteral, ...]]:
        """
        Like build_djust but tolerating already-false instances.

        Returns the justification and the false literals of its denotation;
        the caller repairs those violations at once.
        """
        budget = self.approx_violations_budget if violations_budget is None else violations_budget
        found = self._build(l, phi, self.init_just(l), budget)
        if found is None:
            return JUST_FALSE, ()
        return found

    # -- queue maintenance -------------------------------------------------

    def check_literal(self, v: DomainLiteral) -> None:
        """React to ``v`` becoming true."""
        self._drop_false_owner(v.negate())
        if self.d_delayed.defines(v.atom) and not self.graph.has(v):
            self.queue.push(v)
        for owner, theta in self.graph.watchers(v):
            self.stats["watch_wakeups"] += 1
            if isinstance(owner, int):
                self._wake_rule_entry(owner, theta)
                continue
            parts = parts_of(self.graph.owner_justification(owner))
            if parts and all(isinstance(p, JustificationFormula) for p in parts) \
                    and not any(query_violated(p, self.structure, v) for p in parts):
                continue
            self._violations[owner] = v
            self.queue.push(owner)
        self.stats["queue_peak"] = max(self.stats["queue_peak"], self.queue.peak)

    def _drop_false_owner(self, lit: DomainLiteral) -> None:
        if self.graph.remove(lit) is None:
            for idx, entry in self.graph.rule_entries():
                if entry.sign == lit.sign:
                    theta = entry.covers(lit.atom)
                    if theta is not None:
                        self.graph.replace_rule_entry(idx, entry.exclude(theta))

    def _wake_rule_entry(self, idx: int, theta: Mapping[str, int]) -> None:
        entry = self.graph.rule_entry(idx)
        if entry is None:
            return
        head = {v: theta[v] for v in entry.head_vars if v in theta}
        if len(head) == len(entry.head_vars):
            tuples = [head]
        else:
            tuples = [dict(zip(entry.head_vars, args)) for args in self.structure.atoms(entry.pred, entry.sign)
                      if entry.covers(Atom(entry.pred, args)) is not None]
            self.graph.replace_rule_entry(idx, None)
        for head_theta in tuples:
            lit = DomainLiteral(entry.atom(head_theta), entry.sign)
            current = self.graph.rule_entry(idx)
            if current is not None:
                self.graph.replace_rule_entry(idx, current.exclude(head_theta))
            self.graph.set(lit, entry.for_atom(head_theta))
            self.queue.push(lit)

    def _find_violation(self, dj: Justification) -> Optional[DomainLiteral]:
        for part in parts_of(dj):
            for lit, bind in _patterns(part):
                if lit.is_builtin:
                    continue
                bad = self.false_instances(lit, bind, 1)
                if bad:
                    return bad[0].negate()
        return None

    # -- grounding ---------------------------------------------------------

    def lazy_ground(self, l: DomainLiteral):
        """
        Restore the invariants for a dequeued literal.

        Returns the grounder's result when D_g changed, otherwise None.
        """
        if not self.d_delayed.defines(l.atom):
            self._violations.pop(l, None)
            return None
        current = self.graph.get(l)
        violation = self._violations.pop(l, None)
        if not self.naive and not self.structure.is_true(l):
            if current is not None and current is not JUST_FALSE and not self.valid(l, current):
                self.graph.remove(l)
                self.graph.detach(l.atom)
            return None
        if current is not None and current is not JUST_FALSE:
            if self.valid(l, current):
                return None
            self.graph.detach(l.atom)
            if isinstance(current, tuple) and len(current) == 1:
                current = current[0]
            if violation is None or not self.structure.is_true(violation):
                violation = self._find_violation(current)
            if self.prefer_body_split and isinstance(current, SymbolicLiteralSet) and violation is not None:
                self.graph.remove(l)
                return self._ground(l, violation, current)
        if self.naive:
            return self._ground(l, None, None)
        rule = self.d_delayed.rule_for(l.atom)
        phi = rule.body if l.sign else negate(rule.body)
        dj = self.build_djust(l, phi, self.init_just(l))
        if dj is not JUST_FALSE:
            self.graph.set(l, dj)
            self.stats["justified"] += 1
            LOG.debug("justified %s", l)
            return None
        if self.approximate:
            dj, bad = self.approximate_justify(l, phi)
            if dj is not JUST_FALSE and bad:
                self.stats["approximate"] += 1
                return self._ground(l, bad[0].negate(), dj)
        self.graph.set(l, JUST_FALSE)
        return self._ground(l, None, None)

    def _ground(self, l: DomainLiteral, violation: Optional[DomainLiteral], j_old: Optional[SymbolicLiteralSet]):
        result = self.grounder.split_and_ground(l, self.structure, violation, j_old)
        self.stats["groundings"] += 1
        LOG.debug("grounded %s (%s)", l, result.how)
        for rule in result.ground:
            atom = rule.head.atom()
            for sign in (True, False):
                dl = DomainLiteral(atom, sign)
                self.graph.remove(dl)
                # entries relying on this atom must be rechecked now that D_g defines it
                for owner, theta in self.graph.watchers(dl.negate()):
                    if isinstance(owner, int):
                        self._wake_rule_entry(owner, theta)
                    else:
                        self.queue.push(owner)
            self.graph.detach(atom)
        for tlit, dj in result.inherited:
            if self.valid(tlit, dj):
                self.graph.set(tlit, dj)
        if self.naive:
            for rule in result.ground:
                for lit in literals(rule.body):
                    if not lit.is_builtin and self.d_delayed.defines(lit.atom()):
                        self.queue.push(DomainLiteral(lit.atom(), True))
        return result

    # -- planner hook ------------------------------------------------------

    def install_rule_justification(self, rule: Rule, sign: bool, parts: Tuple[DirectJustification, ...]) -> None:
        """Seed J for every head instance of ``rule`` (used by the global plan)."""
        if not rule.bind.vars:
            self.graph.set(DomainLiteral(rule.head.atom(), sign), parts[0] if len(parts) == 1 else parts)
            return
        self.graph.add_rule_entry(RuleJustification(rule.id, rule.pred, sign, rule.bind.vars, rule.bind, parts))

    # -- debug checks ------------------------------------------------------

    def check_state(self) -> None:
        """
        Raise InvariantViolation unless the state is default acceptable.

        Only meaningful when the queue is empty.
        """
        if self.queue:
            return
        for lit in list(self.structure.literals()):
            if lit.atom.pred in ("=", "true", "false"):
                continue
            if self.d_delayed.defines(lit.atom) and self.d_ground.defines(lit.atom):
                raise InvariantViolation(f"{lit.atom} defined in both D_g and D_d")
            if self.d_delayed.defines(lit.atom) and self.structure.is_true(lit):
                dj = self.graph.get(lit)
                if dj is None or dj is JUST_FALSE:
                    raise InvariantViolation(f"true literal {lit} has no justification")
                if not self.valid(lit, dj):
                    raise InvariantViolation(f"justification of {lit} is invalid")
        edges = self.graph.ground_edges()
        everything: Set[DomainLiteral] = set()
        for lit, body in edges.items():
            for dl in body:
                if self.structure.literal_value(dl) is F:
                    raise InvariantViolation(f"{dl} in J({lit}) is false")
            everything |= body
        clash = next((dl for dl in everything if dl.negate() in everything), None)
        if clash is not None:
            raise InvariantViolation(f"J contains {clash} and its negation")
        targets = [lit for lit in edges if self.structure.is_true(lit)]
        if not justifies(edges, targets, self.d_delayed.defines, acyclic=True):
            raise InvariantViolation("J does not justify the true literals defined in D_d")
