"""
Core logical vocabulary for the engine.

Truth values, predicates, domain sets, NNF formulas, rules, definitions and
four-valued partial structures. Domain elements are interned integer ids;
their names live in the Vocabulary symbol table.
"""

import bisect
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import (Any, Dict, FrozenSet, Iterable, Iterator, List, Mapping,
                    NamedTuple, Optional, Sequence, Set, Tuple, Union)

from .errors import UsageError

LOG = logging.getLogger(__name__)

Term = Union[str, int]
"""A variable (str) or a domain element id (int)."""


class TruthValue4(Enum):
    """
    Belnap truth value stored as a (true, false) bit pair.

    T = (1,0), F = (0,1), U = (0,0), X = (1,1). The truth meet and join and
    the precision order are computed componentwise on the bits.
    """

    T = (True, False)
    F = (False, True)
    U = (False, False)
    X = (True, True)

    @staticmethod
    def from_bool(value: bool) -> "TruthValue4":
        return TruthValue4.T if value else TruthValue4.F

    def invert(self) -> "TruthValue4":
        t, f = self.value
        return TruthValue4((f, t))

    def meet(self, other: "TruthValue4") -> "TruthValue4":
        """min in the truth order"""
        return TruthValue4((self.value[0] and other.value[0], self.value[1] or other.value[1]))

    def join(self, other: "TruthValue4") -> "TruthValue4":
        """max in the truth order"""
        return TruthValue4((self.value[0] or other.value[0], self.value[1] and other.value[1]))

    def leq_t(self, other: "TruthValue4") -> bool:
        return self.value[0] <= other.value[0] and self.value[1] >= other.value[1]

    def leq_p(self, other: "TruthValue4") -> bool:
        return self.value[0] <= other.value[0] and self.value[1] <= other.value[1]

    @property
    def is_known(self) -> bool:
        return self in (TruthValue4.T, TruthValue4.F)

    def __str__(self) -> str:
        return self.name


T, F, U, X = TruthValue4.T, TruthValue4.F, TruthValue4.U, TruthValue4.X


class PredicateKind(str, Enum):
    OPEN = "open"
    DEFINED = "defined"
    TSEITIN = "tseitin"
    BUILTIN = "builtin"


@dataclass(frozen=True)
class Predicate:
    name: str
    arity: int
    kind: PredicateKind = PredicateKind.OPEN

    @property
    def is_defined(self) -> bool:
        return self.kind in (PredicateKind.DEFINED, PredicateKind.TSEITIN)


EQUALITY = Predicate("=", 2, PredicateKind.BUILTIN)
BUILTIN_TRUE = Predicate("true", 0, PredicateKind.BUILTIN)
BUILTIN_FALSE = Predicate("false", 0, PredicateKind.BUILTIN)
BUILTINS = {p.name: p for p in (EQUALITY, BUILTIN_TRUE, BUILTIN_FALSE)}


class Atom(NamedTuple):
    pred: str
    args: Tuple[int, ...] = ()


class DomainLiteral(NamedTuple):
    atom: Atom
    sign: bool = True

    def negate(self) -> "DomainLiteral":
        return DomainLiteral(self.atom, not self.sign)


# ---------------------------------------------------------------------------
# Domain sets and bindings
# ---------------------------------------------------------------------------

def _merge_ranges(ranges: Iterable[Tuple[int, int]]) -> Tuple[Tuple[int, int], ...]:
    merged: List[List[int]] = []
    for lo, hi in sorted(r for r in ranges if r[0] < r[1]):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


def _intersect_ranges(a: Sequence[Tuple[int, int]], b: Sequence[Tuple[int, int]]) -> List[Tuple[int, int]]:
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def _subtract_ranges(a: Sequence[Tuple[int, int]], b: Sequence[Tuple[int, int]]) -> List[Tuple[int, int]]:
    out = []
    for lo, hi in a:
        cur = lo
        for blo, bhi in b:
            if bhi <= cur or blo >= hi:
                continue
            if blo > cur:
                out.append((cur, blo))
            cur = max(cur, bhi)
        if cur < hi:
            out.append((cur, hi))
    return out


@dataclass(frozen=True)
class DomainSet:
    """
    Finite set of element ids: half-open intervals minus an excluded set.

    Membership and cardinality never materialize the intervals, so the
    ``D - d`` sets produced by splitting stay proportional to the number of
    exclusions.

    Args:
        ranges: Sorted, disjoint half-open intervals
        excluded: Ids removed from the intervals
        label: Display name of the set this one was derived from
    """

    ranges: Tuple[Tuple[int, int], ...] = ()
    excluded: FrozenSet[int] = frozenset()
    label: str = field(default="", compare=False)

    @staticmethod
    def make(ranges: Iterable[Tuple[int, int]], excluded: Iterable[int] = (), label: str = "") -> "DomainSet":
        merged = _merge_ranges(ranges)
        span = DomainSet(merged)
        kept = frozenset(e for e in excluded if e in span)
        return DomainSet(merged, kept, label)

    @staticmethod
    def interval(lo: int, hi: int, label: str = "") -> "DomainSet":
        return DomainSet.make([(lo, hi)], label=label)

    @staticmethod
    def of(ids: Iterable[int], label: str = "") -> "DomainSet":
        runs: List[Tuple[int, int]] = []
        for i in sorted(set(ids)):
            if runs and runs[-1][1] == i:
                runs[-1] = (runs[-1][0], i + 1)
            else:
                runs.append((i, i + 1))
        return DomainSet(tuple(runs), frozenset(), label)

    def __len__(self) -> int:
        return sum(hi - lo for lo, hi in self.ranges) - len(self.excluded)

    def __contains__(self, elem: object) -> bool:
        if not isinstance(elem, int) or elem in self.excluded:
            return False
        pos = bisect.bisect_right(self.ranges, (elem, math.inf)) - 1
        return pos >= 0 and self.ranges[pos][0] <= elem < self.ranges[pos][1]

    def __iter__(self) -> Iterator[int]:
        for lo, hi in self.ranges:
            for i in range(lo, hi):
                if i not in self.excluded:
                    yield i

    def __bool__(self) -> bool:
        return len(self) > 0

    def first(self) -> Optional[int]:
        return next(iter(self), None)

    def minus(self, ids: Iterable[int]) -> "DomainSet":
        extra = [i for i in ids if i in self]
        if not extra:
            return self
        return DomainSet(self.ranges, self.excluded | frozenset(extra), self.label)

    def intersect(self, other: "DomainSet") -> "DomainSet":
        ranges = _intersect_ranges(self.ranges, other.ranges)
        return DomainSet.make(ranges, self.excluded | other.excluded)

    def difference(self, other: "DomainSet") -> "DomainSet":
        ranges = _subtract_ranges(self.ranges, other.ranges)
        # elements excluded from other but inside its intervals stay in self
        ranges += [(e, e + 1) for e in other.excluded if e in self]
        return DomainSet.make(ranges, self.excluded)

    def is_singleton(self) -> bool:
        return len(self) == 1


EMPTY_DOMAIN = DomainSet()

Exclusion = Tuple[Tuple[str, int], ...]
"""A (partial) assignment removed from a Bindings block, as sorted pairs."""


@dataclass(frozen=True)
class Bindings:
    """
    Product of per-variable domain sets minus excluded (partial) assignments.

    Used for quantifier blocks, rule heads and the B component of a
    symbolic literal set. Iteration is in ascending lexicographic order of
    the value tuples, following the order of ``vars``.
    """

    vars: Tuple[str, ...] = ()
    domains: Tuple[DomainSet, ...] = ()
    excluded: FrozenSet[Exclusion] = frozenset()

    def __post_init__(self):
        if len(self.vars) != len(self.domains):
            raise UsageError("bindings need one domain per variable")

    def domain_of(self, var: str) -> DomainSet:
        return self.domains[self.vars.index(var)]

    def product_size(self) -> int:
        return math.prod(len(d) for d in self.domains) if self.domains else 1

    def __len__(self) -> int:
        total = self.product_size()
        if not self.excluded or total == 0:
            return total
        full = set(self.vars)
        if all({v for v, _ in ex} == full for ex in self.excluded):
            return total - sum(1 for ex in self.excluded if self._within(dict(ex)))
        if total <= 200_000:
            return sum(1 for _ in self)
        removed = 0
        for ex in self.excluded:
            assign = dict(ex)
            if self._within(assign):
                removed += math.prod(len(d) for v, d in zip(self.vars, self.domains) if v not in assign)
        return max(total - removed, 0)

    def _within(self, assign: Mapping[str, int]) -> bool:
        return all(v in assign and assign[v] in d or v not in assign for v, d in zip(self.vars, self.domains))

    def is_excluded(self, assign: Mapping[str, int]) -> bool:
        for ex in self.excluded:
            if all(assign.get(v) == e for v, e in ex):
                return True
        return False

    def __iter__(self) -> Iterator[Tuple[int, ...]]:
        for values in itertools.product(*self.domains):
            if self.excluded and self.is_excluded(dict(zip(self.vars, values))):
                continue
            yield values

    def assignments(self) -> Iterator[Dict[str, int]]:
        for values in self:
            yield dict(zip(self.vars, values))

    def __contains__(self, values: object) -> bool:
        if not isinstance(values, tuple) or len(values) != len(self.vars):
            return False
        return self.contains_assignment(dict(zip(self.vars, values)))

    def contains_assignment(self, assign: Mapping[str, int]) -> bool:
        for v, d in zip(self.vars, self.domains):
            if v in assign and assign[v] not in d:
                return False
        return not self.is_excluded(assign)

    def is_empty(self) -> bool:
        return len(self) == 0

    def minus(self, assign: Mapping[str, int]) -> "Bindings":
        """Remove every tuple that agrees with the given (partial) assignment."""
        pairs = tuple(sorted((v, e) for v, e in assign.items() if v in self.vars))
        if not pairs:
            return Bindings(self.vars, self.domains, self.excluded | {()})
        if len(pairs) == 1:
            var, elem = pairs[0]
            idx = self.vars.index(var)
            domains = list(self.domains)
            domains[idx] = domains[idx].minus([elem])
            return Bindings(self.vars, tuple(domains), self.excluded)
        return Bindings(self.vars, self.domains, self.excluded | {pairs})

    def extend(self, var: str, domain: DomainSet) -> "Bindings":
        if var in self.vars:
            raise UsageError(f"variable {var} bound twice")
        return Bindings(self.vars + (var,), self.domains + (domain,), self.excluded)

    def extend_block(self, other: "Bindings") -> "Bindings":
        for v in other.vars:
            if v in self.vars:
                raise UsageError(f"variable {v} bound twice")
        return Bindings(self.vars + other.vars, self.domains + other.domains, self.excluded | other.excluded)

    def restrict(self, var: str, domain: DomainSet) -> "Bindings":
        idx = self.vars.index(var)
        domains = list(self.domains)
        domains[idx] = domains[idx].intersect(domain)
        return Bindings(self.vars, tuple(domains), self.excluded)

    def fix(self, assign: Mapping[str, int]) -> "Bindings":
        """Narrow the variables in ``assign`` to singletons (empty if outside)."""
        domains = []
        for v, d in zip(self.vars, self.domains):
            if v in assign:
                domains.append(DomainSet.of([assign[v]]) if assign[v] in d else EMPTY_DOMAIN)
            else:
                domains.append(d)
        return Bindings(self.vars, tuple(domains), self.excluded)

    def drop(self, names: Iterable[str]) -> "Bindings":
        """Forget variables; exclusions mentioning them are dropped too."""
        gone = set(names)
        keep = [i for i, v in enumerate(self.vars) if v not in gone]
        excluded = frozenset(ex for ex in self.excluded if not any(v in gone for v, _ in ex))
        return Bindings(tuple(self.vars[i] for i in keep), tuple(self.domains[i] for i in keep), excluded)


EMPTY_BINDINGS = Bindings()


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    pred: str
    args: Tuple[Term, ...] = ()
    sign: bool = True

    def negate(self) -> "Lit":
        return Lit(self.pred, self.args, not self.sign)

    def is_ground(self) -> bool:
        return all(isinstance(a, int) for a in self.args)

    def atom(self) -> Atom:
        if not self.is_ground():
            raise UsageError(f"literal {self.pred}{self.args} is not ground")
        return Atom(self.pred, self.args)  # type: ignore[arg-type]

    def domain_literal(self) -> DomainLiteral:
        return DomainLiteral(self.atom(), self.sign)

    @property
    def is_builtin(self) -> bool:
        return self.pred in BUILTINS


@dataclass(frozen=True)
class And:
    children: Tuple["Formula", ...] = ()


@dataclass(frozen=True)
class Or:
    children: Tuple["Formula", ...] = ()


@dataclass(frozen=True)
class Forall:
    bind: Bindings
    child: "Formula"


@dataclass(frozen=True)
class Exists:
    bind: Bindings
    child: "Formula"


Formula = Union[Lit, And, Or, Forall, Exists]

TRUE = And(())
FALSE = Or(())


def conj(*children: Formula) -> Formula:
    flat: List[Formula] = []
    for c in children:
        if isinstance(c, And):
            flat.extend(c.children)
        elif c == FALSE:
            return FALSE
        else:
            flat.append(c)
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*children: Formula) -> Formula:
    flat: List[Formula] = []
    for c in children:
        if isinstance(c, Or):
            flat.extend(c.children)
        elif c == TRUE:
            return TRUE
        else:
            flat.append(c)
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def forall(bind: Bindings, child: Formula) -> Formula:
    if not bind.vars:
        return child
    if bind.is_empty() or child == TRUE:
        return TRUE
    if child == FALSE:
        return FALSE
    return Forall(bind, child)


def exists(bind: Bindings, child: Formula) -> Formula:
    if not bind.vars:
        return child
    if bind.is_empty() or child == FALSE:
        return FALSE
    if child == TRUE:
        return TRUE
    return Exists(bind, child)


def negate(phi: Formula) -> Formula:
    """NNF negation: push the negation down to the literals."""
    if isinstance(phi, Lit):
        return phi.negate()
    if isinstance(phi, And):
        return Or(tuple(negate(c) for c in phi.children))
    if isinstance(phi, Or):
        return And(tuple(negate(c) for c in phi.children))
    if isinstance(phi, Forall):
        return Exists(phi.bind, negate(phi.child))
    return Forall(phi.bind, negate(phi.child))


def free_vars(phi: Formula) -> FrozenSet[str]:
    if isinstance(phi, Lit):
        return frozenset(a for a in phi.args if isinstance(a, str))
    if isinstance(phi, (And, Or)):
        out: Set[str] = set()
        for c in phi.children:
            out |= free_vars(c)
        return frozenset(out)
    return free_vars(phi.child) - frozenset(phi.bind.vars)


def substitute(phi: Formula, theta: Mapping[str, int]) -> Formula:
    """Replace free variables; returns ``phi`` itself when nothing changes."""
    if not theta:
        return phi
    if isinstance(phi, Lit):
        if not any(isinstance(a, str) and a in theta for a in phi.args):
            return phi
        return Lit(phi.pred, tuple(theta.get(a, a) if isinstance(a, str) else a for a in phi.args), phi.sign)
    if isinstance(phi, (And, Or)):
        children = tuple(substitute(c, theta) for c in phi.children)
        if all(a is b for a, b in zip(children, phi.children)):
            return phi
        return type(phi)(children)
    inner = {k: v for k, v in theta.items() if k not in phi.bind.vars}
    child = substitute(phi.child, inner)
    if child is phi.child:
        return phi
    return type(phi)(phi.bind, child)


def rename_vars(phi: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename variables (free and bound) according to ``mapping``."""
    if isinstance(phi, Lit):
        return Lit(phi.pred, tuple(mapping.get(a, a) if isinstance(a, str) else a for a in phi.args), phi.sign)
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(rename_vars(c, mapping) for c in phi.children))
    bind = Bindings(tuple(mapping.get(v, v) for v in phi.bind.vars), phi.bind.domains,
                    frozenset(tuple(sorted((mapping.get(v, v), e) for v, e in ex)) for ex in phi.bind.excluded))
    return type(phi)(bind, rename_vars(phi.child, mapping))


def literals(phi: Formula) -> Iterator[Lit]:
    if isinstance(phi, Lit):
        yield phi
    elif isinstance(phi, (And, Or)):
        for c in phi.children:
            yield from literals(c)
    else:
        yield from literals(phi.child)


def predicates(phi: Formula) -> Set[str]:
    return {lit.pred for lit in literals(phi) if not lit.is_builtin}


def is_quantifier_free(phi: Formula) -> bool:
    if isinstance(phi, Lit):
        return True
    if isinstance(phi, (And, Or)):
        return all(is_quantifier_free(c) for c in phi.children)
    return False


def builtin_value(pred: str, args: Sequence[int]) -> TruthValue4:
    if pred == "=":
        return TruthValue4.from_bool(args[0] == args[1])
    return TruthValue4.from_bool(pred == "true")


def evaluate(phi: Formula, structure: "PartialStructure", theta: Optional[Mapping[str, int]] = None) -> TruthValue4:
    """
    Standard four-valued truth assignment.

    Args:
        phi: NNF formula
        structure: Interpretation of the atoms
        theta: Ground substitution for the free variables of ``phi``

    Returns:
        min_t over conjunctions and universal instances, max_t over
        disjunctions and existential instances, inversion for negative
        literals.
    """
    theta = theta or {}
    if isinstance(phi, Lit):
        args = []
        for a in phi.args:
            if isinstance(a, str):
                if a not in theta:
                    raise UsageError(f"unbound variable {a}")
                args.append(theta[a])
            else:
                args.append(a)
        value = structure.value(Atom(phi.pred, tuple(args)))
        return value if phi.sign else value.invert()
    if isinstance(phi, And):
        result = T
        for c in phi.children:
            result = result.meet(evaluate(c, structure, theta))
            if result is F:
                break
        return result
    if isinstance(phi, Or):
        result = F
        for c in phi.children:
            result = result.join(evaluate(c, structure, theta))
            if result is T:
                break
        return result
    universal = isinstance(phi, Forall)
    result = T if universal else F
    for assign in phi.bind.assignments():
        value = evaluate(phi.child, structure, {**theta, **assign})
        result = result.meet(value) if universal else result.join(value)
        if result is (F if universal else T):
            break
    return result


# ---------------------------------------------------------------------------
# Rules and definitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rule:
    """
    ``forall bind: head <- body``.

    Head arguments are the block variables or, for instances, element ids.
    A ground rule has an empty ``bind``.
    """

    id: str
    head: Lit
    body: Formula
    bind: Bindings = EMPTY_BINDINGS

    @property
    def pred(self) -> str:
        return self.head.pred

    def is_ground(self) -> bool:
        return not self.bind.vars and self.head.is_ground()

    def binding_for(self, atom: Atom) -> Optional[Dict[str, int]]:
        """The head binding that produces ``atom``, or None if not covered."""
        if atom.pred != self.head.pred or len(atom.args) != len(self.head.args):
            return None
        assign: Dict[str, int] = {}
        for term, value in zip(self.head.args, atom.args):
            if isinstance(term, str):
                if assign.setdefault(term, value) != value:
                    return None
            elif term != value:
                return None
        if not self.bind.contains_assignment(assign):
            return None
        return assign

    def covers(self, atom: Atom) -> bool:
        return self.binding_for(atom) is not None

    def head_atoms(self) -> Iterator[Atom]:
        for assign in self.bind.assignments():
            yield substitute(self.head, assign).atom()  # type: ignore[union-attr]

    def with_id(self, rule_id: str) -> "Rule":
        return Rule(rule_id, self.head, self.body, self.bind)


class Definition:
    """
    Ordered rule set with a head index.

    Ground rules are indexed by head atom; non-ground rules by predicate.
    """

    def __init__(self, rules: Iterable[Rule] = ()):
        self._rules: Dict[str, Rule] = {}
        self._ground: Dict[Atom, str] = {}
        self._by_pred: Dict[str, List[str]] = defaultdict(list)
        for r in rules:
            self.add(r)

    def add(self, rule: Rule) -> None:
        if rule.id in self._rules:
            raise UsageError(f"duplicate rule id {rule.id}")
        self._rules[rule.id] = rule
        if rule.is_ground():
            self._ground[rule.head.atom()] = rule.id
        else:
            self._by_pred[rule.pred].append(rule.id)

    def remove(self, rule_id: str) -> Rule:
        rule = self._rules.pop(rule_id)
        if rule.is_ground():
            self._ground.pop(rule.head.atom(), None)
        else:
            self._by_pred[rule.pred].remove(rule_id)
        return rule

    def replace(self, rule_id: str, rule: Rule) -> None:
        self.remove(rule_id)
        self.add(rule)

    def get(self, rule_id: str) -> Optional[Rule]:
        return self._rules.get(rule_id)

    def __contains__(self, rule_id: object) -> bool:
        return rule_id in self._rules

    def __iter__(self) -> Iterator[Rule]:
        return iter(list(self._rules.values()))

    def __len__(self) -> int:
        return len(self._rules)

    def ids(self) -> List[str]:
        return list(self._rules)

    def rule_for(self, atom: Atom) -> Optional[Rule]:
        rid = self._ground.get(atom)
        if rid is not None:
            return self._rules[rid]
        for rid in self._by_pred.get(atom.pred, ()):
            rule = self._rules[rid]
            if rule.covers(atom):
                return rule
        return None

    def defines(self, atom: Atom) -> bool:
        return self.rule_for(atom) is not None

    def rules_for_pred(self, pred: str) -> List[Rule]:
        out = [self._rules[rid] for rid in self._by_pred.get(pred, ())]
        out.extend(r for a, rid in self._ground.items() if a.pred == pred for r in [self._rules[rid]])
        return out

    def defined_predicates(self) -> Set[str]:
        return {r.pred for r in self._rules.values()}

    def copy(self) -> "Definition":
        return Definition(self._rules.values())


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------

class Vocabulary:
    """
    Predicate symbols, named domains and the element symbol table.

    Args:
        predicates: Initial predicate symbols (builtins are always present)
        elements: Element names in id order
    """

    def __init__(self, predicates: Iterable[Predicate] = (), elements: Iterable[str] = ()):
        self.predicates: Dict[str, Predicate] = dict(BUILTINS)
        self.elements: List[str] = []
        self._element_ids: Dict[str, int] = {}
        self.domains: Dict[str, DomainSet] = {}
        self._tseitin_counter = 0
        for p in predicates:
            self.add_predicate(p)
        for e in elements:
            self.intern(e)

    def add_predicate(self, pred: Predicate) -> Predicate:
        known = self.predicates.get(pred.name)
        if known is not None and known != pred:
            raise UsageError(f"predicate {pred.name} redeclared as {pred.kind.value}/{pred.arity}")
        self.predicates[pred.name] = pred
        return pred

    def predicate(self, name: str) -> Predicate:
        try:
            return self.predicates[name]
        except KeyError:
            raise UsageError(f"unknown predicate {name}") from None

    def kind(self, name: str) -> PredicateKind:
        return self.predicate(name).kind

    def is_defined(self, name: str) -> bool:
        pred = self.predicates.get(name)
        return pred is not None and pred.is_defined

    def is_open(self, name: str) -> bool:
        pred = self.predicates.get(name)
        return pred is not None and pred.kind == PredicateKind.OPEN

    def intern(self, name: str) -> int:
        if name not in self._element_ids:
            self._element_ids[name] = len(self.elements)
            self.elements.append(name)
        return self._element_ids[name]

    def element_id(self, name: str) -> int:
        try:
            return self._element_ids[name]
        except KeyError:
            raise UsageError(f"unknown domain element {name}") from None

    def has_element(self, name: str) -> bool:
        return name in self._element_ids

    def element_name(self, elem: int) -> str:
        return self.elements[elem]

    @property
    def universe(self) -> DomainSet:
        return DomainSet.interval(0, len(self.elements))

    def fresh_tseitin(self, arity: int = 0) -> Predicate:
        while True:
            self._tseitin_counter += 1
            name = f"_T{self._tseitin_counter}"
            if name not in self.predicates:
                return self.add_predicate(Predicate(name, arity, PredicateKind.TSEITIN))

    def user_predicates(self) -> List[Predicate]:
        return [p for p in self.predicates.values() if p.kind in (PredicateKind.OPEN, PredicateKind.DEFINED)]

    def copy(self) -> "Vocabulary":
        other = Vocabulary()
        other.predicates = dict(self.predicates)
        other.elements = list(self.elements)
        other._element_ids = dict(self._element_ids)
        other.domains = dict(self.domains)
        other._tseitin_counter = self._tseitin_counter
        return other


# ---------------------------------------------------------------------------
# Partial structures
# ---------------------------------------------------------------------------

class TrailEntry(NamedTuple):
    literal: DomainLiteral
    level: int
    reason: Any = None


class PartialStructure:
    """
    Four-valued interpretation kept as a trail of domain literals.

    An atom is X when both polarities are on the trail, T or F when only one
    is, and U otherwise. Atoms of predicates listed in ``closed`` that are
    not on the trail evaluate to F instead of U; models use this so that
    large false extensions are never materialized.

    Args:
        domain_size: Number of domain elements
        closed: Predicates interpreted two-valued with default false
    """

    def __init__(self, domain_size: int = 0, closed: Iterable[str] = ()):
        self.domain_size = domain_size
        self.closed: FrozenSet[str] = frozenset(closed)
        self._true: Dict[str, Set[Tuple[int, ...]]] = defaultdict(set)
        self._false: Dict[str, Set[Tuple[int, ...]]] = defaultdict(set)
        self.trail: List[TrailEntry] = []
        self.level = 0

    @classmethod
    def from_literals(cls, lits: Iterable[DomainLiteral], domain_size: int = 0,
                      closed: Iterable[str] = ()) -> "PartialStructure":
        structure = cls(domain_size, closed)
        for lit in lits:
            structure.assign(lit)
        return structure

    def value(self, atom: Atom) -> TruthValue4:
        if atom.pred in BUILTINS:
            return builtin_value(atom.pred, atom.args)
        t = atom.args in self._true.get(atom.pred, ())
        f = atom.args in self._false.get(atom.pred, ())
        if not t and not f and atom.pred in self.closed:
            return F
        return TruthValue4((t, f))

    def literal_value(self, lit: DomainLiteral) -> TruthValue4:
        value = self.value(lit.atom)
        return value if lit.sign else value.invert()

    def is_true(self, lit: DomainLiteral) -> bool:
        return self.literal_value(lit) is T

    def assign(self, lit: DomainLiteral, level: Optional[int] = None, reason: Any = None) -> bool:
        """Put ``lit`` on the trail; returns False when it was already there."""
        table = self._true if lit.sign else self._false
        args_set = table[lit.atom.pred]
        if lit.atom.args in args_set:
            return False
        args_set.add(lit.atom.args)
        self.trail.append(TrailEntry(lit, self.level if level is None else level, reason))
        return True

    def new_level(self) -> int:
        self.level += 1
        return self.level

    def backtrack(self, level: int) -> List[DomainLiteral]:
        """Undo every trail entry above ``level``; returns the undone literals."""
        undone = []
        while self.trail and self.trail[-1].level > level:
            entry = self.trail.pop()
            table = self._true if entry.literal.sign else self._false
            table[entry.literal.atom.pred].discard(entry.literal.atom.args)
            undone.append(entry.literal)
        self.level = min(self.level, level)
        return undone

    def atoms(self, pred: str, sign: bool = True) -> Set[Tuple[int, ...]]:
        """Argument tuples of ``pred`` on the trail with the given polarity."""
        return (self._true if sign else self._false).get(pred, set())

    def literals(self) -> Iterator[DomainLiteral]:
        for pred, rows in self._true.items():
            for args in rows:
                yield DomainLiteral(Atom(pred, args), True)
        for pred, rows in self._false.items():
            for args in rows:
                yield DomainLiteral(Atom(pred, args), False)

    def true_atoms(self) -> List[Atom]:
        return sorted(Atom(p, a) for p, rows in self._true.items() for a in rows)

    def is_consistent(self) -> bool:
        return not any(self._true.get(p, set()) & rows for p, rows in self._false.items())

    def predicates(self) -> Set[str]:
        return {p for p, rows in self._true.items() if rows} | {p for p, rows in self._false.items() if rows} | set(self.closed)

    def copy(self) -> "PartialStructure":
        other = PartialStructure(self.domain_size, self.closed)
        for lit in self.literals():
            other.assign(lit, 0)
        return other

    def __len__(self) -> int:
        return sum(len(r) for r in self._true.values()) + sum(len(r) for r in self._false.values())


def precision_leq(first: PartialStructure, second: PartialStructure) -> bool:
    """True iff every atom is at most as precise in ``first`` as in ``second``."""
    if first.domain_size != second.domain_size:
        raise UsageError(f"domain mismatch: {first.domain_size} vs {second.domain_size}")
    for lit in first.literals():
        if not second.value(lit.atom).value[0 if lit.sign else 1]:
            return False
    for pred in first.closed:
        if pred not in second.closed:
            return False
        if not second.atoms(pred, True) <= first.atoms(pred, True):
            return False
    return True


def restrict(structure: PartialStructure, atoms: Iterable[Atom]) -> PartialStructure:
    """Keep the values of ``atoms``; everything else becomes U."""
    result = PartialStructure(structure.domain_size)
    for atom in atoms:
        value = structure.value(atom)
        if value.value[0]:
            result.assign(DomainLiteral(atom, True))
        if value.value[1]:
            result.assign(DomainLiteral(atom, False))
    return result
