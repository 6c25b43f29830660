"""
Clause store for the search.

Ground rules of D_g are clausified through their completion; nested
subformulas get auxiliary variables. Variables are positive ints, literals
signed ints. Every assignment of a vocabulary atom is mirrored on the
shared PartialStructure at the same decision level.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple

from .errors import InvariantViolation
from .grounder import ground_simplify
from .kernel import And, Atom, DomainLiteral, F, Formula, Lit, Or, PartialStructure, Rule, T

LOG = logging.getLogger(__name__)


@dataclass(eq=False)
class Clause:
    lits: List[int]
    learned: bool = False
    owner: Optional[int] = None  # variable whose definition this clause belongs to

    def __len__(self) -> int:
        return len(self.lits)

    def __iter__(self):
        return iter(self.lits)

    def __repr__(self) -> str:
        return "(" + " | ".join(str(l) for l in self.lits) + ")"


@dataclass
class ClauseStats:
    problem: int = 0
    learned: int = 0
    aux_vars: int = 0
    propagations: int = 0
    late_units: int = 0
    extra: Dict[str, int] = field(default_factory=dict)


class ClauseStore:
    """
    Problem and learned clauses with two watched literals.

    Args:
        structure: The search structure I; atoms already valued in it are
            treated as level-0 facts when their variable is created
        on_new_var: Called with every freshly created variable
    """

    def __init__(self, structure: PartialStructure, on_new_var: Optional[Callable[[int], None]] = None):
        self.structure = structure
        self.on_new_var = on_new_var
        self.var_of: Dict[Atom, int] = {}
        self.atom_of: List[Optional[Atom]] = [None]
        self.values: List[Optional[bool]] = [None]
        self.levels: List[int] = [-1]
        self.reasons: List[Optional[Clause]] = [None]
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.clauses: List[Clause] = []
        self.learned: List[Clause] = []
        self.watches: Dict[int, List[Clause]] = defaultdict(list)
        self.late: List[Clause] = []
        self.qhead = 0
        self.assigned = 0
        self.stats = ClauseStats()

    # -- variables ---------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.values) - 1

    @property
    def level(self) -> int:
        return len(self.trail_lim)

    def _new_var(self, atom: Optional[Atom]) -> int:
        var = len(self.values)
        self.atom_of.append(atom)
        self.values.append(None)
        self.levels.append(-1)
        self.reasons.append(None)
        if atom is not None:
            self.var_of[atom] = var
            known = self.structure.value(atom)
            if known is T or known is F:
                self.values[var] = known is T
                self.levels[var] = 0
                self.assigned += 1
        else:
            self.stats.aux_vars += 1
        if self.on_new_var is not None:
            self.on_new_var(var)
        return var

    def var(self, atom: Atom) -> int:
        var = self.var_of.get(atom)
        return var if var is not None else self._new_var(atom)

    def lit(self, dl: DomainLiteral) -> int:
        v = self.var(dl.atom)
        return v if dl.sign else -v

    def domain_literal(self, lit: int) -> Optional[DomainLiteral]:
        atom = self.atom_of[abs(lit)]
        return None if atom is None else DomainLiteral(atom, lit > 0)

    def is_aux(self, var: int) -> bool:
        return self.atom_of[var] is None

    def value(self, lit: int) -> Optional[bool]:
        v = self.values[abs(lit)]
        if v is None:
            return None
        return v if lit > 0 else not v

    def level_of(self, lit: int) -> int:
        return self.levels[abs(lit)]

    # -- assignment --------------------------------------------------------

    def new_level(self) -> None:
        self.trail_lim.append(len(self.trail))
        self.structure.new_level()

    def assign(self, lit: int, reason: Optional[Clause] = None) -> None:
        var = abs(lit)
        if self.values[var] is not None:
            raise InvariantViolation(f"variable {var} assigned twice")
        self.values[var] = lit > 0
        self.levels[var] = self.level
        self.reasons[var] = reason
        self.trail.append(lit)
        self.assigned += 1
        atom = self.atom_of[var]
        if atom is not None:
            self.structure.assign(DomainLiteral(atom, lit > 0), self.level, reason)

    def backtrack(self, level: int) -> List[int]:
        """Undo everything above ``level``; returns the undone literals."""
        if level >= self.level:
            return []
        start = self.trail_lim[level]
        undone = self.trail[start:]
        for lit in undone:
            var = abs(lit)
            self.values[var] = None
            self.levels[var] = -1
            self.reasons[var] = None
        self.assigned -= len(undone)
        del self.trail[start:]
        del self.trail_lim[level:]
        self.qhead = min(self.qhead, len(self.trail))
        self.structure.backtrack(level)
        return undone

    def all_assigned(self) -> bool:
        return self.assigned == self.num_vars

    # -- clauses -----------------------------------------------------------

    def _order(self, lits: List[int]) -> List[int]:
        """Non-false literals first (true ones by level), then false ones by decreasing level."""
        def key(l: int) -> Tuple[int, int]:
            v = self.value(l)
            if v is None:
                return (0, 0)
            if v:
                return (1, self.level_of(l))
            return (2, -self.level_of(l))
        return sorted(lits, key=key)

    def _watch(self, clause: Clause) -> None:
        for l in clause.lits[:2]:
            self.watches[-l].append(clause)

    def add_clause(self, lits: Iterable[int], owner: Optional[int] = None, learned: bool = False) -> Optional[Clause]:
        """
        Add a clause at any point of the search.

        Unit clauses are asserted at the current level and remembered so
        they can be asserted again after a backjump. Returns the clause when
        every literal is false; the caller resolves the conflict.
        """
        unique: List[int] = []
        seen: Set[int] = set()
        for l in lits:
            if -l in seen:
                return None
            if l not in seen:
                seen.add(l)
                unique.append(l)
        clause = Clause(self._order(unique), learned, owner)
        if learned:
            self.learned.append(clause)
            self.stats.learned += 1
        else:
            self.clauses.append(clause)
            self.stats.problem += 1
        if not clause.lits:
            return clause
        self._watch(clause)
        return self._settle(clause)

    def _settle(self, clause: Clause) -> Optional[Clause]:
        first = clause.lits[0]
        v0 = self.value(first)
        if v0 is False:
            return clause
        second = self.value(clause.lits[1]) if len(clause.lits) > 1 else False
        if second is False:
            # only the first literal can hold: it has to be restored after a backjump
            if self.level > 0:
                self.late.append(clause)
            if v0 is None:
                self.stats.late_units += self.level > 0
                self.assign(first, clause)
        return None

    def settle(self, clause: Clause) -> Optional[Clause]:
        """Rewatch ``clause`` for the current assignment; asserts it when unit, returns it when false."""
        self.rewatch(clause)
        return self._settle(clause)

    def is_falsified(self, clause: Clause) -> bool:
        return all(self.value(l) is False for l in clause.lits)

    def recheck_late(self) -> Optional[Clause]:
        """Re-assert unit clauses that lost their implied literal in a backjump."""
        pending, self.late = self.late, []
        conflict = None
        for clause in pending:
            if conflict is not None:
                self.late.append(clause)
                continue
            conflict = self.settle(clause)
        if self.level == 0 and conflict is None:
            self.late.clear()
        return conflict

    def rewatch(self, clause: Clause) -> None:
        """Reorder a clause for the current assignment and move its watches."""
        self._unwatch(clause)
        clause.lits[:] = self._order(clause.lits)
        self._watch(clause)

    def _unwatch(self, clause: Clause) -> None:
        for l in clause.lits[:2]:
            bucket = self.watches.get(-l)
            if bucket:
                bucket[:] = [c for c in bucket if c is not clause]

    def add_rule(self, rule: Rule) -> List[Clause]:
        """
        Clausify the completion of a ground rule.

        Returns the clauses that came out conflicting.
        """
        head = self.var(rule.head.atom())
        return self._define(head, ground_simplify(rule.body, None))

    def _define(self, head: int, phi: Formula) -> List[Clause]:
        out: List[Optional[Clause]] = []
        if isinstance(phi, Lit):
            l = self.lit(phi.domain_literal())
            out += [self.add_clause([-head, l], head), self.add_clause([head, -l], head)]
        elif isinstance(phi, And):
            kids = [self._encode(c, out) for c in phi.children]
            for k in kids:
                out.append(self.add_clause([-head, k], head))
            out.append(self.add_clause([head] + [-k for k in kids], head))
        elif isinstance(phi, Or):
            kids = [self._encode(c, out) for c in phi.children]
            out.append(self.add_clause([-head] + kids, head))
            for k in kids:
                out.append(self.add_clause([head, -k], head))
        else:
            raise InvariantViolation(f"quantified body in a ground rule: {phi}")
        return [c for c in out if c is not None]

    def _encode(self, phi: Formula, out: List[Optional[Clause]]) -> int:
        if isinstance(phi, Lit):
            return self.lit(phi.domain_literal())
        aux = self._new_var(None)
        out.extend(self._define(aux, phi))
        return aux

    def encode(self, phi: Formula) -> Tuple[int, List[Clause]]:
        """Literal equivalent to a ground quantifier-free formula, plus conflicts."""
        out: List[Optional[Clause]] = []
        phi = ground_simplify(phi, None)
        if phi == And(()) or phi == Or(()):
            aux = self._new_var(None)
            out.append(self.add_clause([aux] if phi == And(()) else [-aux], aux))
            return aux, [c for c in out if c is not None]
        return self._encode(phi, out), [c for c in out if c is not None]

    # -- propagation -------------------------------------------------------

    def propagate(self) -> Optional[Clause]:
        """Unit propagation to fixpoint; returns a conflicting clause or None."""
        while self.qhead < len(self.trail):
            true_lit = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -true_lit
            watchers = self.watches[true_lit]
            self.watches[true_lit] = []
            kept: List[Clause] = []
            conflict = None
            for i, clause in enumerate(watchers):
                if conflict is not None:
                    kept.append(clause)
                    continue
                lits = clause.lits
                if lits[0] == false_lit:
                    lits[0], lits[1] = lits[1], lits[0]
                if self.value(lits[0]) is True:
                    kept.append(clause)
                    continue
                for k in range(2, len(lits)):
                    if self.value(lits[k]) is not False:
                        lits[1], lits[k] = lits[k], lits[1]
                        self.watches[-lits[1]].append(clause)
                        break
                else:
                    kept.append(clause)
                    if self.value(lits[0]) is False:
                        conflict = clause
                    else:
                        self.assign(lits[0], clause)
                        self.stats.propagations += 1
            self.watches[true_lit].extend(kept)
            if conflict is not None:
                return conflict
        return None

    # -- conflict analysis -------------------------------------------------

    def analyze(self, conflict: Clause) -> Tuple[List[int], int]:
        """
        First-UIP learning.

        The conflict must have a literal on the current level. Returns the
        learned clause (asserting literal first, then the one on the
        backjump level) and the backjump level.
        """
        seen: Set[int] = set()
        learned: List[int] = []
        counter = 0
        pivot: Optional[int] = None
        clause: Optional[Clause] = conflict
        idx = len(self.trail) - 1
        while True:
            if clause is None:
                raise InvariantViolation(f"no reason for {pivot} during analysis")
            for q in clause.lits:
                if pivot is not None and q == pivot:
                    continue
                var = abs(q)
                if var in seen or self.levels[var] <= 0:
                    continue
                seen.add(var)
                if self.levels[var] >= self.level:
                    counter += 1
                else:
                    learned.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            pivot = self.trail[idx]
            idx -= 1
            counter -= 1
            if counter <= 0:
                break
            clause = self.reasons[abs(pivot)]
        learned.sort(key=lambda l: -self.level_of(l))
        back = self.level_of(learned[0]) if learned else 0
        return [-pivot] + learned, back

    def add_learned(self, lits: List[int]) -> Clause:
        """Store a learned clause after the backjump and assert its first literal (which must be unassigned)."""
        if self.value(lits[0]) is not None:
            raise InvariantViolation(f"asserting literal {lits[0]} already assigned")
        clause = Clause(list(lits), True, None)
        self.learned.append(clause)
        self.stats.learned += 1
        if len(lits) > 1:
            self._watch(clause)
        self.assign(lits[0], clause)
        return clause

    def falsified(self) -> Optional[Clause]:
        """A problem clause with every literal false, if any."""
        return next((c for c in self.clauses if self.is_falsified(c)), None)

    def unsatisfied(self) -> Iterable[Clause]:
        """Clauses without a true literal whose owner, if any, is assigned."""
        for clause in self.clauses:
            if clause.owner is not None and self.values[clause.owner] is None:
                continue
            if not any(self.value(l) is True for l in clause.lits):
                yield clause
