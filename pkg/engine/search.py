"""
Lazy model expansion search.

CDCL over the clauses of S_g and the completion of D_g, interleaved with
the justification manager: every literal that becomes true is checked,
queued literals are justified or grounded one at a time, and the search
only stops at a model when the queue is empty.
"""

import heapq
import logging
import random
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

from config.settings import HeuristicsConfig

from .clauses import Clause, ClauseStore
from .errors import InvariantViolation, ResourceExhausted, UsageError
from .grounder import Grounder, TseitinRegistry, ground_simplify
from .justify import JustificationManager
from .kernel import (And, Atom, Definition, DomainLiteral, FALSE, Formula, Lit, PartialStructure, PredicateKind,
                     Rule, T, conj, disj, literals)
from .normalize import CanonicalTheory, dependency_graph, recursive_components
from .planner import Planner
from .wfm import check_model, complete_model, well_founded

LOG = logging.getLogger(__name__)

SAT = "SAT"
UNSAT = "UNSAT"


class ScriptEntry(NamedTuple):
    """One decision-script step: ``decide`` a literal or ``instantiate`` a rule at a tuple."""

    kind: str
    literal: Optional[DomainLiteral] = None
    rule_id: str = ""
    args: Tuple[int, ...] = ()


@dataclass
class EngineState:
    """⟨D_g, D_d, J, I⟩ plus the clause store of one engine."""

    theory: CanonicalTheory
    vocabulary: Any
    structure: PartialStructure
    grounder: Grounder
    manager: JustificationManager
    store: ClauseStore
    config: HeuristicsConfig

    @property
    def d_ground(self) -> Definition:
        return self.grounder.d_ground

    @property
    def d_delayed(self) -> Definition:
        return self.grounder.d_delayed

    @property
    def justification(self):
        return self.manager.graph

    @property
    def queue(self):
        return self.manager.queue


@dataclass
class SolveResult:
    status: str
    state: EngineState
    stats: Dict[str, Any] = field(default_factory=dict)
    model: Optional[PartialStructure] = None
    checked: Optional[bool] = None
    plan: Optional[Dict[str, Any]] = None


# ---------------------------------------------------------------------------
# Decision heuristic
# ---------------------------------------------------------------------------

class VariableOrder:
    """
    VSIDS activities with a lazily cleaned max-heap.

    Penalized variables (tseitins and auxiliaries) have their priority
    scaled by ``penalty``.
    """

    def __init__(self, penalty: float = 0.1, decay: float = 0.95):
        self.penalty = penalty
        self.decay_factor = decay
        self.activity: Dict[int, float] = {}
        self.penalized: Set[int] = set()
        self.inc = 1.0
        self._heap: List[Tuple[float, int]] = []

    def priority(self, var: int) -> float:
        score = self.activity.get(var, 0.0)
        return score * self.penalty if var in self.penalized else score

    def add(self, var: int, penalized: bool = False) -> None:
        self.activity.setdefault(var, 0.0)
        if penalized:
            self.penalized.add(var)
        heapq.heappush(self._heap, (-self.priority(var), var))

    def push(self, var: int) -> None:
        heapq.heappush(self._heap, (-self.priority(var), var))

    def bump(self, var: int) -> None:
        self.activity[var] = self.activity.get(var, 0.0) + self.inc
        if self.activity[var] > 1e100:
            for v in self.activity:
                self.activity[v] *= 1e-100
            self.inc *= 1e-100
            self._heap = [(-self.priority(v), v) for _, v in self._heap]
            heapq.heapify(self._heap)
        heapq.heappush(self._heap, (-self.priority(var), var))

    def decay(self) -> None:
        self.inc /= self.decay_factor

    def pop_best(self, unassigned) -> Optional[int]:
        while self._heap:
            neg, var = heapq.heappop(self._heap)
            if not unassigned(var):
                continue
            if -neg != self.priority(var):
                continue
            return var
        return None

    def best_of(self, candidates: Iterable[int]) -> Optional[int]:
        best, best_key = None, None
        for var in candidates:
            key = (self.priority(var), -var)
            if best_key is None or key > best_key:
                best, best_key = var, key
        return best


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class LazyMX:
    """
    One model-expansion run.

    Args:
        theory: Canonical theory {pt, D}
        initial: Input structure; defined atoms must be unknown in it
        config: Heuristics and limits
        script: Decision script consumed at choice points
    """

    def __init__(self, theory: CanonicalTheory, initial: Optional[PartialStructure] = None,
                 config: Optional[HeuristicsConfig] = None, script: Sequence[ScriptEntry] = ()):
        config = config or HeuristicsConfig()
        if config.mode == "naive-lazy":
            config = config.updated(exists_batch=1, disjunct_batch=1, small_formula_threshold=0)
        if theory.eager_rules and config.stop_early:
            LOG.debug("definitions of unknown totality: stop-early off")
            config = config.updated(stop_early=False)
        self.config = config
        self.theory = theory
        self.vocabulary = theory.vocabulary.copy()
        domain_size = len(self.vocabulary.elements)
        self.initial = initial.copy() if initial is not None else PartialStructure(domain_size)
        for lit in self.initial.literals():
            if self.vocabulary.is_defined(lit.atom.pred):
                raise UsageError(f"input structure assigns defined atom {lit.atom}")
        self.structure = self.initial.copy()
        self.rng = random.Random(config.seed)

        self.grounder = Grounder(self.vocabulary, Definition(), theory.definition.copy(), self.initial,
                                 exists_batch=config.exists_batch, disjunct_batch=config.disjunct_batch,
                                 small_formula_threshold=config.small_formula_threshold,
                                 max_ground_atoms=config.max_ground_atoms, registry=TseitinRegistry())
        self.components = recursive_components(dependency_graph(theory.definition))
        self.manager = JustificationManager(
            self.vocabulary, self.grounder, self.structure, self.components,
            large_domain=config.large_domain, depth_limit=config.depth_limit,
            prefer_body_split=config.prefer_body_split, refuse_recursive_heads=config.refuse_recursive_heads,
            justification_formulas=config.justification_formulas, approximate=config.approximate,
            approx_violations_budget=config.approx_violations_budget, naive=config.mode == "naive-lazy")
        self.order = VariableOrder(config.tseitin_penalty, config.activity_decay)
        self.store = ClauseStore(self.structure, on_new_var=self._on_new_var)
        self.state = EngineState(theory, self.vocabulary, self.structure, self.grounder, self.manager,
                                 self.store, config)

        self.script: Deque[ScriptEntry] = deque(script)
        self.phase: Dict[int, bool] = {}
        self.decisions: List[int] = []
        self.stats: Counter = Counter()
        self.restart_threshold = config.restart_extension_threshold
        self.since_restart = 0
        self.plan_dump: Optional[Dict[str, Any]] = None
        self._planned = not config.global_plan
        self._notified = 0
        self._pending: Optional[Clause] = None
        self._recursive_rules: List[Rule] = []
        self._support_lits: Dict[Formula, int] = {}
        self._started = 0.0

    # -- bookkeeping -------------------------------------------------------

    def _on_new_var(self, var: int) -> None:
        atom = self.store.atom_of[var]
        penalized = atom is None or self.vocabulary.kind(atom.pred) == PredicateKind.TSEITIN
        self.order.add(var, penalized)
        if atom is not None and self._uncovered(atom):
            # no rule defines it, so it is false in the well-founded model
            self.stats["uncovered_atoms"] += 1
            self.store.add_clause([-var])

    def _uncovered(self, atom: Atom) -> bool:
        return (self.vocabulary.is_defined(atom.pred) and not self.grounder.d_ground.defines(atom)
                and not self.grounder.d_delayed.defines(atom))

    def _is_recursive(self, pred: str) -> bool:
        return self.components.get(self.grounder.registry.key(pred)) is not None

    def _check_budget(self) -> None:
        limit = self.config.time_limit
        if limit is not None and time.monotonic() - self._started > limit:
            raise ResourceExhausted("time limit exceeded", self.stats_document("UNKNOWN"))

    def _notify(self) -> None:
        trail = self.store.trail
        while self._notified < len(trail):
            dl = self.store.domain_literal(trail[self._notified])
            self._notified += 1
            if dl is not None:
                self.manager.check_literal(dl)

    def _backtrack(self, level: int, recheck: bool = True) -> None:
        undone = self.store.backtrack(level)
        for lit in undone:
            var = abs(lit)
            self.phase[var] = lit > 0
            self.order.push(var)
        del self.decisions[level:]
        self._notified = min(self._notified, len(self.store.trail))
        if recheck:
            self._recheck()

    def _recheck(self) -> None:
        conflict = self.store.recheck_late()
        if conflict is None:
            return
        if self._pending is None:
            self._pending = conflict
        else:
            self.store.late.append(conflict)

    # -- clauses -----------------------------------------------------------

    def _add_rules(self, rules: Iterable[Rule]) -> None:
        conflicts: List[Clause] = []
        for rule in rules:
            conflicts.extend(self.store.add_rule(rule))
            if self._is_recursive(rule.pred):
                self._recursive_rules.append(rule)
        self._queue_conflicts(conflicts)

    def _queue_conflicts(self, conflicts: List[Clause]) -> None:
        if not conflicts:
            return
        # the first is resolved now; the others are settled again after the backjump
        self.store.late.extend(conflicts[1:])
        if self._pending is None:
            self._pending = conflicts[0]
        else:
            self.store.late.append(conflicts[0])

    def resolve(self, conflict: Clause) -> bool:
        """Backjump out of ``conflict``; False when it holds at level 0."""
        store = self.store
        if not conflict.lits:
            return False
        if not store.is_falsified(conflict):
            # an earlier backjump already undid part of it
            store.settle(conflict)
            self._recheck()
            return True
        self.stats["conflicts"] += 1
        levels = sorted((store.level_of(l) for l in conflict.lits), reverse=True)
        top = levels[0]
        if top <= 0:
            return False
        # late units are re-asserted only once the backjump target is reached
        if top < store.level:
            self._backtrack(top, recheck=False)
        if len(levels) == 1 or levels[1] < top:
            back = levels[1] if len(levels) > 1 else 0
            self._backtrack(back, recheck=False)
            store.rewatch(conflict)
            store.assign(conflict.lits[0], conflict)
        else:
            learned, back = store.analyze(conflict)
            for l in learned:
                self.order.bump(abs(l))
            self.order.decay()
            self._backtrack(back, recheck=False)
            store.add_learned(learned)
            LOG.debug("learned %s, backjump to %d", learned, back)
        self._recheck()
        return True

    # -- main loop ---------------------------------------------------------

    def _setup(self) -> bool:
        goal = Atom(self.theory.goal)
        if self.config.mode == "eager":
            self._add_rules(self.grounder.full_ground_delayed())
        elif self.theory.eager_rules:
            self._add_rules(self.grounder.full_ground_delayed(sorted(self.theory.eager_rules)))
        conflict = self.store.add_clause([self.store.lit(DomainLiteral(goal, True))])
        if conflict is not None:
            return False
        return True

    def run(self) -> str:
        """Search to a model or to UNSAT (``lazy_mx``)."""
        self._started = time.monotonic()
        LOG.info("solve start: mode=%s seed=%d", self.config.mode, self.config.seed)
        if not self._setup():
            return UNSAT
        while True:
            self._check_budget()
            conflict, self._pending = self._pending, None
            if conflict is None:
                conflict = self.store.propagate()
            self._notify()
            if conflict is not None:
                if not self.resolve(conflict):
                    return UNSAT
                continue
            if not self._planned and self.store.level == 0 \
                    and not self.grounder.d_delayed.defines(Atom(self.theory.goal)):
                self._run_plan()
                continue
            queue = self.manager.queue
            if queue and self.config.mode != "late":
                self._lazy_ground_next()
                continue
            model = self.is_model()
            if self._pending is not None:
                continue
            if queue and model:
                self._lazy_ground_next()
                continue
            if self.config.debug_checks:
                self.manager.check_state()
            if model:
                verdict = self._verify_model()
                if verdict is None:
                    return UNSAT
                if verdict:
                    return SAT
                continue
            if self.decide() is None:
                raise InvariantViolation("no decision candidate outside a model")

    def _lazy_ground_next(self) -> None:
        result = self.manager.lazy_ground(self.manager.queue.pop())
        if result is not None and result.ground:
            self._extended(result.ground)

    def _extended(self, rules: List[Rule]) -> None:
        self.stats["extensions"] += 1
        self._add_rules(rules)
        self.maybe_restart()

    def _run_plan(self) -> None:
        self._planned = True
        planner = Planner(self.manager, self.config.p_val, self.config.p_tr)
        graph, selection, installed = planner.plan()
        self.plan_dump = selection.dump(graph)
        self.plan_dump["installed"] = [str(n) for n in installed]
        LOG.debug("global plan: %s", self.plan_dump)

    # -- model test --------------------------------------------------------

    def _unsatisfied_vars(self) -> Tuple[List[int], Optional[Clause]]:
        """Unassigned variables of the clauses still to satisfy, or a clause that is already false."""
        out: List[int] = []
        seen: Set[int] = set()
        for clause in self.store.unsatisfied():
            free = [abs(l) for l in clause.lits if self.store.values[abs(l)] is None]
            if not free:
                return [], clause
            for v in free:
                if v not in seen:
                    seen.add(v)
                    out.append(v)
        return out, None

    def is_model(self) -> bool:
        """
        Whether I satisfies S_g and the completion of D_g.

        A false clause found on the way becomes the pending conflict.
        """
        if self.config.stop_early:
            free, falsified = self._unsatisfied_vars()
            if free:
                return False
        elif not self.store.all_assigned():
            return False
        else:
            falsified = self.store.falsified()
        if falsified is not None:
            self._queue_conflicts([falsified])
            return False
        return True

    def _verify_model(self) -> Optional[bool]:
        """Loop and well-founded checks; None means UNSAT, False that clauses were added."""
        if not self._unfounded_check():
            return False
        if self.theory.eager_rules:
            return self._wfm_check()
        return True

    def _unfounded_check(self) -> bool:
        structure = self.structure
        heads: Dict[Atom, Formula] = {}
        for rule in self._recursive_rules:
            if rule.id in self.grounder.d_ground and structure.is_true(DomainLiteral(rule.head.atom(), True)):
                heads[rule.head.atom()] = ground_simplify(rule.body, None)
        if not heads:
            return True
        supported: Set[Atom] = set()

        def holds(phi: Formula) -> bool:
            if isinstance(phi, Lit):
                atom = phi.atom()
                if phi.sign and atom in heads:
                    return atom in supported
                return structure.is_true(DomainLiteral(atom, phi.sign))
            if isinstance(phi, And):
                return all(holds(c) for c in phi.children)
            return any(holds(c) for c in phi.children)

        changed = True
        while changed:
            changed = False
            for atom, body in heads.items():
                if atom not in supported and holds(body):
                    supported.add(atom)
                    changed = True
        unfounded = [a for a in heads if a not in supported]
        if not unfounded:
            return True
        free = self._free_body_vars(heads[a] for a in unfounded)
        if free:
            # support may still come from an atom left open by stop-early
            var = self.order.best_of(free)
            self._assign_decision(var if self._polarity(var) else -var)
            return False
        self._loop_nogood(unfounded, heads)
        return False

    def _free_body_vars(self, bodies: Iterable[Formula]) -> List[int]:
        out: List[int] = []
        for body in bodies:
            for lit in literals(body):
                if lit.is_builtin:
                    continue
                var = self.store.var_of.get(lit.atom())
                if var is not None and self.store.values[var] is None and var not in out:
                    out.append(var)
        return out

    def _support_literal(self, ext: Formula) -> Tuple[int, List[Clause]]:
        cached = self._support_lits.get(ext)
        if cached is not None:
            return cached, []
        lit, conflicts = self.store.encode(ext)
        self._support_lits[ext] = lit
        return lit, conflicts

    def _loop_nogood(self, unfounded: List[Atom], heads: Dict[Atom, Formula]) -> None:
        loop = set(unfounded)

        def external(phi: Formula) -> Formula:
            if isinstance(phi, Lit):
                return FALSE if phi.sign and phi.is_ground() and phi.atom() in loop else phi
            kids = [external(c) for c in phi.children]
            return conj(*kids) if isinstance(phi, And) else disj(*kids)

        support: List[int] = []
        conflicts: List[Clause] = []
        for atom in unfounded:
            ext = external(heads[atom])
            if ext == FALSE:
                continue
            lit, more = self._support_literal(ext)
            conflicts.extend(more)
            if lit not in support:
                support.append(lit)
        for atom in unfounded:
            clause = self.store.add_clause([-self.store.var(atom)] + support)
            if clause is not None:
                conflicts.append(clause)
        self.stats["loop_nogoods"] += 1
        LOG.debug("loop nogood over %d atoms", len(unfounded))
        self._queue_conflicts(conflicts)

    def _wfm_check(self) -> Optional[bool]:
        """Full well-founded check of D_g; blocks the current decisions on failure."""
        structure = self.structure
        d_ground = self.grounder.d_ground

        def fold(phi: Formula) -> Formula:
            if isinstance(phi, Lit):
                atom = phi.atom()
                if not phi.is_builtin and d_ground.defines(atom):
                    return phi
                value = structure.literal_value(DomainLiteral(atom, phi.sign))
                return And(()) if value is T else FALSE
            kids = [fold(c) for c in phi.children]
            return conj(*kids) if isinstance(phi, And) else disj(*kids)

        program = {rule.head.atom(): fold(rule.body) for rule in d_ground}
        lower, upper = well_founded(program)
        consistent = lower == upper and all(
            (atom in lower) == structure.is_true(DomainLiteral(atom, True)) for atom in program)
        if consistent:
            return True
        if not self.decisions:
            return None
        self.stats["blocked_models"] += 1
        LOG.debug("well-founded check failed; blocking %d decisions", len(self.decisions))
        clause = self.store.add_clause([-d for d in self.decisions])
        if clause is not None:
            self._queue_conflicts([clause])
        return False

    # -- decisions ---------------------------------------------------------

    def decide(self) -> Optional[int]:
        """Pick and assign a choice literal; None when nothing is left to decide."""
        while self.script:
            entry = self.script.popleft()
            if entry.kind == "instantiate":
                self.grounder.hints.setdefault(entry.rule_id, []).append(entry.args)
                continue
            lit = self.store.lit(entry.literal)
            value = self.store.value(lit)
            if value is None:
                return self._assign_decision(lit)
            LOG.warning("script decision %s skipped: already %s", entry.literal,
                        "true" if value else "false")
        if self.config.stop_early:
            var = self.order.best_of(self._unsatisfied_vars()[0])
        else:
            var = self.order.pop_best(lambda v: self.store.values[v] is None)
        if var is None:
            return None
        return self._assign_decision(var if self._polarity(var) else -var)

    def _polarity(self, var: int) -> bool:
        polarity = self.phase.get(var)
        if polarity is None:
            polarity = self.rng.random() < self.config.polarity_true_prob
        return polarity

    def _assign_decision(self, lit: int) -> int:
        self.stats["decisions"] += 1
        self.store.new_level()
        self.decisions.append(lit)
        self.store.assign(lit)
        LOG.debug("decide %s at level %d", self.store.domain_literal(lit) or lit, self.store.level)
        return lit

    def maybe_restart(self) -> bool:
        """Restart after ``restart_threshold`` D_g extensions; the threshold doubles."""
        self.since_restart += 1
        if self.since_restart < self.restart_threshold:
            return False
        self.since_restart = 0
        self.restart_threshold *= 2
        self.stats["restarts"] += 1
        if self.store.level > 0:
            self._backtrack(0)
        for var in list(self.phase):
            if self.rng.random() < 0.5:
                self.phase[var] = not self.phase[var]
        LOG.debug("restart; next threshold %d", self.restart_threshold)
        return True

    # -- reporting ---------------------------------------------------------

    def stats_document(self, status: str) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "status": status,
            "mode": self.config.mode,
            "conflicts": self.stats["conflicts"],
            "decisions": self.stats["decisions"],
            "propagations": self.store.stats.propagations,
            "restarts": self.stats["restarts"],
            "extensions": self.stats["extensions"],
            "ground_atoms": self.grounder.stats["ground_atoms"],
            "ground_rules": len(self.grounder.d_ground),
            "delayed_rules": len(self.grounder.d_delayed),
            "learned_clauses": self.store.stats.learned,
            "problem_clauses": self.store.stats.problem,
            "aux_vars": self.store.stats.aux_vars,
            "loop_nogoods": self.stats["loop_nogoods"],
            "uncovered_atoms": self.stats["uncovered_atoms"],
            "tseitins": len(self.grounder.registry),
            "time": round(time.monotonic() - self._started, 6) if self._started else 0.0,
            "peak_memory_kb": _peak_memory_kb(),
        }
        for key, value in sorted(self.manager.stats.items()):
            doc["justify_" + key] = value
        for key in ("splits", "body_splits", "tseitins_introduced"):
            doc["grounder_" + key] = self.grounder.stats[key]
        return doc


def _peak_memory_kb() -> int:
    try:
        import resource
    except ImportError:
        return 0
    return int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss)


def lazy_mx(theory: CanonicalTheory, initial: Optional[PartialStructure] = None,
            config: Optional[HeuristicsConfig] = None, script: Sequence[ScriptEntry] = ()) -> SolveResult:
    """
    Run the search; returns the verdict with the final state (I and J).

    Raises:
        ResourceExhausted: A budget ran out; ``stats`` holds the partial document
    """
    engine = LazyMX(theory, initial, config, script)
    try:
        status = engine.run()
    except ResourceExhausted as e:
        e.stats = {**engine.stats_document("RESOURCE"), **{"reason": e.reason}}
        LOG.warning("resource budget hit: %s", e.reason)
        raise
    stats = engine.stats_document(status)
    LOG.info("solve finished: %s (%s)", status, engine.config.mode)
    return SolveResult(status, engine.state, stats, plan=engine.plan_dump)


def solve(theory: CanonicalTheory, initial: Optional[PartialStructure] = None,
          config: Optional[HeuristicsConfig] = None, script: Sequence[ScriptEntry] = (),
          output_symbols: Optional[Iterable[str]] = None, check: bool = False) -> SolveResult:
    """lazy_mx followed by model completion and, optionally, model checking."""
    result = lazy_mx(theory, initial, config, script)
    if result.status != SAT:
        return result
    outputs = list(output_symbols) if output_symbols is not None else None
    full = complete_model(result.state) if check or outputs is None else None
    if check:
        result.checked = check_model(theory, full)
        if not result.checked:
            raise InvariantViolation("completed model fails the model check")
    result.model = full if outputs is None else complete_model(result.state, outputs)
    return result
