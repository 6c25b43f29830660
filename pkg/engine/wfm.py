"""
Well-founded evaluation.

Alternating-fixpoint well-founded models of ground programs, model
completion from an acceptable engine state, model checking against a
canonical theory, and restricted model expansion.

Rules are instantiated on demand: starting from target atoms, only the
rules of reachable defined atoms are grounded, and quantifiers guarded by
a positive (∃) or negative (∀) open literal iterate over the true tuples
of that literal only.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import (TYPE_CHECKING, Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set,
                    Tuple)

from .errors import InvariantViolation, UsageError
from .justify import JUST_FALSE, JustificationFormula, parts_of
from .kernel import (And, Atom, Bindings, Definition, DomainLiteral, Exists, F, FALSE, Forall, Formula, Lit, Or,
                     PartialStructure, Rule, T, TRUE, conj, disj, literals, substitute)

if TYPE_CHECKING:
    from .normalize import CanonicalTheory
    from .search import EngineState

LOG = logging.getLogger(__name__)

Program = Dict[Atom, Formula]


@dataclass
class WfmResult:
    structure: PartialStructure
    two_valued: bool
    program_size: int = 0


# ---------------------------------------------------------------------------
# Instantiation
# ---------------------------------------------------------------------------

class Instantiator:
    """
    Grounds formulas against a structure that is two-valued on the fixed predicates.

    Args:
        structure: Values of every non-defined predicate
        defined: Predicates whose literals stay in the ground bodies
    """

    def __init__(self, structure: PartialStructure, defined: Iterable[str]):
        self.structure = structure
        self.defined = frozenset(defined)
        self._index: Dict[Tuple[str, Tuple[int, ...]], Dict[Tuple[int, ...], List[Tuple[int, ...]]]] = {}

    def _lookup(self, pred: str, positions: Tuple[int, ...], key: Tuple[int, ...]) -> List[Tuple[int, ...]]:
        idx = self._index.get((pred, positions))
        if idx is None:
            idx = defaultdict(list)
            for args in self.structure.atoms(pred, True):
                idx[tuple(args[i] for i in positions)].append(args)
            self._index[(pred, positions)] = idx
        return idx.get(key, [])

    def _guard(self, bind: Bindings, child: Formula, universal: bool) -> Optional[Lit]:
        members = [child] if isinstance(child, Lit) else list(getattr(child, "children", ()))
        if not isinstance(child, Lit) and not isinstance(child, Or if universal else And):
            return None
        block = set(bind.vars)
        for lit in members:
            if not isinstance(lit, Lit) or lit.is_builtin or lit.pred in self.defined:
                continue
            if lit.sign == universal:
                continue
            if block <= {a for a in lit.args if isinstance(a, str)}:
                return lit
        return None

    def _guarded(self, guard: Lit, bind: Bindings) -> Iterator[Dict[str, int]]:
        positions = tuple(i for i, a in enumerate(guard.args) if isinstance(a, int))
        key = tuple(guard.args[i] for i in positions)
        for args in self._lookup(guard.pred, positions, key):
            assign: Dict[str, int] = {}
            ok = True
            for term, value in zip(guard.args, args):
                if isinstance(term, str) and assign.setdefault(term, value) != value:
                    ok = False
                    break
            if ok and bind.contains_assignment(assign):
                yield assign

    def ground(self, phi: Formula, theta: Optional[Mapping[str, int]] = None) -> Formula:
        """Quantifier-free ground formula over defined literals only."""
        theta = theta or {}
        if isinstance(phi, Lit):
            lit = substitute(phi, theta) if theta else phi
            if not lit.is_ground():
                raise UsageError(f"unbound variable in {lit}")
            if lit.pred in self.defined:
                return lit
            value = self.structure.value(lit.atom())
            if value is T:
                return TRUE if lit.sign else FALSE
            if value is F:
                return FALSE if lit.sign else TRUE
            raise UsageError(f"{lit.atom()} is not two-valued in the input")
        if isinstance(phi, And):
            out = []
            for c in phi.children:
                g = self.ground(c, theta)
                if g == FALSE:
                    return FALSE
                out.append(g)
            return conj(*out)
        if isinstance(phi, Or):
            out = []
            for c in phi.children:
                g = self.ground(c, theta)
                if g == TRUE:
                    return TRUE
                out.append(g)
            return disj(*out)
        universal = isinstance(phi, Forall)
        inner = substitute(phi.child, theta) if theta else phi.child
        guard = self._guard(phi.bind, inner, universal)
        assignments = self._guarded(guard, phi.bind) if guard is not None else phi.bind.assignments()
        out = []
        for assign in assignments:
            g = self.ground(inner, assign)
            if g == (FALSE if universal else TRUE):
                return g
            out.append(g)
        return conj(*out) if universal else disj(*out)


def ground_program(rule_for: Callable[[Atom], Optional[Rule]], targets: Iterable[Atom],
                   inst: Instantiator) -> Program:
    """Instantiate the rules of ``targets`` and of every defined atom they reach."""
    program: Program = {}
    work = list(targets)
    while work:
        atom = work.pop()
        if atom in program:
            continue
        rule = rule_for(atom)
        if rule is None:
            program[atom] = FALSE
            continue
        theta = rule.binding_for(atom)
        body = inst.ground(rule.body, theta or {})
        program[atom] = body
        for lit in literals(body):
            a = lit.atom()
            if a not in program:
                work.append(a)
    return program


# ---------------------------------------------------------------------------
# Alternating fixpoint
# ---------------------------------------------------------------------------

def _dependents(program: Program) -> Dict[Atom, List[Atom]]:
    deps: Dict[Atom, List[Atom]] = defaultdict(list)
    for head, body in program.items():
        for lit in literals(body):
            if lit.sign:
                deps[lit.atom()].append(head)
    return deps


def _least(program: Program, deps: Mapping[Atom, List[Atom]], reference: Set[Atom]) -> Set[Atom]:
    """Least model with every negative literal ¬a read as a ∉ reference."""
    derived: Set[Atom] = set()

    def holds(phi: Formula) -> bool:
        if isinstance(phi, Lit):
            atom = phi.atom()
            return atom in derived if phi.sign else atom not in reference
        if isinstance(phi, And):
            return all(holds(c) for c in phi.children)
        return any(holds(c) for c in phi.children)

    work = list(program)
    while work:
        head = work.pop()
        if head in derived or not holds(program[head]):
            continue
        derived.add(head)
        work.extend(h for h in deps.get(head, ()) if h not in derived)
    return derived


def well_founded(program: Program) -> Tuple[Set[Atom], Set[Atom]]:
    """(certainly true, possibly true) atoms of the well-founded model."""
    deps = _dependents(program)
    lower: Set[Atom] = set()
    upper = _least(program, deps, lower)
    while True:
        new_lower = _least(program, deps, upper)
        new_upper = _least(program, deps, new_lower)
        if new_lower == lower and new_upper == upper:
            return lower, upper
        lower, upper = new_lower, new_upper


def _result(program: Program, domain_size: int) -> WfmResult:
    lower, upper = well_founded(program)
    structure = PartialStructure(domain_size)
    for atom in program:
        if atom in lower:
            structure.assign(DomainLiteral(atom, True))
        elif atom not in upper:
            structure.assign(DomainLiteral(atom, False))
    return WfmResult(structure, lower == upper, len(program))


def wfm_compute(definition: Definition, i_open: PartialStructure,
                defined: Optional[Iterable[str]] = None) -> WfmResult:
    """
    Well-founded model of ``definition`` over the open values of ``i_open``.

    Args:
        definition: Rules; non-ground rules are instantiated over their bindings
        i_open: Values of the open atoms (predicates not defined by ``definition``)
        defined: Predicates to treat as defined (defaults to the rule heads)

    Raises:
        UsageError: An open atom needed by a rule is unknown in ``i_open``
    """
    defined = set(defined) if defined is not None else definition.defined_predicates()
    inst = Instantiator(i_open, defined)
    targets = [atom for rule in definition for atom in rule.head_atoms()]
    program = ground_program(definition.rule_for, targets, inst)
    result = _result(program, i_open.domain_size)
    LOG.debug("wfm over %d ground rules: two-valued=%s", len(program), result.two_valued)
    return result


# ---------------------------------------------------------------------------
# Completion, checking, restriction
# ---------------------------------------------------------------------------

def _open_predicates(vocabulary) -> List[str]:
    return [name for name, pred in vocabulary.predicates.items() if vocabulary.is_open(name)]


def _defined_predicates(vocabulary) -> Set[str]:
    return {name for name, pred in vocabulary.predicates.items() if pred.is_defined}


def _justified_opens(state: "EngineState") -> Iterator[DomainLiteral]:
    """Positive open literals in the justifications of the true D_d-defined literals."""
    graph = state.manager.graph
    structure = state.structure
    vocabulary = state.vocabulary
    seen: Set[DomainLiteral] = set()
    work = [lit for lit in structure.literals() if structure.is_true(lit) and graph.has(lit)]
    while work:
        lit = work.pop()
        if lit in seen:
            continue
        seen.add(lit)
        dj = graph.get(lit)
        if dj is None or dj is JUST_FALSE:
            continue
        for part in parts_of(dj):
            if isinstance(part, JustificationFormula):
                source: Iterable[DomainLiteral] = part.denotation(structure)
            else:
                source = _sls_instances(part.patterns(), vocabulary)
            for dl in source:
                if dl.atom.pred in ("=", "true", "false"):
                    continue
                if vocabulary.is_open(dl.atom.pred):
                    if dl.sign:
                        yield dl
                elif dl not in seen:
                    work.append(dl)


def _sls_instances(patterns: Sequence[Tuple[Lit, Bindings]], vocabulary) -> Iterator[DomainLiteral]:
    for lit, bind in patterns:
        if lit.is_builtin or not lit.sign and vocabulary.is_open(lit.pred):
            continue  # negative open literals hold by the default
        if not bind.vars:
            if lit.is_ground():
                yield lit.domain_literal()
            continue
        for assign in bind.assignments():
            yield substitute(lit, assign).domain_literal()


def _closed_model(domain_size: int, preds: Iterable[str], true_atoms: Iterable[Atom]) -> PartialStructure:
    preds = frozenset(preds)
    model = PartialStructure(domain_size, preds)
    for atom in true_atoms:
        if atom.pred in preds:
            model.assign(DomainLiteral(atom, True))
    return model


def _targets(definitions: Sequence[Definition], preds: Iterable[str]) -> List[Atom]:
    out: List[Atom] = []
    wanted = set(preds)
    for definition in definitions:
        for rule in definition:
            if rule.pred in wanted:
                out.extend(rule.head_atoms())
    return out


def complete_model(state: "EngineState", output_symbols: Optional[Iterable[str]] = None) -> PartialStructure:
    """
    Two-valued model of the theory expanding the engine's structure.

    Open atoms take their value from I or from the justifications, and
    false otherwise; defined atoms are computed by well-founded evaluation
    over D_g plus the needed instances of D_d.

    Args:
        state: Engine state at a model point (default acceptable)
        output_symbols: Restrict the completion to these predicates

    Raises:
        InvariantViolation: The completion disagrees with I or is not two-valued
    """
    theory = state.theory
    vocabulary = state.vocabulary
    structure = state.structure
    opens = _open_predicates(vocabulary)
    fixed = _closed_model(structure.domain_size, opens, structure.true_atoms())
    for dl in _justified_opens(state):
        if fixed.value(dl.atom) is F:
            fixed.assign(dl)

    user = set(theory.original_predicates)
    outputs = set(output_symbols) if output_symbols is not None else user
    defined = _defined_predicates(vocabulary)
    d_ground, d_delayed = state.grounder.d_ground, state.grounder.d_delayed

    def rule_for(atom: Atom) -> Optional[Rule]:
        return d_ground.rule_for(atom) or d_delayed.rule_for(atom)

    wanted = [p for p in outputs if p in defined]
    targets = _targets((d_ground, d_delayed), wanted)
    targets.extend(lit.atom for lit in structure.literals() if lit.atom.pred in defined)
    inst = Instantiator(fixed, defined)
    program = ground_program(rule_for, targets, inst)
    lower, upper = well_founded(program)
    if lower != upper:
        raise InvariantViolation("completion is not two-valued")
    for lit in structure.literals():
        if lit.atom in program and (lit.atom in lower) != lit.sign:
            raise InvariantViolation(f"completion contradicts {lit}")

    keep = outputs & (user | set(opens) | defined)
    true_atoms = [a for a in fixed.true_atoms() if a.pred in keep]
    true_atoms.extend(a for a in lower if a.pred in keep)
    LOG.debug("completed model: %d program rules, %d true atoms", len(program), len(true_atoms))
    return _closed_model(structure.domain_size, keep, true_atoms)


def _theory_program(theory: "CanonicalTheory", model: PartialStructure,
                    preds: Iterable[str]) -> Tuple[Program, Set[str]]:
    vocabulary = theory.vocabulary
    defined = _defined_predicates(vocabulary)
    opens = _open_predicates(vocabulary)
    closed = [p for p in opens if p in model.closed]
    fixed = _closed_model(model.domain_size, closed, [a for a in model.true_atoms() if a.pred in closed])
    for lit in model.literals():
        if lit.atom.pred in opens and lit.atom.pred not in model.closed:
            fixed.assign(lit)
    inst = Instantiator(fixed, defined)
    targets = _targets((theory.definition,), preds)
    return ground_program(theory.definition.rule_for, targets, inst), defined


def check_model(theory: "CanonicalTheory", model: PartialStructure) -> bool:
    """
    Whether ``model`` is a model of the theory.

    The goal must hold and the defined symbols must equal the two-valued
    well-founded model over the model's open symbols.

    Raises:
        UsageError: The model is not two-valued on the theory's vocabulary
    """
    vocabulary = theory.vocabulary
    user_defined = [p for p in theory.original_predicates if vocabulary.is_defined(p)]
    program, defined = _theory_program(theory, model, [theory.goal] + user_defined)
    lower, upper = well_founded(program)
    if lower != upper:
        LOG.debug("check_model: well-founded model is not two-valued")
        return False
    if Atom(theory.goal) not in lower:
        LOG.debug("check_model: goal is false")
        return False
    for pred in user_defined:
        if pred not in model.closed:
            raise UsageError(f"model is not two-valued on {pred}")
        claimed = {Atom(pred, args) for args in model.atoms(pred, True)}
        computed = {a for a in lower if a.pred == pred}
        if claimed != computed:
            LOG.debug("check_model: %s differs on %s", pred, sorted(claimed ^ computed)[:5])
            return False
    return True


def restrict_model(theory: "CanonicalTheory", model: PartialStructure,
                   outputs: Iterable[str]) -> PartialStructure:
    """
    Two-valued structure on ``outputs`` only.

    Open output symbols are copied; defined ones are evaluated from their
    rules and supports over the open symbols of ``model``.
    """
    outputs = set(outputs)
    vocabulary = theory.vocabulary
    wanted = [p for p in outputs if vocabulary.is_defined(p)]
    program, _ = _theory_program(theory, model, wanted)
    lower, upper = well_founded(program)
    if lower != upper:
        raise InvariantViolation("restricted model is not two-valued")
    true_atoms = [a for a in model.true_atoms() if a.pred in outputs and vocabulary.is_open(a.pred)]
    true_atoms.extend(a for a in lower if a.pred in outputs)
    return _closed_model(model.domain_size, outputs, true_atoms)
