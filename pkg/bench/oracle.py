"""
Brute-force model counting.

Enumerates every two-valued interpretation of the unknown open atoms and
keeps those accepted by the well-founded model check. Only kernel and wfm
are used so the result is independent of grounding and search.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional

from engine.errors import UsageError
from engine.kernel import Atom, DomainLiteral, PartialStructure, PredicateKind, U
from engine.wfm import check_model, wfm_compute

if TYPE_CHECKING:
    from engine.normalize import CanonicalTheory

LOG = logging.getLogger(__name__)

MAX_UNKNOWN_ATOMS = 24


@dataclass
class OracleResult:
    status: str
    count: int = 0
    unknown_atoms: int = 0
    models: List[PartialStructure] = field(default_factory=list)

    @property
    def sat(self) -> bool:
        return self.count > 0


def unknown_open_atoms(theory: "CanonicalTheory", structure: PartialStructure) -> List[Atom]:
    vocabulary = theory.vocabulary
    size = len(vocabulary.elements)
    atoms: List[Atom] = []
    for name in sorted(vocabulary.predicates):
        pred = vocabulary.predicates[name]
        if pred.kind != PredicateKind.OPEN:
            continue
        for args in itertools.product(range(size), repeat=pred.arity):
            atom = Atom(name, args)
            if structure.value(atom) is U:
                atoms.append(atom)
    return atoms


def oracle_solve(theory: "CanonicalTheory", structure: Optional[PartialStructure] = None,
                 limit: int = MAX_UNKNOWN_ATOMS, keep_models: bool = False) -> OracleResult:
    """
    Count the models of ``theory`` expanding ``structure``.

    Raises:
        UsageError: More than ``limit`` unknown open atoms
    """
    vocabulary = theory.vocabulary
    size = len(vocabulary.elements)
    structure = structure if structure is not None else PartialStructure(size)
    unknown = unknown_open_atoms(theory, structure)
    if len(unknown) > limit:
        raise UsageError(f"instance too large for the oracle: {len(unknown)} unknown atoms (limit {limit})")

    opens = [n for n, p in vocabulary.predicates.items() if p.kind == PredicateKind.OPEN]
    defined = [n for n, p in vocabulary.predicates.items() if p.is_defined]
    given = [a for a in structure.true_atoms() if a.pred in opens]
    result = OracleResult("UNSAT", 0, len(unknown))
    for bits in itertools.product((False, True), repeat=len(unknown)):
        fixed = PartialStructure(size, opens)
        for atom in given:
            fixed.assign(DomainLiteral(atom, True))
        for atom, value in zip(unknown, bits):
            if value:
                fixed.assign(DomainLiteral(atom, True))
        wfm = wfm_compute(theory.definition, fixed)
        if not wfm.two_valued:
            continue
        model = PartialStructure(size, opens + defined)
        for atom in fixed.true_atoms():
            model.assign(DomainLiteral(atom, True))
        for atom in wfm.structure.true_atoms():
            model.assign(DomainLiteral(atom, True))
        if check_model(theory, model):
            result.count += 1
            if keep_models:
                result.models.append(model)
    if result.count:
        result.status = "SAT"
    LOG.debug("oracle: %d unknown atoms, %d models", len(unknown), result.count)
    return result
