# Engine package initialization
# Lazy model expansion: kernel types, normalization, grounding, justifications, search

from .errors import InvariantViolation, LazyMXError, ParseError, ResourceExhausted, UnsupportedConstruct, UsageError
from .kernel import Atom, Definition, DomainLiteral, PartialStructure, Rule, TruthValue4, Vocabulary
from .normalize import CanonicalTheory, to_canonical
from .grounder import Grounder, estimate_size, full_ground
from .justify import JustificationManager
from .planner import Planner
from .search import LazyMX, SolveResult, lazy_mx, solve
from .wfm import check_model, complete_model, wfm_compute

__all__ = ['InvariantViolation', 'LazyMXError', 'ParseError', 'ResourceExhausted', 'UnsupportedConstruct',
           'UsageError', 'Atom', 'Definition', 'DomainLiteral', 'PartialStructure', 'Rule', 'TruthValue4',
           'Vocabulary', 'CanonicalTheory', 'to_canonical', 'Grounder', 'estimate_size', 'full_ground',
           'JustificationManager', 'Planner', 'LazyMX', 'SolveResult', 'lazy_mx', 'solve', 'check_model',
           'complete_model', 'wfm_compute']
