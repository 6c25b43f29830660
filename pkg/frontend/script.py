"""
Decision scripts.

One entry per line::

    # comment
    set exists-batch 1
    decide ~root(d1)
    instantiate 5 d1 d2

``set`` entries override heuristics before solving; ``decide`` and
``instantiate`` entries are consumed by the search at choice points.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from pydantic import ValidationError

from config.settings import HeuristicsConfig
from engine.errors import ParseError
from engine.kernel import Atom, DomainLiteral, Vocabulary
from engine.search import ScriptEntry

LOG = logging.getLogger(__name__)

LITERAL_RE = re.compile(r"^(~|!)?\s*([A-Za-z_][A-Za-z0-9_']*)\s*(?:\(([^()]*)\))?$")


@dataclass
class Script:
    entries: List[ScriptEntry] = field(default_factory=list)
    settings: List[Tuple[str, str]] = field(default_factory=list)

    def apply(self, config: HeuristicsConfig) -> HeuristicsConfig:
        """Apply the ``set`` entries on top of ``config``."""
        for key, value in self.settings:
            config = config.set_option(key, value)
        return config


def parse_literal(text: str, vocabulary: Vocabulary, line: int = 0) -> DomainLiteral:
    m = LITERAL_RE.match(text.strip())
    if m is None:
        raise ParseError(f"bad literal {text.strip()!r}", line, 1)
    negated, name, args_text = m.groups()
    pred = vocabulary.predicates.get(name)
    if pred is None:
        raise ParseError(f"unknown predicate {name}", line, 1)
    names = [a.strip() for a in args_text.split(",")] if args_text and args_text.strip() else []
    if len(names) != pred.arity:
        raise ParseError(f"arity mismatch: {name} has arity {pred.arity}, used with {len(names)}", line, 1)
    args = []
    for n in names:
        if not vocabulary.has_element(n):
            raise ParseError(f"unknown symbol {n}", line, 1)
        args.append(vocabulary.element_id(n))
    return DomainLiteral(Atom(name, tuple(args)), negated is None)


def parse_script(text: str, vocabulary: Vocabulary) -> Script:
    """
    Raises:
        ParseError: Unknown entry kind, symbol or setting
    """
    script = Script()
    checked = HeuristicsConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, _, rest = line.partition(" ")
        rest = rest.strip()
        if kind == "decide":
            script.entries.append(ScriptEntry("decide", literal=parse_literal(rest, vocabulary, lineno)))
        elif kind == "instantiate":
            parts = rest.split()
            if not parts:
                raise ParseError("instantiate needs a rule id", lineno, 1)
            args = []
            for n in parts[1:]:
                if not vocabulary.has_element(n):
                    raise ParseError(f"unknown symbol {n}", lineno, 1)
                args.append(vocabulary.element_id(n))
            script.entries.append(ScriptEntry("instantiate", rule_id=parts[0], args=tuple(args)))
        elif kind == "set":
            key, _, value = rest.partition(" ")
            try:
                checked = checked.set_option(key, value)
            except KeyError:
                raise ParseError(f"unknown setting {key}", lineno, 1) from None
            except ValidationError as e:
                raise ParseError(f"bad value for {key}: {value!r} ({e.error_count()} errors)", lineno, 1) from None
            script.settings.append((key, value.strip()))
        else:
            raise ParseError(f"unknown script entry {kind!r}", lineno, 1)
    LOG.debug("script: %d entries, %d settings", len(script.entries), len(script.settings))
    return script


def load_script(path: Optional[str], vocabulary: Vocabulary) -> Script:
    if not path:
        return Script()
    with open(path, "r", encoding="utf-8") as f:
        return parse_script(f.read(), vocabulary)
