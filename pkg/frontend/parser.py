"""
Problem and structure file parser.

A problem file has three blocks::

    vocabulary {
        open edge/2
        defined root/1 R/1
    }
    domain {
        D = {d1, d2}
        N = 0..9
    }
    theory {
        ?x in D: R(x).
        define {
            !x in D: root(x) <- x = d1.
            R(x) <- root(x) | ?y in D: edge(x,y) & R(y).
        }
    }

Connectives: ``~`` ``&`` ``|`` and the quantifiers ``!x in D:`` / ``?x in D:``,
whose scope extends as far right as possible. ``x = y`` and ``x ~= y`` are
the equality builtin. ``%`` and ``//`` start comments.

A structure file lists tuple tables of open predicates::

    edge = {(d1,d2), (d2,d1)}   // true tuples; unlisted tuples stay unknown
    ~edge = {(d1,d1)}           // false tuples
    color := {(n1,red)}         // exact table: unlisted tuples are false
    P = true
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Set, Tuple

from engine.errors import ParseError, UnsupportedConstruct
from engine.kernel import (And, Atom, Bindings, DomainLiteral, DomainSet, Exists, FALSE, Forall, Formula, Lit,
                           Or, PartialStructure, Predicate, PredicateKind, Rule, TRUE, Term, Vocabulary, negate)
from engine.normalize import CanonicalTheory, to_canonical

LOG = logging.getLogger(__name__)

TOKEN_RE = re.compile(r"""
    (?P<nl>\n)
  | (?P<ws>[ \t\r]+)
  | (?P<comment>(?:%|//)[^\n]*)
  | (?P<op><-|:=|\.\.|~=|<=>|=>|<=|>=)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<number>\d+)
  | (?P<aggregate>\#[A-Za-z_]*)
  | (?P<punct>[(){},.:;=&|~!?/])
  | (?P<arith>[-+*<>^])
""", re.VERBOSE)

KEYWORDS = {"vocabulary", "domain", "theory", "define", "open", "defined", "in", "except", "true", "false"}


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    col: int


EOF = "eof"


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token(EOF, "", line, pos - line_start + 1))
    return tokens


@dataclass
class Problem:
    """
    Parsed problem file.

    Args:
        vocabulary: Predicates, elements and named domains
        sentences: Closed NNF sentences of the theory block
        definitions: One rule list per ``define`` block, in source order
        locations: Source position of every sentence ("s<i>") and rule id
    """

    vocabulary: Vocabulary
    sentences: List[Formula] = field(default_factory=list)
    definitions: List[List[Rule]] = field(default_factory=list)
    locations: Dict[str, Tuple[int, int]] = field(default_factory=dict, compare=False)

    def ast(self) -> tuple:
        """Comparable form (source locations excluded)."""
        voc = self.vocabulary
        preds = tuple(sorted((p.name, p.arity, p.kind.value) for p in voc.user_predicates()))
        domains = tuple(sorted((name, tuple(d)) for name, d in voc.domains.items()))
        return (preds, tuple(voc.elements), domains, tuple(self.sentences),
                tuple(tuple(block) for block in self.definitions))

    def canonical(self) -> CanonicalTheory:
        return to_canonical(self.sentences, self.definitions, self.vocabulary)


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos = min(self.pos + 1, len(self.tokens) - 1)
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind != EOF and tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind == EOF:
            raise self.error(f"expected {text!r}, found {_describe(tok)}", tok)
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise self.error(f"expected {what}, found {_describe(tok)}", tok)
        return self.next()

    def name(self, what: str = "element") -> Token:
        """Identifier or number."""
        tok = self.peek()
        if tok.kind == "number" or (tok.kind == "ident" and tok.text not in KEYWORDS):
            return self.next()
        raise self.error(f"expected {what}, found {_describe(tok)}", tok)

    @staticmethod
    def error(message: str, tok: Token) -> ParseError:
        if tok.kind == "aggregate":
            return UnsupportedConstruct(f"aggregates are not supported ({tok.text})", tok.line, tok.col)
        if tok.kind == "arith" or tok.text in ("=>", "<=>", "<=", ">="):
            return UnsupportedConstruct(f"unsupported operator {tok.text!r}", tok.line, tok.col)
        return ParseError(message, tok.line, tok.col)


def _describe(tok: Token) -> str:
    return "end of input" if tok.kind == EOF else repr(tok.text)


class ProblemParser(_Parser):
    """Recursive-descent parser for problem files."""

    def __init__(self, text: str):
        super().__init__(text)
        self.vocabulary = Vocabulary()
        self.problem = Problem(self.vocabulary)
        self._scopes: List[Set[str]] = []
        self._rule_count = 0

    def parse(self) -> Problem:
        seen: Set[str] = set()
        while self.peek().kind != EOF:
            tok = self.peek()
            if tok.text in seen and tok.text in ("vocabulary", "domain"):
                raise ParseError(f"duplicate {tok.text} block", tok.line, tok.col)
            if tok.text == "vocabulary":
                self.next()
                self.vocabulary_block()
            elif tok.text == "domain":
                self.next()
                self.domain_block()
            elif tok.text == "theory":
                self.next()
                self.theory_block()
            else:
                raise self.error(f"expected a block, found {_describe(tok)}", tok)
            seen.add(tok.text)
        if not self.problem.sentences and not any(self.problem.definitions):
            tok = self.peek()
            raise ParseError("no goal", tok.line, tok.col)
        return self.problem

    # -- blocks ------------------------------------------------------------

    def vocabulary_block(self) -> None:
        self.expect("{")
        while not self.accept("}"):
            tok = self.next()
            if tok.text not in ("open", "defined"):
                raise self.error(f"expected 'open' or 'defined', found {_describe(tok)}", tok)
            kind = PredicateKind.OPEN if tok.text == "open" else PredicateKind.DEFINED
            while True:
                name = self.ident("predicate name")
                self.expect("/")
                arity_tok = self.next()
                if arity_tok.kind != "number":
                    raise self.error("expected arity", arity_tok)
                if name.text in self.vocabulary.predicates:
                    raise ParseError(f"predicate {name.text} declared twice", name.line, name.col)
                self.vocabulary.add_predicate(Predicate(name.text, int(arity_tok.text), kind))
                if not self.accept(","):
                    if self.peek().kind == "ident" and self.peek().text not in KEYWORDS:
                        continue
                    break

    def domain_block(self) -> None:
        self.expect("{")
        while not self.accept("}"):
            name = self.ident("domain name")
            self.expect("=")
            ids = self.element_set(declare=True)
            if name.text in self.vocabulary.domains:
                raise ParseError(f"domain {name.text} declared twice", name.line, name.col)
            self.vocabulary.domains[name.text] = DomainSet.of(ids, label=name.text)
            self.accept(";")

    def element_set(self, declare: bool) -> List[int]:
        """``{a, b, c}`` or ``lo..hi``."""
        if self.peek().kind == "number" and self.peek(1).text == "..":
            lo = int(self.next().text)
            self.next()
            hi_tok = self.next()
            if hi_tok.kind != "number" or int(hi_tok.text) < lo:
                raise self.error("bad integer range", hi_tok)
            return [self.vocabulary.intern(str(i)) for i in range(lo, int(hi_tok.text) + 1)]
        self.expect("{")
        ids: List[int] = []
        while not self.accept("}"):
            tok = self.name()
            ids.append(self.vocabulary.intern(tok.text) if declare else self.element(tok))
            if not self.at("}"):
                self.expect(",")
        return ids

    def element(self, tok: Token) -> int:
        if not self.vocabulary.has_element(tok.text):
            raise ParseError(f"unknown symbol {tok.text}", tok.line, tok.col)
        return self.vocabulary.element_id(tok.text)

    def theory_block(self) -> None:
        if not self.vocabulary.user_predicates():
            tok = self.peek()
            raise ParseError("theory block before vocabulary", tok.line, tok.col)
        self.expect("{")
        while not self.accept("}"):
            if self.at("define"):
                self.next()
                self.define_block()
                continue
            tok = self.peek()
            self._scopes = []
            phi = self.formula()
            self.expect(".")
            self.problem.locations[f"s{len(self.problem.sentences)}"] = (tok.line, tok.col)
            self.problem.sentences.append(phi)

    def define_block(self) -> None:
        self.expect("{")
        rules: List[Rule] = []
        while not self.accept("}"):
            rules.append(self.rule())
        self.problem.definitions.append(rules)

    def rule(self) -> Rule:
        tok = self.peek()
        self._scopes = []
        bind = Bindings()
        if self.at("!"):
            self.next()
            bind = self.block()
            self.expect(":")
        self._scopes.append(set(bind.vars))
        head_tok = self.peek()
        head = self.head_atom(set(bind.vars))
        pred = self.vocabulary.predicates[head.pred]
        if pred.kind != PredicateKind.DEFINED:
            raise ParseError(f"rule head {head.pred} is not a defined predicate", head_tok.line, head_tok.col)
        self.expect("<-")
        body = self.formula()
        self.expect(".")
        self._scopes = []
        self._rule_count += 1
        rule_id = str(self._rule_count)
        self.problem.locations[rule_id] = (tok.line, tok.col)
        return Rule(rule_id, head, body, bind)

    def head_atom(self, bound: Set[str]) -> Lit:
        name = self.ident("rule head")
        args: List[Term] = []
        if self.accept("("):
            while True:
                tok = self.name("head argument")
                if tok.text in bound or not self.vocabulary.has_element(tok.text):
                    if tok.kind == "number":
                        raise ParseError(f"unknown symbol {tok.text}", tok.line, tok.col)
                    args.append(tok.text)
                    self._scopes[-1].add(tok.text)
                else:
                    args.append(self.vocabulary.element_id(tok.text))
                if not self.accept(","):
                    break
            self.expect(")")
        self.check_arity(name, len(args))
        return Lit(name.text, tuple(args))

    def check_arity(self, name: Token, n: int) -> None:
        pred = self.vocabulary.predicates.get(name.text)
        if pred is None:
            raise ParseError(f"unknown predicate {name.text}", name.line, name.col)
        if pred.arity != n:
            raise ParseError(f"arity mismatch: {name.text} has arity {pred.arity}, used with {n}",
                             name.line, name.col)

    # -- quantifier blocks -------------------------------------------------

    def block(self) -> Bindings:
        names: List[str] = []
        domains: List[DomainSet] = []
        while True:
            group = [self.ident("variable")]
            while self.peek().kind == "ident" and self.peek().text != "in":
                group.append(self.ident("variable"))
            self.expect("in")
            domain = self.domain_ref()
            for tok in group:
                if tok.text in names:
                    raise ParseError(f"variable {tok.text} bound twice", tok.line, tok.col)
                if self.vocabulary.has_element(tok.text):
                    raise ParseError(f"variable {tok.text} shadows a domain element", tok.line, tok.col)
                names.append(tok.text)
                domains.append(domain)
            if not self.accept(","):
                break
        excluded: List[Tuple[Tuple[str, int], ...]] = []
        if self.accept("except"):
            while True:
                excluded.append(self.exclusion(names))
                if not self.accept(","):
                    break
        return Bindings(tuple(names), tuple(domains), frozenset(excluded))

    def domain_ref(self) -> DomainSet:
        if self.at("{"):
            return DomainSet.of(self.element_set(declare=False))
        tok = self.ident("domain name")
        domain = self.vocabulary.domains.get(tok.text)
        if domain is None:
            raise ParseError(f"unknown domain {tok.text}", tok.line, tok.col)
        return domain

    def exclusion(self, names: List[str]) -> Tuple[Tuple[str, int], ...]:
        self.expect("(")
        pairs: List[Tuple[str, int]] = []
        while True:
            var = self.ident("variable")
            if var.text not in names:
                raise ParseError(f"variable {var.text} not bound by this block", var.line, var.col)
            self.expect("=")
            pairs.append((var.text, self.element(self.name())))
            if not self.accept(","):
                break
        self.expect(")")
        return tuple(sorted(pairs))

    # -- formulas ----------------------------------------------------------

    def formula(self) -> Formula:
        return self.disjunction()

    def disjunction(self) -> Formula:
        children = [self.conjunction()]
        while self.accept("|"):
            children.append(self.conjunction())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def conjunction(self) -> Formula:
        children = [self.unary()]
        while self.accept("&"):
            children.append(self.unary())
        return children[0] if len(children) == 1 else And(tuple(children))

    def unary(self) -> Formula:
        if self.accept("~"):
            return negate(self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok.text in ("!", "?"):
            self.next()
            bind = self.block()
            self.expect(":")
            self._scopes.append(set(bind.vars))
            child = self.formula()
            self._scopes.pop()
            return Forall(bind, child) if tok.text == "!" else Exists(bind, child)
        if self.accept("("):
            phi = self.formula()
            self.expect(")")
            return phi
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.kind == "ident" and tok.text not in KEYWORDS and self.peek(1).text == "(":
            self.next()
            self.next()
            args: List[Term] = []
            while True:
                args.append(self.term())
                if not self.accept(","):
                    break
            self.expect(")")
            self.check_arity(tok, len(args))
            self._check_following()
            return Lit(tok.text, tuple(args))
        if self.peek(1).text in ("=", "~="):
            left = self.term()
            sign = self.next().text == "="
            right = self.term()
            self._check_following()
            return Lit("=", (left, right), sign)
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            self.check_arity(tok, 0)
            self._check_following()
            return Lit(tok.text)
        raise self.error(f"expected a formula, found {_describe(tok)}", tok)

    def _check_following(self) -> None:
        tok = self.peek()
        if tok.kind in ("arith", "aggregate") or tok.text in ("=>", "<=>", "<=", ">="):
            raise self.error("", tok)

    def term(self) -> Term:
        tok = self.name("term")
        if self.at("("):
            raise UnsupportedConstruct("function symbols are not supported", tok.line, tok.col)
        if tok.kind == "ident" and any(tok.text in scope for scope in self._scopes):
            return tok.text
        if self.vocabulary.has_element(tok.text):
            return self.vocabulary.element_id(tok.text)
        raise ParseError(f"unknown symbol {tok.text}", tok.line, tok.col)


class StructureParser(_Parser):
    """Parser for structure files over a known vocabulary."""

    def __init__(self, text: str, vocabulary: Vocabulary):
        super().__init__(text)
        self.vocabulary = vocabulary

    def parse(self) -> PartialStructure:
        entries: List[Tuple[str, bool, List[Tuple[int, ...]]]] = []
        closed: Set[str] = set()
        while self.peek().kind != EOF:
            positive = not self.accept("~")
            name = self.ident("predicate name")
            pred = self.vocabulary.predicates.get(name.text)
            if pred is None:
                raise ParseError(f"unknown predicate {name.text}", name.line, name.col)
            if pred.kind != PredicateKind.OPEN:
                raise ParseError(f"{name.text} is not an open predicate", name.line, name.col)
            op = self.next()
            if op.text not in ("=", ":="):
                raise self.error(f"expected '=' or ':=', found {_describe(op)}", op)
            if op.text == ":=":
                if not positive:
                    raise ParseError("':=' lists true tuples only", op.line, op.col)
                closed.add(name.text)
            entries.append((name.text, positive, self.table(pred)))
            self.accept(".") or self.accept(";")
        structure = PartialStructure(len(self.vocabulary.elements), closed)
        for pred_name, positive, rows in entries:
            for args in rows:
                structure.assign(DomainLiteral(Atom(pred_name, args), positive), 0)
        if not structure.is_consistent():
            raise ParseError("structure assigns an atom both true and false")
        return structure

    def table(self, pred: Predicate) -> List[Tuple[int, ...]]:
        if self.accept("true"):
            self._arity(pred, 0, self.tokens[self.pos - 1])
            return [()]
        if self.accept("false"):
            self._arity(pred, 0, self.tokens[self.pos - 1])
            return []
        self.expect("{")
        rows: List[Tuple[int, ...]] = []
        while not self.accept("}"):
            tok = self.peek()
            if self.accept("("):
                row: List[int] = []
                while not self.accept(")"):
                    row.append(self.element(self.name()))
                    if not self.at(")"):
                        self.expect(",")
                args = tuple(row)
            else:
                args = (self.element(self.name()),)
            self._arity(pred, len(args), tok)
            rows.append(args)
            if not self.at("}"):
                self.expect(",")
        return rows

    def element(self, tok: Token) -> int:
        if not self.vocabulary.has_element(tok.text):
            raise ParseError(f"unknown symbol {tok.text}", tok.line, tok.col)
        return self.vocabulary.element_id(tok.text)

    @staticmethod
    def _arity(pred: Predicate, n: int, tok: Token) -> None:
        if pred.arity != n:
            raise ParseError(f"arity mismatch: {pred.name} has arity {pred.arity}, tuple has {n}", tok.line, tok.col)


def parse_problem(text: str) -> Problem:
    return ProblemParser(text).parse()


def parse_structure(text: str, vocabulary: Vocabulary) -> PartialStructure:
    return StructureParser(text, vocabulary).parse()


def parse(problem_text: str, structure_text: Optional[str] = None) -> Tuple[Problem, PartialStructure]:
    """
    Parse a problem and its input structure.

    Raises:
        ParseError: Syntax error, unknown symbol, arity mismatch or missing goal
        UnsupportedConstruct: Function symbols, aggregates or arithmetic
    """
    problem = parse_problem(problem_text)
    if structure_text is None or not structure_text.strip():
        structure = PartialStructure(len(problem.vocabulary.elements))
    else:
        structure = parse_structure(structure_text, problem.vocabulary)
    LOG.debug("parsed %d sentences, %d rules, %d elements", len(problem.sentences),
              sum(len(b) for b in problem.definitions), len(problem.vocabulary.elements))
    return problem, structure


def load(problem_path: str, structure_path: Optional[str] = None) -> Tuple[Problem, PartialStructure]:
    """Read and parse problem/structure files (UTF-8)."""
    with open(problem_path, "r", encoding="utf-8") as f:
        problem_text = f.read()
    structure_text = None
    if structure_path:
        with open(structure_path, "r", encoding="utf-8") as f:
            structure_text = f.read()
    return parse(problem_text, structure_text)
