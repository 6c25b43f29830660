"""
Text serializers: models, formulas, rules, whole problems and structures.

``format_problem`` output parses back to the same AST.
"""

from typing import Dict, Iterable, List, Optional, Sequence

from engine.kernel import (And, Atom, Bindings, DomainSet, Exists, Forall, Formula, Lit, Or, PartialStructure,
                           PredicateKind, Rule, Term, Vocabulary)


def format_term(term: Term, vocabulary: Vocabulary) -> str:
    return term if isinstance(term, str) else vocabulary.element_name(term)


def format_atom(atom: Atom, vocabulary: Vocabulary) -> str:
    if not atom.args:
        return atom.pred
    return f"{atom.pred}({','.join(vocabulary.element_name(a) for a in atom.args)})"


def format_lit(lit: Lit, vocabulary: Vocabulary) -> str:
    args = [format_term(a, vocabulary) for a in lit.args]
    if lit.pred == "=":
        return f"{args[0]} {'=' if lit.sign else '~='} {args[1]}"
    text = f"{lit.pred}({','.join(args)})" if args else lit.pred
    return text if lit.sign else "~" + text


def format_domain(domain: DomainSet, vocabulary: Vocabulary) -> str:
    named = vocabulary.domains.get(domain.label)
    if named is not None and named == domain:
        return domain.label
    for name, candidate in vocabulary.domains.items():
        if candidate == domain:
            return name
    return "{" + ", ".join(vocabulary.element_name(e) for e in domain) + "}"


def format_block(bind: Bindings, vocabulary: Vocabulary) -> str:
    parts = [f"{v} in {format_domain(d, vocabulary)}" for v, d in zip(bind.vars, bind.domains)]
    text = ", ".join(parts)
    if bind.excluded:
        groups = []
        for ex in sorted(bind.excluded):
            groups.append("(" + ", ".join(f"{v}={vocabulary.element_name(e)}" for v, e in ex) + ")")
        text += " except " + ", ".join(groups)
    return text


def format_formula(phi: Formula, vocabulary: Vocabulary) -> str:
    if isinstance(phi, Lit):
        return format_lit(phi, vocabulary)
    if isinstance(phi, (Forall, Exists)):
        q = "!" if isinstance(phi, Forall) else "?"
        return f"{q}{format_block(phi.bind, vocabulary)}: {format_formula(phi.child, vocabulary)}"
    if not phi.children:
        return "true" if isinstance(phi, And) else "false"
    op = " & " if isinstance(phi, And) else " | "
    return op.join(_child(c, phi, vocabulary) for c in phi.children)


def _child(child: Formula, parent: Formula, vocabulary: Vocabulary) -> str:
    text = format_formula(child, vocabulary)
    wrap = isinstance(child, (Forall, Exists)) or type(child) is type(parent)
    if isinstance(parent, And) and isinstance(child, Or) and child.children:
        wrap = True
    if isinstance(child, (And, Or)) and len(child.children) == 1:
        wrap = True
    return f"({text})" if wrap else text


def format_rule(rule: Rule, vocabulary: Vocabulary, with_id: bool = False) -> str:
    prefix = f"!{format_block(rule.bind, vocabulary)}: " if rule.bind.vars else ""
    text = f"{prefix}{format_lit(rule.head, vocabulary)} <- {format_formula(rule.body, vocabulary)}."
    return f"({rule.id}) {text}" if with_id else text


def format_definition(rules: Iterable[Rule], vocabulary: Vocabulary) -> str:
    """Rules with their ids, one per line (D_g / D_d dumps)."""
    return "\n".join(format_rule(r, vocabulary, with_id=True) for r in sorted(rules, key=lambda r: _id_key(r.id)))


def _id_key(rule_id: str):
    digits = "".join(ch for ch in rule_id if ch.isdigit())
    return (int(digits) if digits else 0, rule_id)


def format_problem(vocabulary: Vocabulary, sentences: Sequence[Formula],
                   definitions: Sequence[Sequence[Rule]]) -> str:
    lines: List[str] = ["vocabulary {"]
    for kind in (PredicateKind.OPEN, PredicateKind.DEFINED):
        preds = [p for p in vocabulary.user_predicates() if p.kind == kind]
        if preds:
            lines.append(f"    {kind.value} " + ", ".join(f"{p.name}/{p.arity}" for p in preds))
    lines.append("}")
    lines.append("domain {")
    declared = set()
    for name, domain in vocabulary.domains.items():
        lines.append(f"    {name} = {{{', '.join(vocabulary.element_name(e) for e in domain)}}}")
        declared.update(domain)
    loose = [e for e in range(len(vocabulary.elements)) if e not in declared]
    if loose:
        name = "_U"
        while name in vocabulary.domains:
            name += "_"
        lines.append(f"    {name} = {{{', '.join(vocabulary.element_name(e) for e in loose)}}}")
    lines.append("}")
    lines.append("theory {")
    for phi in sentences:
        lines.append(f"    {format_formula(phi, vocabulary)}.")
    for block in definitions:
        lines.append("    define {")
        for rule in block:
            lines.append(f"        {format_rule(rule, vocabulary)}")
        lines.append("    }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_structure(structure: PartialStructure, vocabulary: Vocabulary,
                     predicates: Optional[Iterable[str]] = None) -> str:
    """Structure file text; closed predicates are written with ``:=``."""
    names = sorted(predicates) if predicates is not None else sorted(structure.predicates())
    lines: List[str] = []
    for name in names:
        for sign in (True, False):
            rows = sorted(structure.atoms(name, sign))
            closed = sign and name in structure.closed
            if not rows and not closed:
                continue
            op = ":=" if closed else "="
            tuples = ", ".join("(" + ",".join(vocabulary.element_name(a) for a in args) + ")" for args in rows)
            lines.append(f"{'' if sign else '~'}{name} {op} {{{tuples}}}")
    return "\n".join(lines) + ("\n" if lines else "")


def model_lines(model: PartialStructure, outputs: Iterable[str], vocabulary: Vocabulary) -> List[str]:
    lines = []
    for pred in set(outputs):
        for args in model.atoms(pred, True):
            lines.append(format_atom(Atom(pred, args), vocabulary))
    return sorted(lines)


def emit_model(model: Optional[PartialStructure], outputs: Iterable[str], vocabulary: Vocabulary,
               status: str = "SAT") -> str:
    """Status header followed by one ``P(d1,...,dn)`` line per true output atom."""
    if status != "SAT" or model is None:
        return status + "\n"
    return "\n".join([status] + model_lines(model, outputs, vocabulary)) + "\n"


def format_stats(stats: Dict[str, object]) -> str:
    """Flat ``key: value`` document."""
    return "\n".join(f"{k}: {v}" for k, v in stats.items()) + "\n"
