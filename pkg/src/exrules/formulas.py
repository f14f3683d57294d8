"""First-order formula ASTs shared by the evaluator, rewriter and CLI.

Atoms are reused from :mod:`exrules.rules`; the empty conjunction ``And(())``
is truth and the empty disjunction ``Or(())`` is falsity.  Sentences serialize
to a prefix text format, e.g. ``(forall (x) (or (not (Q x)) (Q x)))``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .rules import (
    EQ,
    FALSUM,
    FALSUM_ATOM,
    REL,
    Atom,
    Const,
    Rule,
    Signature,
    Term,
    Var,
    eq,
    rel,
    signature_of_atoms,
)


class FormulaError(Exception):
    pass


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    vars: tuple[Term, ...]
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    vars: tuple[Term, ...]
    body: "Formula"


Formula = Union[Atom, Not, And, Or, Implies, Exists, Forall]

TRUE = And(())
FALSE = Or(())


def conj(parts) -> Formula:
    parts = tuple(parts)
    return parts[0] if len(parts) == 1 else And(parts)


def disj(parts) -> Formula:
    parts = tuple(parts)
    return parts[0] if len(parts) == 1 else Or(parts)


def exists(vars_, body: Formula) -> Formula:
    vars_ = tuple(vars_)
    return Exists(vars_, body) if vars_ else body


def forall(vars_, body: Formula) -> Formula:
    vars_ = tuple(vars_)
    return Forall(vars_, body) if vars_ else body


def free_vars(f: Formula) -> frozenset[Term]:
    if isinstance(f, Atom):
        return f.variables()
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_vars(p) for p in f.parts)) if f.parts else frozenset()
    if isinstance(f, Implies):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - set(f.vars)
    raise FormulaError(f"not a formula: {f!r}")


def formula_atoms(f: Formula):
    """All atoms of f, in syntactic order."""
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from formula_atoms(f.body)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            yield from formula_atoms(p)
    elif isinstance(f, Implies):
        yield from formula_atoms(f.left)
        yield from formula_atoms(f.right)
    elif isinstance(f, (Exists, Forall)):
        yield from formula_atoms(f.body)
    else:
        raise FormulaError(f"not a formula: {f!r}")


def formula_signature(f: Formula, sig: Signature | None = None) -> Signature:
    return signature_of_atoms(formula_atoms(f), sig)


def substitute_atom(atom: Atom, subst: dict[Term, Term]) -> Atom:
    if not subst or atom.kind == FALSUM:
        return atom
    return Atom(atom.kind, atom.symbol, tuple(subst.get(t, t) for t in atom.args))


def rule_to_formula(rule: Rule) -> Formula:
    """The rule as an explicit first-order sentence."""
    head = disj(
        exists(d.existential_vars, conj(d.atoms)) for d in rule.heads
    ) if rule.heads else FALSE
    body = conj(rule.body)
    unis = sorted(rule.universal_vars(), key=lambda t: t.name)
    return forall(unis, Implies(body, head))


# ---------------------------------------------------------------------------
# prefix text format
# ---------------------------------------------------------------------------

_RESERVED = {"and", "or", "not", "implies", "exists", "forall", "=", "false"}


def _term_text(t: Term) -> str:
    return t.name if t.is_var else f"'{t.name}'"


def formula_to_text(f: Formula) -> str:
    if isinstance(f, Atom):
        if f.kind == FALSUM:
            return "(false)"
        if f.kind == EQ:
            return f"(= {_term_text(f.args[0])} {_term_text(f.args[1])})"
        return "(" + " ".join([f.symbol, *map(_term_text, f.args)]) + ")"
    if isinstance(f, Not):
        return f"(not {formula_to_text(f.body)})"
    if isinstance(f, And):
        return "(and" + "".join(" " + formula_to_text(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or" + "".join(" " + formula_to_text(p) for p in f.parts) + ")"
    if isinstance(f, Implies):
        return f"(implies {formula_to_text(f.left)} {formula_to_text(f.right)})"
    if isinstance(f, Exists):
        names = " ".join(v.name for v in f.vars)
        return f"(exists ({names}) {formula_to_text(f.body)})"
    if isinstance(f, Forall):
        names = " ".join(v.name for v in f.vars)
        return f"(forall ({names}) {formula_to_text(f.body)})"
    raise FormulaError(f"not a formula: {f!r}")


_SEXPR_TOKEN = re.compile(r"\s*(\(|\)|'[^']*'|[^\s()']+)")


def _sexpr_tokens(text: str):
    pos = 0
    while pos < len(text):
        m = _SEXPR_TOKEN.match(text, pos)
        if not m:
            break
        yield m.group(1)
        pos = m.end()


def _read_sexpr(tokens: list[str], i: int):
    if tokens[i] != "(":
        return tokens[i], i + 1
    out = []
    i += 1
    while tokens[i] != ")":
        node, i = _read_sexpr(tokens, i)
        out.append(node)
    return out, i + 1


def _parse_term_text(tok: str) -> Term:
    if tok.startswith("'"):
        return Const(tok[1:-1])
    return Var(tok)


def _build_formula(node) -> Formula:
    if isinstance(node, str):
        raise FormulaError(f"bare token {node!r} is not a formula")
    head, *rest = node
    if head == "false":
        return FALSUM_ATOM
    if head == "not":
        return Not(_build_formula(rest[0]))
    if head == "and":
        return And(tuple(_build_formula(p) for p in rest))
    if head == "or":
        return Or(tuple(_build_formula(p) for p in rest))
    if head == "implies":
        return Implies(_build_formula(rest[0]), _build_formula(rest[1]))
    if head in ("exists", "forall"):
        names = [Var(n) for n in rest[0]]
        body = _build_formula(rest[1])
        return Exists(tuple(names), body) if head == "exists" else Forall(tuple(names), body)
    if head == "=":
        return eq(_parse_term_text(rest[0]), _parse_term_text(rest[1]))
    return rel(head, *(_parse_term_text(t) for t in rest))


def formula_from_text(text: str) -> Formula:
    tokens = list(_sexpr_tokens(text))
    if not tokens:
        raise FormulaError("empty formula text")
    node, i = _read_sexpr(tokens, 0)
    if i != len(tokens):
        raise FormulaError("trailing tokens after formula")
    return _build_formula(node)
