"""Syntax and classification of generalized dependencies.

A rule is an implicitly universally quantified implication whose body is a
conjunction of atoms and whose head is a disjunction of existentially
quantified conjunctions.  The surface syntax is line oriented::

    @rel R/2
    @const c
    P(x), R(x,y) -> Q(y)
    R() -> S() | T()
    P(x) -> exists y. R(x,y)
    P(x) -> false          # negative constraint

Variables are lowercase identifiers; constants are quoted ('c') or declared
with ``@const``.  Universal quantifiers are implicit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional


class RuleError(Exception):
    """Malformed rule or rule text."""


class ParseError(RuleError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, column {col})" if line else message)


# ---------------------------------------------------------------------------
# terms and atoms
# ---------------------------------------------------------------------------

VAR = "var"
CONST = "const"


@dataclass(frozen=True, order=True)
class Term:
    kind: str
    name: str

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    @property
    def is_const(self) -> bool:
        return self.kind == CONST

    def __repr__(self):
        return f"{'?' if self.is_var else ''}{self.name}"


def Var(name: str) -> Term:
    return Term(VAR, name)


def Const(name: str) -> Term:
    return Term(CONST, name)


REL = "rel"
EQ = "eq"
FALSUM = "falsum"


@dataclass(frozen=True)
class Atom:
    kind: str
    symbol: Optional[str]
    args: tuple[Term, ...]

    @property
    def is_relational(self) -> bool:
        return self.kind == REL

    @property
    def is_equality(self) -> bool:
        return self.kind == EQ

    def variables(self) -> frozenset[Term]:
        return frozenset(t for t in self.args if t.is_var)

    def constants(self) -> frozenset[Term]:
        return frozenset(t for t in self.args if t.is_const)

    def __repr__(self):
        if self.kind == FALSUM:
            return "false"
        if self.kind == EQ:
            return f"{self.args[0]!r} = {self.args[1]!r}"
        return f"{self.symbol}({', '.join(map(repr, self.args))})"


def rel(symbol: str, *args: Term) -> Atom:
    return Atom(REL, symbol, tuple(args))


def eq(left: Term, right: Term) -> Atom:
    return Atom(EQ, None, (left, right))


FALSUM_ATOM = Atom(FALSUM, None, ())


# ---------------------------------------------------------------------------
# signatures
# ---------------------------------------------------------------------------


@dataclass
class Signature:
    """Relation names with arities plus a set of constant names."""

    relations: dict[str, int] = field(default_factory=dict)
    constants: set[str] = field(default_factory=set)

    def copy(self) -> "Signature":
        return Signature(dict(self.relations), set(self.constants))

    def declare_relation(self, name: str, arity: int) -> None:
        if arity < 0:
            raise RuleError(f"negative arity for {name}")
        old = self.relations.get(name)
        if old is not None and old != arity:
            raise RuleError(f"relation {name} redeclared with arity {arity}, was {old}")
        self.relations[name] = arity
        if name in self.constants:
            raise RuleError(f"name {name} used both as relation and constant")

    def declare_constant(self, name: str) -> None:
        if name in self.relations:
            raise RuleError(f"name {name} used both as relation and constant")
        self.constants.add(name)

    def merge(self, other: "Signature") -> "Signature":
        out = self.copy()
        for name, arity in other.relations.items():
            out.declare_relation(name, arity)
        for name in other.constants:
            out.declare_constant(name)
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Signature)
            and self.relations == other.relations
            and self.constants == other.constants
        )


def signature_of_atoms(atoms: Iterable[Atom], sig: Optional[Signature] = None) -> Signature:
    out = sig.copy() if sig is not None else Signature()
    for atom in atoms:
        if atom.kind == REL:
            out.declare_relation(atom.symbol, len(atom.args))
        for t in atom.args:
            if t.is_const:
                out.declare_constant(t.name)
    return out


# ---------------------------------------------------------------------------
# rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeadDisjunct:
    existential_vars: tuple[Term, ...]
    atoms: tuple[Atom, ...]

    def variables(self) -> frozenset[Term]:
        return frozenset().union(*(a.variables() for a in self.atoms)) if self.atoms else frozenset()


@dataclass(frozen=True)
class Rule:
    body: tuple[Atom, ...]
    heads: tuple[HeadDisjunct, ...]
    label: Optional[str] = None

    @property
    def is_negative_constraint(self) -> bool:
        return not self.heads

    def body_variables(self) -> frozenset[Term]:
        return frozenset().union(*(a.variables() for a in self.body)) if self.body else frozenset()

    def universal_vars(self) -> frozenset[Term]:
        unis = set(self.body_variables())
        for d in self.heads:
            unis |= d.variables() - set(d.existential_vars)
        return frozenset(unis)

    def all_atoms(self) -> tuple[Atom, ...]:
        return self.body + tuple(a for d in self.heads for a in d.atoms)

    def constants(self) -> frozenset[Term]:
        return frozenset().union(*(a.constants() for a in self.all_atoms())) if self.all_atoms() else frozenset()

    def signature(self) -> Signature:
        return signature_of_atoms(self.all_atoms())

    def __repr__(self):
        return f"Rule({render_rule(self)!r})"


def make_rule(
    body: Iterable[Atom],
    heads: Iterable[HeadDisjunct],
    label: Optional[str] = None,
) -> Rule:
    """Build a rule and check well-formedness."""
    rule = Rule(tuple(body), tuple(heads), label)
    validate_rule(rule)
    return rule


def validate_rule(rule: Rule) -> None:
    if not rule.body:
        raise RuleError("rule body must contain at least one atom")
    for atom in rule.body:
        if atom.kind == FALSUM:
            raise RuleError("falsum is not allowed in a rule body")
    unis = rule.universal_vars()
    for d in rule.heads:
        for atom in d.atoms:
            if atom.kind == FALSUM:
                raise RuleError("falsum is only allowed as the whole head")
        if len(set(d.existential_vars)) != len(d.existential_vars):
            raise RuleError("duplicate existential variable in a head disjunct")
        exist = set(d.existential_vars)
        for v in d.existential_vars:
            if not v.is_var:
                raise RuleError("existential terms must be variables")
        if exist & unis:
            clash = sorted((exist & unis), key=lambda t: t.name)
            raise RuleError(f"variables both universal and existential: {clash}")
        if exist - d.variables():
            raise RuleError("existential variable does not occur in its disjunct")


def frontier_variables(rule: Rule) -> frozenset[Term]:
    """Universal variables that occur in some head disjunct."""
    unis = rule.universal_vars()
    front: set[Term] = set()
    for d in rule.heads:
        front |= d.variables() & unis
    return frozenset(front)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


class RuleFlag(str, Enum):
    GD = "GD"
    NEGATIVE_CONSTRAINT = "NegativeConstraint"
    SAFE = "Safe"
    DED = "DED"
    ED = "ED"
    TGD = "TGD"
    FRONTIER_GUARDED = "FrontierGuarded"
    GUARDED = "Guarded"
    LINEAR = "Linear"
    DIVERSE = "Diverse"
    QUASI_FRONTIER_GUARDED = "QuasiFrontierGuarded"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RuleClass:
    flags: frozenset[RuleFlag]

    def __contains__(self, flag: RuleFlag) -> bool:
        return flag in self.flags

    def names(self) -> list[str]:
        order = list(RuleFlag)
        return [f.value for f in order if f in self.flags]

    def __repr__(self):
        return "{" + ", ".join(self.names()) + "}"


def is_safe(rule: Rule) -> bool:
    """Every frontier variable occurs in some relational body atom."""
    covered: set[Term] = set()
    for atom in rule.body:
        if atom.is_relational:
            covered |= atom.variables()
    return frontier_variables(rule) <= covered


def guard_atom(rule: Rule, over: frozenset[Term]) -> Optional[Atom]:
    """Leftmost relational body atom whose arguments cover ``over``."""
    for atom in rule.body:
        if atom.is_relational and over <= atom.variables():
            return atom
    return None


def is_equality_free(rule: Rule) -> bool:
    return all(a.kind != EQ for a in rule.all_atoms())


def classify(rule: Rule) -> RuleClass:
    flags = {RuleFlag.GD}
    if rule.is_negative_constraint:
        flags.add(RuleFlag.NEGATIVE_CONSTRAINT)
    if is_safe(rule):
        flags.add(RuleFlag.SAFE)
    if RuleFlag.SAFE in flags and RuleFlag.NEGATIVE_CONSTRAINT not in flags:
        flags.add(RuleFlag.DED)
    if RuleFlag.DED in flags and len(rule.heads) == 1:
        flags.add(RuleFlag.ED)
    if RuleFlag.ED in flags and is_equality_free(rule):
        flags.add(RuleFlag.TGD)
    if RuleFlag.TGD in flags:
        if guard_atom(rule, frontier_variables(rule)) is not None:
            flags.add(RuleFlag.FRONTIER_GUARDED)
        if guard_atom(rule, rule.universal_vars()) is not None:
            flags.add(RuleFlag.GUARDED)
        if RuleFlag.GUARDED in flags and len(rule.body) == 1:
            flags.add(RuleFlag.LINEAR)
    return RuleClass(frozenset(flags))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<quoted>'[^']*'|"[^"]*")
  | (?P<punct>[(),.|=])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, line: int):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos + 1)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    out.append(("end", "", len(text) + 1))
    return out


class _RuleParser:
    def __init__(self, text: str, sig: Signature, auto_declare: bool, line: int):
        self.tokens = _tokenize(text, line)
        self.i = 0
        self.sig = sig
        self.auto = auto_declare
        self.line = line
        self.seen_vars: set[str] = set()

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind}, found {tok[1]!r}", self.line, tok[2])
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1]!r}", self.line, tok[2])
        self.i += 1
        return tok

    def at(self, value):
        return self.peek()[1] == value

    def parse_rule(self, label=None) -> Rule:
        body = self.parse_atom_list(stop={"->"})
        self.take("arrow")
        heads = self.parse_head()
        self.take("end")
        try:
            return make_rule(body, heads, label)
        except RuleError as exc:
            raise ParseError(str(exc), self.line, 1) from exc

    def parse_head(self) -> list[HeadDisjunct]:
        if self.at("false"):
            self.take()
            return []
        disjuncts = [self.parse_disjunct()]
        while self.at("|"):
            self.take()
            disjuncts.append(self.parse_disjunct())
        return disjuncts

    def parse_disjunct(self) -> HeadDisjunct:
        exist: list[Term] = []
        if self.at("exists"):
            self.take()
            exist.append(self.parse_exist_var())
            while self.at(","):
                self.take()
                exist.append(self.parse_exist_var())
            self.take("punct", ".")
        atoms = self.parse_atom_list(stop={"|", ""})
        return HeadDisjunct(tuple(exist), tuple(atoms))

    def parse_exist_var(self) -> Term:
        kind, value, col = self.take("name")
        if value in self.sig.constants:
            raise ParseError(f"constant {value!r} used as a variable", self.line, col)
        if not value[0].islower():
            raise ParseError(f"variables must be lowercase: {value!r}", self.line, col)
        return Var(value)

    def parse_atom_list(self, stop: set[str]) -> list[Atom]:
        atoms = [self.parse_atom()]
        while self.at(","):
            self.take()
            atoms.append(self.parse_atom())
        tok = self.peek()
        if tok[1] not in stop and tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", self.line, tok[2])
        return atoms

    def parse_atom(self) -> Atom:
        tok = self.peek()
        if tok[0] == "name" and self.tokens[self.i + 1][1] == "(":
            name = self.take("name")[1]
            self.take("punct", "(")
            args: list[Term] = []
            if not self.at(")"):
                args.append(self.parse_term())
                while self.at(","):
                    self.take()
                    args.append(self.parse_term())
            self.take("punct", ")")
            if name in self.sig.relations:
                if self.sig.relations[name] != len(args):
                    raise ParseError(
                        f"relation {name} used with arity {len(args)}, declared {self.sig.relations[name]}",
                        self.line,
                        tok[2],
                    )
            elif self.auto:
                self.sig.declare_relation(name, len(args))
            else:
                raise ParseError(f"undeclared relation {name!r}", self.line, tok[2])
            return rel(name, *args)
        left = self.parse_term()
        self.take("punct", "=")
        right = self.parse_term()
        return eq(left, right)

    def parse_term(self) -> Term:
        kind, value, col = self.take()
        if kind == "quoted":
            name = value[1:-1]
            if not name:
                raise ParseError("empty constant name", self.line, col)
            if name in self.seen_vars:
                raise ParseError(f"variable {name!r} used as constant", self.line, col)
            self.sig.declare_constant(name)
            return Const(name)
        if kind != "name":
            raise ParseError(f"expected a term, found {value!r}", self.line, col)
        if value in self.sig.constants:
            return Const(value)
        if not value[0].islower():
            raise ParseError(
                f"{value!r} is neither a lowercase variable nor a declared constant",
                self.line,
                col,
            )
        self.seen_vars.add(value)
        return Var(value)


def parse_rule(text: str, sig: Optional[Signature] = None, auto_declare: bool = True) -> Rule:
    """Parse one rule.  ``sig`` is updated in place with auto-declared symbols."""
    working = sig if sig is not None else Signature()
    return _RuleParser(text, working, auto_declare, line=1).parse_rule()


def parse_rules(text: str, sig: Optional[Signature] = None, auto_declare: bool = True) -> tuple[list[Rule], Signature]:
    """Parse a rule file: ``@rel``/``@const`` headers, one rule per line."""
    working = sig.copy() if sig is not None else Signature()
    rules: list[Rule] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("@rel"):
            m = re.fullmatch(r"@rel\s+([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)", line)
            if not m:
                raise ParseError("malformed @rel declaration", lineno, 1)
            working.declare_relation(m.group(1), int(m.group(2)))
            continue
        if line.startswith("@const"):
            m = re.fullmatch(r"@const\s+([A-Za-z_][A-Za-z0-9_]*)", line)
            if not m:
                raise ParseError("malformed @const declaration", lineno, 1)
            working.declare_constant(m.group(1))
            continue
        rules.append(_RuleParser(line, working, auto_declare, lineno).parse_rule(label=f"line{lineno}"))
    return rules, working


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def render_term(t: Term) -> str:
    # constants are always quoted so the text is readable without a signature
    return t.name if t.is_var else f"'{t.name}'"


def render_atom(a: Atom) -> str:
    if a.kind == FALSUM:
        return "false"
    if a.kind == EQ:
        return f"{render_term(a.args[0])} = {render_term(a.args[1])}"
    return f"{a.symbol}({', '.join(render_term(t) for t in a.args)})"


def render_rule(rule: Rule) -> str:
    body = ", ".join(render_atom(a) for a in rule.body)
    if rule.is_negative_constraint:
        return f"{body} -> false"
    parts = []
    for d in rule.heads:
        atoms = ", ".join(render_atom(a) for a in d.atoms)
        if d.existential_vars:
            names = ", ".join(v.name for v in d.existential_vars)
            parts.append(f"exists {names}. {atoms}")
        else:
            parts.append(atoms)
    return f"{body} -> {' | '.join(parts)}"
