"""Tarskian evaluation on finite structures and homomorphism search.

Everything here is a pure function over immutable inputs.  Violation
witnesses are always the lexicographically least failing assignment
(variables ordered by name, values ascending), so results are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .formulas import And, Exists, Forall, Formula, FormulaError, Implies, Not, Or, free_vars
from .rules import EQ, FALSUM, REL, Atom, Rule, Term
from .structures import Structure, expand_with_constants


class EvalError(Exception):
    pass


Assignment = dict[Term, int]


def _term_value(t: Term, s: Structure, asg: Assignment) -> int:
    if t.is_var:
        if t not in asg:
            raise EvalError(f"unbound variable {t.name}")
        return asg[t]
    if t.name not in s.consts:
        raise EvalError(f"constant {t.name} not interpreted by the structure")
    return s.consts[t.name]


def atom_holds(s: Structure, atom: Atom, asg: Assignment) -> bool:
    if atom.kind == FALSUM:
        return False
    if atom.kind == EQ:
        return _term_value(atom.args[0], s, asg) == _term_value(atom.args[1], s, asg)
    if atom.symbol not in s.sig.relations:
        raise EvalError(f"relation {atom.symbol} not in the structure's signature")
    return tuple(_term_value(t, s, asg) for t in atom.args) in s.rel(atom.symbol)


def evaluate(s: Structure, f: Formula, asg: Optional[Assignment] = None) -> bool:
    """Standard first-order truth; quantifiers range over the finite domain."""
    asg = dict(asg) if asg else {}
    missing = free_vars(f) - set(asg)
    if missing:
        raise EvalError(f"unbound free variables: {sorted(v.name for v in missing)}")
    domain = sorted(s.domain)
    return _eval(s, f, asg, domain)


def _eval(s: Structure, f: Formula, asg: Assignment, domain: list[int]) -> bool:
    if isinstance(f, Atom):
        return atom_holds(s, f, asg)
    if isinstance(f, Not):
        return not _eval(s, f.body, asg, domain)
    if isinstance(f, And):
        return all(_eval(s, p, asg, domain) for p in f.parts)
    if isinstance(f, Or):
        return any(_eval(s, p, asg, domain) for p in f.parts)
    if isinstance(f, Implies):
        return not _eval(s, f.left, asg, domain) or _eval(s, f.right, asg, domain)
    if isinstance(f, (Exists, Forall)):
        want = isinstance(f, Exists)
        for v in f.vars:
            if v in asg:
                raise EvalError(f"variable {v.name} bound twice along one path")
        return self_quant(s, f, asg, domain, want)
    raise FormulaError(f"not a formula: {f!r}")


def self_quant(s, f, asg, domain, want):
    for values in itertools.product(domain, repeat=len(f.vars)):
        for v, e in zip(f.vars, values):
            asg[v] = e
        out = _eval(s, f.body, asg, domain)
        for v in f.vars:
            del asg[v]
        if out == want:
            return want
    return not want


# ---------------------------------------------------------------------------
# rule satisfaction
# ---------------------------------------------------------------------------


def _scan_conjunction(
    s: Structure,
    atoms: tuple[Atom, ...],
    variables: list[Term],
    asg: Assignment,
    domain: list[int],
):
    """Yield extensions of ``asg`` over ``variables`` satisfying all atoms.

    Assignments come out in lexicographic order over the variable list; atoms
    are checked as soon as their variables are bound, which prunes without
    disturbing the order.
    """

    def rec(i: int):
        if i == len(variables):
            if all(atom_holds(s, a, asg) for a in atoms):
                yield dict(asg)
            return
        v = variables[i]
        for e in domain:
            asg[v] = e
            bound = set(asg)
            ok = True
            for a in atoms:
                if v in a.variables() and all((not t.is_var) or t in bound for t in a.args):
                    if not atom_holds(s, a, asg):
                        ok = False
                        break
            if ok:
                yield from rec(i + 1)
            del asg[v]

    yield from rec(0)


def body_matches(s: Structure, rule: Rule, base: Optional[Assignment] = None):
    """Assignments of the universal variables satisfying the body, in lex order."""
    variables = sorted(rule.universal_vars() - set(base or ()), key=lambda t: t.name)
    asg = dict(base) if base else {}
    yield from _scan_conjunction(s, rule.body, variables, asg, sorted(s.domain))


def disjunct_holds(s: Structure, disjunct, asg: Assignment) -> bool:
    variables = sorted(disjunct.existential_vars, key=lambda t: t.name)
    inner = dict(asg)
    for _ in _scan_conjunction(s, disjunct.atoms, variables, inner, sorted(s.domain)):
        return True
    return False


def rule_violation(s: Structure, rule: Rule) -> Optional[Assignment]:
    """Least body assignment under which every head disjunct fails, if any."""
    for asg in body_matches(s, rule):
        if not any(disjunct_holds(s, d, asg) for d in rule.heads):
            return asg
    return None


def satisfies_rule(s: Structure, rule: Rule) -> bool:
    return rule_violation(s, rule) is None


# ---------------------------------------------------------------------------
# homomorphisms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomWitness:
    map: dict[int, int]
    kind: str = "plain"  # plain | strict
    onto: bool = False


def _constant_pins(a: Structure, b: Structure) -> Optional[dict[int, int]]:
    pins: dict[int, int] = {}
    for name in a.sig.constants:
        src, dst = a.consts[name], b.consts[name]
        if pins.get(src, dst) != dst:
            return None
        pins[src] = dst
    return pins


def find_homomorphism(
    a: Structure,
    b: Structure,
    pins: Optional[dict[int, int]] = None,
    strict: bool = False,
    onto: bool = False,
) -> Optional[HomWitness]:
    """Backtracking search for a constant-respecting homomorphism a -> b.

    ``strict`` also requires relation membership to be reflected; ``onto``
    requires surjectivity.  ``pins`` pre-assigns images (a repeated source
    element with conflicting pins makes the search fail immediately).
    """
    if a.sig != b.sig:
        raise EvalError("homomorphism between structures over different signatures")
    assignment = _constant_pins(a, b)
    if assignment is None:
        return None
    for src, dst in (pins or {}).items():
        if src not in a.domain or dst not in b.domain:
            return None
        if assignment.get(src, dst) != dst:
            return None
        assignment[src] = dst
    if onto and len(a.domain) < len(b.domain):
        return None

    # order unassigned elements by occurrence count, most constrained first
    degree = {e: 0 for e in a.domain}
    pos_by_elem: dict[int, list[tuple[str, tuple[int, ...]]]] = {e: [] for e in a.domain}
    for name, tups in a.rels.items():
        for t in tups:
            for e in set(t):
                degree[e] += 1
                pos_by_elem[e].append((name, t))
    # nullary facts have no elements to hang checks on, so test them up front
    for name, arity in a.sig.relations.items():
        if arity == 0:
            if () in a.rel(name) and () not in b.rel(name):
                return None
            if strict and () not in a.rel(name) and () in b.rel(name):
                return None
    neg_by_elem: dict[int, list[tuple[str, tuple[int, ...]]]] = {e: [] for e in a.domain}
    if strict:
        for name, arity in a.sig.relations.items():
            have = a.rel(name)
            for t in itertools.product(sorted(a.domain), repeat=arity):
                if t not in have:
                    for e in set(t):
                        neg_by_elem[e].append((name, t))

    order = [e for e in sorted(a.domain, key=lambda e: (-degree[e], e)) if e not in assignment]
    targets = sorted(b.domain)

    def consistent(e: int) -> bool:
        for name, t in pos_by_elem[e]:
            if all(x in assignment for x in t):
                if tuple(assignment[x] for x in t) not in b.rel(name):
                    return False
        if strict:
            for name, t in neg_by_elem[e]:
                if all(x in assignment for x in t):
                    if tuple(assignment[x] for x in t) in b.rel(name):
                        return False
        return True

    for e in list(assignment):
        if not consistent(e):
            return None

    found: Optional[dict[int, int]] = None

    def rec(i: int) -> bool:
        nonlocal found
        if onto:
            image = set(assignment.values())
            if len(b.domain - image) > len(order) - i:
                return False
        if i == len(order):
            if onto and set(assignment.values()) != set(b.domain):
                return False
            found = dict(assignment)
            return True
        e = order[i]
        for t in targets:
            assignment[e] = t
            if consistent(e) and rec(i + 1):
                return True
            del assignment[e]
        return False

    if rec(0):
        return HomWitness(found, "strict" if strict else "plain", onto)
    return None


def verify_homomorphism(a: Structure, b: Structure, mapping: dict[int, int], strict: bool = False, onto: bool = False) -> bool:
    """Check a claimed witness by exhaustive atom inspection."""
    if set(mapping) != set(a.domain):
        return False
    if not set(mapping.values()) <= b.domain:
        return False
    for name in a.sig.constants:
        if mapping[a.consts[name]] != b.consts[name]:
            return False
    for name, arity in a.sig.relations.items():
        tups = a.rel(name)
        if strict:
            for t in itertools.product(sorted(a.domain), repeat=arity):
                if (t in tups) != (tuple(mapping[e] for e in t) in b.rel(name)):
                    return False
        else:
            for t in tups:
                if tuple(mapping[e] for e in t) not in b.rel(name):
                    return False
    if onto and set(mapping.values()) != set(b.domain):
        return False
    return True


def find_strict_homomorphism(a: Structure, b: Structure, require_onto: bool = False) -> Optional[HomWitness]:
    return find_homomorphism(a, b, strict=True, onto=require_onto)


def mutual_hom_pinned(
    a: Structure,
    ta: tuple[int, ...],
    b: Structure,
    tb: tuple[int, ...],
) -> bool:
    """Homomorphisms both ways between the pinned expansions (a, ta) and (b, tb)."""
    if len(ta) != len(tb):
        raise EvalError("pinned tuples must have the same length")
    fwd: dict[int, int] = {}
    for x, y in zip(ta, tb):
        if fwd.get(x, y) != y:
            return False
        fwd[x] = y
    bwd: dict[int, int] = {}
    for x, y in zip(tb, ta):
        if bwd.get(x, y) != y:
            return False
        bwd[x] = y
    return (
        find_homomorphism(a, b, pins=fwd) is not None
        and find_homomorphism(b, a, pins=bwd) is not None
    )


@dataclass(frozen=True)
class GlobalHomWitness:
    ok: bool
    tuple_images: dict[tuple[int, ...], tuple[int, ...]]
    failed_tuple: Optional[tuple[int, ...]] = None


def is_globally_homomorphic(a: Structure, b: Structure) -> GlobalHomWitness:
    """For every duplicate-free tuple on ``a``, some image tuple on ``b`` gives
    mutual pinned homomorphisms.

    Tuples with repeats reduce to their duplicate-free support (repeated pins
    force equal images), and tuples longer than the domain necessarily repeat,
    so this bounded check is exact on finite structures.
    """
    elems = sorted(a.domain)
    images: dict[tuple[int, ...], tuple[int, ...]] = {}
    for length in range(0, len(elems) + 1):
        for ta in itertools.permutations(elems, length):
            found = None
            for tb in itertools.product(sorted(b.domain), repeat=length):
                if mutual_hom_pinned(a, ta, b, tb):
                    found = tb
                    break
            if found is None:
                return GlobalHomWitness(False, images, failed_tuple=ta)
            images[ta] = found
    return GlobalHomWitness(True, images)


def find_retraction(host: Structure, x: frozenset[int]) -> Optional[HomWitness]:
    """Homomorphism host -> host|x fixing x pointwise.

    On finite structures ``P is globally homomorphic to host`` holds exactly
    when P is isomorphic to an induced substructure host|x admitting such a
    retraction.
    """
    from .structures import induced_substructure

    sub = induced_substructure(host, x)
    return find_homomorphism(host, sub, pins={e: e for e in x})


# ---------------------------------------------------------------------------
# conjunctive queries
# ---------------------------------------------------------------------------


def cq_shape(q: Formula) -> Optional[str]:
    """"cq" for relational conjunctions under existentials, "cq_eq" if
    equalities occur, None if the formula is not of that shape."""
    body = q
    while isinstance(body, Exists):
        body = body.body
    atoms: list[Atom]
    if isinstance(body, Atom):
        atoms = [body]
    elif isinstance(body, And) and all(isinstance(p, Atom) for p in body.parts):
        atoms = list(body.parts)
    else:
        return None
    if any(a.kind == FALSUM for a in atoms):
        return None
    return "cq_eq" if any(a.kind == EQ for a in atoms) else "cq"


def eval_cq(s: Structure, q: Formula, asg: Optional[Assignment] = None) -> bool:
    """Evaluate a conjunctive query (equalities allowed); rejects other shapes."""
    if cq_shape(q) is None:
        raise EvalError("formula is not a conjunctive query")
    return evaluate(s, q, asg)


# ---------------------------------------------------------------------------
# satisfaction over mixed theories (rules and sentences)
# ---------------------------------------------------------------------------

TheoryItem = object  # Rule | Formula


def item_holds(s: Structure, item) -> bool:
    if isinstance(item, Rule):
        return satisfies_rule(s, item)
    return evaluate(s, item)


def item_violation(s: Structure, item):
    """(violated?, witness assignment or None)."""
    if isinstance(item, Rule):
        w = rule_violation(s, item)
        return (w is not None), w
    holds = evaluate(s, item)
    return (not holds), None


def theory_holds(s: Structure, items: Iterable) -> bool:
    return all(item_holds(s, item) for item in items)
