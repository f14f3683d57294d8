"""Independent brute-force oracles used to cross-check the library.

These deliberately avoid the library's search code: quantifiers are expanded
by substitution, homomorphisms are enumerated as raw functions, connected
components use union-find.
"""

from __future__ import annotations

import itertools

from exrules.formulas import And, Exists, Forall, Implies, Not, Or
from exrules.rules import EQ, FALSUM, Atom, Term


def _ground_term(t, s, env):
    if isinstance(t, Term) and t.is_const:
        return s.consts[t.name]
    return env[t]


def naive_eval(s, f, env=None):
    """Second evaluator: substitute and recurse, no shared code with evaluate()."""
    env = dict(env or {})
    if isinstance(f, Atom):
        if f.kind == FALSUM:
            return False
        vals = [_ground_term(t, s, env) for t in f.args]
        if f.kind == EQ:
            return vals[0] == vals[1]
        return tuple(vals) in s.rel(f.symbol)
    if isinstance(f, Not):
        return not naive_eval(s, f.body, env)
    if isinstance(f, And):
        results = [naive_eval(s, p, env) for p in f.parts]
        return False not in results
    if isinstance(f, Or):
        results = [naive_eval(s, p, env) for p in f.parts]
        return True in results
    if isinstance(f, Implies):
        return (not naive_eval(s, f.left, env)) or naive_eval(s, f.right, env)
    if isinstance(f, Exists):
        combos = itertools.product(sorted(s.domain), repeat=len(f.vars))
        return any(naive_eval(s, f.body, {**env, **dict(zip(f.vars, c))}) for c in combos)
    if isinstance(f, Forall):
        combos = itertools.product(sorted(s.domain), repeat=len(f.vars))
        return all(naive_eval(s, f.body, {**env, **dict(zip(f.vars, c))}) for c in combos)
    raise TypeError(f)


def all_maps(src, dst):
    src = sorted(src)
    for images in itertools.product(sorted(dst), repeat=len(src)):
        yield dict(zip(src, images))


def brute_is_hom(a, b, h, strict=False, onto=False):
    for name in a.sig.constants:
        if h[a.consts[name]] != b.consts[name]:
            return False
    for name, arity in a.sig.relations.items():
        for t in itertools.product(sorted(a.domain), repeat=arity):
            img = tuple(h[e] for e in t)
            if t in a.rel(name) and img not in b.rel(name):
                return False
            if strict and t not in a.rel(name) and img in b.rel(name):
                return False
    if onto and set(h.values()) != set(b.domain):
        return False
    return True


def brute_hom_exists(a, b, pins=None, strict=False, onto=False):
    for h in all_maps(a.domain, b.domain):
        if pins and any(h[k] != v for k, v in pins.items()):
            continue
        if brute_is_hom(a, b, h, strict, onto):
            return True
    return False


def brute_mutual_pinned(a, ta, b, tb):
    fwd = brute_hom_exists(a, b, pins=_pin_dict(ta, tb))
    bwd = brute_hom_exists(b, a, pins=_pin_dict(tb, ta))
    return fwd and bwd


def _pin_dict(ta, tb):
    pins = {}
    for x, y in zip(ta, tb):
        if pins.get(x, y) != y:
            return {x: -(10**9)}  # unsatisfiable pin
        pins[x] = y
    return pins


def brute_globally_homomorphic(a, b, max_len=None):
    """Direct reading of the definition over duplicate-free tuples."""
    elems = sorted(a.domain)
    max_len = len(elems) if max_len is None else max_len
    for length in range(0, max_len + 1):
        for ta in itertools.permutations(elems, length):
            if not any(
                brute_mutual_pinned(a, ta, b, tb)
                for tb in itertools.product(sorted(b.domain), repeat=length)
            ):
                return False
    return True


def union_find_components(n_vertices, edges):
    parent = list(range(n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    groups = {}
    for v in range(n_vertices):
        groups.setdefault(find(v), set()).add(v)
    return sorted(frozenset(g) for g in groups.values())


def set_partitions(items):
    """All partitions of a list, deterministic order."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part
