"""Finite relational structures and the constructions the checks quantify over.

Element ids are opaque integers.  Unions identify elements by id, so two
structures "share" an element exactly when they reuse the same id.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .rules import Signature


class StructureError(Exception):
    pass


class EnumerationBudgetError(StructureError):
    pass


@dataclass(frozen=True, eq=False)
class Structure:
    sig: Signature
    domain: frozenset[int]
    rels: dict[str, frozenset[tuple[int, ...]]]
    consts: dict[str, int]

    def __post_init__(self):
        if not self.domain:
            raise StructureError("structure domain must be nonempty")
        for name, arity in self.sig.relations.items():
            for tup in self.rels.get(name, frozenset()):
                if len(tup) != arity:
                    raise StructureError(f"tuple {tup} has wrong arity for {name}/{arity}")
                if not set(tup) <= self.domain:
                    raise StructureError(f"tuple {tup} of {name} leaves the domain")
        for name in self.sig.constants:
            if name not in self.consts:
                raise StructureError(f"constant {name} has no interpretation")
            if self.consts[name] not in self.domain:
                raise StructureError(f"constant {name} interpreted outside the domain")

    def rel(self, name: str) -> frozenset[tuple[int, ...]]:
        return self.rels.get(name, frozenset())

    def holds(self, name: str, tup: tuple[int, ...]) -> bool:
        return tup in self.rels.get(name, frozenset())

    def key(self):
        """Hashable canonical form (structural identity)."""
        return (
            tuple(sorted(self.sig.relations.items())),
            tuple(sorted(self.sig.constants)),
            tuple(sorted(self.domain)),
            tuple((r, tuple(sorted(self.rel(r)))) for r in sorted(self.sig.relations)),
            tuple(sorted(self.consts.items())),
        )

    def __eq__(self, other):
        return isinstance(other, Structure) and self.key() == other.key()

    def __repr__(self):
        facts = ", ".join(
            f"{r}{tup}" for r in sorted(self.sig.relations) for tup in sorted(self.rel(r))
        )
        return f"Structure(domain={sorted(self.domain)}, {{{facts}}})"


def make_structure(
    sig: Signature,
    domain: Iterable[int],
    rels: Optional[dict[str, Iterable[tuple[int, ...]]]] = None,
    consts: Optional[dict[str, int]] = None,
) -> Structure:
    table = {name: frozenset(map(tuple, tups)) for name, tups in (rels or {}).items()}
    for name in table:
        if name not in sig.relations:
            raise StructureError(f"undeclared relation {name}")
    return Structure(sig, frozenset(domain), table, dict(consts or {}))


# ---------------------------------------------------------------------------
# basic operations
# ---------------------------------------------------------------------------


def induced_substructure(s: Structure, elements: Iterable[int]) -> Structure:
    x = frozenset(elements)
    if not x:
        raise StructureError("cannot induce a substructure on the empty set")
    if not x <= s.domain:
        raise StructureError(f"{sorted(x - s.domain)} not in the domain")
    for name, e in s.consts.items():
        if e not in x:
            raise StructureError(f"constant {name} interpreted outside {sorted(x)}")
    rels = {
        name: frozenset(t for t in tups if set(t) <= x)
        for name, tups in s.rels.items()
    }
    return Structure(s.sig, x, rels, dict(s.consts))


def union(a: Structure, b: Structure) -> Structure:
    if a.sig != b.sig:
        raise StructureError("union of structures over different signatures")
    if a.consts != b.consts:
        raise StructureError("union of structures with different constant interpretations")
    rels = {name: a.rel(name) | b.rel(name) for name in a.sig.relations}
    return Structure(a.sig, a.domain | b.domain, rels, dict(a.consts))


def disjoint_union_compatible(a: Structure, b: Structure) -> bool:
    """Constants agree and the induced substructures on the overlap coincide."""
    if a.sig != b.sig or a.consts != b.consts:
        return False
    overlap = a.domain & b.domain
    if not overlap:
        return True
    for name, arity in a.sig.relations.items():
        ta = {t for t in a.rel(name) if set(t) <= overlap}
        tb = {t for t in b.rel(name) if set(t) <= overlap}
        if ta != tb:
            return False
    return True


def direct_product_pairs(a: Structure, b: Structure) -> dict[tuple[int, int], int]:
    """Deterministic ids for product elements, keyed by component pair."""
    pairs = sorted(itertools.product(sorted(a.domain), sorted(b.domain)))
    return {pair: i + 1 for i, pair in enumerate(pairs)}


def direct_product(a: Structure, b: Structure) -> Structure:
    if a.sig != b.sig:
        raise StructureError("product of structures over different signatures")
    ids = direct_product_pairs(a, b)
    rels: dict[str, frozenset] = {}
    for name, arity in a.sig.relations.items():
        tups = set()
        for ta in a.rel(name):
            for tb in b.rel(name):
                tups.add(tuple(ids[(ta[i], tb[i])] for i in range(arity)))
        rels[name] = frozenset(tups)
    consts = {name: ids[(a.consts[name], b.consts[name])] for name in a.sig.constants}
    return Structure(a.sig, frozenset(ids.values()), rels, consts)


def product_many(structures: list[Structure]) -> Structure:
    if not structures:
        raise StructureError("product of an empty family")
    out = structures[0]
    for s in structures[1:]:
        out = direct_product(out, s)
    return out


def trivial_structure(sig: Signature) -> Structure:
    """One element, every relation full, every constant the unique element."""
    rels = {
        name: frozenset([tuple([1] * arity)])
        for name, arity in sig.relations.items()
    }
    return Structure(sig, frozenset([1]), rels, {c: 1 for c in sig.constants})


def sharp_structure(sig: Signature) -> Structure:
    """Two elements; every relation holds exactly the all-1 tuple; constants are 1."""
    rels = {
        name: frozenset([tuple([1] * arity)])
        for name, arity in sig.relations.items()
    }
    return Structure(sig, frozenset([1, 2]), rels, {c: 1 for c in sig.constants})


def expand_with_constants(s: Structure, elements: tuple[int, ...], prefix: str = "pin") -> Structure:
    """Expansion interpreting k fresh constant symbols as the given elements."""
    sig = s.sig.copy()
    consts = dict(s.consts)
    for i, e in enumerate(elements):
        if e not in s.domain:
            raise StructureError(f"element {e} not in the domain")
        name = f"{prefix}{i}"
        while name in sig.constants or name in sig.relations:
            name += "_"
        sig.declare_constant(name)
        consts[name] = e
    return Structure(sig, s.domain, dict(s.rels), consts)


# ---------------------------------------------------------------------------
# anchored isomorphic copies
# ---------------------------------------------------------------------------


class FreshIds:
    """Monotone id source so distinct copies never collide."""

    def __init__(self, start: int):
        self.next_id = start

    def take(self) -> int:
        out = self.next_id
        self.next_id += 1
        return out


@dataclass(frozen=True)
class IsoCopy:
    copy: Structure
    iso: dict[int, int]  # original element -> copy element


def guarded_sets(s: Structure) -> list[frozenset[int]]:
    """All subsets of the domain containing every constant interpretation.

    With no constants this includes the empty set, whose anchored copy is a
    fully disjoint duplicate.
    """
    anchor = frozenset(s.consts.values())
    rest = sorted(s.domain - anchor)
    out = []
    for mask in range(1 << len(rest)):
        extra = frozenset(rest[i] for i in range(len(rest)) if mask >> i & 1)
        out.append(anchor | extra)
    out.sort(key=lambda x: (len(x), sorted(x)))
    return out


def is_guarded_set(s: Structure, x: frozenset[int]) -> bool:
    return x <= s.domain and frozenset(s.consts.values()) <= x


def iso_copy(s: Structure, x: frozenset[int], fresh: FreshIds) -> IsoCopy:
    """Copy of ``s`` fixing ``x`` pointwise, all other elements fresh."""
    if not is_guarded_set(s, x):
        raise StructureError(f"{sorted(x)} is not a guarded set of the structure")
    iso = {e: e for e in x}
    for e in sorted(s.domain - x):
        iso[e] = fresh.take()
    rels = {
        name: frozenset(tuple(iso[e] for e in t) for t in tups)
        for name, tups in s.rels.items()
    }
    copy = Structure(s.sig, frozenset(iso.values()), rels, {c: iso[e] for c, e in s.consts.items()})
    return IsoCopy(copy, iso)


def isomorphic_union(
    s: Structure,
    family: Iterable[frozenset[int]],
    fresh: Optional[FreshIds] = None,
) -> Structure:
    copies = isomorphic_union_copies(s, family, fresh)
    out = copies[0].copy
    for c in copies[1:]:
        out = union(out, c.copy)
    return out


def isomorphic_union_copies(
    s: Structure,
    family: Iterable[frozenset[int]],
    fresh: Optional[FreshIds] = None,
) -> list[IsoCopy]:
    """One anchored copy per guarded set; copy domains overlap exactly on anchors."""
    anchors = [frozenset(x) for x in family]
    if not anchors:
        raise StructureError("isomorphic union over an empty family")
    if fresh is None:
        fresh = FreshIds(max(s.domain) + 1)
    return [iso_copy(s, x, fresh) for x in anchors]


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------


def fact_slots(sig: Signature, domain: list[int]) -> list[tuple[str, tuple[int, ...]]]:
    """All possible facts over the domain: relations by name, tuples in lex order."""
    slots = []
    for name in sorted(sig.relations):
        arity = sig.relations[name]
        for tup in itertools.product(domain, repeat=arity):
            slots.append((name, tup))
    return slots


def structure_from_mask(
    sig: Signature,
    domain: list[int],
    slots: list[tuple[str, tuple[int, ...]]],
    mask: int,
    consts: dict[str, int],
) -> Structure:
    rels: dict[str, set] = {name: set() for name in sig.relations}
    m = mask
    i = 0
    while m:
        if m & 1:
            name, tup = slots[i]
            rels[name].add(tup)
        m >>= 1
        i += 1
    return Structure(
        sig,
        frozenset(domain),
        {name: frozenset(tups) for name, tups in rels.items()},
        dict(consts),
    )


def enumerate_structures(
    sig: Signature,
    max_size: int,
    max_count: Optional[int] = None,
    distinct_up_to_iso: bool = False,
) -> Iterator[Structure]:
    """Every structure over domains {1..n}, n <= max_size, in a fixed order.

    Order: domain size ascending, then constant assignments, then relation
    tables in lexicographic bitmask order.  ``max_count`` guards runaway
    enumerations; ``distinct_up_to_iso`` filters isomorphic duplicates (slower,
    off by default).
    """
    if max_size < 1:
        raise StructureError("max_size must be at least 1")
    emitted = 0
    const_names = sorted(sig.constants)
    for n in range(1, max_size + 1):
        domain = list(range(1, n + 1))
        slots = fact_slots(sig, domain)
        seen_keys = set() if distinct_up_to_iso else None
        for const_values in itertools.product(domain, repeat=len(const_names)):
            consts = dict(zip(const_names, const_values))
            for mask in range(1 << len(slots)):
                s = structure_from_mask(sig, domain, slots, mask, consts)
                if seen_keys is not None:
                    k = canonical_key(s)
                    if k in seen_keys:
                        continue
                    seen_keys.add(k)
                emitted += 1
                if max_count is not None and emitted > max_count:
                    raise EnumerationBudgetError(
                        f"enumeration exceeded the cap of {max_count} structures"
                    )
                yield s


def canonical_key(s: Structure):
    """Least structural key over all relabelings of the domain."""
    elems = sorted(s.domain)
    best = None
    for perm in itertools.permutations(elems):
        relabel = dict(zip(elems, perm))
        key = (
            tuple(sorted(relabel[e] for e in s.consts.values())),
            tuple(
                (name, tuple(sorted(tuple(relabel[e] for e in t) for t in s.rel(name))))
                for name in sorted(s.sig.relations)
            ),
            tuple(sorted((c, relabel[e]) for c, e in s.consts.items())),
        )
        if best is None or key < best:
            best = key
    return best


def are_isomorphic(a: Structure, b: Structure) -> bool:
    if a.sig != b.sig or len(a.domain) != len(b.domain):
        return False
    return canonical_key(a) == canonical_key(b)


def relabel(s: Structure, mapping: dict[int, int]) -> Structure:
    """Rename elements via an injective mapping."""
    if len(set(mapping.values())) != len(mapping):
        raise StructureError("relabeling must be injective")
    rels = {
        name: frozenset(tuple(mapping[e] for e in t) for t in tups)
        for name, tups in s.rels.items()
    }
    return Structure(
        s.sig,
        frozenset(mapping[e] for e in s.domain),
        rels,
        {c: mapping[e] for c, e in s.consts.items()},
    )


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


class ElementTable:
    """Shared token<->id mapping so several files can share elements by name."""

    def __init__(self):
        self.ids: dict[str, int] = {}
        self.names: dict[int, str] = {}

    def id_for(self, token: str) -> int:
        if token in self.ids:
            return self.ids[token]
        if re.fullmatch(r"-?\d+", token):
            i = int(token)
        else:
            i = max(self.ids.values(), default=0) + 1
            while i in self.names:
                i += 1
        self.ids[token] = i
        self.names[i] = token
        return i

    def name_for(self, i: int) -> str:
        return self.names.get(i, str(i))


def parse_structure(
    text: str,
    sig: Optional[Signature] = None,
    table: Optional[ElementTable] = None,
) -> Structure:
    """Parse the line-oriented structure format.

    ``domain: a b c`` then ``const c = a`` lines then one fact per line,
    ``R(a,b)`` (nullary facts as ``R()``).  Facts over undeclared elements are
    rejected.
    """
    table = table if table is not None else ElementTable()
    working = sig.copy() if sig is not None else Signature()
    domain: list[int] = []
    consts: dict[str, int] = {}
    rels: dict[str, set] = {}
    fact_re = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*\(\s*([^)]*)\)")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("domain:"):
            for token in line[len("domain:"):].split():
                domain.append(table.id_for(token))
            continue
        if line.startswith("const "):
            m = re.fullmatch(r"const\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\S+)", line)
            if not m:
                raise StructureError(f"malformed const line {lineno}: {raw!r}")
            working.declare_constant(m.group(1))
            consts[m.group(1)] = table.id_for(m.group(2))
            continue
        m = fact_re.fullmatch(line)
        if not m:
            raise StructureError(f"malformed fact on line {lineno}: {raw!r}")
        name = m.group(1)
        tokens = [t.strip() for t in m.group(2).split(",")] if m.group(2).strip() else []
        for t in tokens:
            if t not in table.ids or table.ids[t] not in domain:
                raise StructureError(f"fact over undeclared element {t!r} on line {lineno}")
        tup = tuple(table.ids[t] for t in tokens)
        working.declare_relation(name, len(tup))
        rels.setdefault(name, set()).add(tup)
    if not domain:
        raise StructureError("structure file declares no domain")
    for name, e in consts.items():
        if e not in domain:
            raise StructureError(f"constant {name} interpreted outside the domain")
    return Structure(
        working,
        frozenset(domain),
        {name: frozenset(tups) for name, tups in rels.items()},
        consts,
    )


def render_structure(s: Structure, table: Optional[ElementTable] = None) -> str:
    name = (lambda e: table.name_for(e)) if table is not None else str
    lines = ["domain: " + " ".join(name(e) for e in sorted(s.domain))]
    for c in sorted(s.consts):
        lines.append(f"const {c} = {name(s.consts[c])}")
    for r in sorted(s.sig.relations):
        for tup in sorted(s.rel(r)):
            lines.append(f"{r}({','.join(name(e) for e in tup)})")
    return "\n".join(lines) + "\n"
