import random

import pytest
from hypothesis import given, settings, strategies as st

from exrules.rules import (
    Atom,
    Const,
    ParseError,
    Rule,
    RuleError,
    RuleFlag as F,
    Signature,
    Var,
    classify,
    eq,
    frontier_variables,
    make_rule,
    parse_rule,
    parse_rules,
    rel,
    render_rule,
)

x, y, z = Var("x"), Var("y"), Var("z")


def test_parse_basic_tgd():
    r = parse_rule("P(x), R(x,y) -> Q(y)")
    assert r.body == (rel("P", x), rel("R", x, y))
    assert len(r.heads) == 1
    assert r.heads[0].existential_vars == ()
    assert r.heads[0].atoms == (rel("Q", y),)


def test_parse_negative_constraint():
    r = parse_rule("P(x) -> false")
    assert r.body == (rel("P", x),)
    assert r.heads == ()
    assert r.is_negative_constraint


def test_parse_disjunctive_nullary():
    r = parse_rule("R() -> S() | T()")
    assert r.body == (rel("R"),)
    assert [d.atoms for d in r.heads] == [(rel("S"),), (rel("T"),)]


def test_parse_existential_and_constants():
    sig = Signature()
    sig.declare_constant("c")
    r = parse_rule("P(c) -> exists y. R(c,y)", sig)
    assert r.body == (rel("P", Const("c")),)
    assert r.heads[0].existential_vars == (y,)


def test_parse_equality_atom():
    r = parse_rule("P(x), x = y -> Q(y)")
    assert r.body[1] == eq(x, y)


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_rule("P(x -> Q(x)")
    sig = Signature()
    sig.declare_relation("P", 1)
    with pytest.raises(ParseError):
        parse_rule("P(x,y) -> Q(x)", sig)  # arity mismatch
    with pytest.raises(ParseError):
        parse_rule("P(x) -> exists 'c'. Q(x)")
    with pytest.raises(ParseError):
        parse_rule("P(x), Q('x') -> R(x)")  # variable reused as constant


def test_parse_rules_with_headers():
    rules, sig = parse_rules(
        """
        # comment
        @rel R/2
        @const c
        R(x, c) -> exists y. R(y, x)
        R(x, x) -> false
        """
    )
    assert len(rules) == 2
    assert sig.relations == {"R": 2}
    assert "c" in sig.constants


def test_unsafe_rule_is_accepted_by_parser():
    r = parse_rule("P(x), R(x,x) -> Q(y)")
    assert Var("y") in r.universal_vars()
    c = classify(r)
    assert F.GD in c and F.SAFE not in c and F.DED not in c


def test_falsum_restrictions():
    with pytest.raises(RuleError):
        make_rule((Atom("falsum", None, ()),), ())


def test_frontier_variables():
    assert frontier_variables(parse_rule("R(x,y), R(y,z) -> R(x,z)")) == {x, z}
    assert frontier_variables(parse_rule("P(x) -> false")) == frozenset()
    assert frontier_variables(parse_rule("E(x,y), E(y,z) -> C(y)")) == {y}


@pytest.mark.parametrize(
    "text,expect_in,expect_out",
    [
        ("P(x), R(x,y) -> Q(y)", {F.TGD, F.FRONTIER_GUARDED, F.GUARDED}, {F.LINEAR}),
        ("R(x,y), R(y,z) -> R(x,z)", {F.TGD}, {F.FRONTIER_GUARDED}),
        ("E(x,y), E(y,z) -> C(y)", {F.FRONTIER_GUARDED}, {F.GUARDED}),
        ("P(x), Q(x) -> R(x)", {F.GUARDED}, {F.LINEAR}),
        ("R(x,y) -> exists z. R(y,z)", {F.LINEAR, F.GUARDED, F.FRONTIER_GUARDED}, set()),
        ("R() -> S() | T()", {F.DED}, {F.ED}),
        ("P(x) -> false", {F.NEGATIVE_CONSTRAINT, F.SAFE}, {F.DED}),
        ("P(x), x = y -> Q(y)", {F.ED}, {F.TGD}),
    ],
)
def test_classify_examples(text, expect_in, expect_out):
    c = classify(parse_rule(text))
    for f in expect_in:
        assert f in c, f"{text} should be {f}"
    for f in expect_out:
        assert f not in c, f"{text} should not be {f}"


# ---------------------------------------------------------------------------
# random rules: hierarchy and round-trip
# ---------------------------------------------------------------------------

HIERARCHY = [
    (F.LINEAR, F.GUARDED),
    (F.GUARDED, F.FRONTIER_GUARDED),
    (F.FRONTIER_GUARDED, F.TGD),
    (F.TGD, F.ED),
    (F.ED, F.DED),
    (F.DED, F.SAFE),
]

VARS = [Var(n) for n in "uvwxyz"]
CONSTS = [Const("a0"), Const("b0")]
RELS = [("P", 1), ("Q", 1), ("R", 2), ("S", 2), ("T", 0)]


def random_rule(rng: random.Random) -> Rule:
    def term(pool):
        return rng.choice(pool)

    def atom(pool):
        if rng.random() < 0.15:
            return eq(term(pool), term(pool))
        name, arity = rng.choice(RELS)
        return rel(name, *(term(pool) for _ in range(arity)))

    body_pool = VARS[: rng.randint(1, 4)] + (CONSTS if rng.random() < 0.3 else [])
    body = [atom(body_pool) for _ in range(rng.randint(1, 3))]
    if not any(a.is_relational for a in body):
        body.append(rel("P", term(body_pool)))
    heads = []
    for _ in range(rng.randint(0, 2)):
        used = {t for a in body for t in a.args if t.is_var}
        exist = [v for v in VARS[4:] if rng.random() < 0.4]
        pool = list(used | set(exist)) + ([rng.choice(VARS)] if rng.random() < 0.2 else [])
        pool = pool or [VARS[0]]
        atoms = [atom(pool) for _ in range(rng.randint(1, 2))]
        exist = [v for v in exist if any(v in a.args for a in atoms)]
        # drop disjuncts that would make a variable both universal and existential
        universal_so_far = used | {
            t for d in heads for a in d[1] for t in a.args if t.is_var and t not in d[0]
        }
        exist = [v for v in exist if v not in universal_so_far]
        heads.append((tuple(exist), tuple(atoms)))
    from exrules.rules import HeadDisjunct

    try:
        return make_rule(tuple(body), tuple(HeadDisjunct(e, a) for e, a in heads))
    except RuleError:
        return make_rule(tuple(body), ())


def test_classification_hierarchy_on_random_rules():
    rng = random.Random(20240817)
    violations = 0
    for _ in range(1000):
        c = classify(random_rule(rng))
        for lower, upper in HIERARCHY:
            if lower in c and upper not in c:
                violations += 1
    assert violations == 0


def test_frontier_subset_of_universal_on_random_rules():
    rng = random.Random(7)
    for _ in range(500):
        r = random_rule(rng)
        assert frontier_variables(r) <= r.universal_vars()


def test_round_trip_on_random_rules():
    rng = random.Random(99)
    for _ in range(500):
        r = random_rule(rng)
        sig = Signature()
        assert parse_rule(render_rule(r), sig) == r


@given(st.integers(min_value=0, max_value=10**9))
@settings(max_examples=60, deadline=None)
def test_round_trip_property(seed):
    r = random_rule(random.Random(seed))
    assert parse_rule(render_rule(r)) == r


def test_guard_is_leftmost():
    from exrules.rules import guard_atom

    r = parse_rule("R(x,y), S(x,y) -> Q(y)")
    assert guard_atom(r, frontier_variables(r)) == rel("R", x, y)
