import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fo2dec import corpus
from fo2dec.algebra import leaf_completion
from fo2dec.configurations import config_leq, Config
from fo2dec.games import (FormulaSyntaxError, LetterKinds, eval_eff, forest_game_equiv,
                          gk_configuration, modal_depth, parse_formula, random_formula,
                          relaxed_classes, relaxed_game_equiv, relaxed_game_wins, word_game_equiv)
from fo2dec.profiles import Budget, ProfileSpace
from fo2dec.terms import enumerate_shals, parse_forest, parse_letter, parse_shal

from oracles import naive_eval, naive_forest_game, naive_relaxed_wins, random_forest

S = parse_shal


@pytest.fixture(scope="module")
def mc():
    return leaf_completion(corpus.alg_a())


def test_eval_eff_examples():
    assert eval_eff(parse_formula("a"), parse_forest("a"))
    assert eval_eff(parse_formula("EF(a)"), parse_forest("b(a)"))
    assert not eval_eff(parse_formula("EF(a)"), parse_forest("a + a"))
    assert eval_eff(parse_formula("Fh(a)"), parse_forest("b(a) + a"))
    assert not eval_eff(parse_formula("FhInv(a)"), parse_forest("b(a) + a"))


def test_formula_parsing():
    f = parse_formula("EF(a) and not Fh(b or c)")
    assert parse_formula(str(f)) == f
    assert modal_depth(f) == 1
    assert modal_depth(parse_formula("EF(Fup(a))")) == 2
    with pytest.raises(FormulaSyntaxError):
        parse_formula("EF(a")
    with pytest.raises(FormulaSyntaxError):
        parse_formula("a $ b")


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_eval_against_naive_evaluator(seed):
    rng = random.Random(seed)
    f = random_forest(rng, ["a", "c"], ["b", "d"])
    mods = ("EF", "Fup", "Fh", "FhInv", "S", "Sneq", "Xh", "XhInv")
    phi = random_formula(rng, ["a", "b", "c", "d"], 3, mods, 6)
    assert eval_eff(phi, f) == naive_eval(phi, f)


def test_word_game_examples():
    assert word_game_equiv(S("a + b(a)"), S("a + b(a)"), 5)
    assert not word_game_equiv(S("a"), S("a + a"), 1)
    assert word_game_equiv(S("a + a + a"), S("a + a + a + a"), 1)
    assert not word_game_equiv(S("a + a + a"), S("a + a + a + a"), 4)


def test_word_game_against_naive():
    letters = [parse_letter("a"), parse_letter("b(a)")]
    words = list(enumerate_shals(letters, 4))
    rng = random.Random(1)
    for _ in range(300):
        p, q = rng.choice(words), rng.choice(words)
        k = rng.randint(0, 3)
        want = naive_relaxed_wins(p, 0, q, 0, k, lambda c: False, lambda c: c.inner)
        assert word_game_equiv(p, q, k) == want


def test_forest_game_examples():
    s = parse_forest("b(a + c)")
    assert forest_game_equiv(s, s, 4)
    assert forest_game_equiv(parse_forest("b(a)"), parse_forest("b(a + a)"), 1)
    assert not forest_game_equiv(parse_forest("b(a)"), parse_forest("b(a + a)"), 2)


def test_forest_game_consistent_with_depth_two_formulas():
    s, t = parse_forest("b(a)"), parse_forest("b(a + a)")
    equiv = forest_game_equiv(s, t, 2)
    rng = random.Random(0)
    seen_diff = False
    for _ in range(300):
        phi = random_formula(rng, ["a", "b"], 2)
        if eval_eff(phi, s) != eval_eff(phi, t):
            seen_diff = True
            assert not equiv
    assert not equiv and seen_diff


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_forest_game_against_naive(seed):
    rng = random.Random(seed)
    s = random_forest(rng, ["a", "c"], ["b"], 6)
    t = random_forest(rng, ["a", "c"], ["b"], 6)
    k = rng.randint(0, 3)
    assert forest_game_equiv(s, t, k) == naive_forest_game(s, t, k)


def test_forest_game_budget():
    s = parse_forest(" + ".join(["a"] * 50))
    with pytest.raises(Budget):
        forest_game_equiv(s, s, 4, budget=1000)


def _kinds_for(mc, X):
    leaves = mc.leaves
    relaxed = lambda c: c.is_port or (bool(c.inner) and leaves.get(c.leaf) in X)
    return relaxed, (lambda c: c.inner)


@pytest.mark.parametrize("variant", ["FO2", "S", "SNEQ", "SUC"])
def test_relaxed_game_against_naive(mc, variant):
    letters = [parse_letter(x) for x in ["a", "b([])", "b(a)", "b(l_h1)", "b(c)"]]
    rng = random.Random(hash(variant) % 1000)
    for _ in range(250):
        X = rng.choice([[], [1], [0], [0, 1]])
        p = tuple(rng.choice(letters) for _ in range(rng.randint(1, 5)))
        q = tuple(rng.choice(letters) for _ in range(rng.randint(1, 5)))
        x, y = rng.randrange(len(p)), rng.randrange(len(q))
        k = rng.randint(0, 3)
        relaxed, inner = _kinds_for(mc, set(X))
        want = naive_relaxed_wins(p, x, q, y, k, relaxed, inner, variant)
        assert relaxed_game_wins((p, x), (q, y), k, X, mc, variant) == want, (p, x, q, y, k, X)


def test_relaxed_identical_positions(mc):
    p = S("a + b([]) + b(l_h1)")
    for k in range(4):
        for x in range(len(p)):
            assert relaxed_game_equiv((p, x), (p, x), k, [1], mc)


def test_port_and_x_node_blur(mc):
    X = [mc.H.index("h1")]
    # the labels blur, so zero rounds do not separate them
    assert relaxed_game_wins((S("b([])"), 0), (S("b(l_h1)"), 0), 0, X, mc)
    # one round does: the safety move asks for a port in a shal that has none
    assert not relaxed_game_wins((S("b([])"), 0), (S("b(l_h1)"), 0), 1, X, mc)
    # with a port on both sides the X-node and the port stay matched
    p, q = S("b([]) + b([]) + b([]) + b(l_h1)"), S("b([]) + b(l_h1) + b([]) + b(l_h1)")
    assert relaxed_game_equiv((p, 0), (q, 0), 3, X, mc)
    assert not word_game_equiv(p, q, 3)
    assert not relaxed_game_equiv((S("b([])"), 0), (S("b(l_h1)"), 0), 0, X, mc)
    # a non-X node is matched exactly
    assert not relaxed_game_wins((S("b([])"), 0), (S("b(l_h0)"), 0), 1, X, mc)


def test_safety_move(mc):
    X = [mc.H.index("h1")]
    # pebbles on b([]) and b(l_h1); Spoiler keeps one and demands a port in the other shal
    p = S("b(l_h1) + b([])")
    q = S("b(l_h1) + b(l_h1) + b([])")
    relaxed, inner = _kinds_for(mc, set(X))
    for k in range(4):
        for x in range(len(p)):
            for y in range(len(q)):
                assert relaxed_game_wins((p, x), (q, y), k, X, mc) == naive_relaxed_wins(p, x, q, y, k, relaxed, inner)


def _universe(mc):
    letters = [parse_letter(x) for x in ["a", "b([])", "b(l_h1)"]]
    return list(enumerate_shals(letters, 4))


def test_relaxed_classes_transitive(mc):
    shals = _universe(mc)
    X = [mc.H.index("h1")]
    for k in (1, 2, 3):
        E = relaxed_classes(shals, k, X, mc)
        n, L = E.shape[:2]
        flat = E.reshape(n * L, n * L).astype(np.float32)
        assert ((flat @ flat > 0) <= (flat > 0)).all()
        assert (flat == flat.T).all()


def test_relaxed_rounds_monotone_and_exact_implies_relaxed(mc):
    shals = _universe(mc)
    X = [mc.H.index("h1")]
    rng = random.Random(8)
    for k in (0, 1, 2):
        E1 = relaxed_classes(shals, k + 1, X, mc)
        E0 = relaxed_classes(shals, k, X, mc)
        assert (E1 <= E0).all()
    for _ in range(200):
        p, q = rng.choice(shals), rng.choice(shals)
        k = rng.randint(0, 3)
        if set(p) == set(q) and word_game_equiv(p, q, k):
            assert relaxed_game_equiv((p, 0), (q, 0), k, X, mc)


def test_port_partner_property(mc):
    """k+2 relaxed equivalent shals have relaxed equivalent port-nodes."""
    shals = _universe(mc)
    X = [mc.H.index("h1")]
    k = 1
    E2 = relaxed_classes(shals, k + 2, X, mc)
    Ek = relaxed_classes(shals, k, X, mc)
    for a, b in itertools.product(range(len(shals)), repeat=2):
        if not E2[a, 0, b, 0]:
            continue
        for i, c in enumerate(shals[a]):
            if c.is_port:
                assert any(Ek[a, i, b, j] for j, d in enumerate(shals[b]) if d.is_port)


def test_relaxed_classes_order_independent(mc):
    shals = _universe(mc)
    X = [1]
    perm = list(range(len(shals)))
    random.Random(3).shuffle(perm)
    E = relaxed_classes(shals, 2, X, mc)
    F = relaxed_classes([shals[i] for i in perm], 2, X, mc)
    P = np.array(perm)
    assert (F == E[P][:, :, P]).all()


def test_gk_configuration(mc):
    sp = ProfileSpace(mc)
    X = [1]
    q = S("a")
    base = gk_configuration(q, 2, X, mc, 1, sp)
    assert base == frozenset([frozenset([sp.shal_profile(q, 0)])])
    q = S("a + b([])")
    small = gk_configuration(q, 2, X, mc, 2, sp)
    big = gk_configuration(q, 2, X, mc, 4, sp)
    own = {sp.shal_profile(q, y) for y in range(len(q))}
    assert all(any(p in mb for mb in small) for p in own)
    assert all(any(x <= y for y in big) for x in small)
    with pytest.raises(ValueError):
        gk_configuration(q, 2, X, mc, 1, sp)
