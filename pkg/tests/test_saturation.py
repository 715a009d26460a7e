import itertools
import random

import pytest

from fo2dec import corpus
from fo2dec.algebra import leaf_completion
from fo2dec.configurations import canonical, config_leq, validity
from fo2dec.profiles import ProfileSpace, bits
from fo2dec.saturation import (DEFAULTS, LOGICS, SatEngine, check_profile_saturation, decide,
                               initial_configs, is_x_compatible, sat_fixpoint, useful_sets,
                               variant_relevant_configs, x_compatible_unions)
from fo2dec.terms import parse_letter, parse_shal
from fo2dec.verify import VerifyReport, verify_saturation_witness

L = parse_letter


@pytest.fixture(scope="module")
def tiny1():
    mc = leaf_completion(corpus.tiny1())
    return mc, ProfileSpace(mc)


def test_initial_configs_alg_a():
    mc = leaf_completion(corpus.alg_a())
    sp = ProfileSpace(mc)
    init = initial_configs(sp)
    assert len(init) == 4 + 1 + 4
    assert all(bin(c.alpha).count("1") == 1 and len(c.family) == 1 for c in init)


def test_trivial_fixpoint():
    mc = leaf_completion(corpus.trivial())
    st = sat_fixpoint(ProfileSpace(mc), 1)
    assert st.complete and len(st) == 59
    wit, exhausted, _ = check_profile_saturation(mc, threads=1)
    assert wit is None and exhausted


def test_tiny1_golden_sizes(tiny1):
    mc, sp = tiny1
    sizes = [len(sat_fixpoint(sp, X)) for X in (1, 2, 3)]
    assert sizes == [239, 223, 247]


def test_alg_a_golden_size():
    mc = leaf_completion(corpus.alg_a())
    st = sat_fixpoint(ProfileSpace(mc), 1 << mc.H.index("h1"))
    assert st.complete and len(st) == 959


def test_fixpoint_closed_under_sums(tiny1):
    mc, sp = tiny1
    eng = SatEngine(sp, 3)
    st = eng.run()
    elems = list(st.elements)
    rng = random.Random(0)
    for _ in range(300):
        u, v = rng.choice(elems), rng.choice(elems)
        assert eng.ops.sum(u, v) in st.elements


def test_derivations_are_recorded(tiny1):
    mc, sp = tiny1
    st = SatEngine(sp, 1).run()
    for c, (rule, parents) in st.elements.items():
        if rule == "sum":
            assert all(p in st.elements for p in parents)
        elif rule == "uplift":
            a, bs, b = parents
            assert a in st.elements and b in st.elements


def test_shuffled_runs_agree(tiny1):
    mc, sp = tiny1
    runs = []
    for seed in (1, 2):
        space = ProfileSpace(mc)
        st = SatEngine(space, 3, rng=random.Random(seed)).run()
        runs.append(sorted(canonical(space, c) for c in st.elements))
    assert runs[0] == runs[1]


def test_exhaustive_alphabets_agree(tiny1):
    mc, sp = tiny1
    a = sorted(canonical(sp, c) for c in SatEngine(sp, 2).run().elements)
    sp2 = ProfileSpace(mc)
    b = sorted(canonical(sp2, c) for c in SatEngine(sp2, 2, exhaustive_alphabets=True).run().elements)
    assert a == b


def test_prune_leq_keeps_the_downset(tiny1):
    mc, sp = tiny1
    full = SatEngine(sp, 3).run()
    pruned = SatEngine(sp, 3, prune_leq=True).run()
    assert len(pruned) <= len(full)
    for c in full.elements:
        assert any(config_leq(c, d) for d in pruned.elements if d.alpha == c.alpha)


def test_budget_is_reported(tiny1):
    mc, sp = tiny1
    eng = SatEngine(sp, 3, cap=50)
    from fo2dec.profiles import Budget
    with pytest.raises(Budget):
        eng.run()


def test_x_compatible_unions_empty_x(tiny1):
    mc, sp = tiny1
    st = sat_fixpoint(sp, 0)
    assert list(x_compatible_unions(sp, st)) == []
    assert not any(is_x_compatible(sp, 0, c) for c in st.elements)


def test_x_compatible_unions_size_ascending(tiny1):
    mc, sp = tiny1
    st = sat_fixpoint(sp, 2)  # X = {h1}; {h0, h1} is not mutually reachable
    got = list(itertools.islice(x_compatible_unions(sp, st, max_union=2), 40))
    assert got
    sizes = [len(parts) for parts, _ in got]
    assert sizes == sorted(sizes)
    for parts, cfg in got:
        rep = validity(sp, cfg)
        assert rep.branching and rep.reduced and rep.maxClass == 2


def test_useful_sets():
    assert useful_sets(leaf_completion(corpus.alg_a())) == []
    be = leaf_completion(corpus.build("alg_be"))
    xs = useful_sets(be)
    assert all(bin(X).count("1") >= 2 for X in xs)
    names = lambda X: sorted(be.H.names[h] for h in bits(X))
    assert ["m001", "m111", "t0"] in [names(X) for X in xs]


def test_variant_configs_sibling_examples():
    mc = leaf_completion(corpus.count_two())
    sp = ProfileSpace(mc)
    one, many = sp.shal_profile(parse_shal("a"), 0), sp.shal_profile(parse_shal("a + a"), 0)
    assert many == sp.shal_profile(parse_shal("a + a + a"), 1)
    a = 1 << sp.letter_index[L("a")]
    (s_cfg,) = variant_relevant_configs(sp, 0, "S", alphabets=[a])
    assert s_cfg.family == frozenset([frozenset([one, many])])
    sneq = variant_relevant_configs(sp, 0, "SNEQ", alphabets=[a])
    assert sorted(c.family for c in sneq) == sorted([frozenset([frozenset([one])]),
                                                     frozenset([frozenset([many])])])


def test_variant_s_ignores_order():
    mc = leaf_completion(corpus.alg_first())
    sp = ProfileSpace(mc)
    ac = sp.letter_index[L("a")], sp.letter_index[L("c")]
    bs = (1 << ac[0]) | (1 << ac[1])
    (cfg,) = variant_relevant_configs(sp, 0, "S", alphabets=[bs])
    for text in ("a + c", "c + a"):
        p = parse_shal(text)
        for x in range(2):
            assert any(sp.shal_profile(p, x) in mb for mb in cfg.family)
    # the member of a holds both the leftmost and the rightmost a
    mb = next(mb for mb in cfg.family if sp.shal_profile(parse_shal("a + c"), 0) in mb)
    assert sp.shal_profile(parse_shal("c + a"), 1) in mb


def test_alg_be_saturation_witness(be_saturation, alg_be):
    wit, exhausted, stats = be_saturation
    assert wit is not None
    rep = verify_saturation_witness(leaf_completion(alg_be), wit.to_json(), VerifyReport())
    assert rep.ok, rep.checks


def test_tampered_witness_is_rejected(be_saturation, alg_be):
    w = be_saturation[0].to_json()
    bad = dict(w, h2=w["h1"])
    assert not verify_saturation_witness(leaf_completion(alg_be), bad, VerifyReport()).ok
    bad = dict(w, factorization=w["factorization"][:1])
    assert not verify_saturation_witness(leaf_completion(alg_be), bad, VerifyReport()).ok


def test_smaller_budgets_never_claim_definable(alg_be):
    mc = leaf_completion(alg_be)
    for cap in (5, 50, 200):
        wit, exhausted, _ = check_profile_saturation(mc, {"sat_cap": cap}, threads=1)
        assert wit is not None or not exhausted


def test_decide_examples():
    assert decide(corpus.alg_a(), "FO2").outcome == "Definable"
    v = decide(corpus.alg_par(), "FO2")
    assert (v.outcome, v.failedCondition) == ("NotDefinable", "IdentityH")
    assert v.identityWitness == {"h": "p1", "g": "p1", "lhs": "p1", "rhs": "p0", "identity": "eqh"}
    v = decide(corpus.alg_first(), "EFH")
    assert (v.failedCondition, v.identityWitness["identity"]) == ("VariantIdentity", "f+g=g+f")
    assert decide(corpus.alg_first(), "FO2").outcome == "Definable"
    assert decide(corpus.alg_a(), "EFH").outcome == "Definable"
    v = decide(corpus.alg_a(), "FO2SUCC")
    assert v.outcome == "Inconclusive" and [r["identity"] for r in v.identities] == ["eqhx", "eqv"]
    with pytest.raises(ValueError):
        decide(corpus.alg_a(), "MSO")


def test_verdict_json_shape():
    v = decide(corpus.alg_a(), "FO2")
    j = v.to_json()
    assert list(j) == ["outcome", "logic", "failedCondition", "identities", "budgets", "note"]
    assert "timings" not in j and "timings" in v.to_json(timings=True)
    assert j["budgets"] == DEFAULTS
    assert set(LOGICS) == {"FO2", "EFH", "EFHS", "FO2SUCC"}
