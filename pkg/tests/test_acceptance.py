"""Acceptance suite: one test per criterion.

Each test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line with the
measured numbers and the pinned limits, then asserts.
"""
import json
import random
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from fo2dec import corpus
from fo2dec.algebra import (ActionAxiomError, AssociativityError, InsertAxiomError, dump_presentation,
                            leaf_completion, load_morphism, parse_presentation)
from fo2dec.cli import main
from fo2dec.configurations import ConfigOps, canonical, config_leq
from fo2dec.games import eval_eff, forest_game_equiv, random_formula, relaxed_classes
from fo2dec.identities import check_eqh, check_eqv
from fo2dec.profiles import ProfileSpace, all_profiles
from fo2dec.saturation import LOGICS, SatEngine, decide
from fo2dec.terms import Forest, Tree, enumerate_shals, parse_letter
from fo2dec.validation import validate_profiles, validate_prop_algo
from fo2dec.verify import verify_verdict

from oracles import law_fails, mutate, random_forest, raw_tables, sample_configs, shrink

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

# pinned limits
AXIOMS_SECONDS = 1.0
IDENTITY_SECONDS = 1.0
GAME_PAIRS, GAME_FORMULAS, GAME_MAX_NODES, GAME_MAX_K, GAME_SECONDS = 100, 100, 12, 2, 30.0
GAME_MIN_EQUIVALENT = 30  # keep the check from being vacuous
PROFILE_LETTERS, PROFILE_MAX_LEN, PROFILE_SECONDS = ["a", "c", "b([])", "b(a)"], 3, 30.0
CONFIG_SAMPLES, CONFIG_SECONDS = 500, 30.0
PROP_MAX_LEN, PROP_SECONDS = 6, 300.0
E2E_SECONDS = 600.0


def report(n, ok, detail):
    print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


# ---------------------------------------------------------------------------
# 1. algebra axioms

MUTATIONS = [
    ("alg_a", "action", "v0 h1", "h0", ActionAxiomError),
    ("alg_a", "insertL", "h1 v0", "v0", InsertAxiomError),
    ("alg_a", "insertR", "v0 h1", "v0", InsertAxiomError),
    ("count_two", "Hplus", "n1 n2", "n0", AssociativityError),
]


def test_acceptance_1_algebra_axioms():
    t0 = time.perf_counter()
    loaded = [load_morphism(p) for p in sorted(CORPUS.glob("*.alg"))]
    caught = 0
    for name, section, lhs, rhs, err in MUTATIONS:
        text = mutate(dump_presentation(corpus.build(name)), section, lhs, rhs)
        try:
            parse_presentation(text)
        except err as exc:
            caught += law_fails(raw_tables(text), exc)
    dt = time.perf_counter() - t0
    ok = len(loaded) == 9 and caught == len(MUTATIONS) and dt < AXIOMS_SECONDS
    report(1, ok, f"{len(loaded)} corpus algebras valid; {caught}/{len(MUTATIONS)} mutations rejected "
                  f"with a failing witness; {dt:.2f}s (limit {AXIOMS_SECONDS}s)")
    assert ok


# ---------------------------------------------------------------------------
# 2. identity layer

def test_acceptance_2_identities():
    t0 = time.perf_counter()
    got = {}
    for name in ("trivial", "alg_a", "alg_par", "alg_be"):
        alg = corpus.build(name).algebra
        got[name] = (check_eqh(alg.H), check_eqv(alg.V))
    dt = time.perf_counter() - t0
    par_h = got["alg_par"][0]
    rows = {
        "trivial hold": all(r.holds for r in got["trivial"]),
        "alg_a hold": all(r.holds for r in got["alg_a"]),
        "alg_par fails h=g=p1": not par_h.holds and par_h.witness["h"] == par_h.witness["g"] == "p1",
        "alg_be hold": all(r.holds for r in got["alg_be"]),
        f"under {IDENTITY_SECONDS}s": dt < IDENTITY_SECONDS,
    }
    be = got["alg_be"][1]
    detail = "; ".join(f"{k}: {'yes' if v else 'NO'}" for k, v in rows.items())
    if not be.holds:
        detail += f" (eqv fails on alg_be at {be.witness})"
    ok = report(2, all(rows.values()), f"{detail}; {dt:.2f}s")
    assert ok


# ---------------------------------------------------------------------------
# 3. games and logic

def _size(trees):
    return sum(1 + _size(t.children) for t in trees)


def _duplicate_sibling(rng, trees):
    """Copy one tree of a random sibling row next to itself."""
    trees = list(trees)
    i = rng.randrange(len(trees))
    t = trees[i]
    if t.children and rng.random() < 0.6:
        trees[i] = Tree(t.label, _duplicate_sibling(rng, t.children))
    else:
        trees.insert(i, t)
    return tuple(trees)


def _pair(rng):
    s = random_forest(rng, ["a", "c"], ["b"], GAME_MAX_NODES)
    if rng.random() < 0.3:
        return s, random_forest(rng, ["a", "c"], ["b"], GAME_MAX_NODES)
    for _ in range(20):
        t = _duplicate_sibling(rng, s.trees)
        if _size(t) <= GAME_MAX_NODES:
            return s, Forest(t)
    return s, s


def test_acceptance_3_games_match_formulas():
    rng = random.Random(2024)
    t0 = time.perf_counter()
    equivalent = violations = 0
    for _ in range(GAME_PAIRS):
        s, t = _pair(rng)
        for k in range(GAME_MAX_K + 1):
            if not forest_game_equiv(s, t, k):
                continue
            equivalent += 1
            for _ in range(GAME_FORMULAS):
                phi = random_formula(rng, ["a", "b", "c"], k)
                violations += eval_eff(phi, s) != eval_eff(phi, t)
    dt = time.perf_counter() - t0
    ok = violations == 0 and equivalent >= GAME_MIN_EQUIVALENT and dt < GAME_SECONDS
    report(3, ok, f"{GAME_PAIRS} pairs x k<= {GAME_MAX_K}: {equivalent} equivalent (min {GAME_MIN_EQUIVALENT}), "
                  f"{violations} formula violations; {dt:.1f}s (limit {GAME_SECONDS}s)")
    assert ok


# ---------------------------------------------------------------------------
# 4. profile soundness

def test_acceptance_4_profile_soundness(alg_a_c):
    t0 = time.perf_counter()
    rep = validate_profiles(alg_a_c, PROFILE_MAX_LEN, PROFILE_LETTERS)
    dt = time.perf_counter() - t0
    ok = rep["pass"] and rep["positions"] > 0 and dt < PROFILE_SECONDS
    report(4, ok, f"{rep['positions']} positions over letters {rep['letters']} up to length "
                  f"{PROFILE_MAX_LEN}: {len(rep['mismatches'])} mismatches; {dt:.1f}s (limit {PROFILE_SECONDS}s)")
    assert ok


# ---------------------------------------------------------------------------
# 5. configuration laws

def test_acceptance_5_configuration_laws(alg_a_c):
    rng = random.Random(5)
    t0 = time.perf_counter()
    sp = ProfileSpace(alg_a_c, [parse_letter(x) for x in PROFILE_LETTERS])
    ops = ConfigOps(sp)
    pool = sample_configs(sp, ops, rng, 80)
    assoc = compat = 0
    for _ in range(CONFIG_SAMPLES):
        u, v, w = (rng.choice(pool) for _ in range(3))
        assoc += ops.sum(ops.sum(u, v), w) != ops.sum(u, ops.sum(v, w))
    for _ in range(CONFIG_SAMPLES):
        u, v = rng.choice(pool), rng.choice(pool)
        u1, v1 = shrink(rng, u), shrink(rng, v)
        compat += not (config_leq(u1, u) and config_leq(v1, v) and config_leq(ops.sum(u1, v1), ops.sum(u, v)))
    dt = time.perf_counter() - t0
    ok = assoc == 0 and compat == 0 and dt < CONFIG_SECONDS
    report(5, ok, f"{len(pool)} reachable configurations; associativity {assoc}/{CONFIG_SAMPLES}, "
                  f"compatibility {compat}/{CONFIG_SAMPLES} violations; {dt:.1f}s (limit {CONFIG_SECONDS}s)")
    assert ok


# ---------------------------------------------------------------------------
# 6. Sat against the relaxed game

def test_acceptance_6_sat_containment():
    t0 = time.perf_counter()
    lines, ok = [], True
    for name in ("tiny1", "tiny2"):
        rep = validate_prop_algo(corpus.build(name), PROP_MAX_LEN)
        inc = sum(len(e["incomplete"]) for e in rep["perX"])
        unv = sum(len(e["unverified"]) for e in rep["perX"])
        ver = sum(e["verified"] for e in rep["perX"])
        shals = sum(e["shals"] for e in rep["perX"])
        ok &= rep["pass"] and inc == 0 and unv == 0
        lines.append(f"{name}: {shals} shals, {inc} outside Sat, {ver} Sat elements verified, {unv} unverified")
    dt = time.perf_counter() - t0
    ok &= dt < PROP_SECONDS
    report(6, ok, f"{'; '.join(lines)}; length <= {PROP_MAX_LEN}; {dt:.0f}s (limit {PROP_SECONDS:.0f}s)")
    assert ok


# ---------------------------------------------------------------------------
# 7. end-to-end verdicts

def test_acceptance_7_end_to_end(be_saturation, alg_be):
    t0 = time.perf_counter()
    v = {}
    for name, logic in [("alg_a", "FO2"), ("alg_par", "FO2"), ("alg_be", "FO2"), ("alg_first", "EFH"),
                        ("alg_first", "FO2"), ("alg_a", "EFH")]:
        v[name, logic] = decide(corpus.build(name), logic)
    dt = time.perf_counter() - t0
    first = v["alg_first", "EFH"]
    rows = {
        "alg_a FO2 Definable": v["alg_a", "FO2"].outcome == "Definable",
        "alg_par FO2 IdentityH": (v["alg_par", "FO2"].outcome, v["alg_par", "FO2"].failedCondition)
        == ("NotDefinable", "IdentityH"),
        "alg_first EFH commutativity": first.outcome == "NotDefinable"
        and first.to_json()["identityWitness"]["identity"] == "f+g=g+f",
        "alg_first FO2 Definable": v["alg_first", "FO2"].outcome == "Definable",
        "alg_a EFH Definable": v["alg_a", "EFH"].outcome == "Definable",
    }
    # FO2SUCC: identity failures are NotDefinable; everything else is Inconclusive with the report
    succ_ok = True
    for name in list(corpus.BUILDERS) + ["alg_be"]:
        r = decide(corpus.build(name), "FO2SUCC").to_json()
        holds = all(x["holds"] for x in r["identities"])
        want = "Inconclusive" if holds else "NotDefinable"
        succ_ok &= r["outcome"] == want and len(r["identities"]) > 0
    rows["FO2SUCC Inconclusive with identity report"] = succ_ok
    be = v["alg_be", "FO2"]
    rows[f"alg_be within {E2E_SECONDS:.0f}s"] = dt < E2E_SECONDS
    wit = be_saturation[0]
    sat_doc = {"outcome": "NotDefinable", "logic": "FO2", "failedCondition": "Saturation",
               "witness": wit.to_json()} if wit is not None else None
    rows["alg_be saturation witness re-verified"] = sat_doc is not None and verify_verdict(alg_be, sat_doc).ok
    rows["alg_be FO2 Saturation"] = (be.outcome, be.failedCondition) == ("NotDefinable", "Saturation")
    detail = "; ".join(f"{k}: {'yes' if ok else 'NO'}" for k, ok in rows.items())
    detail += f" (alg_be decided {be.outcome}/{be.failedCondition}); {dt:.1f}s"
    ok = report(7, all(rows.values()), detail)
    assert ok


# ---------------------------------------------------------------------------
# 8. determinism

def test_acceptance_8_determinism(alg_a_c):
    diffs = {}
    letters = [parse_letter(x) for x in PROFILE_LETTERS]
    runs = []
    for seed in (11, 12):
        sp = ProfileSpace(alg_a_c, letters)
        groups = all_profiles(alg_a_c, sp, rng=random.Random(seed))
        runs.append({a: sorted(sp.canonical(p) for p in ps) for a, ps in groups.items()})
    diffs["profiles"] = runs[0] != runs[1]

    mc = leaf_completion(corpus.tiny1())
    runs = []
    for seed in (11, 12):
        sp = ProfileSpace(mc)
        st = SatEngine(sp, 3, rng=random.Random(seed)).run()
        runs.append(sorted(canonical(sp, c) for c in st.elements))
    diffs["Sat"] = runs[0] != runs[1]

    shals = list(enumerate_shals([parse_letter(x) for x in ["a", "b([])", "b(l_h1)"]], 4))
    base = relaxed_classes(shals, 2, [1], alg_a_c)
    game_diff = False
    for seed in (11, 12):
        perm = list(range(len(shals)))
        random.Random(seed).shuffle(perm)
        E = relaxed_classes([shals[i] for i in perm], 2, [1], alg_a_c)
        game_diff |= not (E == base[perm][:, :, perm]).all()
    diffs["game DP"] = game_diff

    verdicts = [json.dumps(decide(corpus.tiny1(), "FO2", seed=s).to_json()) for s in (11, 12)]
    diffs["decide"] = verdicts[0] != verdicts[1]
    n = sum(diffs.values())
    ok = report(8, n == 0, "; ".join(f"{k}: {'DIFF' if d else 'identical'}" for k, d in diffs.items())
                + f"; {n} diffs (limit 0)")
    assert ok


# ---------------------------------------------------------------------------
# 9. witness integrity

def test_acceptance_9_witness_integrity(tmp_path, be_saturation):
    runner = CliRunner()
    total = verified = 0
    for path in sorted(CORPUS.glob("*.alg")):
        for logic in LOGICS:
            v = decide(load_morphism(path), logic).to_json()
            if v["outcome"] != "NotDefinable":
                continue
            f = tmp_path / f"{path.stem}-{logic}.json"
            f.write_text(json.dumps(v))
            total += 1
            verified += runner.invoke(main, ["verify", str(path), str(f)]).exit_code == 0
    wit = be_saturation[0]
    if wit is not None:
        f = tmp_path / "alg_be-saturation.json"
        f.write_text(json.dumps({"outcome": "NotDefinable", "logic": "FO2", "witness": wit.to_json()}))
        total += 1
        verified += runner.invoke(main, ["verify", str(CORPUS / "alg_be.alg"), str(f)]).exit_code == 0
    ok = report(9, total > 0 and verified == total,
                f"{verified}/{total} NotDefinable verdicts re-verified by the verify command (limit 100%)")
    assert ok
