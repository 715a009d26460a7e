import copy

from fo2dec import corpus
from fo2dec.saturation import decide
from fo2dec.verify import verify_verdict


def test_identity_verdicts_verify():
    for name, logic in [("alg_par", "FO2"), ("alg_first", "EFH"), ("count_two", "EFH"),
                        ("alg_be", "FO2"), ("alg_be_raw", "FO2SUCC")]:
        m = corpus.build(name)
        v = decide(m, logic).to_json()
        assert v["outcome"] == "NotDefinable"
        rep = verify_verdict(m, v)
        assert rep.ok, (name, logic, rep.checks)


def test_definable_verdict_has_nothing_to_verify():
    m = corpus.alg_a()
    rep = verify_verdict(m, decide(m).to_json())
    assert not rep.ok


def test_tampered_identity_witness_rejected():
    m = corpus.alg_par()
    v = decide(m).to_json()
    bad = copy.deepcopy(v)
    bad["identityWitness"]["h"] = bad["identityWitness"]["g"] = "p0"
    assert not verify_verdict(m, bad).ok
    bad = copy.deepcopy(v)
    bad["identityWitness"]["h"] = "nope"
    assert not verify_verdict(m, bad).ok
    bad = copy.deepcopy(v)
    bad["logic"] = "EFH"  # eqh is not part of that suite
    assert not verify_verdict(m, bad).ok


def test_wrong_algebra_rejected():
    v = decide(corpus.alg_par()).to_json()
    assert not verify_verdict(corpus.alg_a(), v).ok


def test_saturation_verdict_verifies(be_saturation, alg_be):
    wit = be_saturation[0]
    v = {"outcome": "NotDefinable", "logic": "FO2", "failedCondition": "Saturation", "witness": wit.to_json()}
    rep = verify_verdict(alg_be, v)
    assert rep.ok, rep.checks
    names = [c["check"] for c in rep.checks]
    assert "v^w h1 != v^w h2" in names and "every requirement is met by a factor" in names


def test_saturation_verdict_with_bad_profile(be_saturation, alg_be):
    w = copy.deepcopy(be_saturation[0].to_json())
    w["configuration"]["profiles"][0]["position"] += 1
    v = {"outcome": "NotDefinable", "logic": "FO2", "witness": w}
    assert not verify_verdict(alg_be, v).ok
