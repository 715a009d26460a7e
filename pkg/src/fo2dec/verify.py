"""Independent re-checking of NotDefinable verdicts.

Only the algebra and the verdict JSON are used: the quotient and the leaf
completion are recomputed, every profile of a saturation witness is
recomputed by plugging concrete forests into its stored shal, and the
factorization and inequality are re-evaluated directly in the tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import ForestMorphism, leaf_completion
from .configurations import Config, bits, profile_validity, requirement_sets, union_profiles
from .identities import identity_suite, reverify
from .profiles import ProfileSpace, representatives, semantic_profile
from .syntactic import syntactic_quotient
from .terms import TermError, parse_shal


@dataclass
class VerifyReport:
    ok: bool = True
    checks: list = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append({"check": name, "ok": bool(ok), "detail": detail})
        if not ok:
            self.ok = False
        return ok

    def to_json(self):
        return {"verified": self.ok, "checks": self.checks}


V_IDENTITIES = ("eqv",)


def verify_verdict(m: ForestMorphism, verdict: dict) -> VerifyReport:
    rep = VerifyReport()
    if verdict.get("outcome") != "NotDefinable":
        rep.add("outcome", False, f"outcome {verdict.get('outcome')!r} carries no witness")
        return rep
    q = syntactic_quotient(m)
    if verdict.get("identityWitness") is not None:
        _verify_identity(q, verdict, rep)
    elif verdict.get("witness") is not None:
        verify_saturation_witness(leaf_completion(q), verdict["witness"], rep)
    else:
        rep.add("witness", False, "NotDefinable verdict without a witness")
    return rep


def _verify_identity(q: ForestMorphism, verdict: dict, rep: VerifyReport):
    w = dict(verdict["identityWitness"])
    name = w.pop("identity", None)
    logic = verdict.get("logic", "FO2")
    names = [r.name for r in identity_suite(q.algebra, logic)]
    if not rep.add("identity belongs to logic", name in names, f"{name} for {logic}"):
        return
    s = q.V if name in V_IDENTITIES else q.H
    try:
        bad = reverify(s, name, w)
    except (KeyError, ValueError) as exc:
        rep.add("witness elements", False, f"unknown element {exc}")
        return
    rep.add("identity violated", bad, f"{name} with {w}")


def verify_saturation_witness(mc: ForestMorphism, w: dict, rep: VerifyReport) -> VerifyReport:
    space = ProfileSpace(mc)
    H, V = mc.H, mc.V
    try:
        X = sum(1 << H.index(h) for h in w["X"])
        h1, h2 = H.index(w["h1"]), H.index(w["h2"])
        v = V.index(w["v"])
        fact = [V.index(x) for x in w["factorization"]]
    except (KeyError, ValueError) as exc:
        rep.add("witness elements", False, str(exc))
        return rep
    reps = representatives(mc)
    # a union may mix alphabets; each component has a single one
    cfg = _load_checked(space, mc, reps, w["configuration"], rep, "configuration", same_alpha=False)
    if cfg is None:
        return rep
    if w.get("components"):
        parts = [_load_checked(space, mc, reps, d, rep, f"component {i}")
                 for i, d in enumerate(w["components"])]
        if any(p is None for p in parts):
            return rep
        fam = frozenset().union(*(p.family for p in parts))
        rep.add("configuration is the union of its components", fam == cfg.family)

    val = profile_validity(space, union_profiles(cfg))
    rep.add("branching", val.branching)
    rep.add("reduced", val.reduced)
    rep.add("valid forest types equal X", val.maxClass == X and val.validH == X,
            f"valid {sorted(H.names[h] for h in bits(val.validH))}")

    t = V.table
    prod = None
    for x in fact:
        prod = x if prod is None else t[prod][x]
    rep.add("factorization multiplies to v", bool(fact) and prod == v)
    rep.add("factors are valid context types", all(val.validV >> x & 1 for x in fact))
    reqs = requirement_sets(space, cfg, X, val.validV)
    covered = all(any(r >> x & 1 for x in fact) for r in reqs)
    rep.add("every requirement is met by a factor", covered, f"{len(reqs)} requirements")

    rep.add("h1, h2 in X", bool(X >> h1 & 1) and bool(X >> h2 & 1))
    e = V.idem(v)
    a, b = mc.algebra.act[e][h1], mc.algebra.act[e][h2]
    rep.add("v^w h1 != v^w h2", a != b, f"{H.names[a]} vs {H.names[b]}")
    return rep


def _load_checked(space, mc, reps, d, rep: VerifyReport, what: str, same_alpha: bool = True):
    """Load a dumped configuration, recomputing every profile from its shal."""
    pids = []
    for k, pj in enumerate(d["profiles"]):
        if "shal" not in pj:
            rep.add(f"{what} profile {k} realized", False, "no shal recorded")
            return None
        try:
            word = parse_shal(pj["shal"])
            sem = semantic_profile(word, pj["position"], mc, reps)
            pid = space.from_json(pj)
        except (TermError, KeyError, ValueError, IndexError) as exc:
            rep.add(f"{what} profile {k} realized", False, str(exc))
            return None
        if not rep.add(f"{what} profile {k} realized", tuple(sem) == tuple(space[pid]),
                       f"{pj['shal']} at {pj['position']}"):
            return None
        pids.append(pid)
    alpha = 0
    for pid in pids:
        alpha |= space[pid].alpha
    fam = frozenset(frozenset(pids[i] for i in member) for member in d["members"])
    if same_alpha and not rep.add(f"{what} shares one alphabet",
                                  all(space[p].alpha == alpha for p in pids)):
        return None
    return Config(alpha, fam)
