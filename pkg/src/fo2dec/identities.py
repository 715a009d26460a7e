"""Equational conditions on the semigroups of a forest algebra."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .algebra import FiniteSemigroup


@dataclass
class IdentityReport:
    name: str
    holds: bool
    witness: Optional[dict] = None
    checked: list = field(default_factory=list)  # sub-identities, in order

    def to_json(self):
        return {"identity": self.name, "holds": self.holds, "witness": self.witness}


def _fail(name, vars_, lhs, rhs, s: FiniteSemigroup):
    w = {k: s.names[v] for k, v in vars_.items()}
    w["lhs"] = s.names[lhs]
    w["rhs"] = s.names[rhs]
    return IdentityReport(name, False, w)


def _eq_omega(s: FiniteSemigroup, name, a_name, b_name):
    # (ab)^w b (ab)^w = (ab)^w ; reads additively as w(h+g)+g+w(h+g) = w(h+g)
    t = s.table
    n = len(s)
    # diagonal instances first: they are the simplest witnesses to read
    pairs = [(a, a) for a in range(n)] + [(a, b) for a in range(n) for b in range(n) if a != b]
    for a, b in pairs:
        e = s.idem(t[a][b])
        lhs = t[t[e][b]][e]
        if lhs != e:
            return _fail(name, {a_name: a, b_name: b}, lhs, e, s)
    return IdentityReport(name, True)


def check_eqv(V: FiniteSemigroup) -> IdentityReport:
    """(uv)^w v (uv)^w = (uv)^w for all u, v."""
    return _eq_omega(V, "eqv", "u", "v")


def check_eqh(H: FiniteSemigroup) -> IdentityReport:
    """w(h+g) + g + w(h+g) = w(h+g) for all h, g."""
    return _eq_omega(H, "eqh", "h", "g")


def check_idempotent(H: FiniteSemigroup) -> IdentityReport:
    t = H.table
    for h in range(len(H)):
        if t[h][h] != h:
            return _fail("2h=h", {"h": h}, t[h][h], h, H)
    return IdentityReport("2h=h", True)


def check_three_two(H: FiniteSemigroup) -> IdentityReport:
    t = H.table
    for h in range(len(H)):
        two = t[h][h]
        three = t[two][h]
        if three != two:
            return _fail("3h=2h", {"h": h}, three, two, H)
    return IdentityReport("3h=2h", True)


def check_commutative(H: FiniteSemigroup) -> IdentityReport:
    t = H.table
    for f in range(len(H)):
        for g in range(f + 1, len(H)):
            if t[f][g] != t[g][f]:
                return _fail("f+g=g+f", {"f": f, "g": g}, t[f][g], t[g][f], H)
    return IdentityReport("f+g=g+f", True)


def check_eqhx(H: FiniteSemigroup) -> IdentityReport:
    """w(e+h+e+g+e) + g + w(e+h+e+g+e) = w(e+h+e+g+e) for idempotent e."""
    t = H.table
    name = "eqhx"
    for e in H.idempotents:
        for h in range(len(H)):
            eh = t[t[e][h]][e]
            for g in range(len(H)):
                x = H.idem(t[t[eh][g]][e])
                lhs = t[t[x][g]][x]
                if lhs != x:
                    return _fail(name, {"e": e, "h": h, "g": g}, lhs, x, H)
    return IdentityReport(name, True)


def check_variant_identities(H: FiniteSemigroup, logic: str) -> IdentityReport:
    logic = logic.upper()
    if logic == "EFH":
        parts = [check_idempotent(H), check_commutative(H)]
    elif logic == "EFHS":
        parts = [check_three_two(H), check_commutative(H)]
    elif logic == "FO2SUCC":
        parts = [check_eqhx(H)]
    else:
        raise ValueError(f"no variant identities for logic {logic!r}")
    bad = next((p for p in parts if not p.holds), None)
    rep = IdentityReport(" and ".join(p.name for p in parts), bad is None,
                         None if bad is None else dict(bad.witness, identity=bad.name))
    rep.checked = parts
    return rep


def identity_suite(alg, logic: str) -> list:
    """Reports in the order the decision procedure checks them."""
    logic = logic.upper()
    if logic == "FO2":
        return [check_eqh(alg.H), check_eqv(alg.V)]
    if logic in ("EFH", "EFHS"):
        return check_variant_identities(alg.H, logic).checked + [check_eqv(alg.V)]
    if logic == "FO2SUCC":
        return [check_eqhx(alg.H), check_eqv(alg.V)]
    raise ValueError(f"unknown logic {logic!r}")


def reverify(s: FiniteSemigroup, name: str, witness: dict) -> bool:
    """Recompute both sides of a reported violation from the element names."""
    t = s.table
    v = {k: s.index(x) for k, x in witness.items() if k in ("u", "v", "h", "g", "f", "e")}
    if name in ("eqv", "eqh"):
        a, b = (v["u"], v["v"]) if name == "eqv" else (v["h"], v["g"])
        e = s.idem(t[a][b])
        return t[t[e][b]][e] != e
    if name == "2h=h":
        return t[v["h"]][v["h"]] != v["h"]
    if name == "3h=2h":
        two = t[v["h"]][v["h"]]
        return t[two][v["h"]] != two
    if name == "f+g=g+f":
        return t[v["f"]][v["g"]] != t[v["g"]][v["f"]]
    if name == "eqhx":
        e, h, g = v["e"], v["h"], v["g"]
        if t[e][e] != e:
            return False
        x = s.idem(t[t[t[t[e][h]][e]][g]][e])
        return t[t[x][g]][x] != x
    raise ValueError(f"unknown identity {name!r}")
