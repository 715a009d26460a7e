"""Configurations: families of sets of profiles sharing one alphabet."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

from .profiles import Budget, ProfileSpace, bits


class Config(NamedTuple):
    alpha: int  # common alphabet (letter bitmask of the profile space)
    family: frozenset  # frozenset of nonempty frozensets of profile ids


def make_config(space: ProfileSpace, members) -> Config:
    family = frozenset(frozenset(x) for x in members)
    if not family or any(not x for x in family):
        raise ValueError("configurations need a nonempty family of nonempty sets")
    alphas = {space[p].alpha for x in family for p in x}
    if len(alphas) != 1:
        raise ValueError("all profiles of a configuration must share one alphabet")
    return Config(alphas.pop(), family)


def union_profiles(c: Config) -> frozenset:
    out = set()
    for x in c.family:
        out |= x
    return frozenset(out)


def canonical(space: ProfileSpace, c: Config) -> tuple:
    """Key that does not depend on profile discovery order."""
    return (c.alpha, tuple(sorted(tuple(sorted(space.canonical(p) for p in x)) for x in c.family)))


class ConfigOps:
    """Memoised set-level sums over one profile space."""

    def __init__(self, space: ProfileSpace):
        self.space = space
        self._set_l: dict = {}
        self._set_r: dict = {}
        self._sum: dict = {}
        self._omega: dict = {}
        self._union: dict = {}

    def union(self, c: Config) -> frozenset:
        u = self._union.get(c)
        if u is None:
            u = self._union[c] = union_profiles(c)
        return u

    def set_sum_l(self, a: frozenset, b: frozenset) -> frozenset:
        key = (a, b)
        r = self._set_l.get(key)
        if r is None:
            memo, s = self.space._sum_l, self.space.sum_l
            out = set()
            for x in a:
                for y in b:
                    z = memo.get((x, y))
                    out.add(s(x, y) if z is None else z)
            r = self._set_l[key] = frozenset(out)
        return r

    def set_sum_r(self, a: frozenset, b: frozenset) -> frozenset:
        key = (a, b)
        r = self._set_r.get(key)
        if r is None:
            memo, s = self.space._sum_r, self.space.sum_r
            out = set()
            for x in a:
                for y in b:
                    z = memo.get((x, y))
                    out.add(s(x, y) if z is None else z)
            r = self._set_r[key] = frozenset(out)
        return r

    def sum(self, u: Optional[Config], v: Optional[Config]) -> Optional[Config]:
        """U + V; None plays the neutral element."""
        if u is None:
            return v
        if v is None:
            return u
        key = (u, v)
        r = self._sum.get(key)
        if r is None:
            uu, vv = self.union(u), self.union(v)
            fam = {self.set_sum_l(x, vv) for x in u.family} | {self.set_sum_r(uu, y) for y in v.family}
            r = self._sum[key] = Config(u.alpha | v.alpha, frozenset(fam))
        return r

    def omega(self, u: Config, cap: int = 10000) -> Config:
        """The idempotent power of u."""
        r = self._omega.get(u)
        if r is not None:
            return r
        powers = [u]
        seen = {u: 0}
        while True:
            nxt = self.sum(powers[-1], u)
            if nxt in seen:
                start = seen[nxt]
                period = len(powers) - start
                break
            seen[nxt] = len(powers)
            powers.append(nxt)
            if len(powers) > cap:
                raise Budget(f"omega power of a configuration did not stabilise within {cap} steps")
        # powers[i] is u^(i+1); u^(start+1) starts the cycle.  The least
        # multiple of the period past the start is below len(powers) + 1.
        n = period * -(-(start + 1) // period)
        r = powers[n - 1]
        self._omega[u] = r
        return r


def config_sum(space: ProfileSpace, u: Optional[Config], v: Optional[Config],
               ops: Optional[ConfigOps] = None) -> Optional[Config]:
    return (ops or ConfigOps(space)).sum(u, v)


def config_leq(u: Config, v: Config) -> bool:
    """Each member of u lies in a member of v and each member of v contains one of u."""
    return (all(any(x <= y for y in v.family) for x in u.family)
            and all(any(x <= y for x in u.family) for y in v.family))


def config_omega(space: ProfileSpace, u: Config, ops: Optional[ConfigOps] = None) -> Config:
    return (ops or ConfigOps(space)).omega(u)


# ---------------------------------------------------------------------------
# alphabets

def letter_mask(space: ProfileSpace, letters) -> int:
    mask = 0
    for c in letters:
        mask |= 1 << space.letter_index[c]
    return mask


class Relaxation:
    """Letter equivalence up to ports and X-nodes, for one X."""

    def __init__(self, space: ProfileSpace, X):
        self.space = space
        self.X = frozenset(X)
        leaves = space.m.leaves
        self.group = {}  # relaxed letter index -> inner label
        self.port_of = {}  # inner label -> index of its port letter
        for i, c in enumerate(space.letters):
            if c.is_port:
                self.group[i] = c.inner
                self.port_of[c.inner] = i
            elif c.inner and leaves.get(c.leaf) in self.X:
                self.group[i] = c.inner
        self.group_mask: dict = {}
        for i, b in self.group.items():
            self.group_mask[b] = self.group_mask.get(b, 0) | (1 << i)

    def equiv(self, i: int, j: int, bs: int) -> bool:
        if i == j:
            return True
        b = self.group.get(i)
        if b is None or self.group.get(j) != b:
            return False
        port = self.port_of.get(b)
        return port is not None and bool(bs >> port & 1)

    def is_approximation(self, cs: int, bs: int) -> bool:
        if cs & ~bs or not cs and bs:
            return False
        for i in bits(bs & ~cs):
            if not any(self.equiv(i, j, bs) for j in bits(cs)):
                return False
        return True

    def approximated(self, cs: int) -> list:
        """Every alphabet Bs that cs is an X-approximation of (cs included)."""
        extra = 0
        for b, gm in self.group_mask.items():
            if cs & gm:
                extra |= gm
        extra &= ~cs
        out = []
        sub = extra
        while True:
            bs = cs | sub
            if self.is_approximation(cs, bs):
                out.append(bs)
            if sub == 0:
                break
            sub = (sub - 1) & extra
        return sorted(out)


def label_equiv(c, c2, bs, X, m, space: Optional[ProfileSpace] = None) -> bool:
    space = space or ProfileSpace(m)
    rel = Relaxation(space, X)
    return rel.equiv(space.letter_index[c], space.letter_index[c2], letter_mask(space, bs))


def is_x_approximation(cs, bs, X, m, space: Optional[ProfileSpace] = None) -> bool:
    space = space or ProfileSpace(m)
    return Relaxation(space, X).is_approximation(letter_mask(space, cs), letter_mask(space, bs))


# ---------------------------------------------------------------------------
# uplift

class Uplift:
    """Per-letter profile sets of positions inside shals of an exact alphabet.

    For an alphabet Bs and a letter c in it, the profiles of positions
    labelled c are found by extending the one-letter shal c with single
    letters of Bs on either side until nothing new appears.
    """

    def __init__(self, space: ProfileSpace, cap: int = 200000):
        self.space = space
        self.cap = cap
        self._memo: dict = {}

    def positions(self, i: int, bs: int) -> set:
        """Profiles of positions labelled with letter i in shals of alphabet bs."""
        sp = self.space
        letters = [sp.letter(j) for j in bits(bs)]
        start = sp.letter(i)
        found = {start}
        order = [start]
        k = 0
        while k < len(order):
            p = order[k]
            for f in letters:
                for q in (sp.sum_r(f, p), sp.sum_l(p, f)):
                    if q not in found:
                        found.add(q)
                        order.append(q)
                        if len(order) > self.cap:
                            raise Budget(f"uplift closure exceeded {self.cap} profiles")
            k += 1
        return {p for p in order if sp[p].alpha == bs}

    def __call__(self, bs: int) -> Config:
        r = self._memo.get(bs)
        if r is not None:
            return r
        fam = frozenset(frozenset(self.positions(i, bs)) for i in bits(bs))
        r = self._memo[bs] = Config(bs, fam)
        return r


def uplift(space: ProfileSpace, bs: int, up: Optional[Uplift] = None) -> Config:
    return (up or Uplift(space))(bs)


# ---------------------------------------------------------------------------
# validity

@dataclass(frozen=True)
class ValidityReport:
    validH: int  # bitmask over H
    validV: int  # bitmask over V
    branching: bool
    reduced: bool
    maxClass: Optional[int]

    def to_json(self, m):
        hn, vn = m.H.names, m.V.names
        return {
            "validH": [hn[h] for h in bits(self.validH)],
            "validV": [vn[v] for v in bits(self.validV)],
            "branching": self.branching,
            "reduced": self.reduced,
            "maxClass": None if self.maxClass is None else [hn[h] for h in bits(self.maxClass)],
        }


def subsemigroup(m, gens: int) -> int:
    """Bitmask of the subsemigroup of V generated by a mask of generators."""
    t = m.algebra.V.table
    elems = list(bits(gens))
    have = gens
    i = 0
    while i < len(elems):
        x = elems[i]
        for y in list(elems):
            for z in (t[x][y], t[y][x]):
                if not have >> z & 1:
                    have |= 1 << z
                    elems.append(z)
        i += 1
    return have


def profile_validity(space: ProfileSpace, profiles) -> ValidityReport:
    m = space.m
    ps = [space[p] for p in profiles]
    full = space.full
    X = 0
    while True:
        new = X
        for p in ps:
            new |= p.fH[full] if p.arity == 0 else p.fH[X]
        if new == X:
            break
        X = new
    gens = 0
    for p in ps:
        gens |= p.fV[X]
    Y = subsemigroup(m, gens)
    branching = any(p.arity == 2 for p in ps)
    act = m.algebra.act
    reach = {}
    for h in bits(X):
        r = 1 << h
        for v in bits(Y):
            r |= 1 << act[v][h]
        reach[h] = r
    classes = set()
    for h in bits(X):
        cls = 0
        for g in bits(reach[h]):
            if reach[g] >> h & 1:
                cls |= 1 << g
        if reach[h] & ~cls == 0:
            classes.add(cls)
    top = classes.pop() if len(classes) == 1 else None
    return ValidityReport(X, Y, branching, top is not None and top == X, top if branching else None)


def validity(space: ProfileSpace, c: Config) -> ValidityReport:
    return profile_validity(space, union_profiles(c))


def requirement_sets(space: ProfileSpace, c: Config, X: int, W: int) -> list:
    """Minimal witness sets T for the members of c that contain no arity-0 profile."""
    reqs = set()
    for member in c.family:
        if any(space[p].arity == 0 for p in member):
            continue
        t = 0
        for p in member:
            t |= space[p].fV[X]
        reqs.add(t & W)
    minimal = [t for t in reqs if not any(o != t and o & t == o for o in reqs)]
    return sorted(minimal)


def saturated_elements(space: ProfileSpace, c: Config, X: Optional[int] = None,
                       report: Optional[ValidityReport] = None, cap: int = 200000) -> dict:
    """{v: factorization} for every v of V that is saturated for c.

    The factorization is a list of valid context types whose product is v
    and which meets every requirement.
    """
    report = report or validity(space, c)
    X = report.validH if X is None else X
    W = report.validV
    reqs = requirement_sets(space, c, X, W)
    if any(t == 0 for t in reqs):
        return {}
    full = (1 << len(reqs)) - 1
    vt = space.m.algebra.V.table

    def cover(w):
        c = 0
        for i, t in enumerate(reqs):
            if t >> w & 1:
                c |= 1 << i
        return c

    # best[v] = {cover mask: factorization}, keeping only maximal covers
    best: dict = {}
    work = []

    def add(v, cv, fact):
        cur = best.setdefault(v, {})
        if any(cv & o == cv for o in cur):
            return
        for o in [o for o in cur if o & cv == o]:
            del cur[o]
        cur[cv] = fact
        work.append((v, cv))

    for w in bits(W):
        add(w, cover(w), (w,))
    steps = 0
    while work:
        v, cv = work.pop()
        if cv not in best.get(v, {}):
            continue
        fact = best[v][cv]
        for u in list(best):
            for cu, fu in list(best[u].items()):
                add(vt[v][u], cv | cu, fact + fu)
                add(vt[u][v], cu | cv, fu + fact)
                steps += 1
                if steps > cap:
                    raise Budget("saturated-element search exceeded its cap")
    out = {}
    for v in sorted(best):
        if full in best[v]:
            out[v] = list(best[v][full])
    return out


def dump_config(space: ProfileSpace, c: Config) -> dict:
    """JSON-friendly dump: a profile table plus members as index lists."""
    pids = sorted(union_profiles(c), key=space.canonical)
    idx = {p: i for i, p in enumerate(pids)}
    members = sorted(sorted(idx[p] for p in x) for x in c.family)
    return {
        "alphabet": [str(x) for x in space.alpha_letters(c.alpha)],
        "profiles": [space.to_json(p) for p in pids],
        "members": members,
    }


def load_config(space: ProfileSpace, d: dict) -> Config:
    pids = [space.from_json(p) for p in d["profiles"]]
    return make_config(space, [[pids[i] for i in x] for x in d["members"]])
