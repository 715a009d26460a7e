"""The Sat fixpoint, profile saturation and the decision procedure."""
from __future__ import annotations

import itertools
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .algebra import ForestMorphism, leaf_completion
from .configurations import (Config, ConfigOps, Relaxation, Uplift, canonical, config_leq, dump_config,
                             profile_validity, saturated_elements, union_profiles)
from .identities import identity_suite
from .profiles import Budget, ProfileSpace, bits
from .syntactic import syntactic_quotient

DEFAULTS = {
    "sat_cap": 20000,  # elements of one Sat[X] fixpoint
    "union_cap": 200000,  # candidate unions examined per X
    "max_union": 3,
    "max_shrink_members": 4,
    "shrink_cap": 256,  # shrunk variants per Sat element
    "prune_leq": False,
    "exhaustive_alphabets": False,
}


def initial_configs(space: ProfileSpace) -> list:
    """One configuration {{profile of c}} per shal letter c."""
    return [Config(1 << i, frozenset([frozenset([space.letter(i)])])) for i in range(len(space.letters))]


# ---------------------------------------------------------------------------
# the Sat fixpoint

@dataclass
class SatState:
    X: int
    elements: dict = field(default_factory=dict)  # Config -> (rule, parents)
    generations: list = field(default_factory=list)  # lists of Configs in canonical order
    complete: bool = False
    pruned: int = 0

    def __len__(self):
        return len(self.elements)

    def __contains__(self, c):
        return c in self.elements


class SatEngine:
    """Generation-by-generation closure of the single-letter configurations.

    Generation n+1 holds everything rules (1) and (2) produce from pairs of
    elements with at least one member from generation n, minus what is
    already known.  Generations are therefore independent of the order in
    which pairs are visited; ``rng`` shuffles that order to test it.
    """

    def __init__(self, space: ProfileSpace, X: int, ops: Optional[ConfigOps] = None,
                 up: Optional[Uplift] = None, cap: int = DEFAULTS["sat_cap"],
                 rng: Optional[random.Random] = None, exhaustive_alphabets: bool = False,
                 prune_leq: bool = False):
        self.space = space
        self.ops = ops or ConfigOps(space)
        self.up = up or Uplift(space)
        self.rel = Relaxation(space, [h for h in bits(X)])
        self.cap = cap
        self.rng = rng
        self.exhaustive = exhaustive_alphabets
        self.prune_leq = prune_leq
        self.state = SatState(X)
        self.by_alpha: dict = {}
        self._approx: dict = {}
        self._key: dict = {}
        init = initial_configs(space)
        for c in init:
            self._add(c, ("letter", ()))
        self.state.generations.append(self._sorted(init))

    def key(self, c: Config):
        k = self._key.get(c)
        if k is None:
            k = self._key[c] = canonical(self.space, c)
        return k

    def _sorted(self, cs):
        return sorted(cs, key=self.key)

    def _add(self, c: Config, how):
        self.state.elements[c] = how
        self.by_alpha.setdefault(c.alpha, []).append(c)

    def _prune(self, gen: list) -> list:
        """Keep only elements that no other element dominates in the preorder."""
        kept = []
        for c in gen:
            group = self.by_alpha.get(c.alpha, []) + [d for d in kept if d.alpha == c.alpha]
            if any(config_leq(c, d) for d in group):
                continue
            for d in [d for d in self.by_alpha.get(c.alpha, []) if config_leq(d, c)]:
                self.by_alpha[c.alpha].remove(d)
                self.state.elements.pop(d, None)
                self.state.pruned += 1
            kept = [d for d in kept if not (d.alpha == c.alpha and config_leq(d, c))]
            kept.append(c)
        return kept

    def approximated(self, cs: int) -> list:
        r = self._approx.get(cs)
        if r is None:
            if self.exhaustive:
                n = len(self.space.letters)
                r = [bs for bs in range(1, 1 << n) if self.rel.is_approximation(cs, bs)]
            else:
                r = self.rel.approximated(cs)
            self._approx[cs] = r
        return r

    def step(self) -> list:
        """Compute the next generation; returns it (empty at the fixpoint)."""
        st = self.state
        if st.complete:
            return []
        fresh = [c for c in st.generations[-1] if c in st.elements]
        fresh_set = set(fresh)
        old = [c for c in st.elements if c not in fresh_set]
        if self.rng is not None:
            self.rng.shuffle(fresh)
            self.rng.shuffle(old)
        found: dict = {}

        def offer(c, how):
            if c not in st.elements and c not in found:
                found[c] = how
                if len(st.elements) + len(found) > self.cap:
                    raise Budget(f"Sat fixpoint exceeded {self.cap} configurations", st)

        ops = self.ops
        everything = fresh + old
        for a in fresh:
            for b in everything:
                offer(ops.sum(a, b), ("sum", (a, b)))
                if b not in fresh_set:
                    offer(ops.sum(b, a), ("sum", (b, a)))
        # rule (2): pairs with at least one fresh element
        for a in fresh:
            wa = ops.omega(a)
            for bs in self.approximated(a.alpha):
                up = self.up(bs)
                for alpha, group in list(self.by_alpha.items()):
                    if bs not in self.approximated(alpha):
                        continue
                    for b in group:
                        wb = ops.omega(b)
                        offer(ops.sum(ops.sum(wa, up), wb), ("uplift", (a, bs, b)))
                        if b not in fresh_set:
                            offer(ops.sum(ops.sum(wb, up), wa), ("uplift", (b, bs, a)))
        gen = self._sorted(found)
        if self.prune_leq:
            gen = self._prune(gen)
        for c in gen:
            self._add(c, found[c])
        st.generations.append(gen)
        if not gen:
            st.complete = True
        return gen

    def run(self) -> SatState:
        while self.step():
            pass
        return self.state


def sat_fixpoint(space: ProfileSpace, X: int, budget: int = DEFAULTS["sat_cap"],
                 rng: Optional[random.Random] = None, exhaustive_alphabets: bool = False) -> SatState:
    return SatEngine(space, X, cap=budget, rng=rng, exhaustive_alphabets=exhaustive_alphabets).run()


# ---------------------------------------------------------------------------
# compatibility and violations

@dataclass
class SaturationWitness:
    X: list
    configuration: dict
    components: list
    factorization: list
    v: str
    h1: str
    h2: str

    def to_json(self):
        return {
            "X": self.X, "configuration": self.configuration, "components": self.components,
            "factorization": self.factorization, "v": self.v, "h1": self.h1, "h2": self.h2,
        }


def union_config(parts) -> Config:
    alpha = 0
    fam = set()
    for p in parts:
        alpha |= p.alpha
        fam |= p.family
    return Config(alpha, frozenset(fam))


def check_union(space: ProfileSpace, X: int, parts):
    """(config, v, factorization, h1, h2) if the union of parts violates saturation."""
    cfg = union_config(parts)
    rep = profile_validity(space, union_profiles(cfg))
    if not (rep.branching and rep.reduced and rep.maxClass == X):
        return None
    V = space.m.algebra.V
    act = space.m.algebra.act
    sat = saturated_elements(space, cfg, X, rep)
    for v, fact in sat.items():
        e = V.idem(v)
        xs = list(bits(X))
        base = act[e][xs[0]]
        for h in xs[1:]:
            if act[e][h] != base:
                return cfg, v, fact, xs[0], h
    return None


def is_x_compatible(space: ProfileSpace, X: int, cfg: Config) -> bool:
    rep = profile_validity(space, union_profiles(cfg))
    return rep.branching and rep.reduced and rep.maxClass == X


def _shrunk(c: Config, max_members: int, cap: int):
    """Configurations below c obtained by shrinking members (bounded)."""
    fam = sorted(c.family, key=lambda x: (len(x), sorted(x)))
    if len(fam) > max_members:
        return
    choices = []
    for x in fam:
        xs = sorted(x)
        subs = [frozenset(s) for r in range(1, len(xs) + 1) for s in itertools.combinations(xs, r)]
        choices.append(subs)
    count = 0
    for pick in itertools.product(*choices):
        d = Config(c.alpha, frozenset(pick))
        if d != c:
            yield d
            count += 1
            if count >= cap:
                return


def x_compatible_unions(space: ProfileSpace, sat: SatState, max_union: int = DEFAULTS["max_union"],
                        cap: int = DEFAULTS["union_cap"], shrink: bool = True):
    """Yield (parts, config) for X-compatible unions of elements below Sat.

    Candidates are Sat elements (plus bounded shrinkings) whose valid forest
    types stay inside X.  Unions are tried size-ascending.
    """
    X = sat.X
    if not X:
        return
    pool = []
    seen = set()
    key = lambda c: canonical(space, c)
    for c in sorted(sat.elements, key=key):
        cands = [c]
        if shrink:
            cands += list(_shrunk(c, DEFAULTS["max_shrink_members"], DEFAULTS["shrink_cap"]))
        for d in cands:
            if d in seen:
                continue
            seen.add(d)
            rep = profile_validity(space, union_profiles(d))
            if rep.validH & ~X == 0:
                pool.append(d)
    tried = 0
    for r in range(1, max_union + 1):
        for parts in itertools.combinations(pool, r):
            tried += 1
            if tried > cap:
                raise Budget(f"union enumeration exceeded {cap} candidates")
            cfg = union_config(parts)
            if is_x_compatible(space, X, cfg):
                yield parts, cfg


# ---------------------------------------------------------------------------
# per-X search

def useful_sets(m: ForestMorphism) -> list:
    """Sets X of forest types that could carry a saturation violation.

    X needs two elements told apart by some idempotent context type and
    must be mutually reachable through V; other X are skipped (sound).
    """
    alg = m.algebra
    nh = len(alg.H)
    act = alg.act
    reach = []
    for h in range(nh):
        r = 1 << h
        for v in range(len(alg.V)):
            r |= 1 << act[v][h]
        reach.append(r)
    idems = alg.V.idempotents
    out = []
    for X in range(1, 1 << nh):
        xs = list(bits(X))
        if len(xs) < 2:
            continue
        if any(not (reach[a] >> b & 1) for a in xs for b in xs):
            continue
        if not any(len({act[e][h] for h in xs}) > 1 for e in idems):
            continue
        out.append(X)
    return out


@dataclass
class SearchResult:
    X: int
    witness: Optional[tuple] = None  # (parts, cfg, v, fact, h1, h2)
    complete: bool = False
    sat_size: int = 0
    generations: int = 0
    unions_checked: int = 0
    note: str = ""


def _violation_in(space, X, elements, opts, stats):
    """Try the bounded union scheme over the given elements."""
    key = lambda c: canonical(space, c)
    pool = []
    seen = set()
    for c in sorted(elements, key=key):
        cands = [c] + list(_shrunk(c, opts["max_shrink_members"], opts["shrink_cap"]))
        for d in cands:
            if d in seen:
                continue
            seen.add(d)
            rep = profile_validity(space, union_profiles(d))
            if rep.validH & ~X == 0:
                pool.append(d)
    if not pool:
        return None
    # the largest union first: it has the most profiles available
    hit = check_union(space, X, pool)
    stats["unions"] += 1
    if hit:
        return (tuple(pool),) + hit
    for r in range(1, opts["max_union"] + 1):
        for parts in itertools.combinations(pool, r):
            stats["unions"] += 1
            if stats["unions"] > opts["union_cap"]:
                raise Budget(f"union enumeration exceeded {opts['union_cap']} candidates")
            hit = check_union(space, X, parts)
            if hit:
                return (parts,) + hit
    return None


def search_X(space: ProfileSpace, X: int, opts: dict, rng: Optional[random.Random] = None) -> SearchResult:
    """Grow Sat[X] generation by generation, looking for a violation after each."""
    res = SearchResult(X)
    stats = {"unions": 0}
    eng = SatEngine(space, X, cap=opts["sat_cap"], rng=rng,
                    exhaustive_alphabets=opts.get("exhaustive_alphabets", False),
                    prune_leq=opts.get("prune_leq", False))
    try:
        while True:
            elements = list(eng.state.elements)
            hit = _violation_in(space, X, elements, opts, stats)
            if hit:
                res.witness = hit
                break
            if not eng.step():
                res.complete = True
                break
    except Budget as exc:
        res.note = str(exc)
    res.sat_size = len(eng.state)
    res.generations = len(eng.state.generations)
    res.unions_checked = stats["unions"]
    return res


def witness_json(space: ProfileSpace, X: int, hit) -> SaturationWitness:
    parts, cfg, v, fact, h1, h2 = hit
    m = space.m
    hn, vn = m.H.names, m.V.names
    return SaturationWitness(
        X=[hn[h] for h in bits(X)],
        configuration=dump_config(space, cfg),
        components=[dump_config(space, p) for p in parts],
        factorization=[vn[w] for w in fact],
        v=vn[v], h1=hn[h1], h2=hn[h2],
    )


def _search_job(args):
    m, X, opts, seed = args
    space = ProfileSpace(m)
    rng = random.Random(seed) if seed is not None else None
    res = search_X(space, X, opts, rng)
    wit = witness_json(space, X, res.witness) if res.witness else None
    return X, wit, res.complete, res.sat_size, res.generations, res.unions_checked, res.note


def check_profile_saturation(m: ForestMorphism, opts: Optional[dict] = None, seed: Optional[int] = None,
                             threads: Optional[int] = None):
    """Run the per-X search for every useful X.

    Returns (witness or None, exhausted flag, per-X stats).  ``m`` should
    already be leaf-completed.
    """
    opts = dict(DEFAULTS, **(opts or {}))
    xs = useful_sets(m)
    # larger X first: they need the most of Sat and fail the fastest in practice
    xs.sort(key=lambda X: (-bin(X).count("1"), X))
    threads = threads if threads is not None else _threads()
    jobs = [(m, X, opts, seed) for X in xs]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            results = list(pool.map(_search_job, jobs))
    else:
        results = []
        for job in jobs:
            r = _search_job(job)
            results.append(r)
            if r[1] is not None:
                break
    stats = []
    witness = None
    exhausted = True
    for X, wit, complete, size, gens, unions, note in results:
        stats.append({"X": [m.H.names[h] for h in bits(X)], "satSize": size, "generations": gens,
                      "unionsChecked": unions, "complete": complete, "note": note})
        if wit is not None and witness is None:
            witness = wit
        if not complete and wit is None:
            exhausted = False
    return witness, exhausted, stats


def _threads() -> int:
    raw = os.environ.get("FO2DEC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


# ---------------------------------------------------------------------------
# sibling-modality variants

def _signature_positions(space: ProfileSpace, bs: int, cap: int = 200000) -> dict:
    """{(letter, twice-mask): profiles} for positions in shals of alphabet bs.

    ``twice-mask`` marks the letters occurring at least twice.  Found by
    extending one-letter shals with single letters on either side.
    """
    letters = list(bits(bs))
    out: dict = {}
    for i in letters:
        start = (space.letter(i), 1 << i, 0)
        found = {start}
        order = [start]
        k = 0
        while k < len(order):
            p, once, twice = order[k]
            for j in letters:
                f = space.letter(j)
                bit = 1 << j
                t2 = twice | (bit if once & bit else 0)
                for q in (space.sum_r(f, p), space.sum_l(p, f)):
                    st = (q, once | bit, t2)
                    if st not in found:
                        found.add(st)
                        order.append(st)
                        if len(order) > cap:
                            raise Budget(f"variant closure exceeded {cap} states")
            k += 1
        for p, once, twice in order:
            if once == bs:
                out.setdefault((i, twice), set()).add(p)
    return out


def _representative(space: ProfileSpace, bs: int, twice: int) -> tuple:
    word = []
    for i in bits(bs):
        word += [space.letters[i]] * (2 if twice >> i & 1 else 1)
    return tuple(word)


def variant_relevant_configs(space: ProfileSpace, X: int, variant: str, alphabets=None) -> list:
    """Maximal relevant configurations for the S or SNEQ sibling games.

    S: positions are told apart by alphabet and label only, so each
    alphabet gives one configuration with a member per label.  SNEQ also
    sees which letters occur twice; signatures whose representatives the
    game oracle cannot separate are merged.
    """
    from .games import relaxed_game_equiv
    variant = variant.upper()
    n = len(space.letters)
    alphabets = range(1, 1 << n) if alphabets is None else alphabets
    xs = [h for h in bits(X)]
    out = []
    for bs in alphabets:
        groups = _signature_positions(space, bs)
        if variant == "S":
            fam = {}
            for (i, _), ps in groups.items():
                fam.setdefault(i, set()).update(ps)
            out.append(Config(bs, frozenset(frozenset(v) for v in fam.values())))
            continue
        if variant != "SNEQ":
            raise ValueError(f"no variant configurations for {variant!r}")
        sigs = sorted({t for _, t in groups})
        parent = {s: s for s in sigs}

        def find(s):
            while parent[s] != s:
                s = parent[s]
            return s

        pos_parent = {}
        reps = {s: _representative(space, bs, s) for s in sigs}
        k = 2 * bin(bs).count("1") + 4
        for s1, s2 in itertools.combinations(sigs, 2):
            p, q = reps[s1], reps[s2]
            for i in bits(bs):
                c = space.letters[i]
                if relaxed_game_equiv((p, p.index(c)), (q, q.index(c)), k, xs, space.m, "SNEQ"):
                    parent[find(s2)] = find(s1)
                    pos_parent[(i, s2)] = (i, s1)
        for root in sorted({find(s) for s in sigs}):
            members: dict = {}
            for (i, t), ps in groups.items():
                if find(t) != root:
                    continue
                key = (i, t)
                while key in pos_parent:
                    key = pos_parent[key]
                members.setdefault(key, set()).update(ps)
            out.append(Config(bs, frozenset(frozenset(v) for v in members.values())))
    return out


def search_variant_X(space: ProfileSpace, X: int, variant: str, opts: dict) -> SearchResult:
    res = SearchResult(X)
    stats = {"unions": 0}
    try:
        elements = variant_relevant_configs(space, X, variant)
        hit = _violation_in(space, X, elements, opts, stats)
        if hit:
            res.witness = hit
        else:
            res.complete = True
        res.sat_size = len(elements)
    except Budget as exc:
        res.note = str(exc)
    res.unions_checked = stats["unions"]
    return res


# ---------------------------------------------------------------------------
# the decision procedure

IDENTITY_KIND = {"eqh": "IdentityH", "eqv": "IdentityV", "eqhx": "VariantIdentity",
                 "2h=h": "VariantIdentity", "3h=2h": "VariantIdentity", "f+g=g+f": "VariantIdentity"}
LOGICS = ("FO2", "EFH", "EFHS", "FO2SUCC")


@dataclass
class Verdict:
    outcome: str  # Definable | NotDefinable | Inconclusive
    logic: str
    failedCondition: Optional[str] = None
    identityWitness: Optional[dict] = None
    witness: Optional[dict] = None
    identities: list = field(default_factory=list)
    budgets: dict = field(default_factory=dict)
    note: str = ""
    saturation: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_json(self, timings: bool = False) -> dict:
        out = {"outcome": self.outcome, "logic": self.logic, "failedCondition": self.failedCondition}
        if self.identityWitness is not None:
            out["identityWitness"] = self.identityWitness
        if self.witness is not None:
            out["witness"] = self.witness
        out["identities"] = self.identities
        out["budgets"] = self.budgets
        if self.saturation:
            out["saturation"] = self.saturation
        if self.note:
            out["note"] = self.note
        if timings:
            out["timings"] = self.timings
        return out


def decide(m: ForestMorphism, logic: str = "FO2", opts: Optional[dict] = None,
           seed: Optional[int] = None, threads: Optional[int] = None) -> Verdict:
    import time
    logic = logic.upper()
    if logic not in LOGICS:
        raise ValueError(f"unknown logic {logic!r}; expected one of {', '.join(LOGICS)}")
    opts = dict(DEFAULTS, **(opts or {}))
    t0 = time.perf_counter()
    q = syntactic_quotient(m)
    t1 = time.perf_counter()
    reports = identity_suite(q.algebra, logic)
    v = Verdict("Definable", logic, budgets=dict(opts))
    v.identities = [r.to_json() for r in reports]
    v.timings = {"syntactic": round(t1 - t0, 4), "identities": round(time.perf_counter() - t1, 4)}
    bad = next((r for r in reports if not r.holds), None)
    if bad is not None:
        v.outcome = "NotDefinable"
        v.failedCondition = IDENTITY_KIND[bad.name]
        v.identityWitness = dict(bad.witness, identity=bad.name)
        return v
    if logic == "FO2SUCC":
        v.outcome = "Inconclusive"
        v.note = "identities hold; saturation undecided for this logic (open problem), not checked"
        return v
    mc = leaf_completion(q)
    t2 = time.perf_counter()
    if logic == "FO2":
        wit, exhausted, stats = check_profile_saturation(mc, opts, seed, threads)
    else:
        wit, exhausted, stats = _variant_saturation(mc, "S" if logic == "EFH" else "SNEQ", opts)
    v.timings["saturation"] = round(time.perf_counter() - t2, 4)
    v.saturation = stats
    if wit is not None:
        v.outcome = "NotDefinable"
        v.failedCondition = "Saturation"
        v.witness = wit.to_json()
    elif not exhausted:
        v.outcome = "Inconclusive"
        v.note = "a budget was reached before the saturation search finished"
    else:
        v.note = (f"saturation checked with unions of at most {opts['max_union']} elements "
                  f"and member shrinking up to {opts['max_shrink_members']} members")
    return v


def _variant_saturation(m: ForestMorphism, variant: str, opts: dict):
    space = ProfileSpace(m)
    stats = []
    exhausted = True
    for X in useful_sets(m):
        res = search_variant_X(space, X, variant, opts)
        stats.append({"X": [m.H.names[h] for h in bits(X)], "configurations": res.sat_size,
                      "unionsChecked": res.unions_checked, "complete": res.complete, "note": res.note})
        if res.witness:
            return witness_json(space, X, res.witness), True, stats
        if not res.complete:
            exhausted = False
    return None, exhausted, stats
