"""Cross-checks of the abstract machinery against brute-force oracles.

``validate_profiles`` compares folded shal profiles with profiles obtained
by plugging concrete forests.  ``validate_prop_algo`` compares the Sat
fixpoint with relevant configurations computed through the relaxed game
on all shals up to a length bound: every game configuration must lie
below some Sat element, and every Sat element should be realized by a
bounded set of shals.
"""
from __future__ import annotations

import itertools
from typing import Optional, Sequence

import numpy as np

from .algebra import ForestMorphism
from .configurations import Config, bits, config_leq
from .games import exact_alphabet_shals, relaxed_classes
from .profiles import ProfileSpace, representatives, semantic_profile
from .saturation import SatEngine
from .terms import enumerate_shals, parse_letter


def _key(space: ProfileSpace, pid: int) -> tuple:
    p = space[pid]
    return (p.arity, frozenset(str(c) for c in space.alpha_letters(p.alpha)), p.fH, p.fV)


def validate_profiles(m: ForestMorphism, max_len: int = 3, letters: Optional[Sequence] = None) -> dict:
    """Fold-computed profiles against plug-in profiles at every position.

    ``letters`` restricts the shal alphabet (Letter objects or their text).
    Every element of H needs a representative forest, so ``m`` is normally
    leaf-completed.
    """
    all_letters = sorted(m.alphabet.letters())
    if letters is None:
        chosen = all_letters
    else:
        chosen = sorted(parse_letter(c) if isinstance(c, str) else c for c in letters)
        unknown = [str(c) for c in chosen if c not in all_letters]
        if unknown:
            raise ValueError(f"letters not in the alphabet: {', '.join(unknown)}")
    space = ProfileSpace(m, chosen)
    reps = representatives(m)
    checked = 0
    mismatches = []
    for p in enumerate_shals(chosen, max_len):
        word = space.encode(p)
        folded = space.shal_profiles(word)
        for x in range(len(p)):
            sem = semantic_profile(p, x, m, reps)
            mine = _key(space, folded[x])
            theirs = (sem.arity, frozenset(str(all_letters[i]) for i in bits(sem.alpha)), sem.fH, sem.fV)
            checked += 1
            if mine != theirs:
                mismatches.append({"shal": " + ".join(map(str, p)), "position": x})
    return {"letters": [str(c) for c in chosen], "maxLen": max_len, "positions": checked,
            "mismatches": mismatches, "pass": not mismatches}


# ---------------------------------------------------------------------------
# Sat against the relaxed game

class _Universe:
    """All shals of one exact alphabet up to a length bound, with the game table."""

    def __init__(self, space: ProfileSpace, letters, X, k: int, max_len: int):
        self.shals = exact_alphabet_shals(letters, max_len)
        self.E = relaxed_classes(self.shals, k, X, space.m)
        self.profs = [space.shal_profiles(space.encode(p)) for p in self.shals]
        self.related = self.E.any(axis=(1, 3))

    def game_config(self, s: int) -> frozenset:
        """The configuration the game assigns to shal s: one member per position."""
        out = set()
        for y in range(len(self.shals[s])):
            out.add(self._members(s, y, None))
        return frozenset(out)

    def _members(self, s: int, y: int, allowed) -> frozenset:
        E = self.E
        ts, js = np.nonzero(E[s, y])
        return frozenset(self.profs[t][j] for t, j in zip(ts, js) if allowed is None or t in allowed)

    def transitive(self) -> bool:
        n, L = self.E.shape[:2]
        flat = self.E.reshape(n * L, n * L)
        m = flat.astype(np.float32)  # float matmul goes through BLAS
        return bool(((m @ m > 0) <= flat).all())


def _prune_q(Q: set, cls_of, lengths, members) -> Optional[list]:
    """Shrink Q until every position's class holds a member; then check coverage."""
    changed = True
    while changed and Q:
        changed = False
        for t in sorted(Q):
            for y in range(lengths[t]):
                if not any(mb <= cls_of(t, y, Q) for mb in members):
                    Q.discard(t)
                    changed = True
                    break
    if not Q:
        return None
    classes = [cls_of(t, y, Q) for t in Q for y in range(lengths[t])]
    if all(any(mb <= cls for cls in classes) for mb in members):
        return sorted(Q)
    return None


def _find_q(u: _Universe, c: Config) -> Optional[list]:
    """A shal set Q of the universe meeting the three relevance conditions for c."""
    members = list(c.family)
    wanted = frozenset().union(*members)
    seeds = [s for s, ps in enumerate(u.profs) if wanted & set(ps)]
    lengths = [len(p) for p in u.shals]
    tried = set()
    for s0 in seeds:
        Q = {t for t in np.nonzero(u.related[s0])[0]}
        # make Q pairwise related, dropping the worst offenders first
        while True:
            bad = {t: sum(1 for o in Q if not u.related[t, o]) for t in Q}
            worst = max(bad, key=lambda t: (bad[t], t), default=None)
            if worst is None or bad[worst] == 0:
                break
            Q.discard(worst)
        key = frozenset(Q)
        if key in tried:
            continue
        tried.add(key)
        found = _prune_q(Q, u._members, lengths, members)
        if found is not None:
            return found
    return None


class _TraceWitness:
    """Candidate shal sets built from the derivation of a Sat element.

    A letter gives itself, a sum concatenates, and the uplift rule pumps the
    outer parts: u^N r u'^N with r ranging over shortest shals realizing the
    uplift profiles.  N is a multiple of the period of the configuration
    powers, at least the number of rounds, so the pumped part still
    abstracts to the idempotent power.
    """

    def __init__(self, engine: SatEngine, k: int, cap: int = 48):
        self.engine = engine
        self.space = engine.space
        self.k = k
        self.cap = cap
        self._memo: dict = {}

    def _power(self, u: Config, scale: int) -> int:
        ops = self.engine.ops
        powers = [u]
        seen = {u: 0}
        while True:
            nxt = ops.sum(powers[-1], u)
            if nxt in seen:
                start, period = seen[nxt], len(powers) - seen[nxt]
                break
            seen[nxt] = len(powers)
            powers.append(nxt)
        need = max(start + 1, scale * self.k)
        return period * -(-need // period)

    def shals(self, c: Config, scale: int = 1) -> list:
        key = (c, scale)
        r = self._memo.get(key)
        if r is not None:
            return r
        rule, parents = self.engine.state.elements[c]
        if rule == "letter":
            r = [tuple(bits(c.alpha))]
        elif rule == "sum":
            a, b = parents
            r = [x + y for x in self.shals(a, scale) for y in self.shals(b, scale)]
        else:
            a, bs, b = parents
            na, nb = self._power(a, scale), self._power(b, scale)
            up = self.engine.up(bs)
            mids = sorted({self.space.witness[p][0] for mb in up.family for p in mb}, key=lambda w: (len(w), w))
            r = [x * na + m + y * nb for x in self.shals(a, scale) for m in mids for y in self.shals(b, scale)]
        r = sorted(set(r), key=lambda w: (len(w), w))[: self.cap]
        self._memo[key] = r
        return r

    def check(self, c: Config, X, scales=(1, 2)) -> Optional[list]:
        space = self.space
        members = list(c.family)
        for scale in scales:
            words = self.shals(c, scale)
            shals = [space.decode(w) for w in words]
            E = relaxed_classes(shals, self.k, X, space.m)
            profs = [space.shal_profiles(w) for w in words]

            def cls_of(s, y, Q):
                ts, js = np.nonzero(E[s, y])
                return frozenset(profs[t][j] for t, j in zip(ts, js) if t in Q)

            related = E.any(axis=(1, 3))
            Q = set(range(len(words)))
            while True:
                bad = {t: sum(1 for o in Q if not related[t, o]) for t in Q}
                worst = max(bad, key=lambda t: (bad[t], t), default=None)
                if worst is None or bad[worst] == 0:
                    break
                Q.discard(worst)
            found = _prune_q(Q, cls_of, [len(w) for w in words], members)
            if found is not None:
                return [words[i] for i in found]
        return None


def ell_bound(space: ProfileSpace, sat_size: int, cap: int = 6) -> int:
    return min(cap, 2 * len(space.letters) ** 2 * (sat_size + 1))


def validate_prop_algo(m: ForestMorphism, max_len: int = 6, k: Optional[int] = None,
                       xs: Optional[Sequence[int]] = None, exhaustive_alphabets: bool = True) -> dict:
    """Sampled containment of game configurations in the Sat fixpoint, both ways.

    Completeness: for every shal q (length <= max_len) the game
    configuration of q is below some Sat element.  Soundness: every Sat
    element gets a witness set of shals found by bounded search; elements
    without one are reported as unverified at the bound.
    """
    space = ProfileSpace(m)
    nh = len(m.H)
    xs = range(1 << nh) if xs is None else xs
    report = {"maxLen": max_len, "perX": [], "pass": True}
    universes: dict = {}
    for X in xs:
        engine = SatEngine(space, X, exhaustive_alphabets=exhaustive_alphabets)
        elements = list(engine.run().elements)
        kk = k if k is not None else ell_bound(space, len(elements))
        tracer = _TraceWitness(engine, kk)
        xl = [h for h in bits(X)]
        entry = {"X": [m.H.names[h] for h in xl], "k": kk, "satSize": len(elements),
                 "shals": 0, "incomplete": [], "verified": 0, "verifiedByPumping": 0, "unverified": [],
                 "nonTransitive": 0}
        by_alpha: dict = {}
        for c in elements:
            by_alpha.setdefault(c.alpha, []).append(c)
        for r in range(1, len(space.letters) + 1):
            for combo in itertools.combinations(range(len(space.letters)), r):
                if r > max_len:
                    continue
                alpha = sum(1 << i for i in combo)
                key = (alpha, X, kk)
                if key not in universes:
                    universes[key] = _Universe(space, [space.letters[i] for i in combo], xl, kk, max_len)
                u = universes[key]
                if not u.transitive():
                    entry["nonTransitive"] += 1
                cands = by_alpha.get(alpha, [])
                for s in range(len(u.shals)):
                    entry["shals"] += 1
                    g = Config(alpha, u.game_config(s))
                    if not any(config_leq(g, c) for c in cands):
                        entry["incomplete"].append(" + ".join(map(str, u.shals[s])))
                for c in cands:
                    if _find_q(u, c) is not None:
                        entry["verified"] += 1
                    elif tracer.check(c, xl) is not None:
                        entry["verified"] += 1
                        entry["verifiedByPumping"] += 1
                    else:
                        entry["unverified"].append(space_dump(space, c))
        if entry["incomplete"] or entry["unverified"]:
            report["pass"] = False
        report["perX"].append(entry)
    return report


def space_dump(space: ProfileSpace, c: Config) -> list:
    return sorted(sorted(space.dump(p) for p in mb) for mb in c.family)
