"""Profiles of shal positions and their sum operations.

A profile is the tuple ``(arity, alphabet, fH, fV)``.  Subsets of H and V
are bitmasks; ``fH[G]`` and ``fV[G]`` are indexed by the mask G of a subset
of H.  The alphabet is a bitmask over the sorted shal letters of the
morphism.  Profiles are interned per ``ProfileSpace`` so the rest of the
code manipulates small integers.
"""
from __future__ import annotations

import itertools
import random
from typing import NamedTuple, Optional, Sequence

from .algebra import ForestMorphism, eval_context, eval_forest
from .terms import Forest, Letter, Tree, shal_arity, shal_plug


class Budget(RuntimeError):
    """A resource cap was hit; ``partial`` carries whatever was computed."""

    def __init__(self, msg: str, partial=None):
        super().__init__(msg)
        self.partial = partial


class Profile(NamedTuple):
    arity: int
    alpha: int
    fH: tuple
    fV: tuple


def bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


class ProfileSpace:
    """Interning tables and memoised operations for one morphism."""

    def __init__(self, m: ForestMorphism, letters: Optional[Sequence[Letter]] = None):
        self.m = m
        alg = m.algebra
        self.nh = len(alg.H)
        self.nv = len(alg.V)
        self.letters = tuple(sorted(letters if letters is not None else m.alphabet.letters()))
        self.letter_index = {c: i for i, c in enumerate(self.letters)}
        self.full = (1 << self.nh) - 1
        nmask = 1 << self.nh
        ht = alg.H.table
        self.hsum = [[0] * nmask for _ in range(nmask)]
        for x in range(nmask):
            for y in range(nmask):
                r = 0
                for h in bits(x):
                    for g in bits(y):
                        r |= 1 << ht[h][g]
                self.hsum[x][y] = r
        self._insr: dict = {}
        self._insl: dict = {}
        self.profiles: list = []
        self.ids: dict = {}
        self.witness: dict = {}  # id -> (shal tuple of letter indices, position)
        self._sum_l: dict = {}
        self._sum_r: dict = {}
        self._letter_ids = [self._letter_profile(i) for i in range(len(self.letters))]
        # forest-only states (arity, alpha, fH) for words, used by uplift
        self.fstates: list = []
        self.fids: dict = {}
        self.fwitness: dict = {}
        self._fsum: dict = {}
        self._fletter = [self._intern_f((p.arity, p.alpha, p.fH), (i,))
                         for i, p in ((i, self.profiles[pid]) for i, pid in enumerate(self._letter_ids))]

    # -- set operations ----------------------------------------------------
    def ins_right(self, vmask: int, hmask: int) -> int:
        """{v+g : v in vmask, g in hmask}."""
        key = (vmask, hmask)
        r = self._insr.get(key)
        if r is None:
            t = self.m.algebra.ins_right
            r = 0
            for v in bits(vmask):
                for g in bits(hmask):
                    r |= 1 << t[v][g]
            self._insr[key] = r
        return r

    def ins_left(self, hmask: int, vmask: int) -> int:
        """{g+v : g in hmask, v in vmask}."""
        key = (hmask, vmask)
        r = self._insl.get(key)
        if r is None:
            t = self.m.algebra.ins_left
            r = 0
            for g in bits(hmask):
                for v in bits(vmask):
                    r |= 1 << t[g][v]
            self._insl[key] = r
        return r

    # -- interning ---------------------------------------------------------
    def intern(self, p: Profile, wit=None) -> int:
        pid = self.ids.get(p)
        if pid is None:
            pid = len(self.profiles)
            self.ids[p] = pid
            self.profiles.append(p)
            if wit is not None:
                self.witness[pid] = wit
        elif wit is not None:
            old = self.witness.get(pid)
            if old is None or (len(old[0]), old) > (len(wit[0]), wit):
                self.witness[pid] = wit
        return pid

    def _intern_f(self, key, word) -> int:
        fid = self.fids.get(key)
        if fid is None:
            fid = len(self.fstates)
            self.fids[key] = fid
            self.fstates.append(key)
            self.fwitness[fid] = word
        else:
            old = self.fwitness[fid]
            if (len(old), old) > (len(word), word):
                self.fwitness[fid] = word
        return fid

    def __getitem__(self, pid: int) -> Profile:
        return self.profiles[pid]

    # -- letters -----------------------------------------------------------
    def _letter_profile(self, i: int) -> int:
        c = self.letters[i]
        m = self.m
        nmask = 1 << self.nh
        if c.is_bare:
            fh = (1 << m.leaves[c.leaf],) * nmask
            p = Profile(0, 1 << i, fh, (0,) * nmask)
        elif not c.is_port:
            vb = m.inners[c.inner]
            fh = (1 << m.algebra.act[vb][m.leaves[c.leaf]],) * nmask
            p = Profile(0, 1 << i, fh, (0,) * nmask)
        else:
            vb = m.inners[c.inner]
            act = m.algebra.act[vb]
            fh = tuple(self._image(act, G) for G in range(nmask))
            p = Profile(1, 1 << i, fh, (1 << vb,) * nmask)
        return self.intern(p, ((i,), 0))

    @staticmethod
    def _image(table, G):
        r = 0
        for h in bits(G):
            r |= 1 << table[h]
        return r

    def letter(self, c) -> int:
        """Profile id of a letter (given as Letter or index)."""
        if isinstance(c, Letter):
            if c not in self.letter_index:
                raise KeyError(f"unknown shal letter {c}")
            c = self.letter_index[c]
        return self._letter_ids[c]

    # -- sums --------------------------------------------------------------
    def sum_l(self, a: int, b: int) -> int:
        """Profile of p+q keeping the position of p."""
        key = (a, b)
        r = self._sum_l.get(key)
        if r is None:
            u, v = self.profiles[a], self.profiles[b]
            hs = self.hsum
            fh = tuple(hs[x][y] for x, y in zip(u.fH, v.fH))
            fv = tuple(self.ins_right(x, y) if x else 0 for x, y in zip(u.fV, v.fH))
            p = Profile(min(u.arity + v.arity, 2), u.alpha | v.alpha, fh, fv)
            wa, wb = self.witness.get(a), self.witness.get(b)
            wit = (wa[0] + wb[0], wa[1]) if wa and wb else None
            r = self.intern(p, wit)
            self._sum_l[key] = r
        return r

    def sum_r(self, a: int, b: int) -> int:
        """Profile of p+q keeping the position of q."""
        key = (a, b)
        r = self._sum_r.get(key)
        if r is None:
            u, v = self.profiles[a], self.profiles[b]
            hs = self.hsum
            fh = tuple(hs[x][y] for x, y in zip(u.fH, v.fH))
            fv = tuple(self.ins_left(x, y) if y else 0 for x, y in zip(u.fH, v.fV))
            p = Profile(min(u.arity + v.arity, 2), u.alpha | v.alpha, fh, fv)
            wa, wb = self.witness.get(a), self.witness.get(b)
            wit = (wa[0] + wb[0], len(wa[0]) + wb[1]) if wa and wb else None
            r = self.intern(p, wit)
            self._sum_r[key] = r
        return r

    def profile_sum(self, a: int, b: int, keep: str) -> int:
        if keep.lower().startswith("l"):
            return self.sum_l(a, b)
        return self.sum_r(a, b)

    # -- forest states (no kept position) ------------------------------------
    def fsum(self, a: int, b: int) -> int:
        key = (a, b)
        r = self._fsum.get(key)
        if r is None:
            (ia, la, fa), (ib, lb, fb) = self.fstates[a], self.fstates[b]
            hs = self.hsum
            k = (min(ia + ib, 2), la | lb, tuple(hs[x][y] for x, y in zip(fa, fb)))
            r = self._intern_f(k, self.fwitness[a] + self.fwitness[b])
            self._fsum[key] = r
        return r

    def f_letter(self, i: int) -> int:
        return self._fletter[i]

    def attach(self, left: Optional[int], pid: int, right: Optional[int]) -> int:
        """Profile of (left word) + (position) + (right word)."""
        u = self.profiles[pid]
        hs = self.hsum
        arity, alpha, fh, fv = u
        wit = self.witness.get(pid)
        if left is not None:
            li, la, lf = self.fstates[left]
            fv = tuple(self.ins_left(x, y) if y else 0 for x, y in zip(lf, fv))
            fh = tuple(hs[x][y] for x, y in zip(lf, fh))
            arity, alpha = min(arity + li, 2), alpha | la
            if wit:
                lw = self.fwitness[left]
                wit = (lw + wit[0], len(lw) + wit[1])
        if right is not None:
            ri, ra, rf = self.fstates[right]
            fv = tuple(self.ins_right(x, y) if x else 0 for x, y in zip(fv, rf))
            fh = tuple(hs[x][y] for x, y in zip(fh, rf))
            arity, alpha = min(arity + ri, 2), alpha | ra
            if wit:
                wit = (wit[0] + self.fwitness[right], wit[1])
        return self.intern(Profile(arity, alpha, fh, fv), wit)

    # -- shals ---------------------------------------------------------------
    def encode(self, p: Sequence[Letter]) -> tuple:
        return tuple(self.letter_index[c] for c in p)

    def decode(self, word: Sequence[int]) -> tuple:
        return tuple(self.letters[i] for i in word)

    def shal_profile(self, p, x: int) -> int:
        """Left-to-right fold of letter profiles keeping position x."""
        word = self.encode(p) if p and isinstance(p[0], Letter) else tuple(p)
        if not 0 <= x < len(word):
            raise IndexError(f"position {x} outside the shal")
        cur = None
        for i in range(x):
            cur = self.letter(word[i]) if cur is None else self.sum_l(cur, self.letter(word[i]))
        cur = self.letter(word[x]) if cur is None else self.sum_r(cur, self.letter(word[x]))
        for i in range(x + 1, len(word)):
            cur = self.sum_l(cur, self.letter(word[i]))
        return cur

    def shal_profiles(self, word: Sequence[int]) -> list:
        """Profiles of every position of a shal given as letter indices."""
        n = len(word)
        if n == 1:
            return [self.letter(word[0])]
        pre = [None] * n
        suf = [None] * n
        for i in range(n):
            f = self.f_letter(word[i])
            pre[i] = f if i == 0 else self.fsum(pre[i - 1], f)
        for i in range(n - 1, -1, -1):
            f = self.f_letter(word[i])
            suf[i] = f if i == n - 1 else self.fsum(f, suf[i + 1])
        return [self.attach(pre[i - 1] if i else None, self.letter(word[i]),
                            suf[i + 1] if i + 1 < n else None) for i in range(n)]

    # -- rendering -----------------------------------------------------------
    def alpha_letters(self, alpha: int) -> list:
        return [self.letters[i] for i in bits(alpha)]

    def subset_str(self, mask: int, names) -> str:
        return "{" + ",".join(names[i] for i in bits(mask)) + "}"

    def dump(self, pid: int) -> str:
        """``arity | alphabet | fH table | fV table`` in subset-mask order."""
        p = self.profiles[pid]
        hn, vn = self.m.H.names, self.m.V.names
        alpha = ",".join(str(c) for c in self.alpha_letters(p.alpha))
        fh = " ".join(self.subset_str(x, hn) for x in p.fH)
        fv = " ".join(self.subset_str(x, vn) for x in p.fV)
        return f"{p.arity} | {{{alpha}}} | {fh} | {fv}"

    def to_json(self, pid: int) -> dict:
        p = self.profiles[pid]
        hn, vn = self.m.H.names, self.m.V.names
        out = {
            "arity": p.arity,
            "alphabet": [str(c) for c in self.alpha_letters(p.alpha)],
            "fH": [[hn[h] for h in bits(x)] for x in p.fH],
            "fV": [[vn[v] for v in bits(x)] for x in p.fV],
        }
        wit = self.witness.get(pid)
        if wit:
            out["shal"] = " + ".join(str(self.letters[i]) for i in wit[0])
            out["position"] = wit[1]
        return out

    def from_json(self, d: dict) -> int:
        hidx = {n: i for i, n in enumerate(self.m.H.names)}
        vidx = {n: i for i, n in enumerate(self.m.V.names)}
        from .terms import parse_letter
        alpha = 0
        for s in d["alphabet"]:
            alpha |= 1 << self.letter_index[parse_letter(s)]
        fh = tuple(sum(1 << hidx[h] for h in row) for row in d["fH"])
        fv = tuple(sum(1 << vidx[v] for v in row) for row in d["fV"])
        if len(fh) != 1 << self.nh or len(fv) != 1 << self.nh:
            raise ValueError("profile tables have the wrong size")
        return self.intern(Profile(d["arity"], alpha, fh, fv))

    def canonical(self, pid: int) -> tuple:
        """Order-independent key (ids depend on discovery order)."""
        return tuple(self.profiles[pid])


def letter_profile(c: Letter, m: ForestMorphism, space: Optional[ProfileSpace] = None) -> Profile:
    space = space or ProfileSpace(m)
    return space[space.letter(c)]


def profile_sum(space: ProfileSpace, a: int, b: int, keep: str = "left") -> int:
    return space.profile_sum(a, b, keep)


def shal_profile(p, x: int, m: ForestMorphism, sample_depth: int = 0,
                 space: Optional[ProfileSpace] = None) -> Profile:
    space = space or ProfileSpace(m)
    return space[space.shal_profile(p, x)]


def representatives(m: ForestMorphism, max_size: int = 7) -> dict:
    """One concrete forest per reachable element of H (smallest found)."""
    reps: dict = {}
    for a in sorted(m.leaves):
        reps.setdefault(m.leaves[a], Forest((Tree(a),)))
    frontier = True
    while frontier:
        frontier = False
        items = sorted(reps.items(), key=lambda kv: (kv[1].size(), str(kv[1])))
        new = {}
        for h, f in items:
            for b in sorted(m.inners):
                t = Forest((Tree(b, f.trees),))
                hh = eval_forest(m, t)
                if hh not in reps and hh not in new and t.size() <= max_size:
                    new[hh] = t
            for g, f2 in items:
                s = f + f2
                hh = eval_forest(m, s)
                if hh not in reps and hh not in new and s.size() <= max_size:
                    new[hh] = s
        if new:
            reps.update(new)
            frontier = True
    return reps


def semantic_profile(p: Sequence[Letter], x: int, m: ForestMorphism, reps: Optional[dict] = None) -> Profile:
    """Profile of (p, x) computed by plugging concrete forests of each type.

    Independent of the fold: it builds the terms p[T] and p[T,x] and
    evaluates them.  Needs a representative forest for every element of H.
    """
    reps = reps if reps is not None else representatives(m)
    nh = len(m.H)
    if len(reps) < nh:
        raise ValueError("semantic profiles need a representative for every element of H")
    letters = sorted(m.alphabet.letters())
    index = {c: i for i, c in enumerate(letters)}
    alpha = 0
    for c in p:
        alpha |= 1 << index[c]
    n = shal_arity(p)
    fh, fv = [], []
    for G in range(1 << nh):
        members = [h for h in range(nh) if G >> h & 1]
        img = 0
        for T in itertools.product(members, repeat=n):
            img |= 1 << eval_forest(m, shal_plug(p, [reps[h] for h in T]))
        fh.append(img)
        vimg = 0
        if p[x].is_port:
            for T in itertools.product(members, repeat=n - 1):
                vimg |= 1 << eval_context(m, shal_plug(p, [reps[h] for h in T], keep=x))
        fv.append(vimg)
    return Profile(min(n, 2), alpha, tuple(fh), tuple(fv))


def profiles_over(space: ProfileSpace, letter_ids: Sequence[int], cap: int = 200000,
                  rng: Optional[random.Random] = None) -> dict:
    """Closure of the letter profiles of ``letter_ids`` under both sums.

    Returns {alphabet mask: sorted list of profile ids}.  With ``rng`` the
    worklist is processed in shuffled order (used to test determinism).
    """
    seeds = [space.letter(i) for i in letter_ids]
    found = set(seeds)
    order = list(seeds)
    work = list(seeds)
    while work:
        if rng is not None:
            rng.shuffle(work)
        a = work.pop()
        snapshot = list(order)
        for b in snapshot:
            for r in (space.sum_l(a, b), space.sum_r(a, b), space.sum_l(b, a), space.sum_r(b, a)):
                if r not in found:
                    found.add(r)
                    order.append(r)
                    work.append(r)
                    if len(found) > cap:
                        raise Budget(f"profile closure exceeded {cap} profiles", _group(space, found))
    return _group(space, found)


def _group(space, found) -> dict:
    out: dict = {}
    for pid in found:
        out.setdefault(space[pid].alpha, []).append(pid)
    return {k: sorted(v, key=space.canonical) for k, v in sorted(out.items())}


def all_profiles(m: ForestMorphism, space: Optional[ProfileSpace] = None, cap: int = 200000,
                 rng: Optional[random.Random] = None) -> dict:
    space = space or ProfileSpace(m)
    return profiles_over(space, range(len(space.letters)), cap, rng)
