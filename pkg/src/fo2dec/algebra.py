"""Finite forest algebras and morphisms from the free forest algebra.

Elements of H and V are represented by their indices.  H is written
additively, V multiplicatively.  ``act[v][h]`` is the action vh,
``ins_left[g][v]`` the context g+v and ``ins_right[v][g]`` the context v+g.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

from .terms import PORT, Alphabet, Context, Forest, Tree


class AlgebraError(ValueError):
    """A presentation is malformed or violates an axiom."""

    kind = "AlgebraError"

    def __init__(self, msg: str, witness: Optional[dict] = None):
        super().__init__(f"{self.kind}: {msg}")
        self.witness = witness or {}


class TableNotTotal(AlgebraError):
    kind = "TableNotTotal"


class AssociativityError(AlgebraError):
    kind = "Associativity"


class ActionAxiomError(AlgebraError):
    kind = "ActionAxiom"


class InsertAxiomError(AlgebraError):
    kind = "InsertAxiom"


class UnknownSymbol(AlgebraError):
    kind = "UnknownSymbol"


class AcceptingError(AlgebraError):
    kind = "Accepting"


class PresentationSyntax(AlgebraError):
    kind = "Syntax"


@dataclass(frozen=True, eq=False)
class FiniteSemigroup:
    names: tuple
    table: tuple  # table[x][y] = x*y

    def __len__(self):
        return len(self.names)

    def mul(self, x: int, y: int) -> int:
        return self.table[x][y]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSymbol(f"unknown element {name!r}") from None

    @cached_property
    def _index(self):
        return {n: i for i, n in enumerate(self.names)}

    def power(self, x: int, n: int) -> int:
        r = x
        for _ in range(n - 1):
            r = self.table[r][x]
        return r

    def check_associative(self, what: str = "S"):
        t = self.table
        n = len(self.names)
        for x in range(n):
            for y in range(n):
                xy = t[x][y]
                for z in range(n):
                    if t[xy][z] != t[x][t[y][z]]:
                        names = self.names
                        raise AssociativityError(
                            f"{what}: ({names[x]} {names[y]}) {names[z]} != {names[x]} ({names[y]} {names[z]})",
                            {"semigroup": what, "x": names[x], "y": names[y], "z": names[z]},
                        )

    @cached_property
    def _index_period(self):
        """Per element (index i, period p) of its cyclic subsemigroup."""
        out = []
        for x in range(len(self.names)):
            seen = {}
            cur, k = x, 1
            while cur not in seen:
                seen[cur] = k
                cur = self.table[cur][x]
                k += 1
            out.append((seen[cur], k - seen[cur]))
        return out

    @cached_property
    def omega(self) -> int:
        """Least n >= 1 with x^(2n) = x^n for every x."""
        if not self.names:
            return 1
        lcm = 1
        top = 1
        for i, p in self._index_period:
            lcm = lcm * p // math.gcd(lcm, p)
            top = max(top, i)
        return lcm * -(-top // lcm)

    @cached_property
    def idempotent_power(self) -> tuple:
        n = self.omega
        return tuple(self.power(x, n) for x in range(len(self.names)))

    def idem(self, x: int) -> int:
        return self.idempotent_power[x]

    @cached_property
    def idempotents(self) -> tuple:
        return tuple(x for x in range(len(self.names)) if self.table[x][x] == x)


def omega_exponent(s: FiniteSemigroup) -> int:
    return s.omega


@dataclass(frozen=True, eq=False)
class ForestAlgebra:
    H: FiniteSemigroup
    V: FiniteSemigroup
    act: tuple  # act[v][h]
    ins_left: tuple  # ins_left[g][v] = g + v
    ins_right: tuple  # ins_right[v][g] = v + g

    def validate(self):
        self.H.check_associative("H")
        self.V.check_associative("V")
        H, V = range(len(self.H)), range(len(self.V))
        hn, vn = self.H.names, self.V.names
        act, vt, ht = self.act, self.V.table, self.H.table
        for w in V:
            for v in V:
                wv = vt[w][v]
                for h in H:
                    if act[w][act[v][h]] != act[wv][h]:
                        raise ActionAxiomError(
                            f"w(vh) != (wv)h for w={vn[w]}, v={vn[v]}, h={hn[h]}",
                            {"w": vn[w], "v": vn[v], "h": hn[h]},
                        )
        for v in V:
            for g in H:
                vg, gv = self.ins_right[v][g], self.ins_left[g][v]
                for h in H:
                    if act[vg][h] != ht[act[v][h]][g]:
                        raise InsertAxiomError(
                            f"(v+g)h != vh+g for v={vn[v]}, g={hn[g]}, h={hn[h]}",
                            {"side": "right", "v": vn[v], "g": hn[g], "h": hn[h]},
                        )
                    if act[gv][h] != ht[g][act[v][h]]:
                        raise InsertAxiomError(
                            f"(g+v)h != g+vh for v={vn[v]}, g={hn[g]}, h={hn[h]}",
                            {"side": "left", "v": vn[v], "g": hn[g], "h": hn[h]},
                        )


@dataclass(frozen=True, eq=False)
class ForestMorphism:
    algebra: ForestAlgebra
    leaves: dict  # leaf label -> H index
    inners: dict  # inner label -> V index
    accepting: frozenset
    hints: dict = field(default_factory=dict)

    @property
    def H(self) -> FiniteSemigroup:
        return self.algebra.H

    @property
    def V(self) -> FiniteSemigroup:
        return self.algebra.V

    @cached_property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.leaves, self.inners)

    def plus(self, h: int, g: int) -> int:
        return self.algebra.H.table[h][g]

    def act(self, v: int, h: int) -> int:
        return self.algebra.act[v][h]

    def accepts(self, f: Forest) -> bool:
        return eval_forest(self, f) in self.accepting

    def validate(self):
        self.algebra.validate()
        for h in self.accepting:
            if not 0 <= h < len(self.H):
                raise AcceptingError(f"accepting element {h} not in H")
        return self


def eval_forest(m: ForestMorphism, f) -> int:
    trees = f.trees if hasattr(f, "trees") else f
    return _eval_trees(m, trees)


def _eval_trees(m, trees) -> int:
    H = m.algebra.H.table
    total = None
    for t in trees:
        h = _eval_tree(m, t)
        total = h if total is None else H[total][h]
    return total


def _eval_tree(m, t: Tree) -> int:
    if not t.children:
        try:
            return m.leaves[t.label]
        except KeyError:
            raise UnknownSymbol(f"leaf label {t.label!r} not in the alphabet") from None
    try:
        v = m.inners[t.label]
    except KeyError:
        raise UnknownSymbol(f"inner label {t.label!r} not in the alphabet") from None
    return m.algebra.act[v][_eval_trees(m, t.children)]


def eval_context(m: ForestMorphism, c: Context) -> int:
    return _eval_ctx_row(m, c.trees, c.port)


def _eval_ctx_row(m, trees, path) -> int:
    alg = m.algebra
    i = path[0]
    t = trees[i]
    try:
        vb = m.inners[t.label]
    except KeyError:
        raise UnknownSymbol(f"inner label {t.label!r} not in the alphabet") from None
    if len(path) == 2 and t.children[0].label == PORT:
        v = vb
    else:
        v = alg.V.table[vb][_eval_ctx_row(m, t.children, path[1:])]
    if i > 0:
        v = alg.ins_left[_eval_trees(m, trees[:i])][v]
    if i + 1 < len(trees):
        v = alg.ins_right[v][_eval_trees(m, trees[i + 1:])]
    return v


def leaf_completion(m: ForestMorphism) -> ForestMorphism:
    """Add one fresh leaf per element of H, mapped to that element."""
    used = set(m.leaves) | set(m.inners)
    leaves = dict(m.leaves)
    names = {}
    for h, name in enumerate(m.H.names):
        lab = f"l_{name}"
        while lab in used:
            lab += "_"
        used.add(lab)
        leaves[lab] = h
        names[h] = lab
    hints = dict(m.hints)
    hints["completion_leaves"] = names
    return ForestMorphism(m.algebra, leaves, dict(m.inners), m.accepting, hints)


# ---------------------------------------------------------------------------
# presentation files

SECTIONS = ("H", "V", "Hplus", "Vtimes", "action", "insertL", "insertR", "leaves", "inners", "accept")


def parse_presentation(text: str) -> ForestMorphism:
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[(\w+)\]", line)
        if m:
            current = m.group(1)
            if current not in SECTIONS:
                raise PresentationSyntax(f"line {lineno}: unknown section [{current}]")
            if current in sections:
                raise PresentationSyntax(f"line {lineno}: duplicate section [{current}]")
            sections[current] = []
            continue
        if current is None:
            raise PresentationSyntax(f"line {lineno}: content before first section")
        sections[current].append((lineno, line))

    def names_of(sec):
        out = []
        for _, line in sections.get(sec, []):
            out.extend(line.split())
        if len(set(out)) != len(out):
            raise PresentationSyntax(f"[{sec}] lists an element twice")
        return out

    hn, vn = names_of("H"), names_of("V")
    if not hn:
        raise PresentationSyntax("[H] is empty")
    if not vn:
        raise PresentationSyntax("[V] is empty")
    hidx = {n: i for i, n in enumerate(hn)}
    vidx = {n: i for i, n in enumerate(vn)}

    def lookup(table, name, sec, lineno):
        if name not in table:
            raise UnknownSymbol(f"line {lineno}: [{sec}] unknown element {name!r}", {"symbol": name})
        return table[name]

    def binary(sec, left, right, result):
        rows = {}
        for lineno, line in sections.get(sec, []):
            m = re.fullmatch(r"(\S+)\s+(\S+)\s*->\s*(\S+)", line)
            if not m:
                raise PresentationSyntax(f"line {lineno}: expected 'x y -> z' in [{sec}]")
            x = lookup(left, m.group(1), sec, lineno)
            y = lookup(right, m.group(2), sec, lineno)
            z = lookup(result, m.group(3), sec, lineno)
            if (x, y) in rows and rows[(x, y)] != z:
                raise PresentationSyntax(f"line {lineno}: conflicting entry in [{sec}]")
            rows[(x, y)] = z
        table = []
        lnames = {i: n for n, i in left.items()}
        rnames = {i: n for n, i in right.items()}
        for x in range(len(left)):
            row = []
            for y in range(len(right)):
                if (x, y) not in rows:
                    raise TableNotTotal(
                        f"[{sec}] has no entry for {lnames[x]} {rnames[y]}",
                        {"section": sec, "x": lnames[x], "y": rnames[y]},
                    )
                row.append(rows[(x, y)])
            table.append(tuple(row))
        return tuple(table)

    def mapping(sec, result):
        out = {}
        for lineno, line in sections.get(sec, []):
            m = re.fullmatch(r"(\S+)\s*->\s*(\S+)", line)
            if not m:
                raise PresentationSyntax(f"line {lineno}: expected 'label -> element' in [{sec}]")
            if m.group(1) in out:
                raise PresentationSyntax(f"line {lineno}: label {m.group(1)!r} mapped twice")
            out[m.group(1)] = lookup(result, m.group(2), sec, lineno)
        return out

    H = FiniteSemigroup(tuple(hn), binary("Hplus", hidx, hidx, hidx))
    V = FiniteSemigroup(tuple(vn), binary("Vtimes", vidx, vidx, vidx))
    alg = ForestAlgebra(
        H, V,
        act=binary("action", vidx, hidx, hidx),
        ins_left=binary("insertL", hidx, vidx, vidx),
        ins_right=binary("insertR", vidx, hidx, vidx),
    )
    leaves = mapping("leaves", hidx)
    inners = mapping("inners", vidx)
    if not leaves and not inners:
        raise PresentationSyntax("no letters: [leaves] and [inners] are both empty")
    clash = set(leaves) & set(inners)
    if clash:
        raise PresentationSyntax(f"labels used as both leaf and inner: {sorted(clash)}")
    accept = []
    for name in names_of("accept"):
        if name not in hidx:
            raise AcceptingError(f"accepting element {name!r} is not in H", {"symbol": name})
        accept.append(hidx[name])
    m = ForestMorphism(alg, leaves, inners, frozenset(accept))
    return m.validate()


def load_morphism(path) -> ForestMorphism:
    with open(path, encoding="utf-8") as fh:
        return parse_presentation(fh.read())


def dump_presentation(m: ForestMorphism, header: str = "") -> str:
    alg = m.algebra
    hn, vn = alg.H.names, alg.V.names
    out = []
    if header:
        out.extend(f"# {line}" for line in header.splitlines())
    out += ["[H]", " ".join(hn), "[V]", " ".join(vn), "[Hplus]"]
    out += [f"{hn[x]} {hn[y]} -> {hn[alg.H.table[x][y]]}" for x in range(len(hn)) for y in range(len(hn))]
    out.append("[Vtimes]")
    out += [f"{vn[x]} {vn[y]} -> {vn[alg.V.table[x][y]]}" for x in range(len(vn)) for y in range(len(vn))]
    out.append("[action]")
    out += [f"{vn[v]} {hn[h]} -> {hn[alg.act[v][h]]}" for v in range(len(vn)) for h in range(len(hn))]
    out.append("[insertL]")
    out += [f"{hn[g]} {vn[v]} -> {vn[alg.ins_left[g][v]]}" for g in range(len(hn)) for v in range(len(vn))]
    out.append("[insertR]")
    out += [f"{vn[v]} {hn[g]} -> {vn[alg.ins_right[v][g]]}" for v in range(len(vn)) for g in range(len(hn))]
    out.append("[leaves]")
    out += [f"{a} -> {hn[h]}" for a, h in sorted(m.leaves.items())]
    out.append("[inners]")
    out += [f"{b} -> {vn[v]}" for b, v in sorted(m.inners.items())]
    out += ["[accept]", " ".join(hn[h] for h in sorted(m.accepting))]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# building algebras from an H-evaluation


def from_evaluation(h_names: Iterable[str], plus, leaves: dict, inner_maps: dict,
                    accept: Iterable[str], v_prefix: str = "v") -> ForestMorphism:
    """Build a faithful morphism from (H,+) and the action of each inner letter.

    ``plus(x, y)`` works on names of ``h_names``; ``inner_maps[b]`` maps each
    H name to a name (the type of b(s) given the type of s).  V is generated
    as a transformation semigroup on H by the inner letters, products and
    inserts of every element of H.
    """
    hn = tuple(h_names)
    hidx = {n: i for i, n in enumerate(hn)}
    n = len(hn)
    ht = tuple(tuple(hidx[plus(x, y)] for y in hn) for x in hn)

    fns: dict = {}
    order: list = []

    def add(f):
        if f not in fns:
            fns[f] = len(order)
            order.append(f)
        return fns[f]

    inners = {b: add(tuple(hidx[mp[x]] for x in hn)) for b, mp in sorted(inner_maps.items())}
    i = 0
    while i < len(order):
        f = order[i]
        for g in range(n):
            add(tuple(ht[g][f[h]] for h in range(n)))
            add(tuple(ht[f[h]][g] for h in range(n)))
        for j in range(i + 1):
            other = order[j]
            add(tuple(f[other[h]] for h in range(n)))
            add(tuple(other[f[h]] for h in range(n)))
        i += 1
    # products of later elements with earlier ones are covered since each
    # pair (i, j) with j <= i was composed both ways when i was processed
    vn = tuple(f"{v_prefix}{k}" for k in range(len(order)))
    vt = tuple(tuple(fns[tuple(f[g[h]] for h in range(n))] for g in order) for f in order)
    act = tuple(order)
    ins_left = tuple(tuple(fns[tuple(ht[g][f[h]] for h in range(n))] for f in order) for g in range(n))
    ins_right = tuple(tuple(fns[tuple(ht[f[h]][g] for h in range(n))] for g in range(n)) for f in order)
    alg = ForestAlgebra(FiniteSemigroup(hn, ht), FiniteSemigroup(vn, vt), act, ins_left, ins_right)
    m = ForestMorphism(alg, {a: hidx[h] for a, h in leaves.items()}, inners,
                       frozenset(hidx[a] for a in accept))
    return m.validate()
