"""Syntactic forest algebra by partition refinement."""
from __future__ import annotations

from dataclasses import dataclass

from .algebra import FiniteSemigroup, ForestAlgebra, ForestMorphism


@dataclass(frozen=True)
class CongruencePair:
    h_classes: tuple  # tuple of tuples of H indices (original numbering)
    v_classes: tuple
    rounds: int = 0

    def h_class_of(self):
        return {h: i for i, cl in enumerate(self.h_classes) for h in cl}

    def v_class_of(self):
        return {v: i for i, cl in enumerate(self.v_classes) for v in cl}


def reachable(m: ForestMorphism):
    """Elements of H and V that are images of some forest / context."""
    alg = m.algebra
    ht, vt = alg.H.table, alg.V.table
    hs = set(m.leaves.values())
    vs = set(m.inners.values())
    changed = True
    while changed:
        changed = False
        new_h = {ht[x][y] for x in hs for y in hs} | {alg.act[v][h] for v in vs for h in hs}
        new_v = ({vt[x][y] for x in vs for y in vs}
                 | {alg.ins_left[g][v] for g in hs for v in vs}
                 | {alg.ins_right[v][g] for g in hs for v in vs})
        if not new_h <= hs or not new_v <= vs:
            hs |= new_h
            vs |= new_v
            changed = True
    return sorted(hs), sorted(vs)


def restrict(m: ForestMorphism, hs, vs) -> ForestMorphism:
    alg = m.algebra
    hmap = {h: i for i, h in enumerate(hs)}
    vmap = {v: i for i, v in enumerate(vs)}
    H = FiniteSemigroup(tuple(alg.H.names[h] for h in hs),
                        tuple(tuple(hmap[alg.H.table[x][y]] for y in hs) for x in hs))
    V = FiniteSemigroup(tuple(alg.V.names[v] for v in vs),
                        tuple(tuple(vmap[alg.V.table[x][y]] for y in vs) for x in vs))
    new = ForestAlgebra(
        H, V,
        act=tuple(tuple(hmap[alg.act[v][h]] for h in hs) for v in vs),
        ins_left=tuple(tuple(vmap[alg.ins_left[g][v]] for v in vs) for g in hs),
        ins_right=tuple(tuple(vmap[alg.ins_right[v][g]] for g in hs) for v in vs),
    )
    return ForestMorphism(
        new,
        {a: hmap[h] for a, h in m.leaves.items()},
        {b: vmap[v] for b, v in m.inners.items()},
        frozenset(hmap[h] for h in m.accepting if h in hmap),
        dict(m.hints),
    )


def coarsest_congruence(m: ForestMorphism) -> CongruencePair:
    """Coarsest congruence of (H,V) whose H-classes respect acceptance."""
    alg = m.algebra
    nh, nv = len(alg.H), len(alg.V)
    ht, vt = alg.H.table, alg.V.table
    hc = [int(h in m.accepting) for h in range(nh)]
    vc = [0] * nv
    rounds = 0
    while True:
        rounds += 1
        hsig = [
            (hc[h],
             tuple(hc[ht[h][g]] for g in range(nh)),
             tuple(hc[ht[g][h]] for g in range(nh)),
             tuple(hc[alg.act[v][h]] for v in range(nv)),
             tuple(vc[alg.ins_left[h][v]] for v in range(nv)),
             tuple(vc[alg.ins_right[v][h]] for v in range(nv)))
            for h in range(nh)
        ]
        vsig = [
            (vc[v],
             tuple(hc[alg.act[v][h]] for h in range(nh)),
             tuple(vc[vt[v][w]] for w in range(nv)),
             tuple(vc[vt[w][v]] for w in range(nv)),
             tuple(vc[alg.ins_left[g][v]] for g in range(nh)),
             tuple(vc[alg.ins_right[v][g]] for g in range(nh)))
            for v in range(nv)
        ]
        new_hc = _renumber(hsig)
        new_vc = _renumber(vsig)
        if len(set(new_hc)) == len(set(hc)) and len(set(new_vc)) == len(set(vc)):
            break
        hc, vc = new_hc, new_vc
    return CongruencePair(_classes(hc), _classes(vc), rounds)


def _renumber(sigs):
    ids = {}
    return [ids.setdefault(s, len(ids)) for s in sigs]


def _classes(labels):
    groups = {}
    for x, c in enumerate(labels):
        groups.setdefault(c, []).append(x)
    return tuple(sorted(tuple(g) for g in groups.values()))


def quotient(m: ForestMorphism, cong: CongruencePair) -> ForestMorphism:
    alg = m.algebra
    hcls, vcls = cong.h_class_of(), cong.v_class_of()
    hrep = [cl[0] for cl in cong.h_classes]
    vrep = [cl[0] for cl in cong.v_classes]
    H = FiniteSemigroup(tuple(alg.H.names[r] for r in hrep),
                        tuple(tuple(hcls[alg.H.table[x][y]] for y in hrep) for x in hrep))
    V = FiniteSemigroup(tuple(alg.V.names[r] for r in vrep),
                        tuple(tuple(vcls[alg.V.table[x][y]] for y in vrep) for x in vrep))
    new = ForestAlgebra(
        H, V,
        act=tuple(tuple(hcls[alg.act[v][h]] for h in hrep) for v in vrep),
        ins_left=tuple(tuple(vcls[alg.ins_left[g][v]] for v in vrep) for g in hrep),
        ins_right=tuple(tuple(vcls[alg.ins_right[v][g]] for g in hrep) for v in vrep),
    )
    return ForestMorphism(
        new,
        {a: hcls[h] for a, h in m.leaves.items()},
        {b: vcls[v] for b, v in m.inners.items()},
        frozenset(hcls[h] for h in m.accepting),
        dict(m.hints),
    ).validate()


def syntactic_quotient(m: ForestMorphism, with_map: bool = False):
    """Trim m to its image, then divide by the coarsest congruence.

    With ``with_map`` also return a dict describing which original element
    went to which class (by name).
    """
    hs, vs = reachable(m)
    trimmed = restrict(m, hs, vs)
    cong = coarsest_congruence(trimmed)
    q = quotient(trimmed, cong)
    if not with_map:
        return q
    hn, vn = trimmed.H.names, trimmed.V.names
    report = {
        "H": {q.H.names[i]: [hn[x] for x in cl] for i, cl in enumerate(cong.h_classes)},
        "V": {q.V.names[i]: [vn[x] for x in cl] for i, cl in enumerate(cong.v_classes)},
        "unreachableH": [n for i, n in enumerate(m.H.names) if i not in set(hs)],
        "unreachableV": [n for i, n in enumerate(m.V.names) if i not in set(vs)],
        "rounds": cong.rounds,
    }
    return q, report
