"""Game oracles and the temporal-logic evaluator.

Everything here is brute force: formulas are evaluated node by node, game
equivalences are exact win/lose tables over pairs of positions.  The
relaxed game is computed for whole batches of shals at once with numpy.
"""
from __future__ import annotations

import random
import re
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .profiles import Budget, ProfileSpace
from .terms import Forest, Letter, enumerate_shals

VARIANTS = ("FO2", "S", "SNEQ", "SUC")

# ---------------------------------------------------------------------------
# formulas

UNARY = {
    "EF": "EF", "FUP": "Fup", "FH": "Fh", "FHINV": "FhInv",
    "S": "S", "SNEQ": "Sneq", "XH": "Xh", "XHINV": "XhInv",
}
KEYWORDS = {"and", "or", "not", "true", "false"}


class Formula(NamedTuple):
    op: str  # atom, true, false, not, and, or, or a modality name
    args: tuple

    def __str__(self):
        return format_formula(self)


class FormulaSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at offset {pos}")
        self.pos = pos


def atom(label: str) -> Formula:
    return Formula("atom", (label,))


def neg(f: Formula) -> Formula:
    return Formula("not", (f,))


def conj(f: Formula, g: Formula) -> Formula:
    return Formula("and", (f, g))


def disj(f: Formula, g: Formula) -> Formula:
    return Formula("or", (f, g))


def modal(op: str, f: Formula) -> Formula:
    return Formula(UNARY[op.upper()], (f,))


_TOKEN = re.compile(r"\s*(?:(?P<lp>\()|(?P<rp>\))|(?P<word>@?[A-Za-z0-9_]+))")


def parse_formula(text: str) -> Formula:
    """``EF(a) and not Fh(b or c)``; escape labels that are keywords as ``@and``."""
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    i = 0

    def peek():
        return toks[i]

    def take(kind, value=None):
        nonlocal i
        t = toks[i]
        if t[0] != kind or (value is not None and t[1] != value):
            raise FormulaSyntaxError(f"expected {value or kind}, got {t[1] or 'end of input'!r}", t[2])
        i += 1
        return t

    def disjunction():
        f = conjunction()
        while peek()[:2] == ("word", "or"):
            take("word")
            f = disj(f, conjunction())
        return f

    def conjunction():
        f = unary()
        while peek()[:2] == ("word", "and"):
            take("word")
            f = conj(f, unary())
        return f

    def unary():
        t = peek()
        if t[0] == "lp":
            take("lp")
            f = disjunction()
            take("rp")
            return f
        if t[0] != "word":
            raise FormulaSyntaxError(f"unexpected {t[1] or 'end of input'!r}", t[2])
        take("word")
        w = t[1]
        if w == "not":
            return neg(unary())
        if w in ("true", "false"):
            return Formula(w, ())
        if w in ("and", "or"):
            raise FormulaSyntaxError(f"misplaced {w!r}", t[2])
        if w.upper() in UNARY and peek()[0] == "lp":
            take("lp")
            f = disjunction()
            take("rp")
            return modal(w, f)
        return atom(w[1:] if w.startswith("@") else w)

    f = disjunction()
    if peek()[0] != "eof":
        t = peek()
        raise FormulaSyntaxError(f"trailing input {t[1]!r}", t[2])
    return f


def format_formula(f: Formula) -> str:
    op = f.op
    if op == "atom":
        lab = f.args[0]
        return "@" + lab if lab in KEYWORDS or lab.upper() in UNARY else lab
    if op in ("true", "false"):
        return op
    if op == "not":
        return f"not {_wrap(f.args[0])}"
    if op in ("and", "or"):
        return f"{_wrap(f.args[0])} {op} {_wrap(f.args[1])}"
    return f"{op}({format_formula(f.args[0])})"


def _wrap(f: Formula) -> str:
    s = format_formula(f)
    return f"({s})" if f.op in ("and", "or") else s


def modal_depth(f: Formula) -> int:
    if f.op in ("atom", "true", "false"):
        return 0
    d = max(modal_depth(g) for g in f.args)
    return d if f.op in ("not", "and", "or") else d + 1


def random_formula(rng: random.Random, labels: Sequence[str], depth: int,
                   modalities: Sequence[str] = ("EF", "Fup", "Fh", "FhInv"), size: int = 4) -> Formula:
    """A random formula of modal depth at most ``depth``."""
    labels = sorted(labels)
    r = rng.random()
    if size <= 1 or r < 0.2:
        return atom(rng.choice(labels))
    if depth > 0 and r < 0.55:
        return modal(rng.choice(list(modalities)), random_formula(rng, labels, depth - 1, modalities, size - 1))
    if r < 0.7:
        return neg(random_formula(rng, labels, depth, modalities, size - 1))
    op = conj if rng.random() < 0.5 else disj
    return op(random_formula(rng, labels, depth, modalities, size // 2),
              random_formula(rng, labels, depth, modalities, size // 2))


# ---------------------------------------------------------------------------
# forests as node tables

class NodeTable:
    """Flat description of a forest: labels, parents and sibling rows."""

    def __init__(self, f: Forest):
        self.paths = []
        self.labels = []
        self.parent = []
        index = {}
        for path, t in f.nodes():
            index[path] = len(self.paths)
            self.paths.append(path)
            self.labels.append(t.label)
            self.parent.append(index.get(path[:-1], -1))
        n = len(self.paths)
        self.children = [[] for _ in range(n)]
        roots = []
        for x, p in enumerate(self.parent):
            (self.children[p] if p >= 0 else roots).append(x)
        self.row = [None] * n
        self.pos = [0] * n
        for r in [roots] + self.children:
            for i, x in enumerate(r):
                self.row[x] = r
                self.pos[x] = i
        self.desc = [set() for _ in range(n)]
        for x in reversed(range(n)):
            for c in self.children[x]:
                self.desc[x].add(c)
                self.desc[x] |= self.desc[c]
        self.anc = [set() for _ in range(n)]
        for x in range(n):
            p = self.parent[x]
            while p >= 0:
                self.anc[x].add(p)
                p = self.parent[p]

    def __len__(self):
        return len(self.paths)

    def right(self, x):
        return self.row[x][self.pos[x] + 1:]

    def left(self, x):
        return self.row[x][:self.pos[x]]

    def moves(self, x, variant: str = "FO2"):
        """(kind, Spoiler targets, Duplicator answers) from node x.

        The answers are the moves Duplicator may use when she is the one
        sitting on x; they differ from Spoiler's only for SUC, where a jump
        past the successor may be answered by any move in that direction.
        """
        up, down = sorted(self.anc[x]), sorted(self.desc[x])
        out = [("up", up, up), ("down", down, down)]
        row, i = self.row[x], self.pos[x]
        if variant == "S":
            out.append(("sib", list(row), list(row)))
        elif variant == "SNEQ":
            other = [y for y in row if y != x]
            out.append(("sib", other, other))
        elif variant == "SUC":
            nxt, prv = list(row[i + 1:i + 2]), list(row[i - 1:i] if i else [])
            out.append(("next", nxt, nxt))
            out.append(("prev", prv, prv))
            out.append(("right", list(row[i + 2:]), list(row[i + 1:])))
            out.append(("left", list(row[:max(i - 1, 0)]), list(row[:i])))
        else:
            out.append(("right", list(row[i + 1:]), list(row[i + 1:])))
            out.append(("left", list(row[:i]), list(row[:i])))
        return out


def eval_nodes(phi: Formula, table: NodeTable) -> list:
    """Truth value of phi at every node of the table."""
    memo: dict = {}

    def ev(f):
        r = memo.get(f)
        if r is not None:
            return r
        n = len(table)
        op = f.op
        if op == "atom":
            r = [lab == f.args[0] for lab in table.labels]
        elif op in ("true", "false"):
            r = [op == "true"] * n
        elif op == "not":
            r = [not v for v in ev(f.args[0])]
        elif op == "and":
            a, b = ev(f.args[0]), ev(f.args[1])
            r = [x and y for x, y in zip(a, b)]
        elif op == "or":
            a, b = ev(f.args[0]), ev(f.args[1])
            r = [x or y for x, y in zip(a, b)]
        else:
            g = ev(f.args[0])
            if op == "EF":
                r = [any(g[y] for y in table.desc[x]) for x in range(n)]
            elif op == "Fup":
                r = [any(g[y] for y in table.anc[x]) for x in range(n)]
            elif op == "Fh":
                r = [any(g[y] for y in table.right(x)) for x in range(n)]
            elif op == "FhInv":
                r = [any(g[y] for y in table.left(x)) for x in range(n)]
            elif op == "S":
                r = [any(g[y] for y in table.row[x]) for x in range(n)]
            elif op == "Sneq":
                r = [any(g[y] for y in table.row[x] if y != x) for x in range(n)]
            elif op == "Xh":
                r = [bool(table.right(x)) and g[table.right(x)[0]] for x in range(n)]
            elif op == "XhInv":
                r = [bool(table.left(x)) and g[table.left(x)[-1]] for x in range(n)]
            else:
                raise ValueError(f"unknown operator {op!r}")
        memo[f] = r
        return r

    return ev(phi)


def eval_eff(phi: Formula, f: Forest) -> bool:
    """Truth of phi at the first root of f."""
    if isinstance(phi, str):
        phi = parse_formula(phi)
    return eval_nodes(phi, NodeTable(f))[0]


# ---------------------------------------------------------------------------
# forest and word games

def _game_table(n1, n2, k, same, moves1, moves2, budget):
    """Generic exact solver; returns W_k as a set-of-pairs predicate table.

    moves1[x] and moves2[y] list (kind, Spoiler targets, Duplicator answers);
    kinds must agree pairwise.
    """
    if n1 * n2 * max(k, 1) > budget:
        raise Budget(f"game needs {n1 * n2 * max(k, 1)} position-rounds, budget is {budget}")
    win = [[same(x, y) for y in range(n2)] for x in range(n1)]
    for _ in range(k):
        new = [[False] * n2 for _ in range(n1)]
        for x in range(n1):
            for y in range(n2):
                if not win[x][y]:
                    continue
                ok = True
                for (_, sx, ax), (_, sy, ay) in zip(moves1[x], moves2[y]):
                    if any(not any(win[x2][y2] for y2 in ay) for x2 in sx):
                        ok = False
                        break
                    if any(not any(win[x2][y2] for x2 in ax) for y2 in sy):
                        ok = False
                        break
                new[x][y] = ok
        if new == win:
            break
        win = new
    return win


def forest_game_equiv(s: Forest, t: Forest, k: int, variant: str = "FO2", budget: int = 10 ** 6) -> bool:
    """Duplicator wins k rounds from the two leftmost roots."""
    variant = variant.upper()
    a, b = NodeTable(s), NodeTable(t)
    win = _game_table(len(a), len(b), k, lambda x, y: a.labels[x] == b.labels[y],
                      [a.moves(x, variant) for x in range(len(a))],
                      [b.moves(y, variant) for y in range(len(b))], budget)
    return win[0][0]


def word_game_equiv(p: Sequence, q: Sequence, k: int, budget: int = 10 ** 6) -> bool:
    """k-round two-pebble game on strings, starting at the first letters."""
    p, q = tuple(p), tuple(q)

    def mv(n):
        return [[("right", list(range(i + 1, n)), list(range(i + 1, n))),
                 ("left", list(range(i)), list(range(i)))] for i in range(n)]

    win = _game_table(len(p), len(q), k, lambda x, y: p[x] == q[y], mv(len(p)), mv(len(q)), budget)
    return win[0][0]


# ---------------------------------------------------------------------------
# the relaxed game on shals

class LetterKinds:
    """Per-letter data for the relaxed game: code, relaxed flag, inner id, port flag."""

    def __init__(self, letters: Sequence[Letter], X, leaves: dict):
        self.letters = tuple(sorted(set(letters)))
        self.code = {c: i for i, c in enumerate(self.letters)}
        inner_names = sorted({c.inner for c in self.letters if c.inner})
        iid = {b: i for i, b in enumerate(inner_names)}
        X = set(X)
        self.relaxed = {}
        self.inner = {}
        for c in self.letters:
            rel = c.is_port or (bool(c.inner) and leaves.get(c.leaf) in X)
            self.relaxed[c] = rel
            self.inner[c] = iid[c.inner] if rel else -1

    def kind(self, c: Letter) -> str:
        if c.is_port:
            return "port"
        return "x" if self.relaxed[c] else "nonx"

    def match(self, c: Letter, d: Letter) -> bool:
        if not self.relaxed[c]:
            return c == d
        return self.relaxed[d] and self.inner[c] == self.inner[d]

    def encode(self, shals: Sequence[Sequence[Letter]]):
        n = max(len(p) for p in shals)
        code = np.full((len(shals), n), -1, dtype=np.int32)
        rel = np.zeros((len(shals), n), dtype=bool)
        inner = np.full((len(shals), n), -2, dtype=np.int32)
        port = np.zeros((len(shals), n), dtype=bool)
        for s, p in enumerate(shals):
            for i, c in enumerate(p):
                code[s, i] = self.code[c]
                rel[s, i] = self.relaxed[c]
                inner[s, i] = self.inner[c]
                port[s, i] = c.is_port
        return code, rel, inner, port


def _excl_suffix(a, axis, op):
    """out[.., i, ..] = op over indices > i along axis (identity at the end)."""
    a = np.moveaxis(a, axis, -1)
    acc = op.accumulate(a[..., ::-1], axis=-1)[..., ::-1]
    fill = np.zeros_like(a[..., :1]) if op is np.logical_or else np.ones_like(a[..., :1])
    out = np.concatenate([acc[..., 1:], fill], axis=-1)
    return np.moveaxis(out, -1, axis)


def _excl_prefix(a, axis, op):
    a = np.moveaxis(a, axis, -1)
    acc = op.accumulate(a, axis=-1)
    fill = np.zeros_like(a[..., :1]) if op is np.logical_or else np.ones_like(a[..., :1])
    out = np.concatenate([fill, acc[..., :-1]], axis=-1)
    return np.moveaxis(out, -1, axis)


def _shift(a, axis, by, fill):
    """out[.., i, ..] = a[.., i + by, ..] (fill outside)."""
    a = np.moveaxis(a, axis, -1)
    out = np.full_like(a, fill)
    n = a.shape[-1]
    if by >= 0:
        out[..., :n - by] = a[..., by:]
    else:
        out[..., -by:] = a[..., :n + by]
    return np.moveaxis(out, -1, axis)


def relaxed_matrix(A: Sequence, B: Sequence, k: int, kinds: LetterKinds, variant: str = "FO2",
                   budget: int = 5 * 10 ** 7) -> np.ndarray:
    """W[a, i, b, j]: Duplicator wins k rounds of the relaxed game from (A[a], i), (B[b], j).

    Only the game condition; label-set and start-label conditions are
    applied by the callers.
    """
    variant = variant.upper()
    if variant not in VARIANTS:
        raise ValueError(f"unknown game variant {variant!r}")
    ca, ra, ia, pa = kinds.encode(A)
    cb, rb, ib, pb = kinds.encode(B)
    shape = ca.shape + cb.shape
    if int(np.prod(shape)) > budget:
        raise Budget(f"relaxed game table of {int(np.prod(shape))} cells exceeds budget {budget}")
    va, vb = ca >= 0, cb >= 0
    VA, VB = va[:, :, None, None], vb[None, None, :, :]
    same = ca[:, :, None, None] == cb[None, None, :, :]
    relax = ra[:, :, None, None] & rb[None, None, :, :] & (ia[:, :, None, None] == ib[None, None, :, :])
    base = VA & VB & ((~ra[:, :, None, None] & same) | relax)
    diff = base & ~same
    # port targets for the safety move: same inner label, port letter
    port_b = pb[None, None, :, :] & (ib[None, None, :, :] == ia[:, :, None, None])
    port_a = pa[:, :, None, None] & (ia[:, :, None, None] == ib[None, None, :, :])
    lor, land = np.logical_or, np.logical_and
    W = base.copy()
    for _ in range(k):
        if variant in ("FO2", "SUC"):
            # Spoiler in A to the right: every i' > i needs some j' > j
            XA_r = _excl_suffix(W, 3, lor) | ~VA
            XA_l = _excl_prefix(W, 3, lor) | ~VA
            XB_r = _excl_suffix(W, 1, lor) | ~VB
            XB_l = _excl_prefix(W, 1, lor) | ~VB
            if variant == "FO2":
                ok = (_excl_suffix(XA_r, 1, land) & _excl_prefix(XA_l, 1, land)
                      & _excl_suffix(XB_r, 3, land) & _excl_prefix(XB_l, 3, land))
            else:
                # successor steps must be answered by successor steps
                nxt = _shift(_shift(W, 1, 1, False), 3, 1, False)
                prv = _shift(_shift(W, 1, -1, False), 3, -1, False)
                ok = ((nxt | ~_shift(VA, 1, 1, False)) & (nxt | ~_shift(VB, 3, 1, False))
                      & (prv | ~_shift(VA, 1, -1, False)) & (prv | ~_shift(VB, 3, -1, False)))
                # other moves go strictly past the neighbour
                ok = ok & _shift(_excl_suffix(XA_r, 1, land), 1, 1, True)
                ok &= _shift(_excl_prefix(XA_l, 1, land), 1, -1, True)
                ok &= _shift(_excl_suffix(XB_r, 3, land), 3, 1, True)
                ok &= _shift(_excl_prefix(XB_l, 3, land), 3, -1, True)
        elif variant == "S":
            XA = W.any(axis=3, keepdims=True) | ~VA
            XB = W.any(axis=1, keepdims=True) | ~VB
            ok = XA.all(axis=1, keepdims=True) & XB.all(axis=3, keepdims=True)
        else:  # SNEQ: both players move to a different sibling
            cnt_b = W.sum(axis=3, keepdims=True)
            XA = ((cnt_b - W) > 0) | ~VA  # at (i', j): some j' != j answers i'
            bad_a = ~XA
            ok_a = (bad_a.sum(axis=1, keepdims=True) - bad_a) == 0
            cnt_a = W.sum(axis=1, keepdims=True)
            XB = ((cnt_a - W) > 0) | ~VB
            bad_b = ~XB
            ok_b = (bad_b.sum(axis=3, keepdims=True) - bad_b) == 0
            ok = ok_a & ok_b
        safe_a = (W & port_b).any(axis=3, keepdims=True)  # pebble in A kept, B must go to a port
        safe_b = (W & port_a).any(axis=1, keepdims=True)
        new = base & ok & (~diff | (safe_a & safe_b))
        if np.array_equal(new, W):
            break
        W = new
    return W


def relaxed_game_wins(p_pos, q_pos, k: int, X, m, variant: str = "FO2") -> bool:
    """Only the game part of the relaxed equivalence (Duplicator wins k rounds)."""
    (p, x), (q, y) = p_pos, q_pos
    kinds = LetterKinds(set(p) | set(q), X, m.leaves)
    return bool(relaxed_matrix([tuple(p)], [tuple(q)], k, kinds, variant)[0, x, 0, y])


def relaxed_game_equiv(p_pos, q_pos, k: int, X, m, variant: str = "FO2") -> bool:
    """Same label sets, same start labels, and Duplicator wins k rounds."""
    (p, x), (q, y) = p_pos, q_pos
    if set(p) != set(q) or p[x] != q[y]:
        return False
    return relaxed_game_wins(p_pos, q_pos, k, X, m, variant)


def relaxed_classes(shals: Sequence, k: int, X, m, variant: str = "FO2", budget: int = 5 * 10 ** 7):
    """Full equivalence table over a list of shals: E[a, i, b, j]."""
    kinds = LetterKinds({c for p in shals for c in p}, X, m.leaves)
    W = relaxed_matrix(shals, shals, k, kinds, variant, budget)
    alpha = [frozenset(p) for p in shals]
    same_alpha = np.array([[x == y for y in alpha] for x in alpha])
    code, *_ = kinds.encode(shals)
    same_start = code[:, :, None, None] == code[None, None, :, :]
    return W & same_alpha[:, None, :, None] & same_start


# ---------------------------------------------------------------------------
# configurations seen through the game

def exact_alphabet_shals(letters, max_len: int) -> list:
    letters = frozenset(letters)
    return [p for p in enumerate_shals(letters, max_len) if set(p) == letters]


def gk_configuration(q: Sequence[Letter], k: int, X, m, len_bound: int,
                     space: Optional[ProfileSpace] = None, variant: str = "FO2",
                     budget: int = 5 * 10 ** 7, universe: Optional[list] = None) -> frozenset:
    """{ {profiles of (p', x') equivalent to (q, y)} : y in q } over shals of length <= len_bound."""
    q = tuple(q)
    if len_bound < len(q):
        raise ValueError("len_bound must be at least |q|")
    space = space or ProfileSpace(m)
    if universe is None:
        universe = exact_alphabet_shals(set(q), len_bound)
        if len(universe) * len_bound * len(q) > budget:
            raise Budget(f"{len(universe)} shals exceed the game budget")
    kinds = LetterKinds(set(q), X, m.leaves)
    W = relaxed_matrix([q], universe, k, kinds, variant, budget)[0]
    out = set()
    for y in range(len(q)):
        members = set()
        for s, p in enumerate(universe):
            profs = None
            for j, c in enumerate(p):
                if c == q[y] and W[y, s, j]:
                    if profs is None:
                        profs = space.shal_profiles(space.encode(p))
                    members.add(profs[j])
        out.add(frozenset(members))
    return frozenset(out)
