"""Unranked ordered forests, contexts and shallow multicontexts (shals).

Trees are immutable ``Tree(label, children)`` tuples; a forest is a
nonempty tuple of trees.  The port of a context is the leaf ``PORT``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

PORT = "[]"


class TermError(ValueError):
    """Base class for malformed terms."""


class TermSyntaxError(TermError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


class UnknownLabel(TermError):
    pass


class LabelKindError(TermError):
    pass


class PortError(TermError):
    """Raised when a context violates one of the port invariants."""

    def __init__(self, kind: str, msg: str = ""):
        super().__init__(f"{kind}: {msg}" if msg else kind)
        self.kind = kind


@dataclass(frozen=True)
class Alphabet:
    leaves: frozenset
    inners: frozenset

    def __init__(self, leaves: Iterable[str] = (), inners: Iterable[str] = ()):
        object.__setattr__(self, "leaves", frozenset(leaves))
        object.__setattr__(self, "inners", frozenset(inners))
        if self.leaves & self.inners:
            raise ValueError(f"labels used as both leaf and inner: {sorted(self.leaves & self.inners)}")
        if not self.leaves and not self.inners:
            raise ValueError("empty alphabet")
        if PORT in self.leaves or PORT in self.inners:
            raise ValueError("the port symbol cannot be a label")

    def letters(self) -> list["Letter"]:
        """All shal letters over this alphabet, sorted."""
        out = [Letter("", a) for a in self.leaves]
        for b in self.inners:
            out.append(Letter(b, PORT))
            out.extend(Letter(b, a) for a in self.leaves)
        return sorted(out)


class Tree(NamedTuple):
    label: str
    children: tuple = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


PORT_TREE = Tree(PORT, ())


# ---------------------------------------------------------------------------
# parsing and printing

_TOKEN = re.compile(r"\s*(?:(\[\])|([A-Za-z0-9_]+)|(.))")


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # trailing whitespace
            break
        start = m.start(m.lastindex) if m.lastindex else pos
        if m.group(1):
            toks.append(("port", PORT, start))
        elif m.group(2):
            toks.append(("id", m.group(2), start))
        elif m.group(3):
            ch = m.group(3)
            if ch not in "()+":
                raise TermSyntaxError(f"unexpected character {ch!r}", start)
            toks.append((ch, ch, start))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, alphabet: Optional[Alphabet], ports: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.alphabet = alphabet
        self.ports = ports

    def peek(self):
        return self.toks[self.i]

    def take(self, kind):
        tok = self.toks[self.i]
        if tok[0] != kind:
            what = tok[1] or "end of input"
            raise TermSyntaxError(f"expected {kind!r}, found {what!r}", tok[2])
        self.i += 1
        return tok

    def forest(self) -> tuple:
        trees = [self.tree()]
        while self.peek()[0] == "+":
            self.i += 1
            trees.append(self.tree())
        return tuple(trees)

    def tree(self) -> Tree:
        tok = self.peek()
        if tok[0] == "port":
            if not self.ports:
                raise TermSyntaxError("port not allowed here", tok[2])
            self.i += 1
            return PORT_TREE
        _, label, pos = self.take("id")
        if self.peek()[0] == "(":
            self.i += 1
            kids = self.forest()
            self.take(")")
            self._check(label, pos, inner=True)
            return Tree(label, kids)
        self._check(label, pos, inner=False)
        return Tree(label)

    def _check(self, label, pos, inner):
        a = self.alphabet
        if a is None:
            return
        if label not in a.leaves and label not in a.inners:
            raise UnknownLabel(f"unknown label {label!r} at position {pos}")
        if inner and label in a.leaves:
            raise LabelKindError(f"leaf label {label!r} given children at position {pos}")
        if not inner and label in a.inners:
            raise LabelKindError(f"inner label {label!r} used as a leaf at position {pos}")

    def parse(self) -> tuple:
        f = self.forest()
        tok = self.peek()
        if tok[0] != "eof":
            raise TermSyntaxError(f"trailing input {tok[1]!r}", tok[2])
        return f


def _fmt_tree(t: Tree) -> str:
    if not t.children:
        return t.label
    return f"{t.label}({_fmt_forest(t.children)})"


def _fmt_forest(trees) -> str:
    return " + ".join(_fmt_tree(t) for t in trees)


def _walk(trees, path=()):
    for i, t in enumerate(trees):
        p = path + (i,)
        yield p, t
        yield from _walk(t.children, p)


@dataclass(frozen=True)
class Forest:
    trees: tuple

    def __post_init__(self):
        if not self.trees:
            raise TermError("empty forest")

    def __str__(self):
        return _fmt_forest(self.trees)

    def nodes(self) -> Iterator[tuple]:
        """Yield (path, subtree) in document order."""
        return _walk(self.trees)

    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def labels(self) -> set:
        return {t.label for _, t in self.nodes()}

    def __add__(self, other: "Forest") -> "Forest":
        return Forest(self.trees + other.trees)


@dataclass(frozen=True)
class Context:
    trees: tuple
    port: tuple  # NodeRef of the port

    def __post_init__(self):
        ports = [p for p, t in _walk(self.trees) if t.label == PORT]
        if not ports:
            raise PortError("NoPort")
        if len(ports) > 1:
            raise PortError("MultiplePorts", f"{len(ports)} ports")
        port = ports[0]
        if len(port) == 1:
            raise PortError("PortAtRoot")
        parent = resolve(self.trees, port[:-1])
        if len(parent.children) != 1:
            raise PortError("PortHasSibling", f"port under {parent.label!r} has siblings")
        if self.port != port:
            object.__setattr__(self, "port", port)

    @classmethod
    def of(cls, trees) -> "Context":
        return cls(tuple(trees), ())

    def __str__(self):
        return _fmt_forest(self.trees)

    def backbone(self) -> list:
        """Paths of the strict ancestors of the port, root first."""
        return [self.port[:i] for i in range(1, len(self.port))]

    def nodes(self):
        return _walk(self.trees)


def parse_forest(text: str, alphabet: Optional[Alphabet] = None) -> Forest:
    return Forest(_Parser(text, alphabet, ports=False).parse())


def parse_context(text: str, alphabet: Optional[Alphabet] = None) -> Context:
    return Context.of(_Parser(text, alphabet, ports=True).parse())


def parse_term(text: str, alphabet: Optional[Alphabet] = None):
    """Parse a forest or, if a port occurs, a context."""
    trees = _Parser(text, alphabet, ports=True).parse()
    if any(t.label == PORT for _, t in _walk(trees)):
        return Context.of(trees)
    return Forest(trees)


def resolve(trees, path) -> Tree:
    """Follow a NodeRef (0-based child indices from the root list)."""
    if not path:
        raise TermError("empty node reference")
    node = None
    row = trees
    for i in path:
        if not 0 <= i < len(row):
            raise TermError(f"node reference {list(path)} does not resolve")
        node = row[i]
        row = node.children
    return node


def _replace(trees, path, new_trees):
    """Replace the node at path by the sequence new_trees."""
    i = path[0]
    if len(path) == 1:
        return trees[:i] + tuple(new_trees) + trees[i + 1:]
    t = trees[i]
    return trees[:i] + (Tree(t.label, _replace(t.children, path[1:], new_trees)),) + trees[i + 1:]


def compose(c: Context, arg):
    """Substitute ``arg`` (forest or context) for the port of ``c``."""
    trees = _replace(c.trees, c.port, arg.trees)
    if isinstance(arg, Context):
        return Context.of(trees)
    return Forest(trees)


# ---------------------------------------------------------------------------
# shals


class Letter(NamedTuple):
    """A shal letter: ``a`` (inner == ""), ``b(a)`` or ``b([])`` (leaf == PORT)."""

    inner: str
    leaf: str

    @property
    def is_port(self) -> bool:
        return self.leaf == PORT

    @property
    def is_bare(self) -> bool:
        return not self.inner

    def __str__(self):
        return self.leaf if not self.inner else f"{self.inner}({self.leaf})"


def letter_of(t: Tree) -> Letter:
    if not t.children:
        if t.label == PORT:
            raise TermError("a lone port is not a shal letter")
        return Letter("", t.label)
    if len(t.children) == 1 and not t.children[0].children:
        return Letter(t.label, t.children[0].label)
    return Letter(t.label, PORT)


def parse_letter(text: str) -> Letter:
    text = text.strip()
    m = re.fullmatch(r"([A-Za-z0-9_]+)\s*(?:\(\s*(\[\]|[A-Za-z0-9_]+)\s*\))?", text)
    if not m:
        raise TermSyntaxError(f"bad shal letter {text!r}", 0)
    if m.group(2) is None:
        return Letter("", m.group(1))
    return Letter(m.group(1), m.group(2))


def parse_shal(text: str) -> tuple:
    trees = _Parser(text, None, ports=True).parse()
    out = []
    for t in trees:
        if t.label == PORT:
            raise TermSyntaxError("bare port in shal", 0)
        if len(t.children) > 1 or (t.children and t.children[0].children):
            raise TermSyntaxError(f"tree {_fmt_tree(t)!r} is not shallow", 0)
        out.append(letter_of(t))
    return tuple(out)


def format_shal(p: Sequence[Letter]) -> str:
    return " + ".join(str(c) for c in p)


def shal_arity(p: Sequence[Letter]) -> int:
    return sum(1 for c in p if c.is_port)


def shal_at(f: Forest, x) -> tuple:
    """The shal of node x (its sibling row) and the index of x in it."""
    x = tuple(x)
    resolve(f.trees, x)
    row = f.trees if len(x) == 1 else resolve(f.trees, x[:-1]).children
    return tuple(letter_of(t) for t in row), x[-1]


def shal_plug(p: Sequence[Letter], forests: Sequence[Forest], keep: Optional[int] = None):
    """Fill the ports of p left to right; the port at index ``keep`` stays open."""
    if keep is not None and not (0 <= keep < len(p) and p[keep].is_port):
        raise TermError(f"position {keep} is not a port-node of the shal")
    need = shal_arity(p) - (keep is not None)
    if len(forests) != need:
        raise TermError(f"arity mismatch: shal needs {need} forests, got {len(forests)}")
    fill = iter(forests)
    trees = []
    for i, c in enumerate(p):
        if c.is_bare:
            trees.append(Tree(c.leaf))
        elif not c.is_port:
            trees.append(Tree(c.inner, (Tree(c.leaf),)))
        elif i == keep:
            trees.append(Tree(c.inner, (PORT_TREE,)))
        else:
            trees.append(Tree(c.inner, next(fill).trees))
    if keep is not None:
        return Context.of(trees)
    return Forest(tuple(trees))


def enumerate_shals(letters: Iterable[Letter], max_len: int) -> Iterator[tuple]:
    """All words over ``letters`` of length 1..max_len in length-lex order."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    alpha = sorted(set(letters))
    for n in range(1, max_len + 1):
        yield from itertools.product(alpha, repeat=n)
