"""Reference morphisms shipped with the tool.

Each builder returns a validated ForestMorphism; ``write_corpus`` renders
them as presentation files.
"""
from __future__ import annotations

import json
from pathlib import Path

from .algebra import ForestMorphism, dump_presentation, from_evaluation


def trivial() -> ForestMorphism:
    return from_evaluation(["h"], lambda x, y: "h", {"a": "h"}, {"b": {"h": "h"}}, ["h"])


def alg_a() -> ForestMorphism:
    """Forests containing a leaf labelled a."""
    mx = lambda x, y: max(x, y)
    return from_evaluation(["h0", "h1"], mx, {"a": "h1", "c": "h0"},
                           {"b": {"h0": "h0", "h1": "h1"}}, ["h1"])


def alg_par() -> ForestMorphism:
    """Forests with an even number of a-leaves."""
    add = lambda x, y: "p1" if (x == "p1") != (y == "p1") else "p0"
    return from_evaluation(["p0", "p1"], add, {"a": "p1", "c": "p0"},
                           {"b": {"p0": "p0", "p1": "p1"}}, ["p0"])


def alg_first() -> ForestMorphism:
    """Forests whose first root is a leaf labelled a."""
    return from_evaluation(["h_a", "h_c"], lambda x, y: x, {"a": "h_a", "c": "h_c"},
                           {"b": {"h_a": "h_c", "h_c": "h_c"}}, ["h_a"])


def count_two() -> ForestMorphism:
    """At least two a-leaves; H counts a-leaves up to the threshold 2."""
    add = lambda x, y: f"n{min(2, int(x[1]) + int(y[1]))}"
    ident = {"n0": "n0", "n1": "n1", "n2": "n2"}
    return from_evaluation(["n0", "n1", "n2"], add, {"a": "n1", "c": "n0"}, {"b": ident}, ["n2"])


def _be_name(single, first, a, o):
    return f"t{first}" if single else f"m{first}{a}{o}"


def _be_parse(name):
    if name[0] == "t":
        v = int(name[1])
        return True, v, v, v
    return False, int(name[1]), int(name[2]), int(name[3])


def alg_be_raw() -> ForestMorphism:
    """Single trees of and/or gates over 0/1 leaves that evaluate to 1.

    A forest is summarised by (single tree?, first root value, AND of the
    root values, OR of the root values).
    """
    names = ["t0", "t1", "m000", "m001", "m101", "m111"]

    def plus(x, y):
        _, f, a1, o1 = _be_parse(x)
        _, _, a2, o2 = _be_parse(y)
        return _be_name(False, f, a1 & a2, o1 | o2)

    gate_and = {n: f"t{_be_parse(n)[2]}" for n in names}
    gate_or = {n: f"t{_be_parse(n)[3]}" for n in names}
    return from_evaluation(names, plus, {"0": "t0", "1": "t1"},
                           {"and": gate_and, "or": gate_or}, ["t1"])


def tiny1() -> ForestMorphism:
    """A single leaf letter a under b-nodes; accepts forests with a b-node."""
    mx = lambda x, y: max(x, y)
    return from_evaluation(["h0", "h1"], mx, {"a": "h0"}, {"b": {"h0": "h1", "h1": "h1"}}, ["h1"])


def tiny2() -> ForestMorphism:
    """First root is a leaf, over the letters a and b."""
    return from_evaluation(["h_a", "h_b"], lambda x, y: x, {"a": "h_a"},
                           {"b": {"h_a": "h_b", "h_b": "h_b"}}, ["h_a"])


BUILDERS = {
    "trivial": trivial,
    "alg_a": alg_a,
    "alg_par": alg_par,
    "alg_first": alg_first,
    "alg_be_raw": alg_be_raw,
    "count_two": count_two,
    "tiny1": tiny1,
    "tiny2": tiny2,
}

DESCRIPTIONS = {
    "trivial": "one-element algebra; accepts every forest",
    "alg_a": "forests containing a leaf labelled a",
    "alg_par": "forests with an even number of a-leaves",
    "alg_first": "forests whose first root is a leaf labelled a",
    "alg_be_raw": "boolean and/or trees over 0/1 evaluating to 1 (raw evaluation morphism)",
    "alg_be": "syntactic quotient of alg_be_raw",
    "count_two": "forests with at least two a-leaves",
    "tiny1": "leaf a, inner b; forests containing a b-node",
    "tiny2": "leaf a, inner b; forests whose first root is a leaf",
}


# Expected verdicts, written from the language definitions.  Identity
# failures name the first identity of the logic that fails.
_DEF = ("Definable", None)
_OPEN = ("Inconclusive", None)
_VAR = ("NotDefinable", "VariantIdentity")
EXPECTED = {
    "trivial": {"fo2": _DEF, "efh": _DEF, "efhs": _DEF, "fo2succ": _OPEN},
    "alg_a": {"fo2": _DEF, "efh": _DEF, "efhs": _DEF, "fo2succ": _OPEN},
    "alg_par": {"fo2": ("NotDefinable", "IdentityH"), "efh": _VAR, "efhs": _VAR, "fo2succ": _VAR},
    "alg_first": {"fo2": _DEF, "efh": _VAR, "efhs": _VAR, "fo2succ": _OPEN},
    "count_two": {"fo2": _DEF, "efh": _VAR, "efhs": _DEF, "fo2succ": _OPEN},
    "tiny1": {"fo2": _DEF, "efh": _DEF, "efhs": _DEF, "fo2succ": _OPEN},
    "tiny2": {"fo2": _DEF, "efh": _VAR, "efhs": _VAR, "fo2succ": _OPEN},
    "alg_be_raw": {"fo2": ("NotDefinable", "IdentityV"), "efh": _VAR,
                   "efhs": ("NotDefinable", "IdentityV"), "fo2succ": ("NotDefinable", "IdentityV")},
}
EXPECTED["alg_be"] = EXPECTED["alg_be_raw"]

# small inputs for the game and formula oracles
FORESTS = {
    "b_a": "b(a)",
    "b_aa": "b(a + a)",
    "b_c_b_a": "b(c + b(a))",
    "c_c": "c + c",
}
FORMULAS = {
    "a_or_ef_a": "a or EF(a)",
}


def build(name: str) -> ForestMorphism:
    if name == "alg_be":
        from .syntactic import syntactic_quotient
        return syntactic_quotient(alg_be_raw())
    return BUILDERS[name]()


def write_corpus(directory) -> list:
    """Write presentations, expectation files and oracle inputs."""
    directory = Path(directory)
    (directory / "forests").mkdir(parents=True, exist_ok=True)
    written = []
    for name in list(BUILDERS) + ["alg_be"]:
        path = directory / f"{name}.alg"
        path.write_text(dump_presentation(build(name), DESCRIPTIONS[name]), encoding="utf-8")
        exp = {logic: {"outcome": o, "failedCondition": fc} for logic, (o, fc) in EXPECTED[name].items()}
        epath = directory / f"{name}.expect"
        epath.write_text(json.dumps(exp, indent=2) + "\n", encoding="utf-8")
        written += [path, epath]
    for name, text in FORESTS.items():
        path = directory / "forests" / f"{name}.forest"
        path.write_text(text + "\n", encoding="utf-8")
        written.append(path)
    for name, text in FORMULAS.items():
        path = directory / "forests" / f"{name}.eff"
        path.write_text(text + "\n", encoding="utf-8")
        written.append(path)
    return written


def check_expectations(directory, logics=None, opts=None):
    """Yield (name, logic, expected, got) for every .expect file in directory."""
    from .algebra import load_morphism
    from .saturation import decide
    for epath in sorted(Path(directory).glob("*.expect")):
        exp = json.loads(epath.read_text(encoding="utf-8"))
        m = load_morphism(epath.with_suffix(".alg"))
        for logic, want in exp.items():
            if logics and logic not in logics:
                continue
            v = decide(m, logic, opts)
            yield (epath.stem, logic, (want["outcome"], want["failedCondition"]),
                   (v.outcome, v.failedCondition))
