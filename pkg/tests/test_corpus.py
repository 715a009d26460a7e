import random
from pathlib import Path

from fo2dec import corpus
from fo2dec.algebra import load_morphism
from fo2dec.games import eval_eff, parse_formula
from fo2dec.terms import Forest

from oracles import contains_leaf, random_forest

SHIPPED = Path(__file__).resolve().parent.parent / "corpus"


def _files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_shipped_corpus_is_regenerable(tmp_path):
    corpus.write_corpus(tmp_path)
    assert _files(tmp_path) == _files(SHIPPED)


def test_shipped_files_load_to_builders():
    for name in list(corpus.BUILDERS) + ["alg_be"]:
        m = load_morphism(SHIPPED / f"{name}.alg")
        ref = corpus.build(name)
        assert m.H.names == ref.H.names and m.V.names == ref.V.names
        assert m.accepting == ref.accepting


def test_expectations_match():
    rows = list(corpus.check_expectations(SHIPPED))
    assert len(rows) == 9 * 4
    bad = [r for r in rows if r[2] != r[3]]
    assert bad == []


def test_formula_agrees_with_alg_a():
    phi = parse_formula((SHIPPED / "forests" / "a_or_ef_a.eff").read_text().strip())
    m = corpus.alg_a()
    rng = random.Random(7)
    for _ in range(500):
        f = random_forest(rng, ["a", "c"], ["b"])
        formula = any(eval_eff(phi, Forest((t,))) for t in f.trees)
        assert formula == m.accepts(f) == contains_leaf(f, "a")
