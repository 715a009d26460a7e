"""The ``fo2dec`` command line.

Exit codes: 0 Definable / success, 1 NotDefinable / failed check,
2 Inconclusive, 3 input error, 4 oracle budget exhausted.
"""
from __future__ import annotations

import hashlib
import json
import os
import sys
from pathlib import Path

import click

from . import __version__
from .algebra import AlgebraError, dump_presentation, leaf_completion, load_morphism
from .games import FormulaSyntaxError, eval_eff, forest_game_equiv, parse_formula
from .identities import identity_suite
from .profiles import Budget
from .saturation import DEFAULTS, LOGICS, check_profile_saturation, decide
from .syntactic import syntactic_quotient
from .terms import TermError, parse_forest
from .verify import verify_verdict

EXIT = {"Definable": 0, "NotDefinable": 1, "Inconclusive": 2}
INPUT_ERROR = 3
BUDGET_ERROR = 4


class InputError(click.ClickException):
    exit_code = INPUT_ERROR


def _load(path):
    try:
        return load_morphism(path)
    except FileNotFoundError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    except (AlgebraError, TermError) as exc:
        raise InputError(f"{path}: {exc}")


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False)


def _threads():
    raw = os.environ.get("FO2DEC_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise InputError("FO2DEC_THREADS must be a positive integer")
    return n


def _algebra_arg(algebra, option):
    path = algebra or option
    if path is None:
        raise InputError("no algebra file given")
    return path


@click.group()
@click.version_option(__version__, prog_name="fo2dec")
def main():
    """Decide FO2 definability of regular forest languages."""


# ---------------------------------------------------------------------------
# decide

def _opts(budget, sat_cap, max_union, prune_leq, exhaustive_alphabets) -> dict:
    opts = dict(DEFAULTS)
    if budget is not None:
        opts["union_cap"] = budget
    if sat_cap is not None:
        opts["sat_cap"] = sat_cap
    if max_union is not None:
        opts["max_union"] = max_union
    opts["prune_leq"] = prune_leq
    opts["exhaustive_alphabets"] = exhaustive_alphabets
    return opts


def run_decide(path, logic, seed, opts, timings=False) -> dict:
    m = _load(path)
    return decide(m, logic, opts, seed, _threads()).to_json(timings=timings)


def _render_verdict(path, verdict: dict) -> str:
    lines = [f"outcome: {verdict['outcome']} ({verdict['logic']})"]
    if verdict.get("failedCondition"):
        lines.append(f"failed condition: {verdict['failedCondition']}")
    for r in verdict.get("identities", []):
        state = "holds" if r["holds"] else f"fails, witness {r['witness']}"
        lines.append(f"  identity {r['identity']}: {state}")
    w = verdict.get("witness")
    if w:
        lines.append(f"  X = {{{', '.join(w['X'])}}}; v = {w['v']} = {' . '.join(w['factorization'])}")
        lines.append(f"  v^w {w['h1']} != v^w {w['h2']}; configuration with "
                     f"{len(w['configuration']['members'])} members")
    if verdict.get("note"):
        lines.append(f"note: {verdict['note']}")
    if verdict["outcome"] == "NotDefinable":
        lines.append("re-check with:")
        lines.append(f"  fo2dec decide {path} --logic {verdict['logic'].lower()} --json > verdict.json")
        lines.append(f"  fo2dec verify {path} verdict.json")
    return "\n".join(lines)


@main.command("decide")
@click.argument("algebra", required=False)
@click.option("--algebra", "algebra_opt", help="Algebra presentation file (alternative to the argument).")
@click.option("--logic", type=click.Choice([x.lower() for x in LOGICS], case_sensitive=False), default="fo2",
              show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print the verdict as JSON.")
@click.option("--seed", type=int, default=None, help="Shuffle worklists with this seed.")
@click.option("--budget", type=int, default=None, help="Cap on union candidates per X.")
@click.option("--sat-cap", type=int, default=None, help="Cap on Sat elements per X.")
@click.option("--max-union", type=int, default=None, help="Largest number of union components.")
@click.option("--prune-leq", is_flag=True, help="Keep only maximal Sat elements.")
@click.option("--exhaustive-alphabets", is_flag=True, help="Try every alphabet in the uplift rule.")
@click.option("--timings", is_flag=True, help="Include wall-clock timings in the JSON.")
@click.option("--manifest", type=click.Path(dir_okay=False), help="Write a run manifest here.")
def cmd_decide(algebra, algebra_opt, logic, as_json, seed, budget, sat_cap, max_union, prune_leq,
               exhaustive_alphabets, timings, manifest):
    """Decide definability of the language recognized by ALGEBRA."""
    path = _algebra_arg(algebra, algebra_opt)
    opts = _opts(budget, sat_cap, max_union, prune_leq, exhaustive_alphabets)
    try:
        verdict = run_decide(path, logic, seed, opts, timings)
    except ValueError as exc:
        raise InputError(str(exc))
    text = _dumps(verdict) if as_json else _render_verdict(path, verdict)
    click.echo(text)
    if manifest:
        params = {"logic": logic.lower(), "seed": seed, "budget": budget, "sat_cap": sat_cap,
                  "max_union": max_union, "prune_leq": prune_leq,
                  "exhaustive_alphabets": exhaustive_alphabets}
        write_manifest(manifest, path, params, opts, verdict)
    sys.exit(EXIT[verdict["outcome"]])


# ---------------------------------------------------------------------------
# manifests

def write_manifest(out, path, params, opts, verdict):
    data = {
        "tool": "fo2dec",
        "version": __version__,
        "command": "decide",
        "algebra": str(path),
        "params": params,
        "inputs": {str(path): _sha256(path)},
        "budgets": opts,
        "seed": params.get("seed"),
        "outcome": {"outcome": verdict["outcome"], "failedCondition": verdict.get("failedCondition")},
        "verdictSha256": hashlib.sha256(_dumps(verdict).encode()).hexdigest(),
    }
    Path(out).write_text(_dumps(data) + "\n", encoding="utf-8")


@main.command("rerun")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
def cmd_rerun(manifest):
    """Re-run a recorded decide call and compare the verdict byte for byte."""
    try:
        data = json.loads(_read_text(manifest))
        path, params = data["algebra"], data["params"]
    except (ValueError, KeyError) as exc:
        raise InputError(f"bad manifest: {exc}")
    for f, digest in data["inputs"].items():
        if not Path(f).exists() or _sha256(f) != digest:
            raise InputError(f"input {f} is missing or changed since the manifest was written")
    opts = _opts(params["budget"], params["sat_cap"], params["max_union"], params["prune_leq"],
                 params["exhaustive_alphabets"])
    verdict = run_decide(path, params["logic"], params["seed"], opts)
    digest = hashlib.sha256(_dumps(verdict).encode()).hexdigest()
    same = digest == data["verdictSha256"]
    click.echo(f"outcome: {verdict['outcome']} (recorded {data['outcome']['outcome']})")
    click.echo("verdict identical" if same else "verdict differs from the recorded run")
    sys.exit(0 if same else 1)


# ---------------------------------------------------------------------------
# witnesses

@main.command("verify")
@click.argument("algebra")
@click.argument("verdict", type=click.Path(dir_okay=False))
@click.option("--json", "as_json", is_flag=True)
def cmd_verify(algebra, verdict, as_json):
    """Re-check a NotDefinable VERDICT (JSON) against ALGEBRA from scratch."""
    m = _load(algebra)
    try:
        data = json.loads(_read_text(verdict))
    except ValueError as exc:
        raise InputError(f"{verdict}: not JSON ({exc})")
    rep = verify_verdict(m, data)
    if as_json:
        click.echo(_dumps(rep.to_json()))
    else:
        for c in rep.checks:
            if not c["ok"] or "profile" not in c["check"]:
                mark = "ok  " if c["ok"] else "FAIL"
                click.echo(f"{mark} {c['check']}" + (f" ({c['detail']})" if c["detail"] else ""))
        n = sum(1 for c in rep.checks if "profile" in c["check"])
        click.echo(f"{n} profile checks; witness {'verified' if rep.ok else 'REJECTED'}")
    sys.exit(0 if rep.ok else 1)


@main.command("check-saturation")
@click.argument("algebra")
@click.option("--seed", type=int, default=None)
@click.option("--budget", type=int, default=None, help="Cap on union candidates per X.")
@click.option("--sat-cap", type=int, default=None)
@click.option("--max-union", type=int, default=None)
@click.option("--prune-leq", is_flag=True)
@click.option("--exhaustive-alphabets", is_flag=True)
def cmd_check_saturation(algebra, seed, budget, sat_cap, max_union, prune_leq, exhaustive_alphabets):
    """Run only the saturation check (identities are not consulted).

    Prints a verdict-shaped JSON document; a violation can be passed to
    ``verify`` like any other NotDefinable verdict.
    """
    m = _load(algebra)
    opts = _opts(budget, sat_cap, max_union, prune_leq, exhaustive_alphabets)
    mc = leaf_completion(syntactic_quotient(m))
    wit, exhausted, stats = check_profile_saturation(mc, opts, seed, _threads())
    if wit is not None:
        outcome = "NotDefinable"
    else:
        outcome = "Definable" if exhausted else "Inconclusive"
    out = {"outcome": outcome, "logic": "FO2", "failedCondition": "Saturation" if wit else None}
    if wit is not None:
        out["witness"] = wit.to_json()
    out["budgets"] = opts
    out["saturation"] = stats
    out["note"] = "saturation only; identities not checked"
    click.echo(_dumps(out))
    sys.exit(EXIT[outcome])


# ---------------------------------------------------------------------------
# algebra utilities

@main.command("syntactic")
@click.argument("algebra")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Write the quotient here.")
@click.option("--json", "as_json", is_flag=True)
def cmd_syntactic(algebra, output, as_json):
    """Compute the syntactic quotient and print the class map."""
    m = _load(algebra)
    q, report = syntactic_quotient(m, with_map=True)
    if output:
        Path(output).write_text(dump_presentation(q, f"syntactic quotient of {algebra}"), encoding="utf-8")
    if as_json:
        click.echo(_dumps(report))
        return
    click.echo(f"|H| {len(m.H)} -> {len(q.H)}, |V| {len(m.V)} -> {len(q.V)}")
    for sort in ("H", "V"):
        for cls, members in report[sort].items():
            click.echo(f"  {sort} {cls}: {' '.join(members)}")
    for sort in ("H", "V"):
        gone = report[f"unreachable{sort}"]
        if gone:
            click.echo(f"  unreachable {sort}: {' '.join(gone)}")


@main.command("check-identities")
@click.argument("algebra")
@click.option("--logic", type=click.Choice([x.lower() for x in LOGICS], case_sensitive=False), default="fo2",
              show_default=True)
@click.option("--json", "as_json", is_flag=True)
def cmd_check_identities(algebra, logic, as_json):
    """Check the identities of LOGIC on the syntactic algebra."""
    q = syntactic_quotient(_load(algebra))
    reports = identity_suite(q.algebra, logic)
    if as_json:
        click.echo(_dumps([r.to_json() for r in reports]))
    else:
        for r in reports:
            click.echo(f"{r.name}: " + ("holds" if r.holds else f"fails, witness {r.witness}"))
    sys.exit(0 if all(r.holds for r in reports) else 1)


# ---------------------------------------------------------------------------
# oracles

@main.group("oracle")
def oracle():
    """Brute-force oracles and cross-validation."""


@oracle.command("game")
@click.argument("s_file")
@click.argument("t_file")
@click.option("--variant", type=click.Choice(["fo2", "s", "sneq", "suc"], case_sensitive=False), default="fo2",
              show_default=True)
@click.option("--k", "k", type=int, required=True, help="Number of rounds.")
@click.option("--budget", type=int, default=10 ** 6, show_default=True, help="Cap on positions x rounds.")
def cmd_game(s_file, t_file, variant, k, budget):
    """Play the k-round two-pebble game on two forests (from the first roots)."""
    try:
        s = parse_forest(_read_text(s_file).strip())
        t = parse_forest(_read_text(t_file).strip())
        win = forest_game_equiv(s, t, k, variant, budget)
    except TermError as exc:
        raise InputError(str(exc))
    except Budget as exc:
        click.echo(f"budget exhausted: {exc}", err=True)
        sys.exit(BUDGET_ERROR)
    click.echo("duplicator wins (equivalent)" if win else "spoiler wins (distinguishable)")


@oracle.command("eval")
@click.option("--formula", "formula_file", required=True, type=click.Path(dir_okay=False))
@click.option("--forest", "forest_file", required=True, type=click.Path(dir_okay=False))
def cmd_eval(formula_file, forest_file):
    """Evaluate a temporal formula at the first root of a forest."""
    try:
        phi = parse_formula(_read_text(formula_file).strip())
        f = parse_forest(_read_text(forest_file).strip())
    except (FormulaSyntaxError, TermError) as exc:
        raise InputError(str(exc))
    click.echo("true" if eval_eff(phi, f) else "false")


@oracle.command("validate-profiles")
@click.option("--algebra", required=True)
@click.option("--max-len", type=int, default=3, show_default=True)
@click.option("--letters", default=None, help="Comma-separated shal letters to restrict to.")
@click.option("--json", "as_json", is_flag=True)
def cmd_validate_profiles(algebra, max_len, letters, as_json):
    """Compare folded profiles with plug-in profiles on the leaf completion."""
    from .validation import validate_profiles
    mc = leaf_completion(_load(algebra))
    chosen = None
    if letters:
        chosen = _split_letters(letters)
    try:
        rep = validate_profiles(mc, max_len, chosen)
    except (ValueError, TermError) as exc:
        raise InputError(str(exc))
    if as_json:
        click.echo(_dumps(rep))
    else:
        click.echo(f"{rep['positions']} positions over {len(rep['letters'])} letters, "
                   f"{len(rep['mismatches'])} mismatches: {'pass' if rep['pass'] else 'FAIL'}")
        for mm in rep["mismatches"][:10]:
            click.echo(f"  mismatch at {mm['shal']} position {mm['position']}")
    sys.exit(0 if rep["pass"] else 1)


def _split_letters(text: str) -> list:
    # letters such as b([]) contain no commas, so a plain split is enough
    return [x.strip() for x in text.split(",") if x.strip()]


@oracle.command("validate-prop-algo")
@click.option("--algebra", required=True)
@click.option("--max-len", type=int, default=6, show_default=True)
@click.option("--k", "k", type=int, default=None, help="Rounds (default: the bound formula, at most 6).")
@click.option("--json", "as_json", is_flag=True)
def cmd_validate_prop_algo(algebra, max_len, k, as_json):
    """Check the Sat fixpoint against game configurations in both directions.

    Runs on the algebra as given (no leaf completion), so keep it tiny.
    """
    from .validation import validate_prop_algo
    m = _load(algebra)
    try:
        rep = validate_prop_algo(m, max_len, k)
    except Budget as exc:
        click.echo(f"budget exhausted: {exc}", err=True)
        sys.exit(BUDGET_ERROR)
    if as_json:
        click.echo(_dumps(rep))
    else:
        for e in rep["perX"]:
            click.echo(f"X={{{','.join(e['X'])}}} k={e['k']}: Sat {e['satSize']}, "
                       f"{e['shals']} shals, {len(e['incomplete'])} outside Sat, "
                       f"{e['verified']} verified ({e['verifiedByPumping']} by pumping), "
                       f"{len(e['unverified'])} unverified at bound")
        click.echo("pass" if rep["pass"] else "FAIL")
    sys.exit(0 if rep["pass"] else 1)


# ---------------------------------------------------------------------------
# corpus

@main.group("corpus")
def corpus_group():
    """Write or check the shipped corpus."""


@corpus_group.command("write")
@click.argument("directory", type=click.Path(file_okay=False))
def cmd_corpus_write(directory):
    from .corpus import write_corpus
    for p in write_corpus(directory):
        click.echo(str(p))


@corpus_group.command("check")
@click.argument("directory", type=click.Path(file_okay=False, exists=True))
def cmd_corpus_check(directory):
    """Decide every corpus entry and compare with its expectation file."""
    from .corpus import check_expectations
    bad = 0
    for name, logic, expected, got in check_expectations(directory):
        ok = expected == got
        bad += not ok
        click.echo(f"{'ok  ' if ok else 'FAIL'} {name} {logic}: expected {expected}, got {got}")
    sys.exit(0 if bad == 0 else 1)


if __name__ == "__main__":
    main()
