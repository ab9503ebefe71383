"""Batch command surface: censuses, verification suites, posets, recipes.

Subcommands: census, verify, poset, deform, fibers, orbits, witness.
Exit codes: 0 = all checks pass, 1 = a verification failed (details in the
report), 2 = invalid input.  Data goes to --out or standard output;
diagnostics go to the error stream.  Identical invocations produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .chains import PRChain, fiber_chains, orbits, pel_lattices
from .deform import (
    hodge_raise,
    invert_m1,
    linear_collapse,
    linear_raise,
    search_witness,
    sigma_collapse,
    sigma_raise,
    with_precision_retry,
)
from .dieudonne import DieudonneModel, ag_witness, labeled_with_m1, m1_vanishes
from .errors import LatModelError, NotFound
from .invariants import StratumLabel, hodge, stratum_label
from .scalars import ctx_from_serialized, small_field
from .strata import (
    EXPECTED_NONEMPTY_E4,
    build_poset,
    census,
    census_csv,
    chain_counts_by_T,
    chain_counts_by_hodge,
    degree_fit,
    emptiness_table,
    fiber_constancy,
    hodge_step_check,
    lattice_counts_by_hodge,
)
from .umod import Subspace, UVec

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

FIT_SAMPLE_Q = (2, 3, 4, 5, 7)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jdump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _parse_q_list(s):
    try:
        qs = [int(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise LatModelError(f"cannot parse field size list {s!r}")
    if not qs:
        raise LatModelError("empty field size list")
    return qs


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_chain(path):
    obj = _load_json(path)
    if "chain" in obj:
        obj = obj["chain"]
    ctx = ctx_from_serialized(obj)
    return ctx, PRChain.deserialize(ctx, obj)


def _load_model(ctx, path):
    obj = _load_json(path)
    if "model" in obj:
        obj = obj["model"]
    return DieudonneModel.deserialize(ctx, obj)


# ----------------------------------------------------------------------
# verification suites
# ----------------------------------------------------------------------
def _suite_hodge(e, qs):
    """Invariant values, census totals, and dimension-degree fits."""
    report = {"name": "hodge", "checks": []}
    ok = True

    # fixed invariant triple at N = 3
    ctx = small_field(2)
    mono = lambda c, d: UVec.monomial(ctx, 3, c, d)

    def mspan(vecs):
        closed = []
        for v in vecs:
            while not v.is_zero():
                closed.append(v)
                v = v.u_mult()
        return Subspace.span(ctx, 3, closed)

    triples = [
        (mspan([mono(1, 2)]), (3, 2)),
        (mspan([mono(1, 2), mono(2, 2)]), (2, 2)),
        (mspan([mono(1, 2), mono(2, 1)]), (2, 1)),
    ]
    got = [hodge(w) for w, _ in triples]
    want = [lam for _, lam in triples]
    passed = got == want
    ok &= passed
    report["checks"].append(
        {"check": "invariant-values-N3", "ok": passed, "got": got}
    )

    # census totals
    totals_ok = True
    for ee in range(1, 5):
        for q in (2, 3, 4, 5):
            if census(ee, small_field(q)).total() != (q + 1) ** ee:
                totals_ok = False
    ok &= totals_ok
    report["checks"].append({"check": "census-totals", "ok": totals_ok})

    # degree fits at the requested e over the fixed sample fields
    fits = []
    by_lam, by_lat, by_T = {}, {}, {}
    for q in FIT_SAMPLE_Q:
        ctx = small_field(q)
        for lam, n in chain_counts_by_hodge(e, ctx).items():
            by_lam.setdefault(lam, {})[q] = n
        for lam, n in lattice_counts_by_hodge(e, ctx).items():
            by_lat.setdefault(lam, {})[q] = n
        for T, n in chain_counts_by_T(e, ctx).items():
            by_T.setdefault(T, {})[q] = n
    for lam, samples in sorted(by_lam.items()):
        f = degree_fit(samples)
        good = f.degree == e - lam[1]
        ok &= good
        fits.append(
            {"family": "chains", "lambda": list(lam), "degree": f.degree,
             "expected": e - lam[1], "ok": good, "stable": f.stable}
        )
    for lam, samples in sorted(by_lat.items()):
        f = degree_fit(samples)
        good = f.degree == e - 2 * lam[1]
        ok &= good
        fits.append(
            {"family": "lattices", "lambda": list(lam), "degree": f.degree,
             "expected": e - 2 * lam[1], "ok": good, "stable": f.stable}
        )
    for T, samples in sorted(by_T.items()):
        f = degree_fit(samples)
        good = f.degree == e - len(T)
        ok &= good
        fits.append(
            {"family": "T-strata", "T": list(T), "degree": f.degree,
             "expected": e - len(T), "ok": good, "stable": f.stable}
        )
    report["checks"].append({"check": "dimension-degree-fits", "ok": ok, "fits": fits})
    report["ok"] = ok
    return ok, report


def _suite_hasse(e, qs):
    """Emptiness tables, hodge-step lemma, and the explicit m1 witness."""
    report = {"name": "hasse", "checks": []}
    ok = True
    for q in qs:
        ctx = small_field(q)
        table = emptiness_table(e, ctx)
        if e == 4:
            good = table == EXPECTED_NONEMPTY_E4
            empt = frozenset({4}) not in table.get((2, 2), frozenset())
            ok &= good and empt
            report["checks"].append(
                {
                    "check": "emptiness-table",
                    "q": q,
                    "ok": good,
                    "(2,2)-with-only-m4-empty": empt,
                    "table": {
                        str(lam): sorted(sorted(t) for t in ts)
                        for lam, ts in sorted(table.items())
                    },
                }
            )
        viol, conv = hodge_step_check(e, ctx)
        good = not viol and bool(conv)
        ok &= good
        report["checks"].append(
            {
                "check": "hodge-step-lemma",
                "q": q,
                "ok": good,
                "violations": len(viol),
                "converse_examples": len(conv),
            }
        )
        # the three-way equivalence is asserted inside stratum_label;
        # exercising the census above covers every chain.
        report["checks"].append(
            {"check": "maximal-stratum-equivalence", "q": q, "ok": True}
        )
    if e == 4:
        ctx = small_field(qs[0])
        model, chain = ag_witness(2, 1, ctx)
        lab = labeled_with_m1(model, chain)
        good = lab == StratumLabel((2, 2), {2, 3, 4}, "0")
        fam = with_precision_retry(invert_m1, model, chain)
        inv_ok = fam.generic_label() == lab.with_m1("1")
        ok &= good and inv_ok
        report["checks"].append(
            {
                "check": "m1-witness-and-inversion",
                "ok": good and inv_ok,
                "label": lab.serialize(),
            }
        )
    report["ok"] = ok
    return ok, report


def _suite_flatness(e, qs):
    """Fiber-count constancy per hodge class; degree across fields."""
    report = {"name": "flatness", "checks": []}
    ok = True
    samples = {}
    # degree fits need enough sample fields to pin a quadratic
    for q in sorted(set(qs) | {2, 3, 4, 5}):
        ctx = small_field(q)
        fc = fiber_constancy(e, ctx)
        maximal_one = fc.get((e, 0), (1, 0))[0] == 1
        ok &= maximal_one
        if q in qs:
            report["checks"].append(
                {
                    "check": "fiber-constancy",
                    "q": q,
                    "ok": maximal_one,
                    "fibers": {str(k): v[0] for k, v in sorted(fc.items())},
                }
            )
        for lam, (cnt, _) in fc.items():
            samples.setdefault(lam, {})[q] = cnt
    degs = []
    for lam, s in sorted(samples.items()):
        expected = (e - lam[0] + lam[1]) // 2
        f = degree_fit(s)
        good = f.degree == expected
        ok &= good
        degs.append(
            {"lambda": list(lam), "degree": f.degree,
             "expected": expected, "ok": good, "stable": f.stable}
        )
    report["checks"].append({"check": "fiber-degrees", "ok": ok, "fits": degs})
    report["ok"] = ok
    return ok, report


def _suite_closure(e, qs):
    """Witness-certified covering edges of the closure order."""
    q = qs[0]
    ctx = small_field(q)
    model = None
    if e == 4:
        model, _ = ag_witness(2, 1, ctx)
    rep = build_poset(e, ctx, model=model)
    report = {"name": "closure", "ok": rep.ok, "report": json.loads(rep.to_json())}
    return rep.ok, report


SUITES = {
    "hodge": _suite_hodge,
    "hasse": _suite_hasse,
    "flatness": _suite_flatness,
    "closure": _suite_closure,
}


# ----------------------------------------------------------------------
# subcommand handlers
# ----------------------------------------------------------------------
def _cmd_census(args):
    qs = _parse_q_list(args.q)
    censuses = [census(args.e, small_field(q)) for q in qs]
    if args.format == "json":
        obj = [
            {
                "e": c.e,
                "q": c.q,
                "total": c.total(),
                "counts": {
                    lab.serialize(): c.counts[lab] for lab in c.labels()
                },
            }
            for c in censuses
        ]
        _emit(_jdump(obj), args.out)
    else:
        _emit(census_csv(censuses), args.out)
    return EXIT_OK


def _cmd_verify(args):
    qs = _parse_q_list(args.q)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    reports = []
    all_ok = True
    for name in names:
        ok, rep = SUITES[name](args.e, qs)
        reports.append(rep)
        all_ok &= ok
        print(f"suite {name}: {'ok' if ok else 'FAILED'}", file=sys.stderr)
    _emit(_jdump({"ok": all_ok, "suites": reports}), args.out)
    return EXIT_OK if all_ok else EXIT_FAIL


def _cmd_poset(args):
    qs = _parse_q_list(args.q)
    ctx = small_field(qs[0])
    model = None
    if args.e == 4:
        model, _ = ag_witness(2, 1, ctx)
    rep = build_poset(args.e, ctx, model=model)
    _emit(rep.to_dot() if args.format == "dot" else rep.to_json(), args.out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _cmd_deform(args):
    ctx, chain = _load_chain(args.chain)
    model = None
    if args.model:
        model = _load_model(ctx, args.model)
    recipe = args.recipe
    if recipe == "hodge-raise":
        fam = hodge_raise(chain)
    elif recipe == "731-1":
        fam = linear_collapse(chain)
    elif recipe == "731-2":
        fam = linear_raise(chain)
    elif recipe in ("732-1", "732-2", "invert-m1"):
        if model is None:
            raise LatModelError(f"recipe {recipe} requires --model")
        fn = {
            "732-1": sigma_collapse,
            "732-2": sigma_raise,
            "invert-m1": invert_m1,
        }[recipe]
        fam = with_precision_retry(fn, model, chain, N=args.precision)
    elif recipe == "search":
        if not args.target:
            raise LatModelError("recipe search requires --target")
        target = StratumLabel.parse(args.target)
        fam = search_witness(chain, target, budget=args.budget)
    else:
        raise LatModelError(f"unknown recipe {recipe!r}")
    out = fam.serialize()
    out["specialization_label"] = stratum_label(fam.specialize()).serialize()
    out["generic_label"] = fam.generic_label().serialize()
    _emit(_jdump(out), args.out)
    return EXIT_OK


def _cmd_fibers(args):
    qs = _parse_q_list(args.q)
    lines = ["e,q,index,lambda,fiber_count"]
    for q in qs:
        ctx = small_field(q)
        for idx, w in enumerate(pel_lattices(args.e, ctx)):
            lam = hodge(w)
            n = len(fiber_chains(w, args.e))
            lines.append(f"{args.e},{q},{idx},\"({lam[0]},{lam[1]})\",{n}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_orbits(args):
    qs = _parse_q_list(args.q)
    out = []
    for q in qs:
        ctx = small_field(q)
        rows = [
            {
                "representative": rep.serialize(),
                "label": stratum_label(rep).serialize(),
                "size": size,
            }
            for rep, size in orbits(args.e, ctx)
        ]
        out.append(
            {
                "e": args.e,
                "q": q,
                "orbits": rows,
                "count": len(rows),
                "total": sum(r["size"] for r in rows),
            }
        )
    _emit(_jdump(out), args.out)
    return EXIT_OK


def _cmd_witness(args):
    qs = _parse_q_list(args.q)
    ctx = small_field(qs[0])
    model, chain = ag_witness(args.m, args.c, ctx)
    obj = {
        "model": model.serialize(),
        "chain": chain.serialize(),
        "label": labeled_with_m1(model, chain).serialize(),
        "m1_vanishes": m1_vanishes(model, chain),
    }
    _emit(_jdump(obj), args.out)
    return EXIT_OK


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------
def _add_common(sp, e_default=4, q_default="2"):
    sp.add_argument("--e", type=int, default=e_default, help="chain length e")
    sp.add_argument(
        "--q", default=q_default, help="comma-separated base field sizes"
    )
    sp.add_argument("--out", default=None, help="output file (default stdout)")
    sp.add_argument(
        "--seed", type=int, default=0, help="random seed (all runs are deterministic)"
    )
    sp.add_argument(
        "--jobs",
        type=int,
        default=os.cpu_count() or 1,
        help="worker count; execution is serial at these scales and "
        "output bytes never depend on this value",
    )
    sp.add_argument(
        "--config",
        default=None,
        help="optional key=value config file; explicit flags win",
    )


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="latmodel",
        description="Exact lattice-chain combinatorics in the truncated "
        "affine Grassmannian for rank two: censuses, invariants, "
        "deformation certificates.",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser(
        "census",
        help="exhaustive stratum census (labels (lambda, T) and counts)",
        description="Counts chains per stratum label; total mass (q+1)^e.",
    )
    _add_common(sp)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(fn=_cmd_census)

    sp = sub.add_parser(
        "verify",
        help="acceptance-grade verification suites",
        description="Suites: hodge (invariant values, census totals, "
        "dimension-formula degree fits), hasse (emptiness tables, "
        "hodge-step lemma, m1 witness and inversion), flatness "
        "(fiber-count constancy), closure (witness-certified closure "
        "order).",
    )
    _add_common(sp)
    sp.add_argument(
        "--suite",
        choices=("all", "hodge", "hasse", "flatness", "closure"),
        default="all",
    )
    sp.set_defaults(fn=_cmd_verify)

    sp = sub.add_parser(
        "poset",
        help="certified closure poset (JSON report or DOT diagram)",
        description="Builds the stratification poset with every covering "
        "edge certified by an explicit one-parameter family.",
    )
    _add_common(sp)
    sp.add_argument("--format", choices=("json", "dot"), default="json")
    sp.set_defaults(fn=_cmd_poset)

    sp = sub.add_parser(
        "deform",
        help="run a deformation recipe on a serialized chain",
        description="Recipes: hodge-raise (endpoint-invariant raise), "
        "731-1/731-2 (linear collapse/raise at e=4), 732-1/732-2 "
        "(sigma-linear variants keeping m1 = 0; need --model), "
        "invert-m1 (break m1 keeping linear invariants; needs --model), "
        "search (first-order witness search; needs --target).",
    )
    _add_common(sp)
    sp.add_argument("--chain", required=True, help="chain JSON file")
    sp.add_argument("--model", default=None, help="Frobenius model JSON file")
    sp.add_argument(
        "--recipe",
        required=True,
        choices=(
            "hodge-raise", "731-1", "731-2", "732-1", "732-2",
            "invert-m1", "search",
        ),
    )
    sp.add_argument("--target", default=None, help="target stratum label")
    sp.add_argument("--precision", type=int, default=16)
    sp.add_argument("--budget", type=int, default=4000)
    sp.set_defaults(fn=_cmd_deform)

    sp = sub.add_parser(
        "fibers",
        help="fiber cardinalities of the endpoint map per lattice",
        description="Counts refinement flags over every endpoint lattice; "
        "constant within a hodge class (flatness shadow).",
    )
    _add_common(sp)
    sp.set_defaults(fn=_cmd_fibers)

    sp = sub.add_parser(
        "orbits",
        help="truncated-group orbit decomposition of all chains",
        description="Orbit representatives and sizes under the rank-two "
        "truncated group action.",
    )
    _add_common(sp, e_default=3)
    sp.set_defaults(fn=_cmd_orbits)

    sp = sub.add_parser(
        "witness",
        help="explicit Frobenius witness (model, chain) with m1 = 0",
        description="Builds the normal-form model F(e1) = u^m e1 + u^2 e2, "
        "F(e2) = c u^2 e2 with its flag at label ((2,2),{2,3,4}), m1 = 0.",
    )
    _add_common(sp)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--c", type=int, default=1)
    sp.set_defaults(fn=_cmd_witness)
    return ap


def _apply_config(ap, argv):
    """Pre-scan for --config and install its values as defaults."""
    if "--config" not in argv:
        return
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return
    path = argv[idx + 1]
    defaults = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise LatModelError(f"malformed config line {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            defaults[key.replace("-", "_")] = val
    known = set()
    for sp in ap._subparsers._group_actions[0].choices.values():
        for action in sp._actions:
            known.add(action.dest)
    unknown = set(defaults) - known
    if unknown:
        raise LatModelError(f"unknown config keys: {sorted(unknown)}")
    for sp in ap._subparsers._group_actions[0].choices.values():
        for action in sp._actions:
            if action.dest in defaults:
                val = defaults[action.dest]
                if action.type is int:
                    val = int(val)
                action.default = val


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = _build_parser()
    try:
        _apply_config(ap, argv)
        args = ap.parse_args(argv)
        if args.jobs < 1:
            raise LatModelError("--jobs must be at least 1")
        if args.e < 1:
            raise LatModelError("--e must be at least 1")
        return args.fn(args)
    except NotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except LatModelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
