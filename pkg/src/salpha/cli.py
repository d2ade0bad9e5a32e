"""Command-line front end.

Every subcommand produces a list of flat result rows that is written as
CSV, JSON ({inputs, outputs, meta}) or an aligned text table.
Exit status: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__, models
from .entropy import BoundParams, bb84_bound, entropy_bound, qubit_correlator_bound
from .errors import DomainError, NumericalError
from .maxq import maxq_rate_coeff
from .minentropy import guessing_probability_bound, min_entropy_bound, tsirelson_i_alpha_beta
from .optimize import FREE_PARAMETERS, ModelFamily, SweepSpec, find_threshold, sweep
from .oracle import (
    AttackState,
    attack_entropy_closed_form,
    attack_entropy_spectral,
    bb84_attack_entropy,
    oracle_min_correlator,
)
from .reproduce import reproduce_figure, reproduce_table

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


# ---------------------------------------------------------------------------
# output


def _round(x, digits: int):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(f"{x:.{digits}g}")
    if isinstance(x, (int, np.integer)):
        return int(x)
    return x


def _columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    return cols


def format_rows(rows: list[dict], fmt: str, inputs: dict, runtime_ms: float) -> str:
    if fmt == "json":
        doc = {
            "inputs": inputs,
            "outputs": [{k: _round(v, 10) for k, v in r.items()} for r in rows],
            "meta": {"version": __version__, "runtime_ms": round(runtime_ms, 3)},
        }
        return json.dumps(doc, indent=2) + "\n"
    cols = _columns(rows)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: "" if r.get(k) is None else _round(r.get(k), 10) for k in cols})
        return buf.getvalue()
    cells = [[c for c in cols]]
    for r in rows:
        cells.append(["-" if r.get(c) is None else str(_round(r.get(c), 6)) for c in cols])
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells) + "\n"


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    # write next to the target and rename, so readers never see a partial file
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".salpha-")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# model arguments


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["depolarizing", "loss-maxent", "loss-partial"], default="depolarizing")
    p.add_argument("--delta", type=float, help="error rate (depolarizing)")
    p.add_argument("--eta", type=float, help="detection efficiency (loss models)")
    p.add_argument("--theta", type=float, default=math.pi / 2, help="state angle (loss-partial)")
    p.add_argument("--phi-a", type=float, default=math.pi / 2, help="Alice's second angle (loss-partial)")
    p.add_argument("--visibility", type=float, default=1.0)
    p.add_argument("--bob-optimal", action="store_true", help="Bob measures to maximize S_alpha")


def _family(args) -> ModelFamily:
    if args.model == "loss-partial" and args.bob_optimal:
        raise DomainError("--bob-optimal does not apply to loss-partial")
    return ModelFamily(args.model, args.bob_optimal, args.visibility)


def _channel_value(args) -> float:
    name = "delta" if args.model == "depolarizing" else "eta"
    value = getattr(args, name)
    if value is None:
        raise DomainError(f"--{name} is required for --model {args.model}")
    return value


def _parse_optimize(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    names = tuple(n.strip().replace("-", "_") for n in text.split(",") if n.strip())
    bad = [n for n in names if n not in FREE_PARAMETERS]
    if bad:
        raise DomainError(f"unknown --optimize entries {bad}; choose from alpha,q,theta,phi-a")
    return names


# ---------------------------------------------------------------------------
# subcommands


def cmd_bound(args) -> list[dict]:
    ev = entropy_bound(BoundParams(args.q, args.alpha), args.s)
    return [{"q": args.q, "alpha": args.alpha, "s": args.s, "value": ev.value,
             "branch": ev.branch.value, "s_star": ev.s_star}]


def cmd_rate(args) -> list[dict]:
    family = _family(args)
    x = _channel_value(args)
    model = family.model(x, args.theta, args.phi_a)
    row = {"model": args.model, family.channel_parameter: x, "alpha": args.alpha}
    if args.maxq:
        row.update(q="->1/2", rate_per_eps2=maxq_rate_coeff(model, args.alpha).coefficient)
        return [row]
    res = models.devetak_winter(model, args.q, args.alpha)
    row.update(q=args.q, s_alpha=res.s_alpha, entropy_bound=res.entropy_bound.value,
               branch=res.entropy_bound.branch.value, h_a_given_b=res.h_a_given_b, rate=res.rate)
    return [row]


def cmd_threshold(args) -> list[dict]:
    family = _family(args)
    optimize = _parse_optimize(args.optimize)
    fixed = {"alpha": args.alpha, "q": args.q, "theta": args.theta, "phi_a": args.phi_a}
    bracket = tuple(float(v) for v in args.bracket.split(",")) if args.bracket else None
    if bracket is not None and len(bracket) != 2:
        raise DomainError("--bracket takes lo,hi")
    res = find_threshold(family, optimize, fixed, maxq=args.maxq, bracket=bracket, xtol=args.xtol)
    return [{
        "model": args.model,
        "critical_" + family.channel_parameter: res.critical_value,
        "critical_percent": 100.0 * res.critical_value,
        "optimal_alpha": res.optimal_alpha,
        "optimal_q": "->1/2" if args.maxq else res.optimal_q,
        "optimal_theta": res.optimal_theta,
        "optimal_phi_a": res.optimal_phi_a,
        "iterations": res.iterations,
        "residual_rate": res.residual_rate,
    }]


def _sweep_spec(args) -> SweepSpec:
    if args.spec:
        with open(args.spec) as fh:
            doc = json.load(fh)
        try:
            return SweepSpec(doc["parameter"], float(doc["lo"]), float(doc["hi"]), int(doc["points"]),
                             dict(doc.get("fixed", {})))
        except KeyError as exc:
            raise DomainError(f"sweep spec is missing {exc}") from exc
    if args.parameter is None or args.lo is None or args.hi is None:
        raise DomainError("sweep needs --spec or --parameter/--lo/--hi")
    fixed = {"model": args.model, "bob_optimal": args.bob_optimal, "visibility": args.visibility,
             "optimize": list(_parse_optimize(args.optimize)), "maxq": args.maxq}
    for name in ("delta", "eta", "alpha", "q", "s"):
        if getattr(args, name, None) is not None:
            fixed[name] = getattr(args, name)
    if args.model == "loss-partial":
        fixed.update(theta=args.theta, phi_a=args.phi_a)
    if args.parameter == "s":
        fixed.setdefault("alpha", 1.0)
        fixed.setdefault("q", 0.0)
    return SweepSpec(args.parameter, args.lo, args.hi, args.points, fixed)


def cmd_sweep(args) -> list[dict]:
    return sweep(_sweep_spec(args))


def cmd_verify(args) -> list[dict]:
    """Oracle equivalence suites; one row per case plus a row per suite maximum."""
    rng = np.random.default_rng(args.seed)
    rows = []
    for _ in range(args.cases):
        a = float(rng.uniform(0.3, 1.5))
        s = float(rng.uniform(2.0, 2.0 * math.sqrt(1.0 + a * a)))
        o = oracle_min_correlator(a, s, grid_n=args.grid_n)
        b = float(qubit_correlator_bound(a, s))
        rows.append({"suite": "correlator", "alpha": a, "s": s, "oracle": o, "analytic": b, "deviation": o - b})
    for q in np.linspace(0.0, 0.5, 6):
        for f in np.linspace(0.0, 1.0, 6):
            o, c = attack_entropy_spectral(q, f), attack_entropy_closed_form(q, f)
            rows.append({"suite": "attack", "q": q, "f": f, "oracle": o, "analytic": c, "deviation": o - c})
    for q in np.linspace(0.0, 0.5, 4):
        for zz in np.linspace(-1.0, 1.0, 3):
            for xx in np.linspace(0.0, 1.0, 4):
                o = bb84_attack_entropy(q, AttackState(zz, xx))
                c = float(bb84_bound(q, xx))
                rows.append({"suite": "bb84", "q": q, "e_zz": zz, "e_xx": xx, "oracle": o, "analytic": c,
                             "deviation": o - c})
    for suite in ("correlator", "attack", "bb84"):
        devs = [abs(r["deviation"]) for r in rows if r["suite"] == suite]
        rows.append({"suite": suite + ":max", "deviation": max(devs) if devs else None})
    return rows


def cmd_min_entropy(args) -> list[dict]:
    row = {"alpha": args.alpha, "s": args.s,
           "guessing_probability": guessing_probability_bound(args.alpha, args.s),
           "min_entropy": min_entropy_bound(args.alpha, args.s)}
    if args.beta is not None:
        row.update(beta=args.beta, i_alpha_beta_max=tsirelson_i_alpha_beta(args.alpha, args.beta))
    return [row]


def cmd_reproduce(args) -> list[dict]:
    if args.table is not None:
        return reproduce_table(args.table)
    return reproduce_figure(args.figure)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["pretty", "csv", "json"], default="pretty")
    common.add_argument("--output", help="write to this file instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites")

    parser = argparse.ArgumentParser(prog="salpha", description="S_alpha key-rate bounds and thresholds")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="entropy bound for one (q, alpha, s)")
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--s", type=float, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("rate", parents=[common], help="Devetak-Winter rate of a channel model")
    _add_model_args(p)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--maxq", action="store_true", help="report the rate per eps^2 as q -> 1/2")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("threshold", parents=[common], help="zero-rate channel parameter")
    _add_model_args(p)
    p.add_argument("--optimize", default="", help="comma list from alpha,q,theta,phi-a")
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--maxq", action="store_true")
    p.add_argument("--bracket", help="lo,hi for the channel parameter")
    p.add_argument("--xtol", type=float, default=1e-6)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("sweep", parents=[common], help="row-per-point parameter sweep")
    p.add_argument("--spec", help="JSON file with parameter, lo, hi, points, fixed")
    p.add_argument("--parameter", choices=["delta", "eta", "s", "alpha", "q", "theta"])
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--points", type=int, default=11)
    _add_model_args(p)
    p.add_argument("--optimize", default="")
    p.add_argument("--q", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--maxq", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[common], help="oracle equivalence suites")
    p.add_argument("--grid-n", type=int, default=120)
    p.add_argument("--cases", type=int, default=20)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("min-entropy", parents=[common], help="guessing probability and min-entropy")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--beta", type=float)
    p.set_defaults(func=cmd_min_entropy)

    p = sub.add_parser("reproduce", parents=[common], help="threshold tables and figure data")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--table", type=int, choices=[1, 2, 3, 4])
    g.add_argument("--figure", type=int, choices=[1, 2, 3, 4])
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    inputs = {k: v for k, v in vars(args).items() if k not in ("func", "format", "output")}
    start = time.perf_counter()
    try:
        rows = args.func(args)
    except (DomainError, ValueError, OSError) as exc:
        print(f"salpha: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"salpha: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    runtime_ms = (time.perf_counter() - start) * 1e3
    _write(format_rows(rows, args.format, inputs, runtime_ms), args.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
