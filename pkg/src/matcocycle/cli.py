"""Command-line entry point.

Every subcommand reads a cocycle spec (``--spec``), writes its data to
``--out`` and sends diagnostics to standard error.  Exit codes: 0 success
(including a ``fail`` verdict), 1 bad input or usage, 2 hard invariant
violation, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from .cocycle import CocycleSpec, check_fiber_bunched
from .dominated import TAU1, TAU2, DEFAULT_K0, build_induced, pressure_comparison
from .errors import BudgetExceeded, InvariantViolation, MatCocycleError
from .measures import maximize_variational, variational_gap
from .pressure import estimate_pressure
from .serialize import SCHEMA_VERSION, dump_cocycle_spec, dumps, load_cocycle_spec, load_json, parse_window_word
from .spectrum import (Q_MAX, auto_targets, estimate_spectrum_domain, level_set_entropy_oracle,
                       spectrum_curve)
from .structure import (check_domination, check_pinching, check_twisting, check_typical,
                        probe_quasi_multiplicativity)
from .symbolic import HomoclinicPointSym, PeriodicPointSym
from .tables import build_table

log = logging.getLogger("matcocycle")

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_BUDGET = 0, 1, 2, 3
CHECK_KINDS = ("fiber-bunching", "pinching", "twisting", "typical", "qm", "domination")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is reserved for invariant violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",")]


def _common(p: argparse.ArgumentParser, fmt: tuple = ("json",)):
    p.add_argument("--spec", required=True, help="cocycle spec JSON file")
    p.add_argument("--out", required=True, help="output file")
    p.add_argument("--format", choices=fmt, default=fmt[0])
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: available CPUs)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=None, help="maximum words per enumeration")


def _points(p: argparse.ArgumentParser, required: bool):
    p.add_argument("--p", required=required, help="repeating word of the periodic point, e.g. 0 or 0,1")
    p.add_argument("--z", help="excursion of the homoclinic point")
    p.add_argument("--entry", type=int, help="entry time of the homoclinic point (default: len(z) + 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="matcocycle", description="Thermodynamic formalism for matrix cocycles.")
    parser.add_argument("--version", action="version", version=f"schema {SCHEMA_VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pressure", help="pressure estimates on a q grid")
    _common(p, ("json", "csv"))
    p.add_argument("--q", action="append", type=_floats, required=True,
                   help="exponent vector q1,q2,...; repeat for a grid")
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--qm-log-c", type=float, help="log of the quasi-multiplicativity constant")
    p.add_argument("--gap-k", type=int, help="connector length for the superadditive bracket")

    p = sub.add_parser("spectrum", help="Lyapunov spectrum entropy curve")
    _common(p, ("csv",))
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--targets", help="JSON list of target vectors")
    p.add_argument("--auto", type=int, default=9, help="number of automatic targets")
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--with-measure", action="store_true")
    p.add_argument("--measure-n", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--q-max", type=float, default=Q_MAX)

    p = sub.add_parser("oracle", help="level-set counts")
    _common(p)
    p.add_argument("--alpha", action="append", type=_floats, required=True)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--eps", type=float)

    p = sub.add_parser("check", help="structural checks")
    _common(p)
    p.add_argument("--kind", choices=CHECK_KINDS, required=True)
    _points(p, required=False)
    p.add_argument("--index", type=int, default=1, help="domination index")
    p.add_argument("--power", type=int, default=1, help="exterior power for twisting")
    p.add_argument("--n-max", type=int, default=8, help="depth for domination")
    p.add_argument("--pairs", type=int, default=6, help="word length for the quasi-multiplicativity probe")
    p.add_argument("--k-max", type=int, default=2, help="connector length for the quasi-multiplicativity probe")

    p = sub.add_parser("induce", help="build the induced dominated system")
    _common(p)
    _points(p, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--K0", type=int, default=DEFAULT_K0)
    p.add_argument("--tau1", type=float, default=TAU1)
    p.add_argument("--tau2", type=float, default=TAU2)
    p.add_argument("--q", type=_floats, help="exponent vector for the comparison table")
    p.add_argument("--n-list", type=_ints, help="core lengths for the comparison table")
    p.add_argument("--k-max", type=int, default=2)
    p.add_argument("--table", help="file for the comparison table")

    p = sub.add_parser("measures", help="variational gap sweep over Markov measures")
    _common(p)
    p.add_argument("--q", action="append", type=_floats, required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-iter", type=int, default=500)
    return parser


def _periodic(c: CocycleSpec, args) -> PeriodicPointSym | None:
    if args.p is None:
        return None
    p = PeriodicPointSym(parse_window_word(args.p, c.k))
    p.validate(c.sft)
    return p


def _homoclinic(c: CocycleSpec, p: PeriodicPointSym | None, args) -> HomoclinicPointSym | None:
    if args.z is None:
        return None
    if p is None:
        raise ValueError("--z needs --p")
    exc = parse_window_word(args.z, c.k)
    z = HomoclinicPointSym(p, exc, args.entry if args.entry is not None else len(exc) + 1)
    z.validate(c.sft)
    return z


def _envelope(command: str, results) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "results": results}


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_pressure(c: CocycleSpec, args) -> str:
    ests = [estimate_pressure(c, q, args.n_max, args.n_min, args.qm_log_c, args.gap_k,
                              args.budget, args.threads) for q in args.q]
    for e in ests:
        log.info("q=%s P~%.10g at n=%d", e.q.tolist(), e.point_estimate, e.n_max)
    if args.format == "json":
        return dumps(_envelope("pressure", [e.to_json() for e in ests]))
    d = c.dimension
    header = [f"q_{i + 1}" for i in range(d)] + ["n_max", "value_at_n_max", "point_estimate",
                                                  "superadditive_lower", "exact", "ratio_estimate"]
    rows = [[_fmt(v) for v in e.q] + [e.n_max, _fmt(e.values[-1][1]), _fmt(e.point_estimate),
                                      _fmt(e.superadditive_lower), _fmt(e.exact), _fmt(e.ratio_estimate)]
            for e in ests]
    return _csv(header, rows)


def _targets(c: CocycleSpec, args) -> list:
    if args.targets:
        data = load_json(args.targets)
        return [np.atleast_1d(np.asarray(t, dtype=float)) for t in data]
    T = build_table(c, args.n, args.budget, args.threads)
    return auto_targets(estimate_spectrum_domain(c, args.n, table=T), args.auto)


def cmd_spectrum(c: CocycleSpec, args) -> str:
    targets = _targets(c, args)
    pts = spectrum_curve(c, targets, args.n, q_max=args.q_max, seed=args.seed,
                         with_oracle=not args.no_oracle, with_measure=args.with_measure,
                         measure_n=args.measure_n, eps=args.eps, budget=args.budget, threads=args.threads)
    d = c.dimension
    header = ([f"alpha_{i + 1}" for i in range(d)] + ["entropy", "method", "n"]
              + [f"q_star_{i + 1}" for i in range(d)] + ["flags"])
    rows = []
    for pt in pts:
        q = [""] * d if pt.q_star is None else [_fmt(v) for v in pt.q_star]
        ent = "empty" if pt.entropy is None else _fmt(pt.entropy)
        rows.append([_fmt(v) for v in pt.alpha] + [ent, pt.method, pt.n] + q + [";".join(pt.flags)])
    return _csv(header, rows)


def cmd_oracle(c: CocycleSpec, args) -> str:
    T = build_table(c, args.n, args.budget, args.threads)
    out = []
    for alpha in args.alpha:
        o = level_set_entropy_oracle(c, alpha, args.n, args.eps, table=T)
        out.append({"alpha": alpha, "count": o.count, "n": o.n, "eps": o.eps,
                    "entropy": None if o.is_empty else o.value})
    return dumps(_envelope("oracle", out))


def cmd_check(c: CocycleSpec, args) -> str:
    p = _periodic(c, args)
    z = _homoclinic(c, p, args)
    kind = args.kind
    if kind in ("pinching", "twisting", "typical") and p is None:
        raise ValueError(f"--kind {kind} needs --p")
    if kind in ("twisting", "typical") and z is None:
        raise ValueError(f"--kind {kind} needs --z")
    if kind == "fiber-bunching":
        v = check_fiber_bunched(c)
    elif kind == "pinching":
        v = check_pinching(c, p)
    elif kind == "twisting":
        v = check_twisting(c, p, z, args.power)
    elif kind == "typical":
        v = check_typical(c, p, z)
    elif kind == "qm":
        v = probe_quasi_multiplicativity(c, args.pairs, args.k_max, args.budget)
    else:
        v = check_domination(c, args.index, args.n_max, args.budget)
    log.info("%s: %s (margin %.6g)", v.kind, v.verdict, v.margin)
    return dumps(_envelope("check", v.to_json()))


def cmd_induce(c: CocycleSpec, args) -> str:
    p = _periodic(c, args)
    z = _homoclinic(c, p, args)
    ic = build_induced(c, p, z, args.n, args.tau1, args.tau2, args.K0, args.threads)
    log.info("induced alphabet of %d letters, minimum cone slack %.6g", ic.size, ic.verify_cones())
    if args.table:
        if args.q is None or args.n_list is None:
            raise ValueError("--table needs --q and --n-list")
        rows = pressure_comparison(c, p, z, args.q, args.n_list, args.tau1, args.tau2, args.K0,
                                   args.k_max, threads=args.threads)
        Path(args.table).write_text(dumps(_envelope("induce", [r.to_json() for r in rows])))
    return dump_cocycle_spec(ic.spec, {"induced": ic.to_json()["induced"]})


def cmd_measures(c: CocycleSpec, args) -> str:
    T = build_table(c, args.n, args.budget, args.threads)
    out = []
    for q in args.q:
        m, obj = maximize_variational(c, q, args.n, args.restarts, args.seed, args.max_iter,
                                      args.threads, args.budget, table=T)
        qq = np.concatenate([q, np.zeros(max(0, c.dimension - len(q)))])[:c.dimension]
        out.append({"q": q, "n": args.n, "measure": m.to_json(), "objective": obj,
                    "log_partition_over_n": T.log_partition(qq) / args.n,
                    "variational_gap": variational_gap(c, m, qq, args.n, table=T)})
    return dumps(_envelope("measures", out))


COMMANDS = {"pressure": cmd_pressure, "spectrum": cmd_spectrum, "oracle": cmd_oracle,
            "check": cmd_check, "induce": cmd_induce, "measures": cmd_measures}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        c = load_cocycle_spec(args.spec)
        text = COMMANDS[args.command](c, args)
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except BudgetExceeded as e:
        print(f"budget exhausted: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (MatCocycleError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    Path(args.out).write_text(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
