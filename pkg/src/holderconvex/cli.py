"""Command-line front end.

Exit codes: 0 success, 1 failed verification, 2 bad arguments or
configuration, 3 unreachable precision.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

from .cantor_base import ConstructionParams, Strictness, parse_alpha, phi0_eval
from .errors import HolderConvexError, InvalidParams, PrecisionUnreachable
from .integral import G, Phi, f_eval, segment_integral
from .records import EvalResult
from .scalar import Mode, format_fraction, format_pair, format_value, parse_scalar
from .tower import g1_eval, g_eval, phi_n_eval

EXIT_FAILED, EXIT_USAGE, EXIT_PRECISION = 1, 2, 3


@dataclass
class RunConfig:
    params: ConstructionParams
    command: str
    options: dict = field(default_factory=dict)
    seed: int = 0
    output_path: str | None = None
    format: str = "json"

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "command": self.command,
            "options": self.options,
            "seed": self.seed,
            "output_path": self.output_path,
            "format": self.format,
        }


# -- argument handling ------------------------------------------------------

def _fraction_arg(text: str) -> Fraction:
    try:
        s = parse_scalar(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not s.is_exact:
        raise argparse.ArgumentTypeError(f"expected an exact number, got {text!r}")
    return s.exact_value


def _alpha_arg(text: str) -> Fraction:
    if any(c in text for c in ".eE"):
        raise argparse.ArgumentTypeError(f"alpha must be a fraction p/q, got {text!r}")
    try:
        return parse_alpha(text)
    except (ValueError, InvalidParams) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("construction")
    g.add_argument("--N", type=int, default=128, help="number of children per level (even, >= 4)")
    g.add_argument("--alpha", type=_alpha_arg, default=Fraction(1, 2), help="Hoelder exponent as p/q")
    g.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.EXACT.value)
    strict = g.add_mutually_exclusive_group()
    strict.add_argument("--strict", dest="strict", action="store_true", default=True)
    strict.add_argument("--relaxed", dest="strict", action="store_false",
                        help="allow parameters outside the proven range; reports carry strict=false")
    g.add_argument("--precision", type=int, default=256, help="interval precision in bits (guarded mode)")
    r = p.add_argument_group("run")
    r.add_argument("--eps", type=_fraction_arg, default=Fraction(1, 10 ** 12), help="target error bound")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1, help="worker processes for batch evaluation")
    r.add_argument("--out", default=None, help="output file (default: stdout)")
    r.add_argument("--format", choices=["csv", "json"], default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="holderconvex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate one function at one point")
    p.add_argument("--target", choices=["phi0", "phi", "g1", "g", "f"], required=True)
    p.add_argument("--n", type=int, default=1, help="plateau level for --target phi")
    p.add_argument("--x", type=_fraction_arg, required=True)
    p.add_argument("--show-bound", action="store_true", help="print the computed error bound instead of eps")

    p = sub.add_parser("sample", parents=[common], help="g and f on a uniform grid, as CSV")
    p.add_argument("--m", type=int, default=101, help="number of grid points (>= 2)")

    p = sub.add_parser("boxcount", parents=[common], help="box counts of F0 or of a transitional set")
    p.add_argument("--set", dest="set_id", choices=["F0", "transitional"], default="F0")
    p.add_argument("--tier", type=int, default=1)
    p.add_argument("--k-max", type=int, default=6)

    p = sub.add_parser("holder", parents=[common], help="sampled Hoelder quotient lower bound")
    p.add_argument("--target", choices=["phi0", "phi", "g"], default="phi0")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--sampler", choices=["uniform", "dyadic", "adversarial"], default="uniform")

    p = sub.add_parser("convex-subset", parents=[common], help="convexity-dimension experiment")
    p.add_argument("--m", type=int, default=1500)
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=8)

    p = sub.add_parser("integrate", parents=[common], help="integral of g or phi_n over [a, b]")
    p.add_argument("--a", type=_fraction_arg, default=Fraction(0))
    p.add_argument("--b", type=_fraction_arg, required=True)
    p.add_argument("--integrand", choices=["g", "phi"], default="g")
    p.add_argument("--n", type=int, default=1)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--quick", action="store_true", help="smaller sample sizes")
    return parser


def _params(args) -> ConstructionParams:
    return ConstructionParams(
        N=args.N,
        alpha=args.alpha,
        mode=Mode(args.mode),
        strictness=Strictness.STRICT if args.strict else Strictness.RELAXED,
        float_precision_bits=args.precision,
    )


_GLOBAL = {"N", "alpha", "mode", "strict", "precision", "eps", "seed", "jobs", "out", "format", "command"}


def _config(args, params: ConstructionParams, fmt: str) -> RunConfig:
    opts = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in _GLOBAL}
    opts["eps"] = format_fraction(args.eps)
    return RunConfig(params, args.command, opts, args.seed, args.out, fmt)


def _jsonable(v):
    if isinstance(v, Fraction):
        return format_fraction(v)
    return v


# -- output -----------------------------------------------------------------

def _emit(text: str, out: str | None) -> None:
    """Write atomically, so a failed run leaves no partial file."""
    if out is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".holderconvex-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        os.unlink(tmp)
        raise


def _report(config: RunConfig, payload: dict) -> dict:
    return {"command": config.command, "config": config.to_dict(),
            "strict": config.params.strict, **payload}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, Fraction):
        return format_fraction(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _value_text(r: EvalResult, eps: Fraction, show_bound: bool) -> str:
    if r.is_exact:
        return format_fraction(r.mid)
    return format_value(r.mid, r.total_err if show_bound else max(eps, r.total_err))


def _value_payload(r: EvalResult, eps: Fraction, show_bound: bool) -> dict:
    if r.is_exact:
        return {"value": format_fraction(r.mid), "err": "0", "text": format_fraction(r.mid)}
    value, err = format_pair(r.mid, r.total_err)
    return {"value": value, "err": err,
            "text": _value_text(r, eps, show_bound)}


# -- commands ---------------------------------------------------------------

def _evaluate(params, target: str, x, eps, n: int = 1) -> EvalResult:
    if target == "phi0":
        return phi0_eval(params, x, eps)
    if target == "phi":
        return phi_n_eval(params, x, n, eps)
    if target == "g1":
        return g1_eval(params, x, eps)
    if target == "g":
        return g_eval(params, x, eps)
    return f_eval(params, x, eps)


def cmd_eval(args, params) -> int:
    config = _config(args, params, args.format or "text")
    r = _evaluate(params, args.target, args.x, args.eps, args.n)
    if args.format == "json":
        _emit(_dumps(_report(config, _value_payload(r, args.eps, args.show_bound))), args.out)
    else:
        _emit(_value_text(r, args.eps, args.show_bound) + "\n", args.out)
    return 0


def cmd_sample(args, params) -> int:
    from .analysis.experiments import evaluate_many

    if args.m < 2:
        raise InvalidParams("--m must be at least 2")
    xs = [Fraction(j, args.m - 1) for j in range(args.m)]
    gs = evaluate_many(params, "g", xs, args.eps, args.jobs)
    fs = evaluate_many(params, "f", xs, args.eps, args.jobs)

    def cell(v, e):
        return (format_fraction(v), "0") if e == 0 else format_pair(v, e)

    rows = [(format_fraction(x), *cell(*g), *cell(*f)) for x, g, f in zip(xs, gs, fs)]
    fmt = args.format or "csv"
    if fmt == "csv":
        _emit(_csv(["x", "g", "g_err", "f", "f_err"], rows), args.out)
    else:
        config = _config(args, params, fmt)
        keys = ("x", "g", "g_err", "f", "f_err")
        _emit(_dumps(_report(config, {"rows": [dict(zip(keys, r)) for r in rows]})), args.out)
    return 0


def cmd_boxcount(args, params) -> int:
    from .analysis.boxcount import F0, GTTransitional, box_count_set, dim_fit

    set_id = F0 if args.set_id == "F0" else GTTransitional(args.tier)
    rows = [box_count_set(params, set_id, k) for k in range(1, args.k_max + 1)]
    ratios = [float(r.ratio(params.alpha)) for r in rows]
    fit = dim_fit(rows, params.alpha) if len(rows) >= 3 and all(r.count for r in rows) else None
    fmt = args.format or "json"
    if fmt == "csv":
        _emit(_csv(["k", "count", "ratio"], [(r.k, r.count, repr(q)) for r, q in zip(rows, ratios)]), args.out)
        return 0
    payload = {"rows": [{"k": r.k, "count": r.count, "ratio": q} for r, q in zip(rows, ratios)],
               "fit": None if fit is None else {"slope": fit.slope, "intercept": fit.intercept},
               "c_f0_boxcount": max(ratios)}
    _emit(_dumps(_report(_config(args, params, fmt), payload)), args.out)
    return 0


def cmd_holder(args, params) -> int:
    from .analysis.holder import AdversarialEndpoints, DyadicGrid, UniformRandom, holder_estimate

    sampler = {"uniform": UniformRandom(args.seed), "dyadic": DyadicGrid(),
               "adversarial": AdversarialEndpoints(params, args.seed)}[args.sampler]
    fn = lambda x: _evaluate(params, args.target, x, args.eps, args.n)  # noqa: E731
    est = holder_estimate(fn, params.alpha, args.pairs, sampler)
    payload = {"lower_bound": float(est.lower_bound), "lower_bound_exact": format_fraction(est.lower_bound),
               "pairs_tested": est.pairs_tested, "exponent": format_fraction(params.alpha),
               "witness": None if est.witness is None else [format_fraction(v) for v in est.witness]}
    fmt = args.format or "json"
    if fmt == "csv":
        _emit(_csv(list(payload), [[_csv_cell(v) for v in payload.values()]]), args.out)
    else:
        _emit(_dumps(_report(_config(args, params, fmt), payload)), args.out)
    return 0


def _csv_cell(v):
    return " ".join(v) if isinstance(v, list) else v


def cmd_convex_subset(args, params) -> int:
    from .analysis.experiments import convexity_dimension_experiment

    rep = convexity_dimension_experiment(params, args.m, range(args.k_min, args.k_max + 1), args.seed,
                                         eps=args.eps, jobs=args.jobs)

    def sub(s):
        d = {"size": len(s.indices), "indices": list(s.indices), "fit": s.fit.to_dict(),
             "ratios": [list(r) for r in s.ratios], "quantized": s.quantized}
        if s.occupancy is not None:
            d["occupancy_worst"] = s.occupancy.worst_count
        return d

    payload = {"convex": sub(rep.convex), "concave": sub(rep.concave), "control": sub(rep.control),
               "slope_bound": rep.slope_bound, "passed": rep.passed, "c_alpha": rep.c_alpha,
               "c_g1_proxy": rep.c_g1, "notes": list(rep.notes) + [
                   "the c_g1 value counts the sampled set only; it stands in for arbitrary sets"]}
    fmt = args.format or "json"
    if fmt == "csv":
        rows = [(name, k, r) for name in ("convex", "concave", "control")
                for k, r in getattr(rep, name).ratios]
        _emit(_csv(["subset", "k", "ratio"], rows), args.out)
    else:
        _emit(_dumps(_report(_config(args, params, fmt), payload)), args.out)
    return 0


def cmd_integrate(args, params) -> int:
    integrand = G() if args.integrand == "g" else Phi(args.n)
    r = segment_integral(params, args.a, args.b, integrand, args.eps)
    fmt = args.format or "text"
    if fmt == "json":
        _emit(_dumps(_report(_config(args, params, fmt), _value_payload(r, args.eps, False))), args.out)
    else:
        _emit(_value_text(r, args.eps, False) + "\n", args.out)
    return 0


def cmd_verify(args, params) -> int:
    from .analysis.verification import SUITES, Sizes, run_suite

    if args.suite != "all" and args.suite not in SUITES:
        raise InvalidParams(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)} or all")
    sizes = Sizes.quick() if args.quick else Sizes()
    results = run_suite(args.suite, params, args.seed, sizes, args.jobs)
    checks = [c for r in results for c in r.checks]
    passed = all(c.passed for c in checks)
    payload = {"suite": args.suite, "checks": [c.to_dict() for c in checks], "passed": passed}
    _emit(_dumps(_report(_config(args, params, "json"), payload)), args.out)
    return 0 if passed else EXIT_FAILED


COMMANDS = {
    "eval": cmd_eval,
    "sample": cmd_sample,
    "boxcount": cmd_boxcount,
    "holder": cmd_holder,
    "convex-subset": cmd_convex_subset,
    "integrate": cmd_integrate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = _params(args)
        return COMMANDS[args.command](args, params)
    except PrecisionUnreachable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (InvalidParams, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HolderConvexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
