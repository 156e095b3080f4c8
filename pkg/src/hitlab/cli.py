"""Command-line front end: ``hitlab eval | plotdata | simulate | verify``.

Every data output starts with ``#`` manifest lines (tool version, command,
timestamp, seed and the resolved options as ``# config: key = value``).  Such
a file can be passed back through ``--config`` to rerun the same command.

Options come from, in decreasing priority: command-line flags, the
``--config`` file (``key = value`` lines, keys are long flag names), and
built-in defaults.  ``HITLAB_SEED`` overrides the default seed.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import itertools
import os
import sys

import numpy as np

from . import __version__
from . import closedform as C
from . import quadrature as Q

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

SEED_ENV = "HITLAB_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}")


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

# name -> (required params, optional params, evaluator returning (value, error or None), help)
FORMULAS = {
    "c_m": (("m",), (), lambda m: (C.gauss_abs_moment(m), None), "E|N|^m"),
    "phi": (("m",), (), lambda m: C.phi_with_error(m, 0), "int_0^2 y^(m+1)/(1+y) dy"),
    "phi_prime": (("m",), (), lambda m: C.phi_with_error(m, 1), "derivative of phi"),
    "phi_second": (("m",), (), lambda m: C.phi_with_error(m, 2), "second derivative of phi"),
    "i_plus": (("m",), (), lambda m: (C.moment_i_plus(m), None), "I_+^(m)"),
    "i_minus": (("m",), (), lambda m: (C.moment_i_minus(m), None), "I_-^(m)"),
    "i": (("m",), (), lambda m: (C.moment_i(m), None), "I^(m) = I_+ - I_-"),
    "h": (("y",), (), lambda y: (C.alpha_density(y), None), "density of alpha"),
    "h_cdf": (("y",), (), lambda y: (C.alpha_cdf(y), None), "CDF of alpha"),
    "h_cond": (("y", "t"), (), lambda y, t: (C.alpha_density_conditional(y, t), None),
               "density of alpha given T_1 = t"),
    "h_cond_cdf": (("y", "t"), (), lambda y, t: (C.alpha_cdf_conditional(y, t), None),
                   "CDF of alpha given T_1 = t"),
    "local_time_laplace": (("mu",), ("b", "x"),
                           lambda mu, b=None, x=None: (C.local_time_laplace(mu, b=b, x=x), None),
                           "E[L^level exp(-mu^2 T_1/2)], level b in (0,1) or -x"),
    "i_mu": (("side", "m", "mu"), (), lambda side, m, mu: (C.i_mu_monomial(side, m, mu), None),
             "I_mu of (x^+-)^m"),
    "max_crossing": (("s", "b"), (), lambda s, b: (C.max_conditional_crossing(s, b), None),
                     "P(S_s < 1 | B_s = b)"),
    "inv_gauss": (("y", "mu"), (), lambda y, mu: (C.inverse_gaussian_integral(y, mu), None),
                  "exp(-mu|y|)/mu"),
    "lab": (("a", "b", "m"), (), lambda a, b, m: (C.lab_integral(a, b, m), None), "log(b/a)"),
    "dilog": (("x",), (), lambda x: (C.dilog(x), None), "Li_2(x)"),
    "delta_fn": (("c",), (), lambda c: (C.delta_fn(c), None), "Delta(C)"),
    "bessel_exp_moment": (("a",), (), lambda a: (C.bessel_exp_moment(a), None),
                          "E[R_1 exp(-a R_1^2/2)]"),
    "ray_knight_mean": (("b", "mu"), (), lambda b, mu: (C.ray_knight_mean(b, mu), None), "u(b)"),
    "meander_kernel": (("y", "z"), (), lambda y, z: (C.meander_conditional_kernel(y, z), None),
                       "density of m_U at z given m_1 = y"),
    "psi32": ((), ("lambda", "a", "b"), None, "E[A^(1)_(a,b)] from lambda = b/a"),
    "psi": (("a", "b", "theta"), (), None, "E[T^-theta int_0^T B ds], exit of (-b, a)"),
    "e_delta": (("delta", "a", "b"), (), lambda delta, a, b: (Q.e_delta(delta, a, b), None), "E_delta"),
    "phi_delta": (("a", "b", "p", "delta"), (),
                  lambda a, b, p, delta: (Q.phi_delta(a, b, p, delta), None), "phi_delta(a,b,p)"),
}

_EVAL_PARAMS = ("m", "y", "t", "mu", "b", "x", "side", "s", "a", "lambda", "theta", "delta", "p",
                "c", "z")


def _evaluate(name: str, params: dict):
    if name == "psi32":
        if "lambda" in params:
            if "a" in params or "b" in params:
                raise UsageError("psi32 takes either --lambda or --a/--b")
            return Q.psi_three_half(1.0, params["lambda"]), None
        if "a" in params and "b" in params:
            return Q.psi_three_half(params["a"], params["b"]), None
        raise UsageError("psi32 needs --lambda or both --a and --b")
    if name == "psi":
        tb = Q.TwoBarrier(params["a"], params["b"], params["theta"])
        value = Q.psi(tb)
        return value, Q.psi_first(tb)[1]
    fn = FORMULAS[name][2]
    return fn(**params)


def _eval_rows(args) -> list[tuple[dict, float, float | None]]:
    name = args.formula
    if name not in FORMULAS:
        raise UsageError(f"unknown formula {name!r}; known: {', '.join(FORMULAS)}")
    required, optional, _, _ = FORMULAS[name]
    given = {}
    for p in _EVAL_PARAMS:
        v = getattr(args, f"p_{p}")
        if v is not None:
            given[p] = v
    missing = [p for p in required if p not in given]
    if missing:
        raise UsageError(f"{name} needs --{' --'.join(missing)}")
    extra = [p for p in given if p not in required and p not in optional]
    if extra:
        raise UsageError(f"{name} does not take --{' --'.join(extra)}")
    keys = list(given)
    rows = []
    for combo in itertools.product(*(given[k] for k in keys)):
        params = dict(zip(keys, combo))
        try:
            value, err = _evaluate(name, params)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"{name}: {exc}")
        rows.append((params, value, err))
    return rows


def _fmt_params(params: dict) -> str:
    return " ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in params.items())


def cmd_eval(args, out) -> int:
    rows = _eval_rows(args)
    if args.csv:
        _write_manifest(out, args)
        out.write("formula,parameters,value,error_estimate\n")
        for params, value, err in rows:
            out.write(f"{args.formula},{_fmt_params(params)},{value!r},{'' if err is None else repr(err)}\n")
        return EXIT_OK
    for params, value, err in rows:
        line = f"{args.formula}({_fmt_params(params)}) = {value:.15g}"
        if err is not None:
            line += f"  (quadrature error ~ {err:.1e})"
        out.write(line + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# plotdata
# ---------------------------------------------------------------------------

PLOT_TARGETS = {
    # target: (default lo, default hi, default points, lower bound of the domain or None)
    "phi": (-1.0, 10.0, 111),
    "phi_prime": (-0.5, 0.5, 101),
    "delta_fn": (1.0, 10.0, 91),
    "h": (-3.0, 3.0, 121),
    "h_cond": (-3.0, 2.0, 101),
}


def cmd_plotdata(args, out) -> int:
    target = args.target
    lo = args.lo if args.lo is not None else PLOT_TARGETS[target][0]
    hi = args.hi if args.hi is not None else PLOT_TARGETS[target][1]
    points = args.points if args.points is not None else PLOT_TARGETS[target][2]
    if points < 2 or not hi > lo:
        raise UsageError("need --points >= 2 and --hi > --lo")
    if target in ("phi", "phi_prime") and lo <= -2:
        raise UsageError("phi is defined for m > -2")
    if target == "delta_fn" and lo < 1:
        raise UsageError("delta_fn is defined for C >= 1")
    grid = np.linspace(lo, hi, points)
    _write_manifest(out, args)
    if target == "h_cond":
        times = args.t if args.t else [1.0]
        if any(not t > 0 for t in times):
            raise UsageError("h_cond needs t > 0")
        out.write("y,t,h_cond\n")
        for t in times:
            for y in grid:
                out.write(f"{y!r},{t!r},{C.alpha_density_conditional(float(y), t)!r}\n")
        return EXIT_OK
    if args.t:
        raise UsageError("--t only applies to h_cond")
    fn = {"phi": C.phi, "phi_prime": C.phi_prime, "delta_fn": C.delta_fn, "h": C.alpha_density}[target]
    head = {"phi": "m", "phi_prime": "m", "delta_fn": "C", "h": "y"}[target]
    out.write(f"{head},{target}\n")
    for x in grid:
        out.write(f"{float(x)!r},{fn(float(x))!r}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _path_config(args):
    from .paths import PathConfig

    scheme = args.scheme.replace("-", "_")
    kw = dict(
        scheme=scheme,
        step=args.step,
        seed=args.seed,
        stream_id=args.stream_id,
        bridge_correction=not args.no_bridge_correction,
        exact_extrema=args.exact_extrema,
        moment_orders=tuple(args.orders),
        local_time_levels=tuple(args.levels or ()),
        local_time_bandwidth=args.bandwidth,
        local_time_method=args.lt_method,
        level=args.a,
        lower=args.b,
        horizon=args.horizon,
        ell=args.ell,
        mu=args.mu,
        t_ref=args.t_ref,
        max_time=args.max_time,
        endpoint=args.endpoint,
        endpoint_value=args.endpoint_value,
        meander_method=args.meander_method,
        excursion_method=args.excursion_method,
        grid=tuple(args.grid),
    )
    try:
        return PathConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc))


_FUNCTIONAL_ALIASES = {"inv-sqrt-T": "inv_sqrt_T", "inv_sqrt_t": "inv_sqrt_T"}


def cmd_simulate(args, out) -> int:
    from .paths import sample_paths, write_csv
    from .verify import estimate

    if args.n < 1:
        raise UsageError("--n must be >= 1")
    cfg = _path_config(args)
    batch = sample_paths(cfg, args.n, workers=args.workers)
    if args.functional:
        _write_manifest(out, args)
        out.write("functional,mean,std_error,n,excluded_fraction\n")
        keep = ~batch.excluded
        for name in args.functional:
            key = _FUNCTIONAL_ALIASES.get(name, name)
            try:
                values = batch.functional(key)[keep]
            except KeyError as exc:
                raise UsageError(str(exc).strip("'\""))
            if values.size < 2:
                raise UsageError("aggregate mode needs at least 2 kept paths")
            est = estimate(values, batch.excluded_fraction)
            out.write(f"{name},{est.mean!r},{est.std_error!r},{est.n},{est.excluded_fraction!r}\n")
        return EXIT_OK
    write_csv(batch, out, header_lines=_manifest_lines(args))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args, out) -> int:
    from .verify import SCENARIOS, Thresholds, format_table, run_scenario, suite_verdict
    from .verify.report import write_report_csv

    ids = list(SCENARIOS) if args.scenarios == ["all"] else args.scenarios
    unknown = [i for i in ids if i not in SCENARIOS]
    if unknown:
        raise UsageError(f"unknown scenario(s) {unknown}; known: {', '.join(SCENARIOS)} or all")
    if args.n is not None and args.n < 1000:
        raise UsageError("--n must be >= 1000")
    path_over = {}
    if args.step is not None:
        path_over["step"] = args.step
    scenario_over = {}
    if args.lam is not None:
        scenario_over["lambdas"] = tuple(args.lam)
    if scenario_over and not any(set(scenario_over) <= set(SCENARIOS[i].params) for i in ids):
        raise UsageError("--lambda only applies to S6")
    th = Thresholds(z_max=args.z_max, p_min=args.p_min)
    results = []
    for i in ids:
        over = dict(path_over)
        over.update({k: v for k, v in scenario_over.items() if k in SCENARIOS[i].params})
        try:
            results.append(run_scenario(i, args.n, over, seed=args.seed, workers=args.workers,
                                        thresholds=th))
        except ValueError as exc:
            raise UsageError(f"{i}: {exc}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            for line in _manifest_lines(args):
                fh.write(f"# {line}\n")
            write_report_csv(results, fh)
    out.write(format_table(results))
    verdict = suite_verdict(results)
    out.write(f"suite verdict: {verdict}\n")
    return EXIT_FAIL if verdict == "fail" else EXIT_OK


# ---------------------------------------------------------------------------
# parser, config files and manifests
# ---------------------------------------------------------------------------

def _add_common(p, *, seed=True, workers=False, output=True):
    p.add_argument("--config", metavar="FILE",
                   help="read defaults from FILE (key = value lines, or a previous output's manifest)")
    if seed:
        p.add_argument("--seed", type=int, default=None,
                       help=f"64-bit seed (default 0, or ${SEED_ENV})")
    if workers:
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads (default: available parallelism)")
    if output:
        p.add_argument("-o", "--output", metavar="FILE", help="write data to FILE instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hitlab", description="Brownian motion sampled at uniform time before T_1: "
                     "closed forms, simulation and verification.")
    parser.add_argument("--version", action="version", version=f"hitlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pe = sub.add_parser("eval", help="evaluate a closed form",
                        description="Evaluate a closed form.  Every parameter accepts a "
                        "comma-separated list; all combinations are evaluated.  Formulas: "
                        + ", ".join(f"{k} ({v[3]})" for k, v in FORMULAS.items()))
    pe.add_argument("formula", help="formula name")
    for p in _EVAL_PARAMS:
        if p == "side":
            pe.add_argument("--side", dest="p_side", type=lambda s: [x for x in s.split(",") if x],
                            default=None, help="plus or minus")
        else:
            pe.add_argument(f"--{p}", dest=f"p_{p}", type=_float_list, default=None,
                            help=f"parameter {p}")
    pe.add_argument("--csv", type=_bool, nargs="?", const=True, default=False,
                    help="machine-readable CSV rows")
    _add_common(pe, seed=False)

    pp = sub.add_parser("plotdata", help="emit figure data as CSV",
                        description="Tabulate a function on a uniform grid as CSV.")
    pp.add_argument("target", choices=sorted(PLOT_TARGETS))
    pp.add_argument("--lo", type=float, default=None, help="grid start (target-specific default)")
    pp.add_argument("--hi", type=float, default=None, help="grid end (target-specific default)")
    pp.add_argument("--points", type=int, default=None, help="number of grid points")
    pp.add_argument("--t", type=_float_list, default=None, help="conditioning times for h_cond (default 1)")
    _add_common(pp, seed=False)

    ps = sub.add_parser("simulate", help="simulate paths",
                        description="Simulate paths.  Without --functional, writes one CSV row per "
                        "path; with it, prints mean, standard error, n and excluded fraction.")
    ps.add_argument("scheme", help="single-barrier, two-barrier, fixed-horizon, inverse-local-time, "
                    "bessel3-fixed-horizon, bridge-fixed-horizon, meander, excursion, ray-knight-sde")
    ps.add_argument("--n", type=int, default=1000, help="number of paths")
    ps.add_argument("--step", type=float, default=1e-4, help="relative time step")
    ps.add_argument("--stream-id", type=int, default=0, help="first stream id")
    ps.add_argument("--functional", action="append", default=None,
                    help="aggregate this functional (repeatable): inv-sqrt-T, A1, A+(m), A-(m), "
                    "alpha, zeta, knight or a column name")
    ps.add_argument("--a", type=float, default=1.0, help="upper barrier")
    ps.add_argument("--b", type=float, default=1.0, help="lower barrier depth (two-barrier)")
    ps.add_argument("--horizon", type=float, default=1.0, help="horizon (fixed-horizon)")
    ps.add_argument("--ell", type=float, default=1.0, help="local-time level (inverse-local-time)")
    ps.add_argument("--mu", type=float, default=1.0, help="drift rate (ray-knight-sde)")
    ps.add_argument("--orders", type=_float_list, default=[1.0], help="moment orders m")
    ps.add_argument("--levels", type=_float_list, default=None, help="local-time levels")
    ps.add_argument("--lt-method", default="conditional",
                    choices=("conditional", "sampled", "occupation"), help="local-time estimator")
    ps.add_argument("--bandwidth", type=float, default=None,
                    help="occupation bandwidth (default step**0.4)")
    ps.add_argument("--no-bridge-correction", type=_bool, nargs="?", const=True, default=False,
                    help="disable the barrier bridge correction")
    ps.add_argument("--exact-extrema", type=_bool, nargs="?", const=True, default=False,
                    help="sample extrema inside each step")
    ps.add_argument("--t-ref", type=float, default=None, help="time floor of the relative step")
    ps.add_argument("--max-time", type=float, default=1e10, help="runaway abort time")
    ps.add_argument("--endpoint", default="chi3", choices=("chi3", "rayleigh", "half_normal", "fixed"),
                    help="Bessel-3 endpoint law")
    ps.add_argument("--endpoint-value", type=float, default=1.0, help="endpoint for --endpoint fixed")
    ps.add_argument("--meander-method", default="bessel_bridge", choices=("bessel_bridge", "last_zero"))
    ps.add_argument("--excursion-method", default="bessel_bridge", choices=("bessel_bridge", "vervaat"))
    ps.add_argument("--grid", type=_float_list, default=[0.25, 0.5, 1.0],
                    help="b-grid (ray-knight-sde)")
    _add_common(ps, workers=True)

    pv = sub.add_parser("verify", help="run verification scenarios",
                        description="Run scenarios and print a table; exit 0 if none fails, 1 otherwise.")
    pv.add_argument("scenarios", nargs="+", help="scenario ids (S1 ... S16, S8b) or all")
    pv.add_argument("--n", type=int, default=None, help="paths per batch (default: per scenario)")
    pv.add_argument("--step", type=float, default=None, help="override the step of every batch")
    pv.add_argument("--lambda", dest="lam", type=_float_list, default=None,
                    help="barrier ratios b/a for S6")
    pv.add_argument("--z-max", type=float, default=3.0, help="pass threshold for |z|")
    pv.add_argument("--p-min", type=float, default=1e-3, help="pass threshold for p-values")
    pv.add_argument("--csv", metavar="FILE", default=None, help="write the report CSV to FILE")
    _add_common(pv, workers=True, output=False)
    return parser


_INTERNAL = {"command", "config", "output", "formula", "target", "scheme", "scenarios"}


def _flag_name(dest: str) -> str:
    if dest.startswith("p_"):
        return dest[2:]
    return "lambda" if dest == "lam" else dest


def _resolved_options(args) -> dict:
    opts = {_flag_name(k): v for k, v in vars(args).items() if k not in _INTERNAL}
    return dict(sorted(opts.items()))


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return ",".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _manifest_lines(args) -> list[str]:
    positional = {"eval": "formula", "plotdata": "target", "simulate": "scheme", "verify": "scenarios"}
    pos = getattr(args, positional[args.command])
    pos = " ".join(pos) if isinstance(pos, list) else pos
    stamp = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    lines = [
        f"hitlab {__version__}",
        f"command: {args.command} {pos}",
        f"timestamp: {stamp}",
    ]
    if hasattr(args, "seed"):
        lines.append(f"seed: {args.seed}")
    for k, v in _resolved_options(args).items():
        if v is None:
            continue
        lines.append(f"config: {k.replace('_', '-')} = {_format_value(v)}")
    return lines


def _write_manifest(out, args):
    for line in _manifest_lines(args):
        out.write(f"# {line}\n")


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; a file written by this tool yields its manifest options."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    manifest = bool(lines) and lines[0].startswith("# hitlab")
    items = {}
    for no, raw in enumerate(lines, 1):
        line = raw.strip()
        if manifest:
            if not line.startswith("# config:"):
                continue
            line = line[len("# config:"):].strip()
        elif not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        items[key.replace("-", "_")] = value
    return items


def _apply_config(sub_parser, argv_args, cfg: dict):
    dests = {a.dest: a for a in sub_parser._actions}
    # long flag names map to destinations (e.g. lambda -> lam, no_bridge_correction)
    flag_to_dest = {}
    for a in sub_parser._actions:
        for opt in a.option_strings:
            if opt.startswith("--"):
                flag_to_dest[opt[2:].replace("-", "_")] = a.dest
    defaults = {}
    appended = {}
    for key, value in cfg.items():
        dest = flag_to_dest.get(key)
        if dest is None or dest in ("config", "output", "help", "version"):
            raise UsageError(f"unknown config key {key!r}")
        action = dests[dest]
        if value == "":
            defaults[dest] = None
            continue
        if isinstance(action, argparse._AppendAction):
            # kept aside: argparse would extend a list default instead of replacing it
            appended[dest] = [v for v in value.split(",") if v]
            continue
        conv = action.type or str
        try:
            defaults[dest] = conv(value)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}")
    sub_parser.set_defaults(**defaults)
    return appended


def _subparser(parser, name):
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[name]
    raise KeyError(name)


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = _subparser(parser, args.command)
        appended = _apply_config(sp, args, read_config(args.config))
        args = parser.parse_args(argv)
        for dest, values in appended.items():
            if getattr(args, dest) is None:
                setattr(args, dest, values)
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    if hasattr(args, "seed") and not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must fit in 64 unsigned bits")
    if getattr(args, "workers", None) is not None and args.workers < 1:
        raise UsageError("--workers must be >= 1")
    return args


_COMMANDS = {"eval": cmd_eval, "plotdata": cmd_plotdata, "simulate": cmd_simulate,
             "verify": cmd_verify}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = parse(sys.argv[1:] if argv is None else list(argv))
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    out = stdout
    fh = None
    try:
        if getattr(args, "output", None):
            fh = open(args.output, "w", newline="")
            out = fh
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        stderr.write(f"hitlab {args.command}: {exc}\n")
        return EXIT_USAGE
    except (Q.QuadratureError, ArithmeticError) as exc:
        stderr.write(f"hitlab {args.command}: numerical failure: {exc}\n")
        return EXIT_FAIL
    finally:
        if fh is not None:
            fh.close()


if __name__ == "__main__":
    sys.exit(main())
