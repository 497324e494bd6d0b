"""Command-line front end: ``robust-amp <command> [options]``.

Commands: generate, amp, potential, de, phase, reproduce.  Every command also
accepts ``--config FILE`` with ``key = value`` lines (``#`` comments); flags on
the command line win over the file.  Output CSVs start with ``#`` comment
lines echoing the version, the resolved configuration and the seed.

Exit codes: 0 success, 2 bad arguments, 3 numerical failure, 4 I/O failure.
Errors go to stderr as ``error[<kind>]: <message>``.
"""
import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .amp import AmpConfig, VarianceRule, amp_run
from .errors import (DivergenceError, DomainError, InstanceFormatError, MemoryBudgetError,
                     NumericalError, RobustAmpError)
from .instance import NoiseModel, generate, load_instance, save_instance
from .phase import AXES, sweep_phase_diagram
from .prior import SignalPrior
from .replica import ReplicaParams, scan_potential
from .report import header_lines, render_csv, write_csv
from .state_evolution import de_run

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

# output locations are not part of the experiment and stay out of the echo
_NOT_ECHOED = {"command", "config", "func", "verbose", "out", "estimate", "lines_out",
               "out_dir", "instance_out", "workers", "plot"}

log = logging.getLogger("robust_amp")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error[usage]: {message}\n")
        sys.exit(EXIT_USAGE)


def _count(text):
    """Positive integer that may be written as ``1e4``."""
    value = float(text)
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(value)


def _nonneg_int(text):
    value = float(text)
    if value != int(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(value)


def _flag(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def parse_grid(text):
    """``axis:start:stop:count[,axis:start:stop:count]`` -> list of (axis, values)."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        fields = part.split(":")
        if len(fields) != 4:
            raise argparse.ArgumentTypeError(f"grid entry {part!r} is not axis:start:stop:count")
        axis, start, stop, count = fields
        if axis not in AXES:
            raise argparse.ArgumentTypeError(f"unknown axis {axis!r}; expected one of {AXES}")
        try:
            values = np.linspace(float(start), float(stop), _count(count))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"grid entry {part!r}: {exc}") from None
        out.append((axis, values))
    if len(out) != 2:
        raise argparse.ArgumentTypeError("grid needs exactly two axes: column,sweep")
    return out


def parse_fix(text):
    """``delta=1e-4,eta=1e-6`` -> dict."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in AXES:
            raise argparse.ArgumentTypeError(f"bad --fix entry {part!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad number in --fix entry {part!r}") from None
    return out


def read_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _model_args(p, n=True, seed=True):
    if n:
        p.add_argument("--n", type=_count, default=10_000, help="signal length N")
    p.add_argument("--alpha", type=float, default=0.5, help="measurement rate M/N")
    p.add_argument("--rho", type=float, default=0.1, help="signal density")
    p.add_argument("--delta", type=float, default=1e-10, help="measurement noise variance")
    p.add_argument("--eta", type=float, default=1e-4, help="matrix uncertainty")
    if seed:
        p.add_argument("--seed", type=_nonneg_int, default=0)


def _out_arg(p, help="output CSV (default: stdout)"):
    p.add_argument("--out", "-o", default=None, help=help)


def build_parser():
    parser = _Parser(prog="robust-amp", description="Robust AMP, replica potential, "
                     "density evolution and phase diagrams for sparse recovery.")
    parser.add_argument("--version", action="version", version=f"robust-amp {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", default=None, help="key = value file; flags override it")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="draw an instance file")
    _model_args(p)
    p.add_argument("--out", "-o", required=False, default=None, help="instance file")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("amp", parents=[common], help="run robust AMP on one instance")
    _model_args(p)
    p.add_argument("--instance", default=None, help="load this instance file instead of drawing")
    p.add_argument("--variance-rule", choices=[r.value for r in VarianceRule],
                   default=VarianceRule.ROBUST.value)
    p.add_argument("--max-iters", type=_count, default=1000)
    p.add_argument("--tol", type=float, default=1e-12, help="stop when mean (a - a_prev)^2 < tol")
    p.add_argument("--damping", type=float, default=0.0)
    _out_arg(p, "trajectory CSV (default: stdout)")
    p.add_argument("--estimate", default=None,
                   help="final estimate CSV (default: <out stem>.estimate.csv when --out is set)")
    p.set_defaults(func=cmd_amp)

    p = sub.add_parser("potential", parents=[common], help="scan the replica potential")
    _model_args(p, n=False, seed=False)
    p.add_argument("--n-points", type=_count, default=256)
    p.add_argument("--e-min", type=float, default=None)
    p.add_argument("--e-max", type=float, default=None)
    _out_arg(p)
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("de", parents=[common], help="iterate density evolution")
    _model_args(p, n=False, seed=False)
    p.add_argument("--max-iters", type=_count, default=500)
    p.add_argument("--tol", type=float, default=1e-10, help="relative change stopping rule")
    _out_arg(p)
    p.set_defaults(func=cmd_de)

    p = sub.add_parser("phase", parents=[common], help="classify a grid and locate transitions")
    p.add_argument("--grid", type=parse_grid,
                   default=parse_grid("alpha:0.05:1:20,rho_over_alpha:0.05:1:20"),
                   help="column_axis:start:stop:count,sweep_axis:start:stop:count")
    p.add_argument("--fix", type=parse_fix, default={"delta": 1e-4, "eta": 1e-6},
                   help="remaining parameters, e.g. delta=1e-4,eta=1e-6")
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--workers", type=_count, default=None, help="default: $AMPU_THREADS or 1")
    _out_arg(p, "classification CSV (default: stdout)")
    p.add_argument("--lines-out", default=None,
                   help="transition-line CSV (default: <out stem>.lines.csv, or appended to stdout)")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("reproduce", parents=[common], help="figure presets")
    p.add_argument("figure", choices=["fig1", "fig2", "fig3", "fig4"])
    p.add_argument("--scale", choices=["desk", "full"], default="desk")
    p.add_argument("--out-dir", default=None, help="default: ./<figure>")
    p.add_argument("--plot", type=_flag, nargs="?", const=True, default=False,
                   help="also render a PNG with matplotlib")
    p.add_argument("--workers", type=_count, default=None)
    p.set_defaults(func=cmd_reproduce)
    return parser, sub


def _apply_config(parser, subparsers, argv, args):
    """Re-parse with the config file's values installed as defaults."""
    sp = subparsers.choices[args.command]
    values = read_config_file(args.config)
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, text in values.items():
        action = actions.get(key)
        if action is None or key in ("config", "help", "command"):
            raise DomainError(f"{args.config}: unknown key {key!r} for '{args.command}'")
        if isinstance(action, argparse._StoreTrueAction):
            value = _flag(text)
        elif action.type is not None:
            try:
                value = action.type(text)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise DomainError(f"{args.config}: {key}: {exc}") from None
        else:
            value = text
        if action.choices is not None and value not in action.choices:
            raise DomainError(f"{args.config}: {key} must be one of {list(action.choices)}")
        defaults[key] = value
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def resolved_config(args):
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in _NOT_ECHOED or value is None:
            continue
        if key == "grid":
            value = ",".join(f"{ax}:{v[0]!r}:{v[-1]!r}:{len(v)}" for ax, v in value)
        elif key == "fix":
            value = ",".join(f"{k}={v!r}" for k, v in sorted(value.items()))
        elif isinstance(value, float):
            value = repr(value)
        out[key] = value
    return out


def _emit(path, rows, comments, trailer=()):
    if path is None:
        sys.stdout.write(render_csv(rows, comments, trailer))
    else:
        write_csv(path, rows, comments, trailer)


def _stem(path):
    return os.path.splitext(path)[0]


def _replica_params(args):
    return ReplicaParams(args.alpha, args.rho, args.delta, args.eta)


def cmd_generate(args):
    if args.out is None:
        raise DomainError("generate needs --out")
    inst = generate(args.n, args.alpha, SignalPrior(args.rho), NoiseModel(args.delta, args.eta),
                    args.seed)
    save_instance(inst, args.out)
    log.info("wrote %s (M=%d, N=%d)", args.out, inst.m, inst.n)
    return EXIT_OK


def cmd_amp(args):
    if args.instance:
        inst = load_instance(args.instance)
        # the file is authoritative for the model parameters
        args.n, args.alpha = inst.n, inst.alpha
        args.delta, args.eta, args.seed = inst.noise.delta, inst.noise.eta, inst.seed
        args.rho = inst.rho
    else:
        inst = generate(args.n, args.alpha, SignalPrior(args.rho),
                        NoiseModel(args.delta, args.eta), args.seed, keep_f0=False)
    cfg = AmpConfig(variance_rule=args.variance_rule, max_iters=args.max_iters, tol=args.tol,
                    damping=args.damping)
    report = amp_run(inst, SignalPrior(args.rho), cfg, truth=inst.s)
    comments = header_lines("amp", resolved_config(args), [f"m: {inst.m}"])
    trailer = [f"converged: {report.converged}", f"iterations: {report.iterations}",
               f"final_mse: {report.final_mse!r}"]
    _emit(args.out, report.to_csv_rows(), comments, trailer)

    estimate = args.estimate or (f"{_stem(args.out)}.estimate.csv" if args.out else None)
    if estimate:
        rows = [("i", "a", "v", "s")]
        rows += [(str(i), repr(float(a)), repr(float(v)), repr(float(s)))
                 for i, (a, v, s) in enumerate(zip(report.final_estimate,
                                                   report.final_variance, inst.s))]
        write_csv(estimate, rows, comments)
    if not report.converged:
        sys.stderr.write(f"warning[not-converged]: stopped after {report.iterations} "
                         f"iterations, last mean square change {report.delta_a_per_iter[-1]:.3g}\n")
    log.info("final MSE %.4g after %d iterations", report.final_mse, report.iterations)
    return EXIT_OK


def cmd_potential(args):
    from .figures import potential_trailer

    curve = scan_potential(_replica_params(args), n_points=args.n_points, e_min=args.e_min,
                           e_max=args.e_max)
    _emit(args.out, curve.to_csv_rows(), header_lines("potential", resolved_config(args)),
          potential_trailer(curve))
    return EXIT_OK


def cmd_de(args):
    traj = de_run(_replica_params(args), max_iters=args.max_iters, tol=args.tol)
    trailer = [f"converged: {traj.converged}", f"oscillating: {traj.oscillating}",
               f"fixed_point: {traj.fixed_point!r}"]
    _emit(args.out, traj.to_csv_rows(), header_lines("de", resolved_config(args)), trailer)
    return EXIT_OK


def cmd_phase(args):
    (col_axis, col_values), (sweep_axis, sweep_values) = args.grid
    if col_axis == sweep_axis:
        raise DomainError("grid axes must differ")
    missing = {"alpha", "rho", "delta", "eta"} - set(args.fix) - {col_axis, sweep_axis}
    if "rho_over_alpha" in (col_axis, sweep_axis):
        missing.discard("rho")
    if missing:
        raise DomainError(f"--fix must set {sorted(missing)}")
    diagram = sweep_phase_diagram(col_axis, col_values, sweep_axis, sweep_values, args.fix,
                                  resolution=args.resolution, workers=args.workers)
    comments = header_lines("phase", resolved_config(args))
    failed = [p for p in diagram.points if p.cls is None]
    trailer = [f"failed point {p.params}: {p.error}" for p in failed]
    _emit(args.out, diagram.phase_csv_rows(), comments, trailer)
    lines_out = args.lines_out or (f"{_stem(args.out)}.lines.csv" if args.out else None)
    _emit(lines_out, diagram.line_csv_rows(), comments if lines_out else ["transition lines"])
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_reproduce(args):
    from .figures import reproduce

    out_dir = args.out_dir or args.figure
    manifest = reproduce(args.figure, args.scale, out_dir, plot=args.plot, workers=args.workers)
    failed = [r["name"] for r in manifest["runs"] if r["status"] != "ok"]
    print(f"{args.figure}: {len(manifest['runs'])} runs, {len(failed)} failed, "
          f"{manifest['total_seconds']:.1f}s -> {os.path.join(out_dir, 'manifest.json')}")
    return EXIT_NUMERICAL if failed else EXIT_OK


def _fail(kind, exc, code):
    sys.stderr.write(f"error[{kind}]: {exc}\n")
    return code


def main(argv=None):
    parser, subparsers = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.config:
            args = _apply_config(parser, subparsers, argv, args)
        return args.func(args)
    except InstanceFormatError as exc:
        return _fail("format", exc, EXIT_IO)
    except DivergenceError as exc:
        return _fail("divergence", exc, EXIT_NUMERICAL)
    except NumericalError as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL)
    except MemoryBudgetError as exc:
        return _fail("memory", exc, EXIT_USAGE)
    except (DomainError, ValueError) as exc:
        return _fail("domain", exc, EXIT_USAGE)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    except RobustAmpError as exc:
        return _fail("error", exc, EXIT_NUMERICAL)


if __name__ == "__main__":
    sys.exit(main())
