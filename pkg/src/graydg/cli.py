"""Command line interface: run, convergence, validate-config,
list-benchmarks.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

import argparse
import os
import sys

from .config import config_hash, spec_from_text, spec_to_text
from .driver import default_outdir, run_to_files, simulate
from .errors import ConfigurationError, InvalidParameterError, SolverFailure
from .harness import format_convergence_table, self_convergence
from .picard import PicardConfig
from .problems import BENCHMARKS, override_spec


def _load_spec(args):
    if os.path.exists(args.benchmark):
        with open(args.benchmark) as f:
            spec = spec_from_text(f.read())
    elif args.benchmark in BENCHMARKS:
        spec = BENCHMARKS[args.benchmark]()
    else:
        raise ConfigurationError(
            "unknown benchmark or missing config file: %r (try "
            "list-benchmarks)" % args.benchmark)
    return _apply_overrides(spec, args)


def _apply_overrides(spec, args):
    over = {}
    if getattr(args, "cells", None):
        over["cells"] = args.cells
    if getattr(args, "mesh", None):
        parts = args.mesh.lower().split("x")
        over["cells"] = tuple(int(p) for p in parts)
    for name in ("k", "eps", "sigma0", "cfl", "flux", "tableau",
                 "final_time", "probe_stride"):
        v = getattr(args, name, None)
        if v is not None:
            over[name] = v
    if getattr(args, "limiter", None) is not None:
        over["limiter"] = args.limiter == "on"
    if getattr(args, "snapshots", None):
        over["snapshot_times"] = tuple(
            float(t) for t in args.snapshots.split(","))
    return override_spec(spec, **over)


def _add_run_options(p):
    p.add_argument("benchmark", help="benchmark name or config file path")
    p.add_argument("--N", dest="cells", type=int,
                   help="cells per axis (square in 2D)")
    p.add_argument("--mesh", help="2D cell counts, e.g. 56x32")
    p.add_argument("--k", type=int, help="nodal points per axis (2..4)")
    p.add_argument("--eps", type=float, help="Knudsen number")
    p.add_argument("--sigma0", type=float, help="reference opacity")
    p.add_argument("--cfl", type=float, help="dt = cfl * h")
    p.add_argument("--flux", choices=["alternating-left-right",
                                      "alternating-right-left", "central"])
    p.add_argument("--tableau", choices=["imex1", "ars443"])
    p.add_argument("--limiter", choices=["on", "off"])
    p.add_argument("--snapshots", help="comma-separated snapshot times")
    p.add_argument("--tfinal", dest="final_time", type=float)
    p.add_argument("--probe-stride", dest="probe_stride", type=int)
    p.add_argument("--outdir", default=None,
                   help="output directory (default $GRAYDG_OUTDIR or runs/)")
    p.add_argument("--threads", type=int, default=1,
                   help="recorded in the manifest; execution is serial")
    p.add_argument("--seed", type=int, default=None,
                   help="recorded for property-test tooling")
    p.add_argument("--delta", type=float, default=None,
                   help="Picard stop tolerance override")
    p.add_argument("--legacy-grid", action="store_true",
                   help="also write structured-grid text dumps")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="graydg",
        description="Asymptotic-preserving DG-IMEX gray radiative "
                    "transfer solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a benchmark to final time")
    _add_run_options(p_run)

    p_conv = sub.add_parser("convergence",
                            help="self-convergence resolution ladder")
    _add_run_options(p_conv)
    p_conv.add_argument("--resolutions", default="20,40,80",
                        help="comma-separated doubling cell counts")

    p_val = sub.add_parser("validate-config",
                           help="parse and echo a configuration")
    p_val.add_argument("benchmark")

    sub.add_parser("list-benchmarks", help="list built-in benchmarks")

    args = parser.parse_args(argv)

    try:
        if args.command == "list-benchmarks":
            for name, factory in sorted(BENCHMARKS.items()):
                print("%-12s %s" % (name, factory().description))
            return 0
        if args.command == "validate-config":
            if os.path.exists(args.benchmark):
                with open(args.benchmark) as f:
                    spec = spec_from_text(f.read())
            elif args.benchmark in BENCHMARKS:
                spec = BENCHMARKS[args.benchmark]()
            else:
                raise ConfigurationError("unknown benchmark %r"
                                         % args.benchmark)
            sys.stdout.write(spec_to_text(spec))
            print("# config hash: %s" % config_hash(spec))
            return 0
        if args.command == "run":
            spec = _load_spec(args)
            cfg = PicardConfig(delta=args.delta) if args.delta \
                else PicardConfig()
            code, rundir = run_to_files(
                spec, outdir=args.outdir, picard_cfg=cfg,
                threads=args.threads, seed=args.seed,
                legacy_grid=args.legacy_grid)
            print("run directory: %s" % rundir)
            return code
        if args.command == "convergence":
            spec = _load_spec(args)
            resolutions = [int(r) for r in args.resolutions.split(",")]
            cfg = PicardConfig(delta=args.delta) if args.delta \
                else PicardConfig()

            def runner(s, n):
                return simulate(override_spec(s, cells=n), picard_cfg=cfg)

            reports = [self_convergence(runner, spec, resolutions, var)
                       for var in ("T", "rho")]
            table = format_convergence_table(
                reports, title="self-convergence: %s" % spec.name)
            sys.stdout.write(table)
            outdir = args.outdir or default_outdir()
            os.makedirs(outdir, exist_ok=True)
            base = os.path.join(outdir, "convergence-%s-%s"
                                % (spec.name, config_hash(spec)))
            with open(base + ".txt", "w") as f:
                f.write(table)
            with open(base + ".csv", "w") as f:
                f.write("variable,N,l1,l1_order,linf,linf_order\n")
                for rep in reports:
                    for n, e1, o1, ei, oi in rep.rows():
                        f.write("%s,%d,%.17g,%s,%.17g,%s\n"
                                % (rep.variable, n, e1,
                                   "" if o1 is None else "%.17g" % o1,
                                   ei, "" if oi is None else "%.17g" % oi))
            print("wrote %s.{txt,csv}" % base)
            return 0
    except (ConfigurationError, InvalidParameterError) as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
