"""Command line entry point.

    anisouq run --example 1 --max-level 3 --ref-level 4 --ref-samples 1000 --out study.csv
    anisouq regularity --example 2

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import sys
from pathlib import Path

from .fem import SolverError
from .study import ConfigError, StudyConfig, emit_plotdata, read_config_file, run_study, write_report


def _parser():
    parser = argparse.ArgumentParser(prog="anisouq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="QMC / MLQMC convergence study")
    run.add_argument("--example", type=int, choices=(1, 2), default=1)
    run.add_argument("--a", type=float, default=0.12, help="perpendicular diffusion strength")
    run.add_argument("--max-level", type=int, default=3)
    run.add_argument("--ref-level", type=int, default=4)
    run.add_argument("--ref-samples", type=int, default=1000)
    run.add_argument("--delta", type=float, default=0.2)
    run.add_argument("--base-samples", type=int, default=10)
    run.add_argument("--cg-tol", type=float, default=1e-10)
    run.add_argument("--kl-tol", type=float, default=1e-4, dest="kl_tol_base")
    run.add_argument("--moment", choices=("1", "2", "both"), default="both")
    run.add_argument("--nl-variant", choices=("plain", "log-boosted"), default="plain")
    run.add_argument("--out", default="study.csv")
    run.add_argument("--plot-dir", default=None, help="also write one CSV per figure panel here")
    run.add_argument("--timing", action="store_true", help="add a wall_time_s column")
    run.add_argument("--config", default=None, help="key = value file; its entries override flags")

    reg = sub.add_parser("regularity", help="bound-constant ledger and derivative checks")
    reg.add_argument("--example", type=int, choices=(1, 2), default=1)
    reg.add_argument("--level", type=int, default=0)
    reg.add_argument("--modes", type=int, default=3)
    return parser


def _config_from_args(args) -> StudyConfig:
    cfg = StudyConfig(
        example_id=args.example,
        a=args.a,
        max_level=args.max_level,
        ref_level=args.ref_level,
        ref_samples=args.ref_samples,
        delta=args.delta,
        base_samples=args.base_samples,
        cg_tol=args.cg_tol,
        kl_tol_base=args.kl_tol_base,
        output_path=args.out,
        moment=args.moment,
        nl_variant=args.nl_variant,
        timing=args.timing,
    )
    if args.config:
        cfg = dataclasses.replace(cfg, **read_config_file(args.config))
    cfg.validate()
    return cfg


def _run(args) -> int:
    try:
        cfg = _config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_study(cfg)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    path = write_report(report, cfg.output_path)
    if args.plot_dir:
        emit_plotdata(report, args.plot_dir, stem=Path(cfg.output_path).stem)
    print(path.read_text(), end="")
    for row in report.rows:
        if row["status"] != "ok":
            print(f"solver failure on level {row['level']}: {row.get('error', '')}", file=sys.stderr)
    return 3 if report.failed else 0


def _regularity(args) -> int:
    from .coefficient import CoefficientParams
    from .covkl import build_expansion, example_model
    from .mesh import build_hierarchy
    from .regularity import bound_constants, combinatorial_checks, fd_derivative_check, format_fd_report, gamma_sequence

    meshes = build_hierarchy(args.level)
    kl = build_expansion(example_model(args.example), meshes[-1])
    p = CoefficientParams()
    ds = gamma_sequence(kl, 0)
    consts = bound_constants(0, p.a_lower, p.a_upper, ds)
    m = min(args.modes, kl.rank)
    checks = []
    for alpha in itertools.product(range(3), repeat=m):
        if sum(alpha) <= 2:
            checks.append(fd_derivative_check(kl, p, alpha, constants=consts))
    print(f"example {args.example}, level {args.level}, M = {kl.rank}, c_gamma = {ds.c_gamma:.6g}")
    print(f"k_A = {consts.k_A:.6g}, c_A = {consts.c_A:.6g}")
    print(format_fd_report(checks))
    print(combinatorial_checks(6))
    return 0 if all(c.passed for c in checks) else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    return _regularity(args)


if __name__ == "__main__":
    sys.exit(main())
