"""Command-line harness: ``polysurf {params,surface,extremal-sweep,verify}``.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 numeric
divergence. CSV goes to ``--out`` or stdout; the scaling fit of a sweep is
printed on stderr so stdout stays a clean CSV.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import verify
from .experiments import (
    ExperimentConfig,
    extremal_sweep,
    params_csv,
    parse_config,
    parse_k_list,
    surface_rows,
    write_csv,
)
from .numerics import DivergenceError
from .polytope import PolytopeFormatError, parse
from .surface import SURFACE_HEADER

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_DIVERGENCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    p.add_argument("--family", help="gaussian, ball or power:<p> (comma list for params)")
    p.add_argument("--n", help="dimension (comma list for params)")
    p.add_argument("--k-list", dest="k_list", help="comma-separated ascending K values")
    p.add_argument("--trials", type=int)
    p.add_argument("--samples", type=int, help="samples per estimator")
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon", type=float, help="shell width override")
    p.add_argument("--c-range", dest="c_range", type=float)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--jobs", type=int, help="worker threads; output does not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polysurf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(sub.add_parser("params", help="measure parameters as CSV"))
    sp = sub.add_parser("surface", help="surface measure of a polytope file")
    sp.add_argument("polytope", help="file with one 'u_1 ... u_n r' line per halfspace")
    _common(sp)
    _common(sub.add_parser("extremal-sweep", help="random circumscribed polytopes across K"))
    vp = sub.add_parser("verify", help="run the invariant suite")
    _common(vp)
    vp.add_argument("--inject-bad-normal", action="store_true",
                    help="perturb one fixture normal off the unit sphere")
    return parser


def _config(args, single_n: bool = True) -> ExperimentConfig:
    base = ExperimentConfig()
    if args.config:
        base = parse_config(Path(args.config).read_text(encoding="ascii"), base)
    updates = {}
    for key in ("trials", "samples", "seed", "epsilon", "c_range", "out", "jobs"):
        if getattr(args, key) is not None:
            updates[key] = getattr(args, key)
    if args.family is not None and single_n:
        updates["family"] = args.family
    if args.n is not None and single_n:
        updates["n"] = int(args.n)
    if args.k_list is not None:
        updates["K_list"] = parse_k_list(args.k_list)
    return replace(base, **updates)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)


def cmd_params(args) -> int:
    cfg = _config(args, single_n=False)
    families = args.family.split(",") if args.family else [cfg.family]
    dims = [int(v) for v in args.n.split(",")] if args.n else [cfg.n]
    _emit(params_csv(families, dims), cfg.out)
    return EXIT_OK


def cmd_surface(args) -> int:
    cfg = _config(args)
    P = parse(Path(args.polytope).read_text(encoding="ascii"))
    _emit(write_csv(SURFACE_HEADER, surface_rows(cfg, P)), cfg.out)
    return EXIT_OK


def cmd_extremal_sweep(args) -> int:
    cfg = _config(args)
    result = extremal_sweep(cfg)
    _emit(result.csv(), cfg.out)
    f = result.fit
    print(f"fit: exponent={f.exponent:.6g} intercept={f.intercept:.6g} "
          f"residual={f.residual:.6g} points={f.points}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    checks = verify.run_all(seed=cfg.seed, c_range=cfg.c_range,
                            inject_bad_normal=args.inject_bad_normal)
    _emit(verify.report(checks), cfg.out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


COMMANDS = {"params": cmd_params, "surface": cmd_surface,
            "extremal-sweep": cmd_extremal_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"polysurf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"polysurf: numeric divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ValueError, PolytopeFormatError, OSError) as exc:
        print(f"polysurf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
