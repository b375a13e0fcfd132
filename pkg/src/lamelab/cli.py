"""Command-line client.

Thin wrapper over :mod:`lamelab.runner`: parses arguments and a plain-text
config file, applies overrides, and delegates.  Exit codes: 0 success,
1 failed check, 2 usage/configuration error.

Set ``LAMELAB_MAX_THREADS`` to cap BLAS/OpenMP thread counts; it must be
applied before the numeric libraries are first imported, which is why the
heavy imports below happen inside ``main``.
"""

from __future__ import annotations

import argparse
import os
import sys


def _apply_thread_cap() -> None:
    cap = os.environ.get("LAMELAB_MAX_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lamelab",
        description="Coupled heat / thin-shell / bulk-elastic finite-element laboratory.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="plain-text key = value config file")
        p.add_argument("--out", help="output directory (default: config outdir)")
        p.add_argument("--seed", type=int, help="override the RNG seed")
        p.add_argument("--n", type=int, help="override the grid resolution")

    p_mesh = sub.add_parser("mesh", help="build and export the tagged mesh")
    common(p_mesh)
    p_mesh.add_argument("--inner", help="inner box bounds as 'a,b'")

    for name, help_text in (
        ("simulate", "time-domain run with energy accounting"),
        ("resolvent-sweep", "sqrt(alpha)-weighted resolvent norms over the alpha ladder"),
        ("spectrum", "clamped-solid generalized eigenvalues"),
        ("verify", "run every invariant suite; exit 0 only if all pass"),
    ):
        common(sub.add_parser(name, help=help_text))
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0

    from .config import RunConfig, parse_config, with_overrides
    from .errors import LamelabError, ParseError, ValidationError
    from .runner import run

    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = RunConfig()
        overrides = {"seed": args.seed, "n": args.n}
        if getattr(args, "inner", None):
            lo, _, hi = args.inner.partition(",")
            overrides["inner_lo"] = float(lo)
            overrides["inner_hi"] = float(hi)
        cfg = with_overrides(cfg, **overrides)
    except (ParseError, ValidationError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except LamelabError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    return run(args.subcommand, cfg, outdir=args.out)


if __name__ == "__main__":
    sys.exit(main())
