"""Command-line driver: convergence tables, adaptive traces, mesh projection.

Subcommands:
  convergence   uniform-refinement error table (CSV + figure)
  adaptive      solve-estimate-mark-refine trace (CSV + figures)
  project-mesh  project a mesh file's vertices onto a surface
  info          package, surface and configuration reference
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import load_config
from .exceptions import SurfcrError
from .geometry import BUILTIN_SURFACES

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surfcr",
        description="Nonconforming finite elements with gradient recovery "
                    "on closed level-set surfaces")
    parser.add_argument("--version", action="version",
                        version=f"surfcr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="INI experiment file")
        p.add_argument("--out", default=None,
                       help="output directory (overrides [output] directory)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads (computation is deterministic "
                            "for any fixed value)")
        p.add_argument("--quiet", action="store_true",
                       help="suppress per-level progress lines")

    add_common(sub.add_parser("convergence",
                              help="uniform-refinement convergence table"))
    add_common(sub.add_parser("adaptive", help="adaptive refinement trace"))
    add_common(sub.add_parser("project-mesh",
                              help="project mesh vertices onto the surface"))
    sub.add_parser("info", help="show version, surfaces and config keys")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "info":
        return _info()
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        # lazy import so `info` works without the heavy stack
        from . import experiments
        if args.command == "convergence":
            experiments.run_convergence(cfg, out_dir=args.out,
                                        quiet=args.quiet)
        elif args.command == "adaptive":
            experiments.run_adaptive(cfg, out_dir=args.out, quiet=args.quiet)
        elif args.command == "project-mesh":
            experiments.project_mesh(cfg, out_dir=args.out, quiet=args.quiet)
    except (SurfcrError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _info() -> int:
    from .config import _SCHEMA
    print(f"surfcr {__version__}")
    print(f"built-in surfaces: {', '.join(sorted(BUILTIN_SURFACES))}")
    print("exact solutions: xy (any surface), spherical_singular (sphere), "
          "none (indicator-only)")
    print("\nconfiguration keys (INI sections, defaults shown):")
    for section, keys in _SCHEMA.items():
        print(f"  [{section}]")
        for key, (kind, default, allowed) in keys.items():
            choice = f" one of {sorted(allowed)}" if allowed else ""
            print(f"    {key} = {default}  ({kind}{choice})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
