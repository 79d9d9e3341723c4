"""Command-line entry point: ``tricode {run,phase-diagram,fss,bootstrap,trace}``.

Exit codes: 0 success, 2 configuration error, 3 analysis error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from tricode.errors import AnalysisError, ConfigError, RegionGeometryError
from tricode.experiment import ExperimentSpec, cmd_fss, cmd_phase_diagram, cmd_run, cmd_trace

EXIT_CONFIG = 2
EXIT_ANALYSIS = 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _zeta(text: str):
    if text == "free":
        return "free"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--zeta takes 'free' or a number") from None


def _init(text: str) -> tuple[float, float, float]:
    parts = [float(t) for t in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--init takes p_c,nu,zeta")
    return tuple(parts)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tricode", description="Measurement-only toric-code circuit on a triangular lattice.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def sim(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, type=Path, help="experiment spec (JSON)")
        s.add_argument("--out", type=Path, help="results directory (overrides the experiment file)")
        s.add_argument("--seed", type=_u64, help="master seed (overrides the experiment file)")
        s.add_argument("--traj", type=int, help="trajectories per cell (overrides the experiment file)")
        return s

    s = sim("run", "sweep a line of the phase diagram")
    s.add_argument("--workers", type=int)
    s = sim("phase-diagram", "sweep the probability simplex")
    s.add_argument("--workers", type=int)
    s.add_argument("--resolution", type=int, help="grid divisions per axis (>= 5)")
    s = sim("trace", "observables versus measurement count at one point")
    s.add_argument("--steps", type=int, help="total measurement steps (default: burn-in plus recording)")

    for name, help_ in (("fss", "finite-size-scaling collapse"), ("bootstrap", "collapse with bootstrap errors")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--input", required=True, type=Path, help="results directory or aggregate CSV")
        s.add_argument("--observable", required=True)
        s.add_argument("--zeta", type=_zeta, help="'free' or a fixed value")
        s.add_argument("--init", type=_init, help="starting p_c,nu,zeta")
        s.add_argument("--size", choices=("region", "lattice"), help="size variable for the collapse")
        s.add_argument("--out", type=Path)
        s.add_argument("--seed", type=_u64, default=0)
        s.add_argument("--n-boot", type=int, default=0 if name == "fss" else 1000)
    return p


def _spec(args) -> ExperimentSpec:
    spec = ExperimentSpec.load(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.traj is not None:
        over["trajectory_count"] = args.traj
    if getattr(args, "resolution", None) is not None:
        over["resolution"] = args.resolution
    if over:
        d = spec.physics_dict() | over | {"out": spec.out, "workers": spec.workers}
        spec = ExperimentSpec.from_dict(d)
    return spec


def _dispatch(args) -> int:
    if args.command in ("run", "phase-diagram", "trace"):
        spec = _spec(args)
        if args.command == "run":
            path = cmd_run(spec, args.out, args.workers)
        elif args.command == "phase-diagram":
            path = cmd_phase_diagram(spec, args.out, args.workers)
        else:
            path = cmd_trace(spec, args.out, args.steps)
        print(path)
        return 0
    if args.command == "bootstrap" and args.n_boot < 1:
        raise ConfigError("--n-boot must be >= 1")
    report = cmd_fss(
        args.input,
        args.observable,
        args.zeta,
        args.init,
        args.out,
        size_mode=args.size,
        n_boot=args.n_boot,
        seed=args.seed,
        require_trajectories=args.command == "bootstrap",
    )
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (ConfigError, RegionGeometryError, FileNotFoundError) as exc:
        print(f"tricode: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AnalysisError, ValueError) as exc:
        print(f"tricode: analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
