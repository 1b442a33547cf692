"""Command-line front end: ``qcavqe <command> [options]``.

Exit status: 0 on success, 2 on invalid input, 3 when at least one VQE run
did not converge (results are still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from . import experiments as ex
from .electrostatics import interaction_table
from .foundation import GridPosition, LayoutError, PhysicalConstants, QcaError
from .statevector import NoiseModel, SizeError
from .vqe import EstimatorMode

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNCONVERGED = 3

log = logging.getLogger("qcavqe")


class UsageError(Exception):
    pass


def parse_pdrv(text: str) -> list[float]:
    """``V`` for a single value or ``LO:HI:STEPS`` for a uniform sweep."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            values = [float(parts[0])]
        elif len(parts) == 3:
            values = ex.sweep(float(parts[0]), float(parts[1]), int(parts[2]))
        else:
            raise ValueError
    except ValueError:
        raise UsageError(f"--pdrv expects V or LO:HI:STEPS, got {text!r}") from None
    if any(not -1.0 <= v <= 1.0 for v in values):
        raise UsageError(f"driver polarizations must lie in [-1, 1], got {text!r}")
    return values


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser, pdrv_default: str | None) -> None:
    p.add_argument("--pdrv", default=pdrv_default,
                   help="driver polarization V or sweep LO:HI:STEPS (default: %(default)s)")
    p.add_argument("--mode", choices=[m.value for m in EstimatorMode], default="exact",
                   help="energy estimator (default: %(default)s)")
    p.add_argument("--shots", type=int, default=4096, help="shots per measured basis (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="base seed (default: %(default)s)")
    p.add_argument("--scale", type=float, choices=[1.0, 0.5], default=1.0,
                   help="driver bias scale (default: %(default)s)")
    p.add_argument("--oracle", action="store_true", help="also solve for the exact ground state")
    p.add_argument("--restarts", type=int, default=1, help="optimizer starts per run (default: %(default)s)")
    p.add_argument("--max-iter", type=int, default=500, help="energy evaluations per start (default: %(default)s)")
    p.add_argument("--p1", type=float, default=0.001, help="noisy mode: 1-qubit gate error (default: %(default)s)")
    p.add_argument("--p2", type=float, default=0.01, help="noisy mode: 2-qubit gate error (default: %(default)s)")
    p.add_argument("--p-readout", type=float, default=0.02,
                   help="noisy mode: readout flip probability (default: %(default)s)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default: %(default)s)")
    p.add_argument("--out", metavar="FILE.csv", help="write records as CSV (default: stdout)")
    p.add_argument("--json", metavar="FILE.json", help="write records plus run metadata as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcavqe", description="VQE simulation of QCA circuits.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wire", help="binary wire driven by one input cell")
    p.add_argument("--n", type=int, default=7, help="device cells (default: %(default)s)")
    p.add_argument("--ry", type=_int_list, default=None,
                   help="cells carrying a rotation, e.g. 0,5,10 (default: 0 for n<=7, else every 5th)")
    _add_common(p, "1")

    p = sub.add_parser("inverter", help="inverter truth table, or a driver sweep with --pdrv")
    _add_common(p, None)

    p = sub.add_parser("majority", help="majority-gate truth table")
    p.add_argument("--variant", choices=["majority6", "majority2"], default="majority6")
    _add_common(p, None)

    p = sub.add_parser("response", help="cell polarization versus driver polarization")
    p.add_argument("--n", type=int, default=1, help="device cells (default: %(default)s)")
    _add_common(p, f"-1:1:{ex.DEFAULT_SWEEP_POINTS}")

    p = sub.add_parser("shots-study", help="sampled-VQE RMSE against the exact ground state per shot budget")
    p.add_argument("--shot-list", type=_int_list, default=list(ex.DEFAULT_SHOT_LIST),
                   help="comma-separated shot budgets (default: 1024,4096,16384,65536)")
    p.add_argument("--repeats", type=int, default=10, help="seeds per budget (default: %(default)s)")
    p.add_argument("--points", type=int, default=ex.DEFAULT_SHOTS_STUDY_POINTS,
                   help="sweep points over [-1, 1] (default: %(default)s)")
    _add_common(p, None)
    p.set_defaults(mode="sampled")

    p = sub.add_parser("params-study", help="optimizer iterations versus parameter count")
    p.add_argument("--max-params", type=int, default=8, help="largest wire size k (default: %(default)s)")
    p.add_argument("--repeats", type=int, default=10, help="seeds per k (default: %(default)s)")
    p.add_argument("--jitter", type=float, default=0.3,
                   help="uniform perturbation of the starting angles (default: %(default)s)")
    _add_common(p, "1")

    p = sub.add_parser("interaction", help="point-charge interaction energies for one cell offset")
    p.add_argument("--dx", type=int, default=2, help="x offset in units of a (default: %(default)s)")
    p.add_argument("--dy", type=int, default=0, help="y offset in units of a (default: %(default)s)")
    p.add_argument("--bare", action="store_true", help="omit the neutralizing background charge")
    p.add_argument("--out", metavar="FILE.csv")
    return parser


def _settings(args: argparse.Namespace) -> ex.RunSettings:
    if args.shots < 1:
        raise UsageError("--shots must be positive")
    if args.workers < 1 or args.restarts < 1 or args.max_iter < 1:
        raise UsageError("--workers, --restarts and --max-iter must be positive")
    mode = EstimatorMode(args.mode)
    noise = None
    if mode is EstimatorMode.NOISY:
        noise = NoiseModel(p1=args.p1, p2=args.p2, p_readout=args.p_readout, seed=args.seed)
    return ex.RunSettings(mode=mode, shots=args.shots, seed=args.seed, scale=args.scale,
                          oracle=args.oracle, workers=args.workers, noise=noise,
                          restarts=args.restarts, max_iter=args.max_iter,
                          jitter=getattr(args, "jitter", 0.0))


def _run(args: argparse.Namespace) -> ex.StudyOutput:
    settings = _settings(args)
    cmd = args.command
    if cmd in ("wire", "response"):
        if args.n < 1:
            raise UsageError("--n must be at least 1")
        if args.oracle and args.n > 26:
            raise UsageError("the exact oracle is limited to 26 cells")
        pdrvs = parse_pdrv(args.pdrv)
        ry = getattr(args, "ry", None)
        return ex.wire_study(args.n, pdrvs, settings, ry, experiment=cmd)
    if cmd == "inverter":
        if args.pdrv is None:
            return ex.truth_table("inverter", settings)
        return ex.inverter_study(parse_pdrv(args.pdrv), settings)
    if cmd == "majority":
        if args.pdrv is not None:
            raise UsageError("majority runs the full truth table; --pdrv is not accepted")
        return ex.truth_table(args.variant, settings)
    if cmd == "shots-study":
        if not args.shot_list or min(args.shot_list) < 1:
            raise UsageError("--shot-list needs positive shot counts")
        if args.repeats < 1 or args.points < 2:
            raise UsageError("--repeats must be >= 1 and --points >= 2")
        return ex.shots_study(args.shot_list, args.repeats, settings, args.points)
    if cmd == "params-study":
        if args.max_params < 2 or args.repeats < 1:
            raise UsageError("--max-params must be >= 2 and --repeats >= 1")
        p = parse_pdrv(args.pdrv)
        if len(p) != 1:
            raise UsageError("params-study takes a single --pdrv value")
        return ex.params_study(args.max_params, args.repeats, settings, p[0])
    raise UsageError(f"unknown command {cmd!r}")


def _interaction(args: argparse.Namespace) -> int:
    table = interaction_table(GridPosition(args.dx, args.dy), not args.bare, PhysicalConstants())
    lines = ["state_a,state_b,energy_meV"]
    lines += [f"{a},{b},{e:.6g}" for a, b, e in table.as_rows()]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _glue_pdrv(argv: list[str]) -> list[str]:
    # argparse reads "--pdrv -1:1:21" as two options; bind the value explicitly
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--pdrv":
            value = next(it, None)
            out.append(tok if value is None else f"--pdrv={value}")
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_pdrv(list(sys.argv[1:] if argv is None else argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "interaction":
            return _interaction(args)
        out = _run(args)
    except (UsageError, LayoutError, QcaError, SizeError, ValueError) as exc:
        print(f"qcavqe: error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if args.out:
        ex.write_csv(out.records, args.out)
    else:
        sys.stdout.write(ex.records_to_csv(out.records))
    if args.json:
        ex.write_json(out.records, out.to_json_meta(), args.json)
    if not out.all_converged:
        n_bad = sum(not o.result.converged for o in out.outcomes)
        print(f"qcavqe: {n_bad} of {len(out.outcomes)} runs did not converge", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
