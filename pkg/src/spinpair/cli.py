"""Command-line entry point: ``spinpair``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analytic import SuperpositionCoeffs
from .config import parse_config
from .errors import ConfigError, NumericError
from .experiments import (
    ORIENTATIONS,
    PRESETS,
    SMALL_R,
    Scenario,
    SweepSpec,
    format_number,
    preset,
    run_scenario,
    run_sweep,
    run_swap,
    scenario_generators,
)
from .propagators import QS, SphericalPoint, propagator_matrix

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _onoff(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _x_list(value: str) -> list:
    out = []
    for tok in value.split(","):
        tok = tok.strip()
        if tok.lower() == SMALL_R:
            out.append(SMALL_R)
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number or '{SMALL_R}': {tok!r}") from None
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump_generators(s: Scenario, path: str | None) -> None:
    if not path:
        return
    parts = [f"# curve = {label}\n{gen.dump()}" for label, gen in scenario_generators(s)]
    Path(path).write_text("\n".join(parts), encoding="utf-8")


def _run(spec, args) -> None:
    if isinstance(spec, SweepSpec):
        _emit(run_sweep(spec).to_csv(), args.out)
        return
    _dump_generators(spec, getattr(args, "dump_generator", None))
    _emit(run_scenario(spec).to_csv(), args.out)


def cmd_figure(args) -> None:
    _run(preset(args.id, args.im_shift), args)


def cmd_run(args) -> None:
    _run(parse_config(args.config), args)


def cmd_sweep(args) -> None:
    orient = ORIENTATIONS if args.orientation == "both" else (args.orientation,)
    spec = SweepSpec(args.x_min, args.x_max, args.samples, orient, args.t_star, args.observable,
                     include_im_shift=args.im_shift)
    _emit(run_sweep(spec).to_csv(), args.out)


def cmd_swap(args) -> None:
    if abs(args.a**2 + args.b**2 - 1) > 1e-9:
        raise ConfigError(f"state not normalized: a^2 + b^2 = {args.a**2 + args.b**2:.12g}", "b")
    coeffs = SuperpositionCoeffs.normalized(args.a, args.b)
    for x in args.x:
        if x != SMALL_R and x <= 0:
            raise ConfigError("x must be > 0; x = 0 is singular, use 'small-r' or the closed "
                              "forms in spinpair.analytic", "x")
    result = run_swap(args.initial, coeffs, args.x, args.orientation, args.t_max, args.samples,
                      args.im_shift)
    _dump_generators(result.scenario, args.dump_generator)
    _emit(result.to_csv(), args.out)


def cmd_propagator(args) -> None:
    try:
        point = SphericalPoint(args.x, args.theta, args.phi)
    except ValueError as err:
        raise ConfigError(str(err), "x") from None
    g = propagator_matrix(point, args.part)
    lines = [f"# x = {args.x!r}", f"# theta = {args.theta!r}", f"# phi = {args.phi!r}",
             f"# part = {args.part}", "q,q',re,im"]
    for q in QS:
        for qp in QS:
            z = g[q, qp]
            lines.append(f"{q},{qp},{format_number(z.real)},{format_number(z.imag)}")
    _emit("\n".join(lines) + "\n", args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinpair", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, dump=True):
        sp.add_argument("--out", help="write CSV here instead of stdout")
        if dump:
            sp.add_argument("--dump-generator", metavar="FILE", help="debug: write the generator matrices")

    f = sub.add_parser("figure", help="run a built-in figure preset")
    f.add_argument("id", choices=sorted(PRESETS, key=lambda k: int(k[3:])))
    f.add_argument("--im-shift", type=_onoff, default=None, metavar="on|off")
    common(f)
    f.set_defaults(func=cmd_figure)

    r = sub.add_parser("run", help="run a scenario or sweep config file")
    r.add_argument("config")
    common(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="rate at t* versus separation")
    s.add_argument("--x-min", type=float, required=True)
    s.add_argument("--x-max", type=float, required=True)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--orientation", choices=(*ORIENTATIONS, "both"), default="both")
    s.add_argument("--t-star", type=float, default=1.0)
    s.add_argument("--observable", choices=("coherence", "population"), default="coherence")
    s.add_argument("--im-shift", type=_onoff, default=False, metavar="on|off")
    common(s, dump=False)
    s.set_defaults(func=cmd_sweep)

    w = sub.add_parser("swap", help="coherence transferred to a z-polarized atom")
    w.add_argument("--initial", choices=("up", "down"), required=True)
    w.add_argument("--a", type=float, required=True)
    w.add_argument("--b", type=float, required=True)
    w.add_argument("--x", type=_x_list, required=True, help="comma list of x values or small-r")
    w.add_argument("--orientation", choices=ORIENTATIONS, default="parallel")
    w.add_argument("--t-max", type=float, default=5.0)
    w.add_argument("--samples", type=int, default=101)
    w.add_argument("--im-shift", type=_onoff, default=False, metavar="on|off")
    common(w)
    w.set_defaults(func=cmd_swap)

    g = sub.add_parser("propagator", help="tabulate the 3x3 propagator matrix")
    g.add_argument("--x", type=float, required=True)
    g.add_argument("--theta", type=float, default=0.0)
    g.add_argument("--phi", type=float, default=0.0)
    g.add_argument("--part", choices=("full", "dissipative", "reactive"), default="full")
    g.add_argument("--out")
    g.set_defaults(func=cmd_propagator)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as err:
        print(f"spinpair: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as err:
        print(f"spinpair: numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
