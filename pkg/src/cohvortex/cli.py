"""Command-line interface: ``cohvortex {field,vortices,fringes,reproduce-fig5}``.

The ensemble is always a transparent plane wave mixed with a wave scattered
by the chosen potential (a step by default). Potential heights are given in
units of the incident energy.
"""
from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import export
from .coherence import Axis, grid, hermiticity_error, mixture, normalize
from .fringes import loop_corners, pattern, ratchet_trace, screen, square_loop
from .potential import PotentialProfile, free_space, make_step
from .scattering import ScatteringError
from .singularity import ModelDomainError, detect, min_period, recommended_count
from .validation import REFERENCE_K, REFERENCE_V_RATIO, REFERENCE_X, REFERENCE_XP, lattice_checks, reference_run

log = logging.getLogger("cohvortex")

HERMITICITY_TOL = 1e-12


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def read_run_file(path) -> list[str]:
    """Turn a flat ``key = value`` file into command-line tokens.

    Keys are long option names without the leading dashes (``eps_g`` and
    ``eps-g`` are equivalent); ``#`` starts a comment; a value may hold
    several whitespace-separated tokens (``window = -15:0:100 0:15:100``).
    Boolean flags take ``true``/``false``.
    """
    tokens = []
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(flag)
            continue
        tokens.append(flag)
        tokens.extend(value.split())
    return tokens


def _protect_negatives(argv):
    # argparse treats "-15:0:100" or "-1,0" as an unknown option; a leading
    # space makes it a plain value and every parser below strips it
    return [" " + a if re.match(r"^-[\d.]", a) else a for a in argv]


def _common(p: argparse.ArgumentParser, window_default):
    g = p.add_argument_group("model")
    g.add_argument("--config", help="flat key=value run-description file (flags override it)")
    g.add_argument("--k", type=float, default=None, help="incident wavevector (sets E = k^2; default 1)")
    g.add_argument("--energy", type=float, default=None, help="incident energy E (alternative to --k)")
    g.add_argument("--step", type=float, default=None, help="step height V/E at x=0 (default 0.99)")
    g.add_argument("--step-position", type=float, default=0.0, help="step position (default 0)")
    g.add_argument("--breakpoints", type=_floats, default=None, help="comma-separated breakpoints")
    g.add_argument("--heights", type=_floats, default=None, help="comma-separated heights in units of E")
    g.add_argument("--weights", type=_floats, default=[1.0, 1.0], help="weights of (free wave, scattered wave)")
    g = p.add_argument_group("sampling")
    g.add_argument(
        "--window", nargs=2, type=Axis.parse, metavar=("XMIN:XMAX:N", "XPMIN:XPMAX:N"), default=window_default
    )
    g.add_argument("--eps-g", type=float, default=1e-12, help="degeneracy threshold relative to max|G|")
    g.add_argument("--eps-zero", type=float, default=1e-8, help="zero threshold relative to max|G|")
    g.add_argument("--out", type=lambda s: Path(s.strip()), default=Path("out"), help="output directory")
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cohvortex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    small = [Axis(-15.0, -0.01, 600), Axis(0.01, 15.0, 600)]

    p = sub.add_parser("field", help="coherence map: CSV + density and phase pixmaps")
    _common(p, small)
    p.add_argument("--normalize", action="store_true", help="export g instead of G")
    p.add_argument("--no-csv", action="store_true", help="skip the field CSV")

    p = sub.add_parser("vortices", help="detected and analytic vortex catalogs with a match report")
    _common(p, small)

    p = sub.add_parser("fringes", help="two-slit fringes around a vortex and the ratchet scan")
    _common(p, small)
    p.add_argument("--center", type=lambda s: tuple(_floats(s.replace(":", ","))), default=None, help="loop centre X:XP")
    p.add_argument("--half-side", type=float, default=None, help="loop half-side (default 0.3 x shortest period)")
    p.add_argument("--per-side", type=int, default=40, help="loop samples per side")
    p.add_argument("--screen", type=int, default=201, help="fringe-phase samples")

    p = sub.add_parser("reproduce-fig5", help="reference vortex-antivortex lattice run with pass/fail summary")
    _common(p, [REFERENCE_X, REFERENCE_XP])
    p.add_argument("--field-csv", action="store_true", help="also write the full-resolution field CSV")
    return parser


def parse_args(argv):
    argv = list(argv)
    if "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            raise ConfigError("--config needs a file")
        extra = read_run_file(argv[i + 1])
        argv = argv[:1] + extra + argv[1:i] + argv[i + 2 :]
    return build_parser().parse_args(_protect_negatives(argv))


def model_from_args(args):
    """Return ``(energy, profile, weights)`` after validating the options."""
    if args.k is not None and args.energy is not None:
        raise ConfigError("give either --k or --energy, not both")
    if args.energy is not None:
        E = args.energy
    else:
        k = 1.0 if args.k is None else args.k
        if not k > 0:
            raise ConfigError("--k must be positive")
        E = k * k
    if not E > 0:
        raise ConfigError("energy must be positive")
    if args.breakpoints is not None or args.heights is not None:
        if args.step is not None:
            raise ConfigError("give either --step or --breakpoints/--heights")
        bps = args.breakpoints or []
        hs = args.heights or []
        try:
            profile = PotentialProfile(tuple(bps), tuple(h * E for h in hs))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        ratio = REFERENCE_V_RATIO if args.step is None else args.step
        profile = make_step(ratio * E, args.step_position)
    weights = list(args.weights)
    if len(weights) != 2 or min(weights) < 0 or max(weights) <= 0:
        raise ConfigError("--weights needs two non-negative values, not both zero")
    for name in ("eps_g", "eps_zero"):
        if not getattr(args, name) > 0:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")
    return E, profile, weights


def step_parameters(E, profile):
    """``(k, q)`` when the profile is the closed-form step at the origin, else None."""
    if profile.breakpoints != (0.0,) or profile.heights[0] != 0.0:
        return None
    k = math.sqrt(E)
    qq = E - profile.heights[1]
    if qq <= 0 or qq == E:
        return None
    return k, math.sqrt(qq)


def _setup(args):
    E, profile, weights = model_from_args(args)
    ens = mixture([free_space(), profile], E, weights)
    args.out.mkdir(parents=True, exist_ok=True)
    xa, xpa = args.window
    k = math.sqrt(E)
    q = ens.members[1].wavevectors[-1]
    period = min_period(k, q) if q.imag == 0 else math.pi / k
    for ax, name in ((xa, "x"), (xpa, "x'")):
        need = recommended_count(ax.stop - ax.start, k, q if q.imag == 0 else k)
        if ax.count < need:
            log.warning("%s axis has %d points; >= %d recommended (8 per period %.4g)", name, ax.count, need, period)
    return E, profile, ens, xa, xpa


def cmd_field(args) -> int:
    E, profile, ens, xa, xpa = _setup(args)
    cf = grid(ens, xa, xpa)
    herm = hermiticity_error(cf)
    gmax = cf.max_abs()
    ok = herm <= HERMITICITY_TOL * gmax
    log.info("hermiticity: max|G - G^H| = %.3g (%.3g relative) %s", herm, herm / gmax, "ok" if ok else "FAILED")
    out = normalize(cf) if args.normalize else cf
    if not args.no_csv:
        export.write_field_csv(args.out / "field.csv", out)
    export.write_ppm(args.out / "density.ppm", export.density_image(out))
    export.write_ppm(args.out / "phase.ppm", export.phase_image(out))
    log.info("wrote field outputs to %s", args.out)
    return 0 if ok else 1


def _vortex_outputs(args, E, profile, cf, detected, outdir):
    export.write_catalog_csv(outdir / "detected.csv", detected)
    unconverged = [s for s in detected if not s.converged]
    if unconverged:
        log.warning("%d detected sites did not converge below eps_zero", len(unconverged))
    ok = not unconverged
    params = step_parameters(E, profile)
    if params is None:
        log.info("no closed-form lattice for this potential; analytic catalog skipped")
        return ok, []
    k, q = params
    try:
        checks, matches, unmatched, analytic = lattice_checks(detected, k, q, cf.x_axis, cf.xp_axis)
    except ModelDomainError as exc:
        log.info("closed-form lattice unavailable: %s", exc)
        return ok, []
    export.write_catalog_csv(outdir / "analytic.csv", analytic)
    export.write_match_csv(outdir / "match.csv", matches, unmatched)
    # spacing checks need at least two sites per row/column; only the match decides here
    ok = ok and checks[0].passed
    return ok, checks


def cmd_vortices(args) -> int:
    E, profile, ens, xa, xpa = _setup(args)
    cf = grid(ens, xa, xpa)
    detected = detect(cf, args.eps_g, args.eps_zero)
    log.info("detected %d sites (%d vortices, %d antivortices)", len(detected),
             sum(s.charge > 0 for s in detected), sum(s.charge < 0 for s in detected))
    ok, checks = _vortex_outputs(args, E, profile, cf, detected, args.out)
    for c in checks:
        log.info(c.line())
    return 0 if ok else 1


def cmd_fringes(args) -> int:
    E, profile, ens, xa, xpa = _setup(args)
    k = math.sqrt(E)
    q = ens.members[1].wavevectors[-1]
    half = args.half_side if args.half_side is not None else 0.3 * (min_period(k, q) if q.imag == 0 else math.pi / k)
    charge = None
    if args.center is not None:
        if len(args.center) != 2:
            raise ConfigError("--center needs X:XP")
        centre = args.center
    else:
        cf = grid(ens, xa, xpa)
        detected = detect(cf, args.eps_g, args.eps_zero)
        if not detected:
            log.error("no vortex in the window to loop around")
            return 1
        mid = (0.5 * (xa.start + xa.stop), 0.5 * (xpa.start + xpa.stop))
        site = min(detected, key=lambda s: math.hypot(s.x - mid[0], s.xp - mid[1]))
        centre, charge = (site.x, site.xp), site.charge
        log.info("looping around detected site (%.10g, %.10g), charge %+d", site.x, site.xp, site.charge)
    theta = screen(args.screen)
    labelled = dict(loop_corners(centre, half))
    labelled["core"] = tuple(centre)
    ok = True
    for name, (x, xp) in labelled.items():
        fp = pattern(ens, x, xp, theta)
        export.write_rows(args.out / f"fringes_{name}.csv", ["theta", "intensity"], zip(fp.theta, fp.intensity))
        log.info("%-5s (%.6g, %.6g): visibility %.6g, offset %+.6f", name, x, xp, fp.visibility, fp.offset)
        if name == "core" and charge is not None and fp.visibility >= 1e-6:
            ok = False
    trace = ratchet_trace(ens, square_loop(centre, half, args.per_side), args.eps_g)
    rows = (
        (n, float(p[0]), float(p[1]), float(o), float(c))
        for n, (p, o, c) in enumerate(zip(trace.points, trace.offsets, trace.cumulative))
    )
    export.write_rows(args.out / "ratchet.csv", ["step", "x", "xp", "offset", "cumulative"], rows)
    turns = trace.total / (2 * math.pi)
    log.info("ratchet: accumulated fringe shift %.12g rad = %.12g cycles", trace.total, turns)
    if charge is not None:
        ok = ok and abs(trace.total - 2 * math.pi * charge) < 1e-9
    else:
        ok = ok and abs(turns - round(turns)) < 1e-9
    return 0 if ok else 1


def cmd_reproduce_fig5(args) -> int:
    if args.k is None and args.energy is None:
        args.k = REFERENCE_K
    E, profile, weights = model_from_args(args)
    if step_parameters(E, profile) is None or profile.breakpoints != (0.0,):
        raise ConfigError("reproduce-fig5 needs a single step at x=0")
    k = math.sqrt(E)
    xa, xpa = args.window
    args.out.mkdir(parents=True, exist_ok=True)
    run = reference_run(k, profile.heights[1] / E, xa, xpa)
    cf = run["field"]
    if args.field_csv:
        export.write_field_csv(args.out / "field.csv", cf)
    export.write_ppm(args.out / "density.ppm", export.density_image(cf))
    export.write_ppm(args.out / "phase.ppm", export.phase_image(cf))
    export.write_catalog_csv(args.out / "detected.csv", run["detected"])
    export.write_catalog_csv(args.out / "analytic.csv", run["analytic"])
    export.write_match_csv(args.out / "match.csv", run["matches"], run["unmatched"])
    lines = [c.line() for c in run["checks"]]
    passed = all(c.passed for c in run["checks"])
    lines.append(f"OVERALL {'PASS' if passed else 'FAIL'}")
    (args.out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if passed else 1


COMMANDS = {
    "field": cmd_field,
    "vortices": cmd_vortices,
    "fringes": cmd_fringes,
    "reproduce-fig5": cmd_reproduce_fig5,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except (ConfigError, OSError) as exc:
        print(f"cohvortex: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ScatteringError, ModelDomainError, ValueError) as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
