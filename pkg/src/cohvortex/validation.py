"""Cross-checks between the numerical pipeline and the closed-form step model.

Each check returns a :class:`Check`; the reference run bundles them into a
pass/fail summary.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .coherence import Axis, Ensemble, analytic_step_G, assemble, grid, step_mixture
from .fringes import pattern, ratchet_scan, square_loop
from .potential import free_space, make_step
from .scattering import solve, step_coefficients, wavevector
from .singularity import analytic_lattice, detect, match_sites, min_period, step_lattice

REFERENCE_K = 1.0
REFERENCE_V_RATIO = 0.99
REFERENCE_X = Axis(-15.0, -0.01, 1500)
REFERENCE_XP = Axis(0.01, 15.0, 1500)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _sublattice_spacings(sites, tol):
    """Spacings between neighbouring sites sharing a row or column.

    Sites in ``x' < 0 < x`` are reflected back onto ``x < 0 < x'`` first, so
    spacings are always reported in the orientation of the closed form.
    """
    dx, dxp = [], []
    groups = defaultdict(list)
    for s in sites:
        groups[(s.charge, s.x < 0)].append(s if s.x < 0 else s.mirrored())
    for group in groups.values():
        cols = defaultdict(list)
        rows = defaultdict(list)
        for s in group:
            cols[round(s.x / tol)].append(s.xp)
            rows[round(s.xp / tol)].append(s.x)
        for v in cols.values():
            dxp += list(np.diff(sorted(v)))
        for v in rows.values():
            dx += list(np.diff(sorted(v)))
    return np.array(dx), np.array(dxp)


def lattice_checks(detected, k, q, x_axis: Axis, xp_axis: Axis, rel_tol: float = 1e-6):
    window = ((x_axis.start, x_axis.stop), (xp_axis.start, xp_axis.stop))
    analytic = step_lattice(k, q, window)
    spacing = max(x_axis.step, xp_axis.step)
    in_scope = [s for s in detected if s.x * s.xp < 0]
    matches, unmatched = match_sites(analytic, in_scope, spacing)
    missing = [m for m in matches if m.found is None]
    worst = max((m.distance for m in matches if m.found is not None), default=0.0)
    out = [
        Check(
            "lattice match",
            bool(analytic) and not missing and not unmatched,
            f"{len(analytic)} analytic sites, {len(missing)} unmatched analytic, "
            f"{len(unmatched)} unmatched detected, worst distance {worst:.3g} (grid spacing {spacing:.3g})",
        )
    ]
    found = [m.found for m in matches if m.found is not None]
    dx, dxp = _sublattice_spacings(found, 0.5 * spacing)
    ex, exp_ = math.pi / k, 2 * math.pi / abs(k - q)
    if dxp.size:
        err = float(np.max(np.abs(dxp - exp_)) / exp_)
        out.append(Check("x' spacing", err < rel_tol, f"{dxp.size} gaps, max rel. deviation from {exp_:.9g}: {err:.3g}"))
    else:
        out.append(Check("x' spacing", False, "no consecutive sites in the window"))
    if dx.size:
        err = float(np.max(np.abs(dx - ex)) / ex)
        out.append(Check("x spacing", err < rel_tol, f"{dx.size} gaps, max rel. deviation from {ex:.9g}: {err:.3g}"))
    else:
        out.append(Check("x spacing", False, "no consecutive sites in the window"))
    return out, matches, unmatched, analytic


def residual_check(k, q, x_axis: Axis, xp_axis: Axis, gmax: float, rel_tol: float = 1e-8) -> Check:
    window = ((x_axis.start, min(x_axis.stop, 0.0)), (max(xp_axis.start, 0.0), xp_axis.stop))
    sites = analytic_lattice(k, q, 1, window) + analytic_lattice(k, q, -1, window)
    res = max((abs(analytic_step_G(k, q, s.x, s.xp)) for s in sites), default=math.inf)
    return Check("analytic zero residual", res < rel_tol * gmax, f"max |G| at {len(sites)} sites = {res:.3g} (max|G| = {gmax:.6g})")


def oracle_check(ensemble: Ensemble, k, q, n: int = 10_000, seed: int = 0, extent: float = 15.0, tol: float = 1e-10) -> Check:
    rng = np.random.default_rng(seed)
    x = -rng.uniform(0, extent, n)
    xp = rng.uniform(0, extent, n)
    x[x == 0] = -extent
    xp[xp == 0] = extent
    dev = float(np.max(np.abs(assemble(ensemble, x, xp) - analytic_step_G(k, q, x, xp))))
    return Check("oracle equivalence", dev < tol, f"max |assemble - closed form| over {n} points = {dev:.3g}")


def flux_check(n: int = 100, seed: int = 0, tol: float = 1e-12) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        E = rng.uniform(0.1, 10.0)
        V = rng.uniform(0.0, E)
        k, q = wavevector(E, 0.0).real, wavevector(E, V).real
        T, R = step_coefficients(k, q)
        lhs, rhs = k * (1 - abs(R) ** 2), q * abs(T) ** 2
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs)))
    return Check("flux identity", worst < tol, f"max rel. |k(1-|R|^2) - q|T|^2| over {n} draws = {worst:.3g}")


def pure_state_checks(x_axis: Axis, xp_axis: Axis, k: float, v_ratio: float):
    E = k * k
    out = []
    for label, prof in (("free wave", free_space()), ("step-scattered wave", make_step(v_ratio * E))):
        ens = Ensemble((solve(prof, E),))
        n = len(detect(grid(ens, x_axis, xp_axis)))
        out.append(Check(f"pure state ({label})", n == 0, f"{n} sites detected"))
    return out


def ratchet_checks(ensemble: Ensemble, site, k, q, per_side: int = 40, tol: float = 1e-9, vis_tol: float = 1e-6):
    half = 0.3 * min_period(k, q)
    loop = square_loop((site.x, site.xp), half, per_side)
    total = ratchet_scan(ensemble, loop)
    expected = 2 * math.pi * site.charge
    core = pattern(ensemble, site.x, site.xp)
    return [
        Check(
            "ratchet",
            abs(total - expected) < tol,
            f"accumulated fringe shift {total:.12g} vs 2*pi*({site.charge:+d}); half-side {half:.4g}",
        ),
        Check("core visibility", core.visibility < vis_tol, f"visibility at refined core = {core.visibility:.3g}"),
    ]


def reference_run(k: float = REFERENCE_K, v_ratio: float = REFERENCE_V_RATIO, x_axis: Axis = REFERENCE_X, xp_axis: Axis = REFERENCE_XP):
    """Step mixture on the reference window: field, detected sites and checks."""
    ensemble = step_mixture(k, v_ratio)
    q = ensemble.members[1].wavevectors[-1].real
    cf = grid(ensemble, x_axis, xp_axis)
    detected = detect(cf)
    checks, matches, unmatched, analytic = lattice_checks(detected, k, q, x_axis, xp_axis)
    checks.append(residual_check(k, q, x_axis, xp_axis, cf.max_abs()))
    checks.append(oracle_check(ensemble, k, q))
    checks.append(flux_check())
    checks += pure_state_checks(x_axis, xp_axis, k, v_ratio)
    if detected:
        centre = np.array([0.5 * (x_axis.start + x_axis.stop), 0.5 * (xp_axis.start + xp_axis.stop)])
        site = min(detected, key=lambda s: math.hypot(s.x - centre[0], s.xp - centre[1]))
        checks += ratchet_checks(ensemble, site, k, q)
    converged = all(s.converged for s in detected)
    checks.append(Check("refinement", converged, f"{sum(s.converged for s in detected)}/{len(detected)} sites converged"))
    return {
        "ensemble": ensemble,
        "field": cf,
        "detected": detected,
        "analytic": analytic,
        "matches": matches,
        "unmatched": unmatched,
        "checks": checks,
    }
