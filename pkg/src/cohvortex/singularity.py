"""Phase singularities of sampled coherence functions.

Windings are sums of principal-value phase steps along grid edges, taken
counter-clockwise in the ``(x, x')`` plane with ``x`` horizontal. Every edge
step is computed once, so plaquette windings and rectangle circulations are
built from identical numbers and stay exactly additive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from .coherence import CoherenceField
from .scattering import step_coefficients

TWO_PI = 2 * math.pi


class IndeterminateError(ValueError):
    """A corner of the requested loop is too close to a zero of the field."""


class ModelDomainError(ValueError):
    """Parameters outside the range where the closed-form lattice exists."""


@dataclass(frozen=True)
class VortexSite:
    x: float
    xp: float
    charge: int
    source: str  # "detected" | "analytic"
    cell: tuple[int, int] | None = None
    residual: float | None = None
    converged: bool = True

    def mirrored(self) -> "VortexSite":
        """Partner site implied by Hermiticity: ``(x', x)`` with the same charge."""
        cell = None if self.cell is None else (self.cell[1], self.cell[0])
        return VortexSite(self.xp, self.x, self.charge, self.source, cell, self.residual, self.converged)


@dataclass(frozen=True)
class AngleShifts:
    alpha: float
    beta: float
    p: int


def _threshold(cf: CoherenceField, eps_g: float) -> float:
    return eps_g * cf.max_abs()


def _wrap(d):
    return (d + math.pi) % (2 * math.pi) - math.pi


def _resolve_edges(cf: CoherenceField, starts, ends, near_pi: float, max_depth: int):
    """Re-measure edge phase steps by adaptive bisection on the exact function.

    Only sub-segments whose step is still within ``near_pi`` of pi are split,
    so a point zero close to an edge is resolved in a few levels while a
    zero crossing the edge is never resolved. Returns ``(steps, ok)``.
    """
    n = len(starts)
    steps = np.zeros(n)
    ok = np.ones(n, dtype=bool)
    owner = np.arange(n)
    a, b = np.asarray(starts, float), np.asarray(ends, float)
    pa = np.angle(cf.evaluate(a[:, 0], a[:, 1]))
    pb = np.angle(cf.evaluate(b[:, 0], b[:, 1]))
    for level in range(max_depth + 1):
        if not len(owner):
            break
        d = _wrap(pb - pa)
        done = np.abs(d) < math.pi - near_pi
        np.add.at(steps, owner[done], d[done])
        keep = ~done
        if level == max_depth:
            ok[owner[keep]] = False
            break
        owner, a, b, pa, pb = owner[keep], a[keep], b[keep], pa[keep], pb[keep]
        m = 0.5 * (a + b)
        gm = cf.evaluate(m[:, 0], m[:, 1])
        dead = gm == 0
        ok[owner[dead]] = False
        pm = np.angle(gm)
        owner = np.concatenate([owner, owner])
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        pa, pb = np.concatenate([pa, pm]), np.concatenate([pm, pb])
        live = ok[owner]
        owner, a, b, pa, pb = owner[live], a[live], b[live], pa[live], pb[live]
    return steps, ok


def edge_phases(cf: CoherenceField, near_pi: float = 1e-3, max_depth: int = 40, block=None):
    """Principal-value phase steps along x-edges and x'-edges.

    Returns ``(ex, ey, ex_bad, ey_bad)`` with ``ex[i, j]`` the step from node
    ``(i, j)`` to ``(i+1, j)`` and ``ey[i, j]`` from ``(i, j)`` to ``(i, j+1)``,
    each in [-pi, pi]. Steps within ``near_pi`` of pi are ambiguous; they are
    re-measured by adaptive bisection of the exact function when the field
    carries one, and flagged in ``ex_bad``/``ey_bad`` if that fails.
    ``block = (i0, i1, j0, j1)`` restricts the work to nodes ``i0..i1`` by
    ``j0..j1``; indices in the result are then relative to ``(i0, j0)``.
    """
    xs, xps, v = cf.x, cf.xp, cf.values
    if block is not None:
        i0, i1, j0, j1 = block
        xs, xps, v = xs[i0 : i1 + 1], xps[j0 : j1 + 1], v[i0 : i1 + 1, j0 : j1 + 1]
    ex = np.angle(v[1:, :] * np.conj(v[:-1, :]))
    ey = np.angle(v[:, 1:] * np.conj(v[:, :-1]))
    ex_bad = np.abs(ex) >= math.pi - near_pi
    ey_bad = np.abs(ey) >= math.pi - near_pi
    for steps, bad, di, dj in ((ex, ex_bad, 1, 0), (ey, ey_bad, 0, 1)):
        idx = np.argwhere(bad)
        if not len(idx) or cf.ensemble is None:
            continue
        i, j = idx[:, 0], idx[:, 1]
        starts = np.column_stack([xs[i], xps[j]])
        ends = np.column_stack([xs[i + di], xps[j + dj]])
        fine, ok = _resolve_edges(cf, starts, ends, near_pi, max_depth)
        steps[i[ok], j[ok]] = fine[ok]
        bad[i[ok], j[ok]] = False
    return ex, ey, ex_bad, ey_bad


def _degenerate_nodes(cf: CoherenceField, eps_g: float) -> np.ndarray:
    a = np.abs(cf.values)
    bad = ~np.isfinite(a) | (a <= _threshold(cf, eps_g))
    if cf.degenerate is not None:
        bad |= cf.degenerate
    return bad


def _to_int(total):
    n = np.rint(np.asarray(total) / TWO_PI)
    return n.astype(int)


def winding_map(cf: CoherenceField, eps_g: float = 1e-12, edges=None):
    """Winding of every grid cell.

    Returns ``(windings, valid)``; ``windings[i, j]`` belongs to the cell with
    lower-left corner ``(x_i, x'_j)``. Cells with a degenerate corner or an
    ambiguous edge are invalid and get winding 0.
    """
    ex, ey, ex_bad, ey_bad = edge_phases(cf) if edges is None else edges
    total = ex[:, :-1] + ey[1:, :] - ex[:, 1:] - ey[:-1, :]
    bad = _degenerate_nodes(cf, eps_g)
    invalid = bad[:-1, :-1] | bad[1:, :-1] | bad[1:, 1:] | bad[:-1, 1:]
    invalid |= ex_bad[:, :-1] | ex_bad[:, 1:] | ey_bad[:-1, :] | ey_bad[1:, :]
    w = _to_int(np.where(invalid, 0.0, total))
    return w, ~invalid


def plaquette_winding(cf: CoherenceField, i: int, j: int, eps_g: float = 1e-12) -> int:
    """Integer winding of arg G around cell ``(i, j)``."""
    nx, nxp = cf.shape
    if not (0 <= i < nx - 1 and 0 <= j < nxp - 1):
        raise IndexError(f"cell ({i}, {j}) outside grid of {nx - 1}x{nxp - 1} cells")
    return contour_circulation(cf, (i, i + 1, j, j + 1), eps_g)


def contour_circulation(cf: CoherenceField, rect: Sequence[int], eps_g: float = 1e-12, edges=None) -> int:
    """Winding along the boundary of a block of cells.

    ``rect = (i0, i1, j0, j1)`` covers cells ``i0 <= i < i1`` and
    ``j0 <= j < j1``, i.e. nodes ``x_i0 .. x_i1`` by ``x'_j0 .. x'_j1``.
    Pass precomputed ``edges`` from :func:`edge_phases` when evaluating many
    rectangles on one field.
    """
    i0, i1, j0, j1 = (int(r) for r in rect)
    nx, nxp = cf.shape
    if not (0 <= i0 <= i1 < nx and 0 <= j0 <= j1 < nxp):
        raise IndexError(f"rectangle {rect} outside grid of {nx}x{nxp} nodes")
    if i0 == i1 or j0 == j1:
        return 0
    bad = _degenerate_nodes(cf, eps_g)
    boundary = np.concatenate(
        [bad[i0 : i1 + 1, j0], bad[i0 : i1 + 1, j1], bad[i0, j0 : j1 + 1], bad[i1, j0 : j1 + 1]]
    )
    if boundary.any():
        raise IndeterminateError(f"rectangle {rect} has a boundary node with |G| below threshold")
    if edges is None:
        ex, ey, ex_bad, ey_bad = edge_phases(cf, block=(i0, i1, j0, j1))
        i0, i1, j0, j1 = 0, i1 - i0, 0, j1 - j0
    else:
        ex, ey, ex_bad, ey_bad = edges
    if ex_bad[i0:i1, j0].any() or ex_bad[i0:i1, j1].any() or ey_bad[i0, j0:j1].any() or ey_bad[i1, j0:j1].any():
        raise IndeterminateError(f"rectangle {rect} has a boundary edge crossing a zero")
    total = ex[i0:i1, j0].sum() + ey[i1, j0:j1].sum() - ex[i0:i1, j1].sum() - ey[i0, j0:j1].sum()
    return int(_to_int(total))


def refine_zero(cf: CoherenceField, x0: float, xp0: float, bounds, tol: float = 1e-10, max_iter: int = 60):
    """Locate a zero of the exact ``G`` near ``(x0, xp0)`` inside ``bounds``.

    Newton iteration on ``(Re G, Im G)`` with the analytic Jacobian; if it
    leaves ``bounds`` or stalls, falls back to bounded minimization of
    ``|G|**2``. Returns ``(x, xp, |G|)``.
    """
    (xlo, xhi), (plo, phi) = bounds
    x, xp = float(x0), float(xp0)
    inside = True
    for _ in range(max_iter):
        g = cf.evaluate(x, xp)
        gx, gxp = cf.gradient(x, xp)
        J = np.array([[gx.real, gxp.real], [gx.imag, gxp.imag]])
        try:
            dx, dxp = np.linalg.solve(J, [-g.real, -g.imag])
        except np.linalg.LinAlgError:
            break
        x, xp = x + dx, xp + dxp
        if not (xlo <= x <= xhi and plo <= xp <= phi):
            inside = False
            break
        if math.hypot(dx, dxp) < tol:
            break
    if inside and xlo <= x <= xhi and plo <= xp <= phi:
        return float(x), float(xp), abs(cf.evaluate(x, xp))

    def obj(p):
        return abs(cf.evaluate(p[0], p[1])) ** 2

    res = optimize.minimize(
        obj,
        [x0, xp0],
        method="L-BFGS-B",
        bounds=[(xlo, xhi), (plo, phi)],
        options={"ftol": 1e-30, "gtol": 1e-30, "maxiter": 500},
    )
    x, xp = (float(v) for v in res.x)
    return x, xp, abs(cf.evaluate(x, xp))


def detect(cf: CoherenceField, eps_g: float = 1e-12, eps_zero: float = 1e-8, refine: bool = True):
    """Find every cell with nonzero winding and refine its zero.

    Positions are refined on the exact function carried by the field
    (the refinement box is the cell widened by one cell per side). Sites
    whose residual stays above ``eps_zero * max|G|`` are kept with
    ``converged=False``. Output is sorted by ``(x, x')``.
    """
    w, _ = winding_map(cf, eps_g)
    xs, xps = cf.x, cf.xp
    hx, hxp = cf.x_axis.step, cf.xp_axis.step
    can_refine = refine and cf.ensemble is not None
    gmax = cf.max_abs()
    if cf.normalized and can_refine:
        # residuals are measured on the unnormalized function
        gmax = float(np.max(np.abs(cf.evaluate(*np.meshgrid(xs, xps, indexing="ij")))))
    sites = []
    for i, j in zip(*np.nonzero(w)):
        i, j = int(i), int(j)
        xc = 0.5 * (xs[i] + xs[i + 1])
        pc = 0.5 * (xps[j] + xps[j + 1])
        if can_refine:
            bounds = ((xs[i] - hx, xs[i + 1] + hx), (xps[j] - hxp, xps[j + 1] + hxp))
            x, xp, res = refine_zero(cf, xc, pc, bounds)
            sites.append(VortexSite(x, xp, int(w[i, j]), "detected", (i, j), res, bool(res < eps_zero * gmax)))
        else:
            sites.append(VortexSite(float(xc), float(pc), int(w[i, j]), "detected", (i, j), None, False))
    return sort_sites(sites)


def sort_sites(sites: Iterable[VortexSite]) -> list[VortexSite]:
    return sorted(sites, key=lambda s: (s.x, s.xp, s.charge))


def _as_real(z, name):
    z = complex(z)
    if abs(z.imag) > 1e-12 * max(1.0, abs(z.real)):
        raise ModelDomainError(f"{name} must be real for the closed-form lattice, got {z!r}")
    return z.real


def _safe_arccos(c, name):
    if not math.isfinite(c) or abs(c) > 1 + 1e-12:
        raise ModelDomainError(f"arccos argument for {name} out of [-1, 1]: {c!r}")
    return math.acos(min(1.0, max(-1.0, c)))


def angle_shifts(T, R, p: int) -> AngleShifts:
    """Lattice shift angles for circulation sign ``p``.

    ``alpha = pi/p - arccos((1 + T^2 - T^2 R^2) / (2T))`` and
    ``beta = pi/p + arccos((1 - T^2 + T^2 R^2) / (2TR))``.
    """
    if p not in (-1, 1):
        raise ValueError(f"p must be +1 or -1, got {p!r}")
    T = _as_real(T, "T")
    R = _as_real(R, "R")
    if T == 0 or R == 0:
        raise ModelDomainError(f"degenerate phasor lengths T={T!r}, R={R!r}: no vortices")
    c1 = (1 + T * T - T * T * R * R) / (2 * T)
    c2 = (1 - T * T + T * T * R * R) / (2 * T * R)
    return AngleShifts(math.pi / p - _safe_arccos(c1, "alpha"), math.pi / p + _safe_arccos(c2, "beta"), p)


def _int_range(lo, hi):
    return range(math.ceil(lo) - 1, math.floor(hi) + 2)


def analytic_lattice(k, q, p: int, window) -> list[VortexSite]:
    """Closed-form vortex sites of the step mixture inside ``window``.

    ``window = ((xmin, xmax), (xpmin, xpmax))`` must lie in ``x <= 0 <= x'``;
    only points with ``x < 0`` and ``x' > 0`` strictly are returned.
    Sites are ``x_u = p(beta - alpha)/(2k) - u pi/k`` and
    ``x'_v = -p alpha/(k - q) + 2 pi v/(k - q)``.
    """
    k = _as_real(k, "k")
    q = _as_real(q, "q")
    if k == q:
        raise ModelDomainError("k == q: free space has no vortex lattice")
    (xmin, xmax), (pmin, pmax) = window
    if xmin > xmax or pmin > pmax:
        raise ValueError(f"empty window {window!r}")
    if xmax > 0 or pmin < 0:
        raise ValueError(f"window {window!r} must lie in the quadrant x <= 0 <= x'")
    T, R = step_coefficients(k, q)
    sh = angle_shifts(T, R, p)
    x0 = p * (sh.beta - sh.alpha) / (2 * k)
    dx = math.pi / k
    xp0 = p * (-sh.alpha) / (k - q)
    dxp = 2 * math.pi / (k - q)
    # x_u = x0 - u dx and x'_v = xp0 + v dxp; bracket u, v from the window then filter
    us = _int_range(*sorted(((x0 - xmax) / dx, (x0 - xmin) / dx)))
    vs = _int_range(*sorted(((pmin - xp0) / dxp, (pmax - xp0) / dxp)))
    sites = []
    for u in us:
        xu = x0 - u * dx
        if not (xmin <= xu <= xmax and xu < 0):
            continue
        for v in vs:
            xv = xp0 + v * dxp
            if pmin <= xv <= pmax and xv > 0:
                sites.append(VortexSite(xu, xv, p, "analytic"))
    return sort_sites(sites)


def lattice_spacings(k, q) -> tuple[float, float]:
    """(x spacing, x' spacing) of each sublattice."""
    return math.pi / k, 2 * math.pi / abs(k - q)


def min_period(k, q) -> float:
    """Shortest analytic period ``min(pi/k, 2pi/|k-q|)`` of the step field."""
    k, q = abs(complex(k)), complex(q)
    if complex(k) == q:
        return math.pi / k
    return min(math.pi / k, 2 * math.pi / abs(k - q))


def recommended_count(extent: float, k, q, samples_per_period: int = 8) -> int:
    """Grid count giving at least ``samples_per_period`` points per shortest period."""
    return max(2, math.ceil(samples_per_period * extent / min_period(k, q)) + 1)


@dataclass(frozen=True)
class Match:
    reference: VortexSite
    found: VortexSite | None
    distance: float


def match_sites(reference: Sequence[VortexSite], found: Sequence[VortexSite], tol: float):
    """Pair each reference site with the nearest same-charge found site.

    Greedy by distance, each found site used at most once. Returns
    ``(matches, unmatched_found)``; a match with ``found=None`` means no
    candidate within ``tol``.
    """
    ref = list(reference)
    cand = list(found)
    pairs = []
    for a, r in enumerate(ref):
        for b, f in enumerate(cand):
            if f.charge == r.charge:
                d = math.hypot(r.x - f.x, r.xp - f.xp)
                if d <= tol:
                    pairs.append((d, a, b))
    pairs.sort()
    used_ref, used_found = {}, set()
    for d, a, b in pairs:
        if a in used_ref or b in used_found:
            continue
        used_ref[a] = (b, d)
        used_found.add(b)
    matches = []
    for a, r in enumerate(ref):
        if a in used_ref:
            b, d = used_ref[a]
            matches.append(Match(r, cand[b], d))
        else:
            matches.append(Match(r, None, math.inf))
    unmatched = [f for b, f in enumerate(cand) if b not in used_found]
    return matches, unmatched


def hausdorff(a: Sequence[VortexSite], b: Sequence[VortexSite]) -> float:
    if not a and not b:
        return 0.0
    if not a or not b:
        return math.inf
    pa = np.array([(s.x, s.xp) for s in a])
    pb = np.array([(s.x, s.xp) for s in b])
    d = np.hypot(pa[:, None, 0] - pb[None, :, 0], pa[:, None, 1] - pb[None, :, 1])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def step_lattice(k, q, window, mirror: bool = True) -> list[VortexSite]:
    """Both sublattices of the step mixture clipped to an arbitrary window.

    The part of the window in ``x < 0 < x'`` is filled from
    :func:`analytic_lattice`; with ``mirror`` the part in ``x' < 0 < x`` is
    filled with the Hermitian partners (same charge, coordinates exchanged).
    """
    (xmin, xmax), (pmin, pmax) = window
    sites = []
    quad = ((xmin, min(xmax, 0.0)), (max(pmin, 0.0), pmax))
    if quad[0][0] < quad[0][1] and quad[1][0] < quad[1][1]:
        for p in (1, -1):
            sites += analytic_lattice(k, q, p, quad)
    if mirror:
        mquad = ((pmin, min(pmax, 0.0)), (max(xmin, 0.0), xmax))
        if mquad[0][0] < mquad[0][1] and mquad[1][0] < mquad[1][1]:
            for p in (1, -1):
                sites += [s.mirrored() for s in analytic_lattice(k, q, p, mquad)]
    return sort_sites(sites)


def in_lattice_quadrants(x: float, xp: float) -> bool:
    """True where the closed-form lattice applies (``x x' < 0``)."""
    return x * xp < 0
