"""Young-type two-slit fringes built from the coherence function.

The screen is described by the dimensionless fringe phase ``theta`` (far
field, small angles). With the incoherent background removed the pattern
for slits at ``x`` and ``x'`` is

    2 sqrt(I(x) I(x')) |g(x, x')| cos(theta + arg g(x, x')).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherence import Ensemble, assemble, intensity


class DegenerateSlitError(ValueError):
    pass


class LoopError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FringePattern:
    x: float
    xp: float
    theta: np.ndarray
    intensity: np.ndarray
    visibility: float
    offset: float
    amplitude: float  # sqrt(I(x) I(x'))


def screen(count: int = 201, cycles: float = 2.0) -> np.ndarray:
    """Fringe-phase samples spanning ``[-cycles*pi, cycles*pi]``."""
    if count < 2:
        raise ValueError("screen needs at least 2 samples")
    return np.linspace(-cycles * math.pi, cycles * math.pi, count)


def pattern(ensemble: Ensemble, x: float, xp: float, theta=None, rel_eps: float = 1e-14) -> FringePattern:
    theta = screen() if theta is None else np.asarray(theta, dtype=float)
    if theta.size < 2:
        raise ValueError("screen needs at least 2 samples")
    ix, ixp = intensity(ensemble, x), intensity(ensemble, xp)
    scale = max(ix, ixp, 1.0)
    if ix <= rel_eps * scale or ixp <= rel_eps * scale:
        raise DegenerateSlitError(f"zero intensity at slit pair ({x!r}, {xp!r})")
    amp = math.sqrt(ix * ixp)
    g = assemble(ensemble, x, xp) / amp
    vis = abs(g)
    off = math.atan2(g.imag, g.real)
    fringe = 2 * amp * vis * np.cos(theta + off)
    return FringePattern(float(x), float(xp), theta, fringe, vis, off, amp)


def square_loop(center, half_side: float, per_side: int = 40) -> np.ndarray:
    """Closed counter-clockwise square, ``per_side`` steps per side.

    Starts at the lower-left corner; the last point repeats the first.
    Returns an array of shape ``(4 * per_side + 1, 2)``.
    """
    if per_side < 1 or half_side <= 0:
        raise ValueError("need per_side >= 1 and half_side > 0")
    cx, cp = center
    t = np.arange(per_side) / per_side
    lo, hi = -half_side, half_side
    span = hi - lo
    sides = [
        np.column_stack([lo + span * t, np.full(per_side, lo)]),
        np.column_stack([np.full(per_side, hi), lo + span * t]),
        np.column_stack([hi - span * t, np.full(per_side, hi)]),
        np.column_stack([np.full(per_side, lo), hi - span * t]),
    ]
    pts = np.vstack(sides + [np.array([[lo, lo]])])
    return pts + np.array([cx, cp])


def loop_corners(center, half_side: float) -> dict[str, tuple[float, float]]:
    """The four corners of :func:`square_loop`, labelled in traversal order."""
    cx, cp = center
    h = half_side
    return {
        "alpha": (cx - h, cp - h),
        "beta": (cx + h, cp - h),
        "gamma": (cx + h, cp + h),
        "delta": (cx - h, cp + h),
    }


def _wrap(d):
    return (d + math.pi) % (2 * math.pi) - math.pi


@dataclass(frozen=True, eq=False)
class RatchetTrace:
    points: np.ndarray  # (n, 2)
    offsets: np.ndarray  # arg g at each point
    cumulative: np.ndarray  # accumulated fringe shift, starts at 0

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])


def ratchet_trace(ensemble: Ensemble, loop, eps_g: float = 1e-12) -> RatchetTrace:
    """Follow the fringe offset around a closed loop of slit pairs.

    Every step is also split at its midpoint; if the two half-steps do not
    add up to the direct principal-value step the loop is too coarse and
    :class:`LoopError` is raised.
    """
    pts = np.asarray(loop, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
        raise LoopError("loop must be a sequence of at least 4 (x, x') pairs")
    if not np.array_equal(pts[0], pts[-1]):
        raise LoopError("loop must be closed (last point equal to first)")
    x, xp = pts[:, 0], pts[:, 1]
    g = assemble(ensemble, x, xp) / np.sqrt(intensity(ensemble, x) * intensity(ensemble, xp))
    if np.any(~np.isfinite(g)) or np.any(np.abs(g) <= eps_g):
        bad = int(np.argmax(~np.isfinite(g) | (np.abs(g) <= eps_g)))
        raise LoopError(f"loop point {bad} ({x[bad]!r}, {xp[bad]!r}) touches a coherence zero")
    off = np.angle(g)
    steps = _wrap(np.diff(off))

    mid = 0.5 * (pts[1:] + pts[:-1])
    gm = assemble(ensemble, mid[:, 0], mid[:, 1])
    om = np.angle(gm)
    halves = _wrap(om - off[:-1]) + _wrap(off[1:] - om)
    if np.any(np.abs(gm) == 0) or np.any(np.abs(halves - steps) > 1e-6):
        bad = int(np.argmax(np.abs(halves - steps)))
        raise LoopError(f"fringe offset changes by >= pi over loop step {bad}; sample the loop more finely")
    cumulative = np.concatenate([[0.0], np.cumsum(steps)])
    return RatchetTrace(pts, off, cumulative)


def ratchet_scan(ensemble: Ensemble, loop, eps_g: float = 1e-12) -> float:
    """Total fringe shift (radians) accumulated around ``loop``: ``2 pi`` times the enclosed charge."""
    return ratchet_trace(ensemble, loop, eps_g).total
