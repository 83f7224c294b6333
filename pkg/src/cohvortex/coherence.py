"""Two-point coherence of a statistical mixture of scattering states.

The unnormalized function is ``G(x, x') = sum_i w_i conj(psi_i(x)) psi_i(x')``.
Dividing by ``sqrt(I(x) I(x'))`` with ``I(x) = G(x, x)`` gives the degree of
coherence ``g``, whose phase coincides with that of ``G``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .potential import PotentialProfile, free_space, make_step
from .scattering import ScatteringState, evaluate, evaluate_derivative, solve, step_coefficients


@dataclass(frozen=True, eq=False)
class Ensemble:
    members: tuple[ScatteringState, ...]

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        if any(m.weight < 0 for m in members):
            raise ValueError("weights must be non-negative")
        if not any(m.weight > 0 for m in members):
            raise ValueError("at least one weight must be strictly positive")

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members])

    def __len__(self):
        return len(self.members)


def mixture(
    profiles: Sequence[PotentialProfile], energy: float, weights: Sequence[float] | None = None
) -> Ensemble:
    """One scattering state per profile, all at the same energy."""
    if weights is None:
        weights = [1.0] * len(profiles)
    if len(weights) != len(profiles):
        raise ValueError("one weight per profile required")
    return Ensemble(tuple(solve(p, energy, w) for p, w in zip(profiles, weights)))


def step_mixture(
    k: float = 1.0,
    v_ratio: float = 0.99,
    weights: Sequence[float] = (1.0, 1.0),
    position: float = 0.0,
) -> Ensemble:
    """Transparent plane wave mixed with a wave scattered by a step of height ``v_ratio*E``."""
    E = k * k
    return mixture([free_space(), make_step(v_ratio * E, position)], E, weights)


def _psi_table(ensemble: Ensemble, x, derivative=False):
    f = evaluate_derivative if derivative else evaluate
    return [np.asarray(f(m, x)) for m in ensemble.members]


def assemble(ensemble: Ensemble, x, xp):
    """Unnormalized ``G(x, x')``; broadcasts over array inputs."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    out = 0j
    for m, a, b in zip(ensemble.members, _psi_table(ensemble, x), _psi_table(ensemble, xp)):
        if m.weight:
            out = out + m.weight * np.conj(a) * b
    out = np.asarray(out, dtype=complex)
    return complex(out) if out.ndim == 0 else out


def assemble_gradient(ensemble: Ensemble, x, xp):
    """``(dG/dx, dG/dx')`` evaluated analytically."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    gx = gxp = 0j
    for m in ensemble.members:
        if not m.weight:
            continue
        a, da = evaluate(m, x), evaluate_derivative(m, x)
        b, db = evaluate(m, xp), evaluate_derivative(m, xp)
        gx = gx + m.weight * np.conj(da) * b
        gxp = gxp + m.weight * np.conj(a) * db
    return gx, gxp


def intensity(ensemble: Ensemble, x):
    """Ensemble-averaged intensity ``sum_i w_i |psi_i(x)|**2``."""
    x = np.asarray(x, dtype=float)
    out = sum(m.weight * np.abs(a) ** 2 for m, a in zip(ensemble.members, _psi_table(ensemble, x)))
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def analytic_step_G(k, q, x, xp):
    """Closed-form three-phasor ``G`` for the step mixture with ``x < 0 < x'``."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if np.any(x >= 0) or np.any(xp <= 0):
        raise ValueError("analytic_step_G is only valid for x < 0 and x' > 0")
    T, R = step_coefficients(k, q)
    out = (
        np.exp(1j * (-k * x + k * xp))
        + T * np.exp(1j * (-k * x + q * xp))
        + T * R * np.exp(1j * (k * x + q * xp))
    )
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Axis:
    """Uniform sampling ``linspace(start, stop, count)``."""

    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"axis needs at least 2 points, got {self.count}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or self.stop <= self.start:
            raise ValueError(f"axis needs finite start < stop, got {self.start}:{self.stop}")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    @property
    def step(self) -> float:
        return (self.stop - self.start) / (self.count - 1)

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """Parse ``START:STOP:COUNT``."""
        try:
            a, b, n = text.split(":")
            return cls(float(a), float(b), int(n))
        except ValueError as exc:
            raise ValueError(f"bad axis {text!r}, expected START:STOP:COUNT ({exc})") from None


@dataclass(frozen=True, eq=False)
class CoherenceField:
    """Sampled ``G`` (or ``g``) with ``values[i, j]`` at ``(x_i, x'_j)``.

    ``ensemble`` and ``swapped`` let consumers re-evaluate the exact function
    off-grid; ``swapped`` marks a field whose arguments were exchanged.
    """

    x_axis: Axis
    xp_axis: Axis
    values: np.ndarray
    normalized: bool = False
    intensity_x: np.ndarray | None = None
    intensity_xp: np.ndarray | None = None
    ensemble: Ensemble | None = field(default=None, repr=False)
    swapped: bool = False
    degenerate: np.ndarray | None = field(default=None, repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.x_axis.values

    @property
    def xp(self) -> np.ndarray:
        return self.xp_axis.values

    @property
    def shape(self):
        return self.values.shape

    def max_abs(self) -> float:
        return float(np.nanmax(np.abs(self.values)))

    def evaluate(self, x, xp):
        """Exact unnormalized ``G`` at arbitrary points in this field's frame."""
        if self.ensemble is None:
            raise ValueError("field carries no ensemble to evaluate")
        if self.swapped:
            return assemble(self.ensemble, xp, x)
        return assemble(self.ensemble, x, xp)

    def gradient(self, x, xp):
        if self.ensemble is None:
            raise ValueError("field carries no ensemble to evaluate")
        if self.swapped:
            gxp, gx = assemble_gradient(self.ensemble, xp, x)
            return gx, gxp
        return assemble_gradient(self.ensemble, x, xp)

    def transpose(self) -> "CoherenceField":
        """Field with ``x`` and ``x'`` exchanged: ``new(a, b) = old(b, a)``."""
        return CoherenceField(
            self.xp_axis,
            self.x_axis,
            self.values.T.copy(),
            self.normalized,
            self.intensity_xp,
            self.intensity_x,
            self.ensemble,
            not self.swapped,
            None if self.degenerate is None else self.degenerate.T.copy(),
        )


def grid(ensemble: Ensemble, x_axis: Axis, xp_axis: Axis) -> CoherenceField:
    """Sample ``G`` on the product grid.

    Each cell is an independent outer-product sum, so the result does not
    depend on evaluation order.
    """
    xs, xps = x_axis.values, xp_axis.values
    values = np.zeros((xs.size, xps.size), dtype=complex)
    ix = np.zeros(xs.size)
    ixp = np.zeros(xps.size)
    for m in ensemble.members:
        if not m.weight:
            continue
        a = np.asarray(evaluate(m, xs))
        b = np.asarray(evaluate(m, xps))
        values += m.weight * np.outer(np.conj(a), b)
        ix += m.weight * np.abs(a) ** 2
        ixp += m.weight * np.abs(b) ** 2
    return CoherenceField(x_axis, xp_axis, values, False, ix, ixp, ensemble)


def normalize(cf: CoherenceField, rel_eps: float = 1e-14) -> CoherenceField:
    """Divide by ``sqrt(I(x) I(x'))``.

    Cells whose intensity falls below ``rel_eps`` times the largest
    intensity are marked in ``degenerate`` and set to NaN.
    """
    if cf.normalized:
        return cf
    if cf.intensity_x is None or cf.intensity_xp is None:
        raise ValueError("field lacks the diagonal intensities needed to normalize")
    imax = max(cf.intensity_x.max(), cf.intensity_xp.max())
    bad_x = cf.intensity_x < rel_eps * imax
    bad_xp = cf.intensity_xp < rel_eps * imax
    degenerate = bad_x[:, None] | bad_xp[None, :]
    denom = np.sqrt(np.outer(np.where(bad_x, 1.0, cf.intensity_x), np.where(bad_xp, 1.0, cf.intensity_xp)))
    values = cf.values / denom
    values[degenerate] = np.nan
    return CoherenceField(
        cf.x_axis,
        cf.xp_axis,
        values,
        True,
        cf.intensity_x,
        cf.intensity_xp,
        cf.ensemble,
        cf.swapped,
        degenerate,
    )


def degree_of_coherence(ensemble: Ensemble, x, xp):
    """Normalized ``g(x, x')`` at arbitrary points."""
    return assemble(ensemble, x, xp) / np.sqrt(intensity(ensemble, x) * intensity(ensemble, xp))


def hermiticity_error(cf: CoherenceField) -> float:
    """``max |G(x, x') - conj(G(x', x))|`` over the grid.

    Uses the stored matrix when the axes coincide, otherwise re-evaluates
    ``G`` at the exchanged coordinates.
    """
    if cf.x_axis == cf.xp_axis:
        other = cf.values.T
    else:
        X, XP = np.meshgrid(cf.x, cf.xp, indexing="ij")
        other = cf.evaluate(XP, X)
        if cf.normalized:
            other = other / np.sqrt(np.outer(cf.intensity_x, cf.intensity_xp))
    diff = np.abs(cf.values - np.conj(other))
    return float(np.nanmax(diff))
