"""Stationary scattering of a unit plane wave incident from the left.

In every region ``r`` the wavefunction is ``A_r exp(i k_r x) + B_r exp(-i k_r x)``
in global coordinates, with ``k_r**2 = E - V_r`` (units ``2m/hbar**2 = 1``).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .potential import PotentialProfile, region_indices


class ScatteringError(ValueError):
    """Raised when the matching conditions cannot be solved."""


def wavevector(E: float, V: float) -> complex:
    """Wavevector ``sqrt(E - V)`` on the principal branch (``Im >= 0``)."""
    if not E > 0:
        raise ValueError(f"energy must be positive for an incident wave, got E={E!r}")
    d = E - V
    if d >= 0:
        return complex(math.sqrt(d), 0.0)
    return complex(0.0, math.sqrt(-d))


def step_coefficients(k: complex, q: complex) -> tuple[complex, complex]:
    """Amplitude transmission and reflection ``T = 2k/(k+q)``, ``R = (k-q)/(k+q)``."""
    s = k + q
    if s == 0:
        raise ScatteringError(f"singular step coefficients: k + q = 0 (k={k!r}, q={q!r})")
    return 2 * k / s, (k - q) / s


@dataclass(frozen=True, eq=False)
class ScatteringState:
    profile: PotentialProfile
    energy: float
    wavevectors: np.ndarray  # (n_regions,) complex
    amplitudes: np.ndarray  # (n_regions, 2) complex, columns (A, B)
    weight: float = 1.0

    def __call__(self, x):
        return evaluate(self, x)

    @property
    def transmission(self) -> complex:
        return complex(self.amplitudes[-1, 0])

    @property
    def reflection(self) -> complex:
        return complex(self.amplitudes[0, 1])

    def with_weight(self, weight: float) -> "ScatteringState":
        if weight < 0:
            raise ValueError("weight must be non-negative")
        return ScatteringState(self.profile, self.energy, self.wavevectors, self.amplitudes, float(weight))


def solve(profile: PotentialProfile, E: float, weight: float = 1.0) -> ScatteringState:
    """Transfer-matrix solution for unit incidence from the left.

    Amplitudes are propagated from the outgoing right region leftwards by
    matching psi and psi' at each breakpoint, accumulated in extended
    precision, then rescaled so the incident amplitude is exactly 1.
    """
    if not E > 0:
        raise ValueError(f"energy must be positive, got E={E!r}")
    if weight < 0:
        raise ValueError(f"weight must be non-negative, got {weight!r}")
    if profile.heights[0] >= E:
        raise ScatteringError(
            f"no propagating incident wave: E={E!r} <= V_left={profile.heights[0]!r}"
        )

    kr = np.array([wavevector(E, V) for V in profile.heights], dtype=complex)
    for r, kk in enumerate(kr):
        if kk == 0:
            bp = profile.breakpoints[max(r - 1, 0)] if profile.breakpoints else None
            raise ScatteringError(
                f"singular transfer matrix at breakpoint {bp!r}: region {r} has E == V (k = 0)"
            )

    ext = np.clongdouble
    kl = kr.astype(ext)
    amps = np.zeros((profile.n_regions, 2), dtype=ext)
    amps[-1] = (ext(1), ext(0))
    for r in range(profile.n_regions - 2, -1, -1):
        b = ext(profile.breakpoints[r])
        A, B = amps[r + 1]
        kn = kl[r + 1]
        ep, em = np.exp(1j * kn * b), np.exp(-1j * kn * b)
        psi = A * ep + B * em
        dpsi_over_i = kn * (A * ep - B * em)
        ratio = dpsi_over_i / kl[r]
        amps[r, 0] = (psi + ratio) * np.exp(-1j * kl[r] * b) / 2
        amps[r, 1] = (psi - ratio) * np.exp(1j * kl[r] * b) / 2
        if not np.all(np.isfinite(amps[r])):
            raise ScatteringError(f"transfer matrix overflow at breakpoint {profile.breakpoints[r]!r}")

    incident = amps[0, 0]
    if incident == 0:
        raise ScatteringError("singular transfer matrix: vanishing incident amplitude")
    amps = (amps / incident).astype(complex)
    amps[0, 0] = 1.0
    amps.setflags(write=False)
    kr.setflags(write=False)
    return ScatteringState(profile, float(E), kr, amps, float(weight))


def _coeffs(state: ScatteringState, x):
    x = np.asarray(x, dtype=float)
    idx = region_indices(state.profile, x)
    k = state.wavevectors[idx]
    return x, k, state.amplitudes[idx, 0], state.amplitudes[idx, 1]


def evaluate(state: ScatteringState, x):
    """psi(x); scalar in, complex out, arrays broadcast."""
    x, k, A, B = _coeffs(state, x)
    out = A * np.exp(1j * k * x) + B * np.exp(-1j * k * x)
    return complex(out) if out.ndim == 0 else out


def evaluate_derivative(state: ScatteringState, x):
    x, k, A, B = _coeffs(state, x)
    out = 1j * k * (A * np.exp(1j * k * x) - B * np.exp(-1j * k * x))
    return complex(out) if out.ndim == 0 else out


def continuity_residual(state: ScatteringState) -> float:
    """Largest scaled mismatch of psi or psi' across any breakpoint."""
    worst = 0.0
    amps, kr = state.amplitudes, state.wavevectors
    for r, b in enumerate(state.profile.breakpoints):
        sides = []
        for s in (r, r + 1):
            A, B = amps[s]
            k = kr[s]
            ep, em = cmath.exp(1j * k * b), cmath.exp(-1j * k * b)
            sides.append((A * ep + B * em, 1j * k * (A * ep - B * em)))
        (p0, d0), (p1, d1) = sides
        scale = max(1.0, abs(p0))
        worst = max(worst, abs(p0 - p1) / scale, abs(d0 - d1) / scale)
    return worst


def flux(state: ScatteringState) -> tuple[float, float, float]:
    """(incident, reflected, transmitted) probability currents.

    Evanescent end regions carry zero current.
    """
    k0, kN = state.wavevectors[0], state.wavevectors[-1]
    inc = k0.real
    refl = k0.real * abs(state.amplitudes[0, 1]) ** 2
    trans = kN.real * abs(state.amplitudes[-1, 0]) ** 2 if kN.imag == 0 else 0.0
    return inc, refl, trans
