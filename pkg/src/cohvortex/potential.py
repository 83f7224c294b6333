"""Piecewise-constant one-dimensional potentials.

Lengths are measured in units of ``a = 1/k`` and energies in units of the
incident energy, with ``2m/hbar**2 = 1``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PotentialProfile:
    """Ordered piecewise-constant potential.

    ``heights[r]`` is the potential on region ``r``; region 0 extends to
    ``-inf`` and is the incidence medium. A point lying exactly on a
    breakpoint belongs to the region on its right.
    """

    breakpoints: tuple[float, ...]
    heights: tuple[float, ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        hs = tuple(float(h) for h in self.heights)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "heights", hs)
        if len(hs) != len(bps) + 1:
            raise ValueError(
                f"need len(heights) == len(breakpoints) + 1, got {len(hs)} and {len(bps)}"
            )
        if not all(math.isfinite(v) for v in bps + hs):
            raise ValueError("breakpoints and heights must be finite")
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @property
    def n_regions(self) -> int:
        return len(self.heights)

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "heights": list(self.heights)}

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialProfile":
        return cls(tuple(d["breakpoints"]), tuple(d["heights"]))


def free_space(V: float = 0.0) -> PotentialProfile:
    """A single region of constant potential ``V``."""
    return PotentialProfile((), (V,))


def make_step(V: float, position: float = 0.0) -> PotentialProfile:
    """Step from 0 (left) to ``V`` (right) at ``position``."""
    if not (math.isfinite(V) and math.isfinite(position)):
        raise ValueError(f"non-finite step parameters V={V!r}, position={position!r}")
    return PotentialProfile((position,), (0.0, V))


def region_index(profile: PotentialProfile, x: float) -> int:
    return bisect.bisect_right(profile.breakpoints, x)


def region_indices(profile: PotentialProfile, x) -> np.ndarray:
    """Vectorized :func:`region_index`."""
    return np.searchsorted(np.asarray(profile.breakpoints, dtype=float), x, side="right")
