"""CSV and portable-pixmap writers.

All floats are written with 17 significant digits so that identical runs
produce byte-identical files.
"""
from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from matplotlib.colors import hsv_to_rgb

from .coherence import CoherenceField
from .singularity import Match, VortexSite

FMT = "%.17g"


def fmt(v) -> str:
    if v is None:
        return ""
    return FMT % v


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_field_csv(path, cf: CoherenceField):
    """Columns ``x, xp, re_G, im_G, abs2_G, arg_G``; row-major in x then x'."""
    X, XP = np.meshgrid(cf.x, cf.xp, indexing="ij")
    v = cf.values
    table = np.column_stack(
        [X.ravel(), XP.ravel(), v.real.ravel(), v.imag.ravel(), (np.abs(v) ** 2).ravel(), np.angle(v).ravel()]
    )
    path = Path(path)
    np.savetxt(path, table, fmt=FMT, delimiter=",", header="x,xp,re_G,im_G,abs2_G,arg_G", comments="")
    return path


def write_catalog_csv(path, sites: Sequence[VortexSite]):
    """Columns ``x, xp, charge, source, residual``; sorted by x then x'."""
    rows = (
        (float(s.x), float(s.xp), int(s.charge), s.source, None if s.residual is None else float(s.residual))
        for s in sorted(sites, key=lambda s: (s.x, s.xp))
    )
    return write_rows(path, ["x", "xp", "charge", "source", "residual"], rows)


def write_match_csv(path, matches: Sequence[Match], unmatched: Sequence[VortexSite] = ()):
    rows = []
    for m in matches:
        f = m.found
        rows.append(
            (
                float(m.reference.x),
                float(m.reference.xp),
                int(m.reference.charge),
                None if f is None else float(f.x),
                None if f is None else float(f.xp),
                float(m.distance) if f is not None else "inf",
            )
        )
    for f in unmatched:
        rows.append((None, None, int(f.charge), float(f.x), float(f.xp), "unmatched"))
    return write_rows(path, ["x_analytic", "xp_analytic", "charge", "x_detected", "xp_detected", "distance"], rows)


def _image_rows(a: np.ndarray) -> np.ndarray:
    # values[i, j] has x along i; images put x across and x' upwards
    return np.swapaxes(a, 0, 1)[::-1]


def density_image(cf: CoherenceField) -> np.ndarray:
    """|G|**2 scaled to a peak of 1, as an 8-bit RGB grey image."""
    d = np.abs(cf.values) ** 2
    d = np.nan_to_num(d / np.nanmax(d))
    grey = np.round(255 * np.clip(d, 0, 1)).astype(np.uint8)
    grey = _image_rows(grey)
    return np.repeat(grey[:, :, None], 3, axis=2)


def phase_image(cf: CoherenceField) -> np.ndarray:
    """Hue from arg G over (-pi, pi], brightness from |G|**2 / max."""
    v = cf.values
    hue = (np.angle(v) + np.pi) / (2 * np.pi)
    hue = np.where(hue >= 1.0, 0.0, hue)
    d = np.abs(v) ** 2
    val = np.nan_to_num(d / np.nanmax(d))
    hsv = np.stack([np.nan_to_num(hue), np.ones_like(hue), np.clip(val, 0, 1)], axis=-1)
    rgb = np.round(255 * hsv_to_rgb(hsv)).astype(np.uint8)
    return _image_rows(rgb)


def write_ppm(path, rgb: np.ndarray):
    """Binary (P6) pixmap with maxval 255."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(rgb.tobytes())
    return path


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = re.match(rb"P6\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError("not a binary PPM")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise ValueError("only 8-bit pixmaps are supported")
    return np.frombuffer(data[m.end() :], dtype=np.uint8).reshape(h, w, 3)
