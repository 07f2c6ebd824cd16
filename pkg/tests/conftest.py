"""Shared test oracles: line integrals, Born-model data, peak finding.

Everything here is deliberately brute-force and independent of the
library's solver and transform code paths.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from phaseless.forward import BoundaryDataset, FrequencyGrid
from phaseless.phantom import Scene, beta_at


def line_integral_beta(scene: Scene, p0, p1, n: int = 4001) -> float:
    """Trapezoid quadrature of beta along the segment p0 -> p1."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    ts = np.linspace(0.0, 1.0, n)
    pts = p0[None, :] + ts[:, None] * (p1 - p0)[None, :]
    vals = beta_at(scene, pts)
    return float(np.trapezoid(vals, ts) * np.linalg.norm(p1 - p0))


def boundary_positions(n: int, radius: float = 1.0) -> np.ndarray:
    angles = 2 * np.pi * np.arange(n) / n
    return np.stack(
        [radius * np.cos(angles), radius * np.sin(angles), np.zeros(n)], axis=-1
    )


def born_model_dataset(
    scene: Scene,
    n_boundary: int,
    ks,
    quad_h: float,
    chunk: int = 30000,
) -> BoundaryDataset:
    """Dataset with f = |first-order scattered field|^2 by direct quadrature.

    Brute-force midpoint-lattice evaluation of the first-order integral
    for every boundary pair; no linear solve, no shared solver code.
    """
    ks = np.asarray(ks, dtype=float)
    pos = boundary_positions(n_boundary, scene.domain_radius)
    lo = np.min([np.asarray(i.center) - i.radius for i in scene.inclusions], axis=0)
    hi = np.max([np.asarray(i.center) + i.radius for i in scene.inclusions], axis=0)
    axes = [
        lo[a] + (np.arange(int(np.ceil((hi[a] - lo[a]) / quad_h))) + 0.5) * quad_h
        for a in range(3)
    ]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    beta = beta_at(scene, pts)
    sel = beta > 0
    pts, beta = pts[sel], beta[sel]

    if ks.size == 1:
        freqs = FrequencyGrid(k_min=ks[0] - 1.0, k_max=ks[0], count=2)
        k_index = {float(ks[0]): 1}
    else:
        span = ks.max() - ks.min()
        count = int(round(span / np.min(np.diff(np.sort(ks))))) + 1
        freqs = FrequencyGrid(k_min=ks.min(), k_max=ks.max(), count=count)
        k_index = {float(k): freqs.index_of(k) for k in ks}

    n = n_boundary
    intensity = np.zeros((n, n, freqs.count))
    scattered = np.zeros((n, n, freqs.count), dtype=complex)
    dists = np.linalg.norm(pos[:, None, :] - pts[None, :, :], axis=-1)  # (n, P)
    for k in ks:
        m = k_index[float(k)]
        vals = np.zeros((n, n), dtype=complex)
        for start in range(0, pts.shape[0], chunk):
            sl = slice(start, start + chunk)
            kern = np.exp(-1j * k * dists[:, sl]) / (4 * np.pi * dists[:, sl])
            vals += (kern * beta[sl]) @ kern.T
        vals *= k**2 * quad_h**3
        np.fill_diagonal(vals, 0.0)
        intensity[:, :, m] = np.abs(vals) ** 2
        scattered[:, :, m] = vals
    return BoundaryDataset(
        radius=scene.domain_radius,
        angles=2 * np.pi * np.arange(n) / n,
        freqs=freqs,
        intensity=intensity,
        scattered=scattered,
    )


def find_peaks(image, min_rel_height: float = 0.5, size: int = 5):
    """Coordinates of distinct local maxima above a relative height."""
    vals = image.values
    top = vals.max()
    if top <= 0:
        return []
    local = vals == ndimage.maximum_filter(vals, size=size, mode="constant", cval=-np.inf)
    candidates = np.argwhere(local & (vals >= min_rel_height * top))
    axis = image.axis
    peaks = []
    for i, j in candidates:
        p = np.array([axis[i], axis[j]])
        if all(np.linalg.norm(p - q) > 2 * image.pixel_size for q in peaks):
            peaks.append(p)
    return peaks


def chord_segment_distance(p0, p1, center) -> float:
    """Distance from a point to the segment p0 -> p1 (all in the plane)."""
    p0 = np.asarray(p0, dtype=float)[:2]
    p1 = np.asarray(p1, dtype=float)[:2]
    c = np.asarray(center, dtype=float)[:2]
    d = p1 - p0
    t = np.clip(np.dot(c - p0, d) / np.dot(d, d), 0.0, 1.0)
    return float(np.linalg.norm(p0 + t * d - c))
