"""2-D Radon transform, filtered backprojection, and chord geometry.

Conventions
-----------
A line with offset ``r`` and angle ``theta`` is
``{p : p . (cos theta, sin theta) = r}``; its direction vector is
``(-sin theta, cos theta)``.  Sinograms are real matrices indexed
(offset, angle) on uniform grids, offsets spanning ``(-r_max, r_max)``
and angles ``[0, pi)``.  Images are square grids over
``[-W, W]^2`` with ``W = r_max * sqrt(2)/2``, the cross-section square
inscribed in the measurement circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SinogramSpec",
    "Sinogram",
    "Image2D",
    "chord_coordinates",
    "chord_from_angles",
    "radon_forward",
    "radon_inverse",
    "resample_to_sinogram",
]


@dataclass(frozen=True)
class SinogramSpec:
    """Regular (offset, angle) grid for sinograms."""

    n_offsets: int = 129
    n_angles: int = 64
    r_max: float = 1.0

    def __post_init__(self) -> None:
        if self.n_offsets < 2 or self.n_angles < 1:
            raise ValueError("need n_offsets >= 2 and n_angles >= 1")
        if not self.r_max > 0:
            raise ValueError("r_max must be > 0")

    @property
    def offsets(self) -> np.ndarray:
        return np.linspace(-self.r_max, self.r_max, self.n_offsets)

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_angles) * (np.pi / self.n_angles)


@dataclass
class Sinogram:
    """Values on a regular (offset, angle) grid with a populated-cell mask."""

    offsets: np.ndarray
    angles: np.ndarray
    values: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self) -> None:
        self.offsets = np.asarray(self.offsets, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.mask is None:
            self.mask = np.ones(self.values.shape, dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.values.shape != (self.offsets.size, self.angles.size):
            raise ValueError("values must have shape (n_offsets, n_angles)")
        if self.mask.shape != self.values.shape:
            raise ValueError("mask must match values shape")
        for grid in (self.offsets, self.angles):
            if grid.size > 1:
                steps = np.diff(grid)
                if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-8):
                    raise ValueError("grids must be strictly increasing and uniform")
        if not np.all(np.isfinite(self.values[self.mask])):
            raise ValueError("populated sinogram cells must be finite")


@dataclass
class Image2D:
    """Real values on the uniform n x n grid over ``[-half_width, half_width]^2``.

    ``values[i, j]`` is the sample at ``(x1, x2) = (axis[i], axis[j])``.
    """

    values: np.ndarray
    half_width: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("image values must be square")
        if self.values.shape[0] < 2:
            raise ValueError("image needs at least 2 x 2 pixels")
        if not self.half_width > 0:
            raise ValueError("half_width must be > 0")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("image values must be finite")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)

    @property
    def pixel_size(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)


def chord_from_angles(phi1, phi0, radius: float):
    """Radon coordinates of the chord between boundary angles phi1, phi0.

    Vectorized over phi1/phi0.  Returns (r, theta) with theta reduced to
    [0, pi), flipping the sign of r when the reduction crosses pi.  Both
    endpoints satisfy the line equation ``p . (cos theta, sin theta) = r``.
    """
    phi1 = np.asarray(phi1, dtype=float)
    phi0 = np.asarray(phi0, dtype=float)
    r = radius * np.cos((phi1 - phi0) / 2.0)
    theta = (phi1 + phi0) / 2.0
    wraps = np.floor(theta / np.pi)
    theta = theta - wraps * np.pi
    r = r * np.where(wraps % 2 == 0, 1.0, -1.0)
    # guard against theta == pi from rounding
    hit = theta >= np.pi
    theta = np.where(hit, theta - np.pi, theta)
    r = np.where(hit, -r, r)
    return r, theta


def chord_coordinates(x, x0, radius: float) -> tuple[float, float]:
    """Radon (r, theta) of the chord through boundary points x and x0.

    Both points must lie on the circle of the given radius (within 1e-9)
    and must be distinct.
    """
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    for p in (x, x0):
        if abs(math.hypot(p[0], p[1]) - radius) > 1e-9 * max(1.0, radius):
            raise ValueError(f"point {p} is not on the circle of radius {radius}")
    if math.hypot(x[0] - x0[0], x[1] - x0[1]) < 1e-12 * max(1.0, radius):
        raise ValueError("degenerate chord: boundary points coincide")
    phi1 = math.atan2(x[1], x[0])
    phi0 = math.atan2(x0[1], x0[0])
    r, theta = chord_from_angles(phi1, phi0, radius)
    return float(r), float(theta)


def _interp_bilinear(image: Image2D, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Bilinear sample of an image at coordinates (p1, p2); zero outside."""
    n = image.n
    step = image.pixel_size
    u = (p1 + image.half_width) / step
    v = (p2 + image.half_width) / step
    valid = (u >= 0) & (u <= n - 1) & (v >= 0) & (v <= n - 1)
    u = np.clip(u, 0, n - 1)
    v = np.clip(v, 0, n - 1)
    i0 = np.clip(np.floor(u).astype(int), 0, n - 2)
    j0 = np.clip(np.floor(v).astype(int), 0, n - 2)
    fu = u - i0
    fv = v - j0
    vals = image.values
    out = (
        vals[i0, j0] * (1 - fu) * (1 - fv)
        + vals[i0 + 1, j0] * fu * (1 - fv)
        + vals[i0, j0 + 1] * (1 - fu) * fv
        + vals[i0 + 1, j0 + 1] * fu * fv
    )
    return np.where(valid, out, 0.0)


def radon_forward(image: Image2D, spec: SinogramSpec, step_factor: float = 0.5) -> Sinogram:
    """Line integrals of an image over the sinogram grid.

    Each line is sampled at spacing ``step_factor * pixel_size`` and
    integrated with the midpoint rule; samples outside the image square
    contribute zero.
    """
    offsets = spec.offsets
    angles = spec.angles
    w = image.half_width
    dt = image.pixel_size * step_factor
    t_max = w * math.sqrt(2.0)
    n_t = max(2, int(math.ceil(2 * t_max / dt)))
    t = (np.arange(n_t) + 0.5) * dt - t_max
    values = np.empty((offsets.size, angles.size))
    for j, th in enumerate(angles):
        c, s = math.cos(th), math.sin(th)
        p1 = offsets[:, None] * c - t[None, :] * s
        p2 = offsets[:, None] * s + t[None, :] * c
        values[:, j] = _interp_bilinear(image, p1, p2).sum(axis=1) * dt
    return Sinogram(offsets=offsets, angles=angles, values=values)


def _ramp_filter(n_pad: int, spacing: float, taper: float) -> np.ndarray:
    """Frequency response of the band-limited ramp on an n_pad FFT grid.

    Built from the discrete-space ramp kernel so the DC term is handled
    correctly; optional raised-cosine rolloff over the top ``taper``
    fraction of the band.
    """
    kernel = np.zeros(n_pad)
    kernel[0] = 0.25
    m = np.arange(1, n_pad // 2 + 1)
    odd = m[m % 2 == 1]
    kernel[odd] = -1.0 / (np.pi * odd) ** 2
    kernel[-odd] = -1.0 / (np.pi * odd) ** 2
    response = np.real(np.fft.fft(kernel)) / spacing
    if taper > 0:
        nu = np.abs(np.fft.fftfreq(n_pad, d=spacing))
        nu_max = 0.5 / spacing
        cut = (1.0 - taper) * nu_max
        roll = nu > cut
        response[roll] *= 0.5 * (1 + np.cos(np.pi * (nu[roll] - cut) / (nu_max - cut)))
    return response


def radon_inverse(
    sinogram: Sinogram,
    n: int,
    half_width: float | None = None,
    taper: float = 0.0,
) -> Image2D:
    """Filtered backprojection onto the n x n cross-section square.

    The sinogram must be fully populated; resample scattered samples
    with :func:`resample_to_sinogram` first.
    """
    if not sinogram.mask.all():
        raise ValueError(
            "sinogram has unpopulated cells; apply resample_to_sinogram first"
        )
    offsets = sinogram.offsets
    angles = sinogram.angles
    if half_width is None:
        half_width = float(np.max(np.abs(offsets))) * math.sqrt(2.0) / 2.0
    dr = offsets[1] - offsets[0]
    n_pad = 1 << int(math.ceil(math.log2(2 * offsets.size)))
    response = _ramp_filter(n_pad, dr, taper)
    spectrum = np.fft.fft(sinogram.values, n=n_pad, axis=0)
    filtered = np.real(np.fft.ifft(spectrum * response[:, None], axis=0))[: offsets.size]

    xs = np.linspace(-half_width, half_width, n)
    x1 = xs[:, None]
    x2 = xs[None, :]
    out = np.zeros((n, n))
    for j, th in enumerate(angles):
        s = x1 * math.cos(th) + x2 * math.sin(th)
        out += np.interp(s, offsets, filtered[:, j], left=0.0, right=0.0)
    out *= np.pi / angles.size
    return Image2D(values=out, half_width=half_width)


def resample_to_sinogram(samples, spec: SinogramSpec) -> Sinogram:
    """Bin scattered (r, theta, value) samples onto the regular grid.

    Samples are snapped to the nearest grid node (duplicates averaged).
    Per angle column, cells between populated nodes are filled by linear
    interpolation in r (nearest value beyond the extremes), and cells
    with ``|r|`` beyond the largest populated ``|r|`` are set to zero.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples to resample")
    if samples.ndim != 2 or samples.shape[1] != 3:
        raise ValueError("samples must be an (n, 3) array of (r, theta, value)")
    offsets = spec.offsets
    angles = spec.angles
    dr = offsets[1] - offsets[0]
    dth = np.pi / spec.n_angles

    r = samples[:, 0].copy()
    th = samples[:, 1].copy()
    val = samples[:, 2]
    # reduce angles to [0, pi), flipping r on each half-turn
    wraps = np.floor(th / np.pi)
    th -= wraps * np.pi
    r *= np.where(wraps % 2 == 0, 1.0, -1.0)

    j = np.round(th / dth).astype(int)
    wrap = j >= spec.n_angles
    j[wrap] = 0
    r[wrap] = -r[wrap]
    i = np.round((r - offsets[0]) / dr).astype(int)
    keep = (i >= 0) & (i < spec.n_offsets)

    acc = np.zeros((spec.n_offsets, spec.n_angles))
    cnt = np.zeros((spec.n_offsets, spec.n_angles))
    np.add.at(acc, (i[keep], j[keep]), val[keep])
    np.add.at(cnt, (i[keep], j[keep]), 1.0)
    populated = cnt > 0
    values = np.zeros_like(acc)
    values[populated] = acc[populated] / cnt[populated]

    for col in range(spec.n_angles):
        pop = populated[:, col]
        if not pop.any():
            continue
        if pop.all():
            continue
        r_pop = offsets[pop]
        filled = np.interp(offsets, r_pop, values[pop, col])
        filled[np.abs(offsets) > np.max(np.abs(r_pop)) + 1e-12] = 0.0
        values[~pop, col] = filled[~pop]
    return Sinogram(offsets=offsets, angles=angles, values=values)
