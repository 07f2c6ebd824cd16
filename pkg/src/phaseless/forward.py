"""Volume-integral forward solver and phaseless boundary-data synthesis.

The total field for a point source satisfies, on the support of the
perturbation, the discretized volume integral equation

    u(x) = u0(x) + k^2 * sum_xi  K(x, xi) beta(xi) u(xi) h^3,

with the free-space kernel ``K(x, xi) = exp(-ik|x-xi|) / (4 pi |x-xi|)``
and the singular self-voxel replaced by its analytic mean over the
equal-volume ball.  The discrete system is solved matrix-free: the
kernel application is a convolution on the bounding box of the support,
evaluated with zero-padded FFTs, inside a restarted GMRES iteration.

Boundary data are intensities ``f(x, x0, k) = |u_sc(x, x0, k)|^2`` for
pairs of equispaced points on the measurement circle over a uniform
frequency grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .phantom import Scene, beta_at

__all__ = [
    "FrequencyGrid",
    "VolumeGrid",
    "ComplexVolumeField",
    "BoundaryDataset",
    "ConvergenceError",
    "GridResolutionWarning",
    "incident_field",
    "suggested_spacing",
    "solve_total_field",
    "scattered_field_at",
    "born_scattered_field",
    "synthesize_dataset",
]

FOUR_PI = 4.0 * np.pi


class ConvergenceError(RuntimeError):
    """Iterative solve failed to reach the requested residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class GridResolutionWarning(UserWarning):
    """Volume grid is coarser than the configured points per wavelength."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid of ``count`` dimensionless frequencies on [k_min, k_max]."""

    k_min: float
    k_max: float
    count: int

    def __post_init__(self) -> None:
        if not (0 < self.k_min < self.k_max):
            raise ValueError("need 0 < k_min < k_max")
        if self.count < 2:
            raise ValueError("need at least 2 frequency samples")

    @property
    def samples(self) -> np.ndarray:
        return np.linspace(self.k_min, self.k_max, self.count)

    def index_of(self, k: float) -> int:
        """Index of a frequency on the grid; raises if k is not a sample."""
        samples = self.samples
        idx = int(np.argmin(np.abs(samples - k)))
        if abs(samples[idx] - k) > 1e-9 * max(1.0, abs(k)):
            raise ValueError(
                f"k={k} is not on the frequency grid "
                f"[{self.k_min}, {self.k_max}] with {self.count} samples"
            )
        return idx


@dataclass
class VolumeGrid:
    """Uniform voxel lattice covering the support of a scene's perturbation.

    ``origin`` is the center of voxel (0, 0, 0) and ``beta`` holds the
    perturbation sampled at all voxel centers, shape ``shape``.
    """

    origin: np.ndarray
    shape: tuple[int, int, int]
    spacing: float
    beta: np.ndarray

    def __post_init__(self) -> None:
        self.origin = np.asarray(self.origin, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.shape != tuple(self.shape):
            raise ValueError("beta must have the grid shape")
        if self.n_voxels and not self.spacing > 0:
            raise ValueError("spacing must be > 0")

    @classmethod
    def from_scene(cls, scene: Scene, spacing: float) -> "VolumeGrid":
        """Lattice of the given spacing covering all inclusion balls."""
        if not scene.inclusions:
            return cls(
                origin=np.zeros(3),
                shape=(0, 0, 0),
                spacing=max(spacing, 1.0),
                beta=np.zeros((0, 0, 0)),
            )
        if not spacing > 0:
            raise ValueError("spacing must be > 0")
        lo = np.min(
            [np.asarray(i.center) - i.radius for i in scene.inclusions], axis=0
        )
        hi = np.max(
            [np.asarray(i.center) + i.radius for i in scene.inclusions], axis=0
        )
        mid = (lo + hi) / 2.0
        counts = tuple(
            int(math.ceil((h - l) / spacing)) + 1 for l, h in zip(lo, hi)
        )
        origin = mid - (np.asarray(counts) - 1) * spacing / 2.0
        axes = [origin[a] + spacing * np.arange(counts[a]) for a in range(3)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        beta = beta_at(scene, pts.reshape(-1, 3)).reshape(counts)
        return cls(origin=origin, shape=counts, spacing=spacing, beta=beta)

    @property
    def n_voxels(self) -> int:
        return int(np.prod(self.shape))

    def voxel_centers(self) -> np.ndarray:
        """All voxel centers as an (n_voxels, 3) array in C order."""
        axes = [self.origin[a] + self.spacing * np.arange(self.shape[a]) for a in range(3)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return pts.reshape(-1, 3)

    def support_centers(self) -> np.ndarray:
        """Centers of voxels where beta is nonzero."""
        return self.voxel_centers()[self.beta.reshape(-1) > 0]


@dataclass
class ComplexVolumeField:
    """Complex total field on a volume grid for one (source, frequency)."""

    values: np.ndarray
    source: np.ndarray
    k: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=complex)
        self.source = np.asarray(self.source, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")


@dataclass
class BoundaryDataset:
    """Phaseless intensities on boundary-point pairs over a frequency grid.

    ``intensity[i, j, m]`` is ``f(x_j, x0_i, k_m)`` for receiver j and
    source i; diagonal entries (coincident points) are excluded and kept
    zero.  In synthetic mode ``scattered`` stores the complex scattered
    field with the same layout.
    """

    radius: float
    angles: np.ndarray
    freqs: FrequencyGrid
    intensity: np.ndarray
    scattered: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.angles = np.asarray(self.angles, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        n = self.angles.size
        nk = self.freqs.count
        if self.intensity.shape != (n, n, nk):
            raise ValueError("intensity must have shape (n, n, n_k)")
        off = ~np.eye(n, dtype=bool)
        if np.any(self.intensity[off] < 0) or not np.all(
            np.isfinite(self.intensity[off])
        ):
            raise ValueError("intensities must be finite and nonnegative")
        if self.scattered is not None:
            self.scattered = np.asarray(self.scattered, dtype=complex)
            if self.scattered.shape != self.intensity.shape:
                raise ValueError("scattered must match intensity shape")

    @property
    def n_boundary(self) -> int:
        return self.angles.size

    def positions(self) -> np.ndarray:
        """Boundary points as (n, 3) vectors on the z = 0 circle."""
        return np.stack(
            [
                self.radius * np.cos(self.angles),
                self.radius * np.sin(self.angles),
                np.zeros_like(self.angles),
            ],
            axis=-1,
        )

    def pair_distances(self) -> np.ndarray:
        """Matrix of |x_j - x0_i| (zero on the diagonal)."""
        pos = self.positions()
        return np.linalg.norm(pos[None, :, :] - pos[:, None, :], axis=-1)

    def pairs(self):
        """Ordered (source, receiver) index pairs, coincident excluded."""
        n = self.n_boundary
        for i in range(n):
            for j in range(n):
                if i != j:
                    yield i, j


def incident_field(x, x0, k: float) -> complex:
    """Incident spherical wave ``exp(-ik|x-x0|) / (4 pi |x-x0|)``."""
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    d = float(np.linalg.norm(x - x0))
    if d <= 0.0:
        raise ValueError("incident field is undefined at the source point")
    return complex(np.exp(-1j * k * d) / (FOUR_PI * d))


def _incident_many(pts: np.ndarray, x0: np.ndarray, k: float) -> np.ndarray:
    d = np.linalg.norm(pts - x0, axis=-1)
    if np.any(d <= 0):
        raise ValueError("incident field is undefined at the source point")
    return np.exp(-1j * k * d) / (FOUR_PI * d)


def suggested_spacing(scene: Scene, k_max: float, points_per_wavelength: float = 10.0) -> float:
    """Grid spacing h <= 2 pi / (ppw * k * sqrt(1 + max beta))."""
    return 2.0 * np.pi / (
        points_per_wavelength * k_max * math.sqrt(1.0 + scene.max_amplitude)
    )


def _self_term(k: float, spacing: float) -> complex:
    """Integral of the kernel over the ball of volume h^3 centered at 0."""
    a = spacing * (3.0 / FOUR_PI) ** (1.0 / 3.0)
    return (1.0 - np.exp(-1j * k * a) * (1.0 + 1j * k * a)) / k**2


class _Workspace:
    """Per-(grid, k) solver state: the padded kernel spectrum."""

    def __init__(self, grid: VolumeGrid, k: float):
        self.grid = grid
        self.k = float(k)
        n1, n2, n3 = grid.shape
        h = grid.spacing
        disp = []
        for n in (n1, n2, n3):
            d = np.arange(2 * n)
            d[d >= n] -= 2 * n
            disp.append(d * h)
        dx, dy, dz = np.meshgrid(*disp, indexing="ij")
        dist = np.sqrt(dx**2 + dy**2 + dz**2)
        with np.errstate(divide="ignore", invalid="ignore"):
            block = np.exp(-1j * self.k * dist) / (FOUR_PI * dist) * h**3
        block[0, 0, 0] = _self_term(self.k, h)
        self.kernel_fft = np.fft.fftn(block)

    def convolve(self, w: np.ndarray) -> np.ndarray:
        n1, n2, n3 = self.grid.shape
        spectrum = np.fft.fftn(w, s=self.kernel_fft.shape, axes=(0, 1, 2))
        return np.fft.ifftn(self.kernel_fft * spectrum)[:n1, :n2, :n3]

    def apply(self, u: np.ndarray) -> np.ndarray:
        """u - k^2 * conv(beta * u), the discrete integral operator."""
        return u - self.k**2 * self.convolve(self.grid.beta * u)

    def solve(self, x0: np.ndarray, tol: float, maxiter: int = 400) -> np.ndarray:
        grid = self.grid
        u0 = _incident_many(grid.voxel_centers(), x0, self.k).reshape(grid.shape)
        shape = grid.shape
        op = LinearOperator(
            (grid.n_voxels, grid.n_voxels),
            matvec=lambda v: self.apply(v.reshape(shape)).ravel(),
            dtype=complex,
        )
        b = u0.ravel()
        sol, info = gmres(
            op, b, rtol=tol, atol=0.0, restart=50, maxiter=maxiter, x0=b.copy()
        )
        u = sol.reshape(shape)
        residual = float(
            np.linalg.norm(self.apply(u).ravel() - b) / np.linalg.norm(b)
        )
        if info != 0 or residual > tol * (1 + 1e-9):
            raise ConvergenceError(
                f"volume solve did not converge: relative residual {residual:.3e} "
                f"> tol {tol:.3e}",
                residual=residual,
            )
        return u

    def scattered_at(self, points: np.ndarray, u: np.ndarray) -> np.ndarray:
        return _evaluate_scattered(self.grid, self.k, u, points)


def _evaluate_scattered(
    grid: VolumeGrid, k: float, u: np.ndarray, points: np.ndarray
) -> np.ndarray:
    """k^2 sum_xi K(p, xi) beta(xi) u(xi) h^3 at exterior points."""
    sel = grid.beta.reshape(-1) > 0
    if not sel.any():
        return np.zeros(len(points), dtype=complex)
    centers = grid.voxel_centers()[sel]
    weights = (grid.beta.reshape(-1)[sel] * u.reshape(-1)[sel]) * grid.spacing**3
    out = np.empty(len(points), dtype=complex)
    for idx, p in enumerate(points):
        dist = np.linalg.norm(centers - p, axis=-1)
        out[idx] = np.sum(np.exp(-1j * k * dist) / (FOUR_PI * dist) * weights)
    return k**2 * out


def _check_resolution(grid: VolumeGrid, k: float, min_ppw: float) -> None:
    if grid.n_voxels == 0:
        return
    beta_max = float(grid.beta.max(initial=0.0))
    ppw = 2.0 * np.pi / (k * grid.spacing * math.sqrt(1.0 + beta_max))
    if ppw < min_ppw * (1.0 - 1e-9):
        warnings.warn(
            f"grid spacing {grid.spacing:.4g} gives {ppw:.1f} points per wavelength "
            f"at k={k:.4g}, below the configured minimum {min_ppw}",
            GridResolutionWarning,
            stacklevel=3,
        )


def _require_outside_support(scene: Scene, x: np.ndarray, what: str) -> None:
    for inc in scene.inclusions:
        if np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(inc.center)) < inc.radius:
            raise ValueError(f"{what} lies inside the support of the perturbation")


def solve_total_field(
    scene: Scene,
    grid: VolumeGrid,
    x0,
    k: float,
    tol: float = 1e-6,
    min_ppw: float = 10.0,
    maxiter: int = 400,
) -> ComplexVolumeField:
    """Solve the discretized volume integral equation for the total field.

    Returns the field on the grid with relative residual <= tol in the
    discrete equation.  Raises :class:`ConvergenceError` if the Krylov
    iteration stalls; emits :class:`GridResolutionWarning` when the grid
    is coarser than ``min_ppw`` points per wavelength.
    """
    x0 = np.asarray(x0, dtype=float)
    if not tol > 0:
        raise ValueError("tol must be > 0")
    _require_outside_support(scene, x0, "source")
    if grid.n_voxels == 0 or not np.any(grid.beta > 0):
        values = (
            _incident_many(grid.voxel_centers(), x0, k).reshape(grid.shape)
            if grid.n_voxels
            else np.zeros(grid.shape, dtype=complex)
        )
        return ComplexVolumeField(values=values, source=x0, k=k)
    _check_resolution(grid, k, min_ppw)
    ws = _Workspace(grid, k)
    return ComplexVolumeField(values=ws.solve(x0, tol, maxiter), source=x0, k=k)


def scattered_field_at(field: ComplexVolumeField, grid: VolumeGrid, x) -> complex:
    """Scattered field at an exterior point from a solved volume field."""
    x = np.asarray(x, dtype=float)
    if grid.n_voxels and np.any(grid.beta > 0):
        frac = (x - grid.origin) / grid.spacing
        idx = np.round(frac).astype(int)
        if np.all(idx >= 0) and np.all(idx < np.asarray(grid.shape)):
            if grid.beta[tuple(idx)] > 0 and np.all(
                np.abs(frac - idx) <= 0.5 + 1e-12
            ):
                raise ValueError("evaluation point lies inside a support voxel")
    else:
        return 0.0 + 0.0j
    return complex(
        _evaluate_scattered(grid, field.k, field.values, np.asarray([x], dtype=float))[0]
    )


def born_scattered_field(scene: Scene, x, x0, k: float, quad_h: float) -> complex:
    """First-order scattered field by direct midpoint quadrature.

    Independent of the volume solver: the integrand
    ``k^2 K(x, xi) beta(xi) u0(xi, x0)`` is summed over a midpoint
    lattice of spacing ``quad_h`` covering the inclusion balls.  Serves
    as the weak-contrast oracle.
    """
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    _require_outside_support(scene, x, "evaluation point")
    _require_outside_support(scene, x0, "source")
    if not scene.inclusions:
        return 0.0 + 0.0j
    if not quad_h > 0:
        raise ValueError("quad_h must be > 0")
    lo = np.min([np.asarray(i.center) - i.radius for i in scene.inclusions], axis=0)
    hi = np.max([np.asarray(i.center) + i.radius for i in scene.inclusions], axis=0)
    axes = [
        lo[a] + (np.arange(int(math.ceil((hi[a] - lo[a]) / quad_h))) + 0.5) * quad_h
        for a in range(3)
    ]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    beta = beta_at(scene, pts)
    sel = beta > 0
    pts = pts[sel]
    beta = beta[sel]
    if pts.size == 0:
        return 0.0 + 0.0j
    d_rec = np.linalg.norm(pts - x, axis=-1)
    d_src = np.linalg.norm(pts - x0, axis=-1)
    integrand = (
        np.exp(-1j * k * d_rec)
        / (FOUR_PI * d_rec)
        * beta
        * np.exp(-1j * k * d_src)
        / (FOUR_PI * d_src)
    )
    return complex(k**2 * np.sum(integrand) * quad_h**3)


def synthesize_dataset(
    scene: Scene,
    n_boundary: int,
    freqs: FrequencyGrid,
    grid_spec: VolumeGrid | float | None = None,
    tol: float = 1e-6,
    store_complex: bool = False,
    min_ppw: float = 10.0,
) -> BoundaryDataset:
    """Solve per (source, frequency) and collect boundary intensities.

    Sources and receivers are the same ``n_boundary`` equispaced points
    on the measurement circle.  ``grid_spec`` may be a prebuilt
    :class:`VolumeGrid`, a spacing, or None to choose the spacing from
    ``min_ppw`` points per wavelength at the top frequency.
    """
    if n_boundary < 8:
        raise ValueError("need at least 8 boundary points")
    angles = 2.0 * np.pi * np.arange(n_boundary) / n_boundary
    radius = scene.domain_radius
    positions = np.stack(
        [radius * np.cos(angles), radius * np.sin(angles), np.zeros(n_boundary)],
        axis=-1,
    )
    k_samples = freqs.samples
    intensity = np.zeros((n_boundary, n_boundary, freqs.count))
    scattered = (
        np.zeros((n_boundary, n_boundary, freqs.count), dtype=complex)
        if store_complex
        else None
    )
    if not scene.inclusions:
        return BoundaryDataset(
            radius=radius,
            angles=angles,
            freqs=freqs,
            intensity=intensity,
            scattered=scattered,
        )

    if isinstance(grid_spec, VolumeGrid):
        grid = grid_spec
    else:
        spacing = (
            float(grid_spec)
            if grid_spec is not None
            else suggested_spacing(scene, freqs.k_max, min_ppw)
        )
        grid = VolumeGrid.from_scene(scene, spacing)
    off_diag = ~np.eye(n_boundary, dtype=bool)

    for m, k in enumerate(k_samples):
        _check_resolution(grid, k, min_ppw)
        ws = _Workspace(grid, k)
        for i in range(n_boundary):
            try:
                u = ws.solve(positions[i], tol)
            except ConvergenceError as err:
                raise ConvergenceError(
                    f"source {i} (angle {angles[i]:.4f}), k={k:.6g}: {err}",
                    residual=err.residual,
                ) from err
            receivers = np.flatnonzero(off_diag[i])
            vals = ws.scattered_at(positions[receivers], u)
            intensity[i, receivers, m] = np.abs(vals) ** 2
            if scattered is not None:
                scattered[i, receivers, m] = vals
    return BoundaryDataset(
        radius=radius,
        angles=angles,
        freqs=freqs,
        intensity=intensity,
        scattered=scattered,
    )
