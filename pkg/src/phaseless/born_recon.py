"""Weak-contrast (first-order) tomographic reconstruction from intensities.

At large k the modulus of the first-order scattered field approaches
``(k / 8 pi) / |x - x0|`` times the line integral of the perturbation
along the source-receiver chord, so ``(8 pi / k) |x - x0| sqrt(f)``
sampled over all boundary pairs approximates the Radon transform of the
cross-section, and filtered backprojection inverts it.

The square root reconciles the measured intensities ``f = |u_sc|^2``
with the first-power modulus in that asymptotic; ``use_sqrt=False``
reproduces the first-power-in-f variant for comparison.
"""

from __future__ import annotations

import numpy as np

from .forward import BoundaryDataset
from .radon import Image2D, SinogramSpec, chord_from_angles, radon_inverse, resample_to_sinogram

__all__ = ["born_sinogram", "reconstruct_born"]


def born_sinogram(data: BoundaryDataset, k: float, use_sqrt: bool = True) -> np.ndarray:
    """Scattered (r, theta, value) Radon samples at one frequency.

    ``k`` must be a sample of the dataset's frequency grid.  Emits one
    sample per ordered boundary pair with value
    ``(8 pi / k) |x - x0| sqrt(f(x, x0, k))``.
    """
    ik = data.freqs.index_of(k)
    n = data.n_boundary
    src, rec = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    off = src != rec
    src = src[off]
    rec = rec[off]
    r, theta = chord_from_angles(data.angles[rec], data.angles[src], data.radius)
    f = data.intensity[src, rec, ik]
    magnitude = np.sqrt(f) if use_sqrt else f
    dist = data.pair_distances()[src, rec]
    value = (8.0 * np.pi / k) * dist * magnitude
    return np.column_stack([r, theta, value])


def reconstruct_born(
    data: BoundaryDataset,
    k: float,
    spec: SinogramSpec | None = None,
    n: int = 101,
    use_sqrt: bool = True,
    taper: float = 0.0,
) -> Image2D:
    """Filtered backprojection of the single-frequency Born sinogram.

    Returns the raw image; postprocessing (smoothing, clipping) is
    applied separately.
    """
    if spec is None:
        spec = SinogramSpec(n_offsets=129, n_angles=data.n_boundary, r_max=data.radius)
    samples = born_sinogram(data, k, use_sqrt=use_sqrt)
    sino = resample_to_sinogram(samples, spec)
    return radon_inverse(sino, n, taper=taper)
