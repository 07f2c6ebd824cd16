"""Image postprocessing: local disk averaging and nonnegativity truncation."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .radon import Image2D

__all__ = ["smooth_and_clip"]


def smooth_and_clip(image: Image2D, disk_radius: float = 0.005) -> Image2D:
    """Replace each pixel by its mean over the closed disk, then clip at zero.

    The disk radius is in physical units; a radius smaller than one
    pixel reduces to pure clipping.  Near the image boundary the mean is
    taken over the part of the disk inside the domain.
    """
    if disk_radius < 0:
        raise ValueError("disk_radius must be >= 0")
    step = image.pixel_size
    reach = int(disk_radius / step)
    if reach == 0:
        return Image2D(
            values=np.maximum(image.values, 0.0), half_width=image.half_width
        )
    offs = np.arange(-reach, reach + 1)
    di, dj = np.meshgrid(offs, offs, indexing="ij")
    kernel = ((di * step) ** 2 + (dj * step) ** 2 <= disk_radius**2).astype(float)
    summed = ndimage.convolve(image.values, kernel, mode="constant", cval=0.0)
    counts = ndimage.convolve(
        np.ones_like(image.values), kernel, mode="constant", cval=0.0
    )
    return Image2D(
        values=np.maximum(summed / counts, 0.0), half_width=image.half_width
    )
