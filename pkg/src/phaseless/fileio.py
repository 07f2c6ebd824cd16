"""CSV and portable-graymap serialization for datasets, sinograms, images.

All writers format floats with ``%.17g`` so repeated runs of a
deterministic pipeline produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .forward import BoundaryDataset, FrequencyGrid
from .radon import Image2D, Sinogram

__all__ = [
    "save_dataset",
    "load_dataset",
    "save_sinogram",
    "load_sinogram",
    "save_image_csv",
    "load_image_csv",
    "save_image_pgm",
]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _header_value(line: str, key: str) -> str:
    prefix = f"# {key} ="
    if not line.startswith(prefix):
        raise ValueError(f"expected header '{prefix} ...', got {line!r}")
    return line[len(prefix):].strip()


# ---------------------------------------------------------------------------
# Boundary dataset
# ---------------------------------------------------------------------------
#
#   # phaseless-dataset v1
#   # radius = <R>
#   # angles = <comma-separated boundary angles>
#   # kmin = <k1>, kmax = <k2>, count = <nk>
#   # complex = 0|1
#   # columns: src,rec,ik,f[,re_usc,im_usc]
#   <rows, coincident pairs omitted>


def save_dataset(data: BoundaryDataset, path) -> None:
    lines = ["# phaseless-dataset v1"]
    lines.append(f"# radius = {_fmt(data.radius)}")
    lines.append("# angles = " + ",".join(_fmt(a) for a in data.angles))
    lines.append(
        f"# kmin = {_fmt(data.freqs.k_min)}, kmax = {_fmt(data.freqs.k_max)}, "
        f"count = {data.freqs.count}"
    )
    has_complex = data.scattered is not None
    lines.append(f"# complex = {int(has_complex)}")
    lines.append(
        "# columns: src,rec,ik,f" + (",re_usc,im_usc" if has_complex else "")
    )
    for i, j in data.pairs():
        for m in range(data.freqs.count):
            row = f"{i},{j},{m},{_fmt(data.intensity[i, j, m])}"
            if has_complex:
                z = data.scattered[i, j, m]
                row += f",{_fmt(z.real)},{_fmt(z.imag)}"
            lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(path) -> BoundaryDataset:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "# phaseless-dataset v1":
        raise ValueError(f"{path}: not a phaseless dataset file")
    radius = float(_header_value(lines[1], "radius"))
    angles = np.array([float(v) for v in _header_value(lines[2], "angles").split(",")])
    kparts = dict(
        part.strip().split(" = ") for part in lines[3].lstrip("# ").split(",")
    )
    freqs = FrequencyGrid(
        k_min=float(kparts["kmin"]),
        k_max=float(kparts["kmax"]),
        count=int(kparts["count"]),
    )
    has_complex = bool(int(_header_value(lines[4], "complex")))
    n = angles.size
    intensity = np.zeros((n, n, freqs.count))
    scattered = np.zeros((n, n, freqs.count), dtype=complex) if has_complex else None
    for line in lines[6:]:
        if not line.strip():
            continue
        parts = line.split(",")
        i, j, m = int(parts[0]), int(parts[1]), int(parts[2])
        intensity[i, j, m] = float(parts[3])
        if has_complex:
            scattered[i, j, m] = float(parts[4]) + 1j * float(parts[5])
    return BoundaryDataset(
        radius=radius,
        angles=angles,
        freqs=freqs,
        intensity=intensity,
        scattered=scattered,
    )


# ---------------------------------------------------------------------------
# Sinogram
# ---------------------------------------------------------------------------
#
#   # phaseless-sinogram v1
#   # offsets = <comma-separated r grid>
#   # angles = <comma-separated theta grid>
#   # columns: ir,itheta,r,theta,value
#   <one row per populated cell>


def save_sinogram(sino: Sinogram, path) -> None:
    lines = ["# phaseless-sinogram v1"]
    lines.append("# offsets = " + ",".join(_fmt(r) for r in sino.offsets))
    lines.append("# angles = " + ",".join(_fmt(a) for a in sino.angles))
    lines.append("# columns: ir,itheta,r,theta,value")
    for ir in range(sino.offsets.size):
        for it in range(sino.angles.size):
            if sino.mask[ir, it]:
                lines.append(
                    f"{ir},{it},{_fmt(sino.offsets[ir])},{_fmt(sino.angles[it])},"
                    f"{_fmt(sino.values[ir, it])}"
                )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_sinogram(path) -> Sinogram:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "# phaseless-sinogram v1":
        raise ValueError(f"{path}: not a phaseless sinogram file")
    offsets = np.array([float(v) for v in _header_value(lines[1], "offsets").split(",")])
    angles = np.array([float(v) for v in _header_value(lines[2], "angles").split(",")])
    values = np.zeros((offsets.size, angles.size))
    mask = np.zeros(values.shape, dtype=bool)
    for line in lines[4:]:
        if not line.strip():
            continue
        parts = line.split(",")
        ir, it = int(parts[0]), int(parts[1])
        values[ir, it] = float(parts[4])
        mask[ir, it] = True
    return Sinogram(offsets=offsets, angles=angles, values=values, mask=mask)


# ---------------------------------------------------------------------------
# Images: CSV matrix plus 16-bit binary PGM
# ---------------------------------------------------------------------------


def save_image_csv(image: Image2D, path) -> None:
    lines = ["# phaseless-image v1"]
    lines.append(f"# half_width = {_fmt(image.half_width)}")
    lines.append(f"# n = {image.n}")
    lines.append("# rows: x1 index; columns: x2 index")
    for row in image.values:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_image_csv(path) -> Image2D:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "# phaseless-image v1":
        raise ValueError(f"{path}: not a phaseless image file")
    half_width = float(_header_value(lines[1], "half_width"))
    n = int(_header_value(lines[2], "n"))
    values = np.array(
        [[float(v) for v in line.split(",")] for line in lines[4 : 4 + n]]
    )
    return Image2D(values=values, half_width=half_width)


def save_image_pgm(image: Image2D, path) -> None:
    """16-bit binary graymap, linearly scaled from [vmin, vmax] to [0, 65535].

    The scaling bounds are recorded as a comment in the header.  Rows run
    from the top of the picture (largest x2) down; columns left to right
    (increasing x1).
    """
    vmin = float(image.values.min())
    vmax = float(image.values.max())
    span = vmax - vmin
    if span == 0:
        scaled = np.zeros_like(image.values, dtype=np.uint16)
    else:
        scaled = np.round((image.values - vmin) / span * 65535.0).astype(np.uint16)
    # transpose to (row=x2 descending, col=x1 ascending) picture layout
    picture = scaled.T[::-1, :]
    header = (
        f"P5\n# phaseless image: vmin={_fmt(vmin)} vmax={_fmt(vmax)} "
        f"half_width={_fmt(image.half_width)}\n{image.n} {image.n}\n65535\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(picture.astype(">u2").tobytes())
