import math

import numpy as np
import pytest

from phaseless.radon import (
    Image2D,
    Sinogram,
    SinogramSpec,
    chord_coordinates,
    radon_forward,
    radon_inverse,
    resample_to_sinogram,
)

RNG = np.random.default_rng(42)
W = math.sqrt(2.0) / 2.0


def smooth_blob_image(n, centers, radius, half_width=W):
    xs = np.linspace(-half_width, half_width, n)
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    vals = np.zeros((n, n))
    for cx, cy in centers:
        rho2 = ((x1 - cx) ** 2 + (x2 - cy) ** 2) / radius**2
        inside = rho2 < 1
        vals[inside] += np.exp(1 - 1 / (1 - rho2[inside]))
    return Image2D(values=vals, half_width=half_width)


# ---------------------------------------------------------------------------
# chord geometry
# ---------------------------------------------------------------------------


def test_chord_diameter_has_zero_offset():
    r, _ = chord_coordinates([1.0, 0.0], [-1.0, 0.0], 1.0)
    assert abs(r) < 1e-12


def test_chord_right_angle_pair():
    x = [math.cos(math.pi / 2), math.sin(math.pi / 2)]
    x0 = [1.0, 0.0]
    r, theta = chord_coordinates(x, x0, 1.0)
    assert abs(r) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    # foot of the perpendicular sits at distance |r| from the origin
    foot = np.array([r * math.cos(theta), r * math.sin(theta)])
    assert np.linalg.norm(foot) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)


def test_chord_line_equation_residual():
    for _ in range(300):
        phi0, phi1 = RNG.uniform(0, 2 * np.pi, size=2)
        if abs(phi0 - phi1) < 1e-6:
            continue
        radius = RNG.uniform(0.5, 2.0)
        x = [radius * math.cos(phi1), radius * math.sin(phi1)]
        x0 = [radius * math.cos(phi0), radius * math.sin(phi0)]
        r, theta = chord_coordinates(x, x0, radius)
        assert 0.0 <= theta < np.pi
        normal = np.array([math.cos(theta), math.sin(theta)])
        assert abs(np.dot(x, normal) - r) < 1e-9
        assert abs(np.dot(x0, normal) - r) < 1e-9
        # swapped endpoints give the same cell
        r2, theta2 = chord_coordinates(x0, x, radius)
        assert r2 == pytest.approx(r, abs=1e-12)
        assert theta2 == pytest.approx(theta, abs=1e-12)


def test_chord_rejects_bad_input():
    with pytest.raises(ValueError, match="circle"):
        chord_coordinates([0.5, 0.0], [1.0, 0.0], 1.0)
    with pytest.raises(ValueError, match="degenerate"):
        chord_coordinates([1.0, 0.0], [1.0, 0.0], 1.0)


# ---------------------------------------------------------------------------
# forward transform
# ---------------------------------------------------------------------------


def test_radon_forward_zero_image():
    img = Image2D(values=np.zeros((64, 64)), half_width=W)
    sino = radon_forward(img, SinogramSpec(n_offsets=65, n_angles=16))
    assert np.all(sino.values == 0)


def test_radon_forward_disk_matches_chord_length():
    rho = 0.3
    n = 801
    xs = np.linspace(-W, W, n)
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    disk = Image2D(values=(x1**2 + x2**2 <= rho**2).astype(float), half_width=W)
    spec = SinogramSpec(n_offsets=257, n_angles=8, r_max=1.0)
    sino = radon_forward(disk, spec)
    r = spec.offsets
    exact = np.where(np.abs(r) < rho, 2 * np.sqrt(np.maximum(rho**2 - r**2, 0)), 0.0)
    err = np.linalg.norm(sino.values - exact[:, None]) / np.linalg.norm(
        np.broadcast_to(exact[:, None], sino.values.shape)
    )
    assert err < 0.02


def test_radon_forward_translation_covariance():
    shift = 0.2
    spec = SinogramSpec(n_offsets=257, n_angles=4, r_max=1.0)
    base = smooth_blob_image(201, [(0.0, 0.0)], 0.2)
    moved = smooth_blob_image(201, [(shift, 0.0)], 0.2)
    s0 = radon_forward(base, spec).values[:, 0]
    s1 = radon_forward(moved, spec).values[:, 0]
    # theta = 0 profile shifts by `shift` in r
    dr = spec.offsets[1] - spec.offsets[0]
    shifted = np.interp(spec.offsets - shift, spec.offsets, s0, left=0, right=0)
    assert np.max(np.abs(shifted - s1)) < np.max(s0) * dr / 0.05


def test_radon_mass_invariant():
    img = smooth_blob_image(201, [(-0.25, 0.1), (0.2, -0.15)], 0.18)
    spec = SinogramSpec(n_offsets=257, n_angles=24, r_max=1.0)
    sino = radon_forward(img, spec)
    masses = np.trapezoid(sino.values, spec.offsets, axis=0)
    assert (masses.max() - masses.min()) / masses.mean() < 0.02


# ---------------------------------------------------------------------------
# inverse transform
# ---------------------------------------------------------------------------


def test_radon_inverse_zero_and_linearity():
    spec = SinogramSpec(n_offsets=65, n_angles=18, r_max=1.0)
    zero = Sinogram(offsets=spec.offsets, angles=spec.angles, values=np.zeros((65, 18)))
    assert np.all(radon_inverse(zero, 51).values == 0)
    vals = RNG.standard_normal((65, 18))
    sino = Sinogram(offsets=spec.offsets, angles=spec.angles, values=vals)
    scaled = Sinogram(offsets=spec.offsets, angles=spec.angles, values=2.5 * vals)
    a = radon_inverse(sino, 51).values
    b = radon_inverse(scaled, 51).values
    assert np.allclose(b, 2.5 * a, rtol=1e-12, atol=1e-14)


def test_radon_inverse_requires_populated():
    spec = SinogramSpec(n_offsets=65, n_angles=18)
    mask = np.ones((65, 18), dtype=bool)
    mask[3, 4] = False
    sino = Sinogram(
        offsets=spec.offsets, angles=spec.angles, values=np.zeros((65, 18)), mask=mask
    )
    with pytest.raises(ValueError, match="resample"):
        radon_inverse(sino, 51)


def test_radon_round_trip_two_blobs():
    img = smooth_blob_image(257, [(-0.3, 0.0), (0.3, 0.0)], 0.15)
    spec = SinogramSpec(n_offsets=257, n_angles=180, r_max=1.0)
    rec = radon_inverse(radon_forward(img, spec), 257)
    err = np.linalg.norm(rec.values - img.values) / np.linalg.norm(img.values)
    assert err < 0.10


def test_fbp_restores_gaussian_center_of_mass():
    n = 129
    xs = np.linspace(-W, W, n)
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    g = np.exp(-((x1 - 0.12) ** 2 + (x2 + 0.08) ** 2) / (2 * 0.1**2))
    img = Image2D(values=g, half_width=W)
    spec = SinogramSpec(n_offsets=129, n_angles=90, r_max=1.0)
    rec = radon_inverse(radon_forward(img, spec), n)
    vals = np.maximum(rec.values, 0.0)
    com1 = np.sum(x1 * vals) / vals.sum()
    com2 = np.sum(x2 * vals) / vals.sum()
    pixel = img.pixel_size
    assert abs(com1 - 0.12) < pixel
    assert abs(com2 + 0.08) < pixel


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------


def test_resample_pass_through_on_grid_nodes():
    spec = SinogramSpec(n_offsets=21, n_angles=8, r_max=1.0)
    samples = []
    vals = np.zeros((21, 8))
    for ir in range(21):
        for it in range(8):
            v = float(RNG.uniform(0, 1))
            vals[ir, it] = v
            samples.append((spec.offsets[ir], spec.angles[it], v))
    sino = resample_to_sinogram(np.array(samples), spec)
    assert np.allclose(sino.values, vals, atol=1e-15)
    assert sino.mask.all()


def test_resample_constant_dense_samples():
    spec = SinogramSpec(n_offsets=33, n_angles=12, r_max=1.0)
    rs = RNG.uniform(-1, 1, size=4000)
    ths = RNG.uniform(0, np.pi, size=4000)
    samples = np.column_stack([rs, ths, np.full(4000, 3.25)])
    sino = resample_to_sinogram(samples, spec)
    populated_r = np.abs(spec.offsets) <= np.max(np.abs(rs))
    assert np.allclose(sino.values[populated_r, :], 3.25)


def test_resample_empty_raises():
    with pytest.raises(ValueError, match="sample"):
        resample_to_sinogram(np.empty((0, 3)), SinogramSpec())


def test_resample_chords_match_forward_transform():
    # sample the analytic disk sinogram over boundary chords, resample,
    # and compare with the direct transform of the disk image
    rho = 0.3
    n_boundary = 128
    phis = 2 * np.pi * np.arange(n_boundary) / n_boundary
    samples = []
    for i in range(n_boundary):
        for j in range(n_boundary):
            if i == j:
                continue
            x = [math.cos(phis[j]), math.sin(phis[j])]
            x0 = [math.cos(phis[i]), math.sin(phis[i])]
            r, th = chord_coordinates(x, x0, 1.0)
            val = 2 * math.sqrt(max(rho**2 - r**2, 0.0)) if abs(r) < rho else 0.0
            samples.append((r, th, val))
    spec = SinogramSpec(n_offsets=129, n_angles=n_boundary, r_max=1.0)
    resampled = resample_to_sinogram(np.array(samples), spec)

    n = 801
    xs = np.linspace(-W, W, n)
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    disk = Image2D(values=(x1**2 + x2**2 <= rho**2).astype(float), half_width=W)
    direct = radon_forward(disk, spec)
    err = np.linalg.norm(resampled.values - direct.values) / np.linalg.norm(
        direct.values
    )
    assert err < 0.05
