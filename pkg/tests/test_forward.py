import math
import time

import numpy as np
import pytest

from phaseless.forward import (
    BoundaryDataset,
    FrequencyGrid,
    GridResolutionWarning,
    VolumeGrid,
    born_scattered_field,
    incident_field,
    scattered_field_at,
    solve_total_field,
    suggested_spacing,
    synthesize_dataset,
)
from phaseless.phantom import Inclusion, Scene


def single_inclusion(amplitude, radius=0.15, center=(0.0, 0.0, 0.0)):
    return Scene(inclusions=(Inclusion(center=center, radius=radius, amplitude=amplitude),))


# ---------------------------------------------------------------------------
# incident field
# ---------------------------------------------------------------------------


def test_incident_field_values():
    assert abs(incident_field([1, 0, 0], [0, 0, 0], 7.3)) == pytest.approx(
        1 / (4 * math.pi), abs=1e-15
    )
    assert incident_field([2, 0, 0], [0, 0, 0], 0.0) == pytest.approx(
        1 / (8 * math.pi), abs=1e-15
    )
    assert incident_field([1, 0, 0], [0, 0, 0], math.pi) == pytest.approx(
        -1 / (4 * math.pi), abs=1e-12
    )
    with pytest.raises(ValueError):
        incident_field([1, 0, 0], [1, 0, 0], 5.0)


def test_frequency_grid():
    freqs = FrequencyGrid(50.0, 80.0, 64)
    samples = freqs.samples
    assert samples[0] == 50.0 and samples[-1] == 80.0
    assert np.allclose(np.diff(samples), samples[1] - samples[0])
    assert freqs.index_of(samples[17]) == 17
    with pytest.raises(ValueError):
        freqs.index_of(51.234)
    with pytest.raises(ValueError):
        FrequencyGrid(-1.0, 10.0, 4)


# ---------------------------------------------------------------------------
# total-field solve
# ---------------------------------------------------------------------------


def test_zero_contrast_returns_incident_exactly():
    scene = single_inclusion(0.0)
    grid = VolumeGrid.from_scene(scene, 0.05)
    x0 = np.array([1.0, 0.0, 0.0])
    field = solve_total_field(scene, grid, x0, k=10.0)
    u0 = np.array(
        [incident_field(c, x0, 10.0) for c in grid.voxel_centers()]
    ).reshape(grid.shape)
    assert np.array_equal(field.values, u0)


def test_weak_contrast_perturbation_bound():
    scene = single_inclusion(1e-3)
    k = 15.0
    grid = VolumeGrid.from_scene(scene, suggested_spacing(scene, k))
    x0 = np.array([1.0, 0.0, 0.0])
    field = solve_total_field(scene, grid, x0, k, tol=1e-8)
    u0 = np.array([incident_field(c, x0, k) for c in grid.voxel_centers()])
    dev = np.abs(field.values.ravel() - u0) / np.abs(u0)
    assert dev.max() <= 1e-2


def test_solution_satisfies_discrete_equation():
    scene = single_inclusion(0.5)
    k = 12.0
    tol = 1e-7
    grid = VolumeGrid.from_scene(scene, suggested_spacing(scene, k))
    x0 = np.array([0.0, 1.0, 0.0])
    field = solve_total_field(scene, grid, x0, k, tol=tol)
    from phaseless.forward import _Workspace, _incident_many

    ws = _Workspace(grid, k)
    lhs = ws.apply(field.values)
    rhs = _incident_many(grid.voxel_centers(), x0, k).reshape(grid.shape)
    residual = np.linalg.norm((lhs - rhs).ravel()) / np.linalg.norm(rhs.ravel())
    assert residual <= tol


def test_source_inside_support_rejected():
    scene = single_inclusion(1.0)
    grid = VolumeGrid.from_scene(scene, 0.05)
    with pytest.raises(ValueError, match="support"):
        solve_total_field(scene, grid, [0.05, 0.0, 0.0], k=10.0)


def test_coarse_grid_warns():
    scene = single_inclusion(0.5)
    grid = VolumeGrid.from_scene(scene, 0.1)
    with pytest.warns(GridResolutionWarning):
        solve_total_field(scene, grid, [1.0, 0.0, 0.0], k=30.0)


# ---------------------------------------------------------------------------
# scattered-field evaluation and the first-order oracle
# ---------------------------------------------------------------------------


def test_scattered_zero_for_empty_scene():
    scene = Scene(inclusions=())
    grid = VolumeGrid.from_scene(scene, 0.05)
    field = solve_total_field(scene, grid, [1.0, 0.0, 0.0], k=10.0)
    assert scattered_field_at(field, grid, [-1.0, 0.0, 0.0]) == 0.0


def test_scattered_rejects_interior_point():
    scene = single_inclusion(1.0)
    grid = VolumeGrid.from_scene(scene, 0.03)
    field = solve_total_field(scene, grid, [1.0, 0.0, 0.0], k=10.0)
    with pytest.raises(ValueError, match="support voxel"):
        scattered_field_at(field, grid, [0.0, 0.0, 0.0])


def test_weak_contrast_matches_first_order_oracle():
    scene = single_inclusion(1e-2)
    k = 20.0
    h = suggested_spacing(scene, k)
    grid = VolumeGrid.from_scene(scene, h)
    x0 = np.array([1.0, 0.0, 0.0])
    x = np.array([-math.sqrt(0.5), math.sqrt(0.5), 0.0])
    field = solve_total_field(scene, grid, x0, k, tol=1e-8)
    usc = scattered_field_at(field, grid, x)
    oracle = born_scattered_field(scene, x, x0, k, quad_h=h)
    assert abs(usc - oracle) / abs(oracle) < 0.03


def test_first_order_oracle_properties():
    scene = Scene(inclusions=())
    assert born_scattered_field(scene, [1, 0, 0], [-1, 0, 0], 10.0, 0.03) == 0.0
    weak = single_inclusion(1e-2)
    strong = single_inclusion(2e-2)
    x, x0 = [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]
    a = born_scattered_field(weak, x, x0, 18.0, 0.02)
    b = born_scattered_field(strong, x, x0, 18.0, 0.02)
    assert b == pytest.approx(2 * a, rel=1e-12)
    fine = born_scattered_field(weak, x, x0, 18.0, 0.01)
    assert abs(fine - a) / abs(fine) < 0.01


def test_reciprocity_asymmetric_scene():
    scene = Scene(
        inclusions=(
            Inclusion(center=(0.05, -0.1, 0.0), radius=0.12, amplitude=0.1),
            Inclusion(center=(0.25, 0.2, 0.05), radius=0.08, amplitude=0.05),
        )
    )
    k = 12.0
    tol = 1e-10
    grid = VolumeGrid.from_scene(scene, suggested_spacing(scene, k))
    xa = np.array([1.0, 0.0, 0.0])
    xb = np.array([math.cos(2.1), math.sin(2.1), 0.0])
    fa = solve_total_field(scene, grid, xa, k, tol=tol)
    fb = solve_total_field(scene, grid, xb, k, tol=tol)
    uab = scattered_field_at(fa, grid, xb)
    uba = scattered_field_at(fb, grid, xa)
    assert abs(uab - uba) / abs(uab) < 1e-6


# ---------------------------------------------------------------------------
# dataset synthesis
# ---------------------------------------------------------------------------


def test_empty_scene_dataset_is_zero_and_fast():
    start = time.time()
    data = synthesize_dataset(Scene(inclusions=()), 32, FrequencyGrid(15, 25, 8))
    assert time.time() - start < 1.0
    assert np.all(data.intensity == 0)


def test_dataset_values_nonnegative_finite_and_reciprocal():
    scene = single_inclusion(0.05)
    freqs = FrequencyGrid(8.0, 12.0, 3)
    tol = 1e-9
    data = synthesize_dataset(scene, 12, freqs, tol=tol, store_complex=True)
    off = ~np.eye(12, dtype=bool)
    assert np.all(data.intensity[off] >= 0)
    assert np.all(np.isfinite(data.intensity[off]))
    f = data.intensity
    sym = np.transpose(f, (1, 0, 2))
    denom = np.maximum(f[off], 1e-300)
    rel = np.abs(f[off] - sym[off]) / denom
    assert rel.max() < 1e-6


def test_dataset_matches_first_order_oracle_in_weak_regime():
    scene = single_inclusion(1e-2)
    freqs = FrequencyGrid(10.0, 15.0, 2)
    data = synthesize_dataset(scene, 8, freqs, tol=1e-8, store_complex=True)
    pos = data.positions()
    h = suggested_spacing(scene, freqs.k_max)
    f_solver = []
    f_oracle = []
    for m, k in enumerate(freqs.samples):
        for i, j in data.pairs():
            f_solver.append(data.intensity[i, j, m])
            val = born_scattered_field(scene, pos[j], pos[i], k, quad_h=h)
            f_oracle.append(abs(val) ** 2)
    f_solver = np.array(f_solver)
    f_oracle = np.array(f_oracle)
    keep = f_solver > 1e-6 * f_solver.max()
    rel = np.abs(f_solver[keep] - f_oracle[keep]) / f_oracle[keep]
    assert rel.max() < 0.05


def test_dataset_grid_refinement_stability():
    scene = single_inclusion(0.1)
    freqs = FrequencyGrid(9.0, 11.0, 2)
    h = suggested_spacing(scene, freqs.k_max)
    coarse = synthesize_dataset(scene, 10, freqs, grid_spec=h, tol=1e-8)
    fine = synthesize_dataset(scene, 10, freqs, grid_spec=h / 2, tol=1e-8)
    diff = np.linalg.norm(coarse.intensity - fine.intensity)
    assert diff / np.linalg.norm(fine.intensity) < 0.05


def test_dataset_validation():
    freqs = FrequencyGrid(10.0, 20.0, 2)
    with pytest.raises(ValueError, match="nonnegative"):
        BoundaryDataset(
            radius=1.0,
            angles=np.array([0.0, np.pi]),
            freqs=freqs,
            intensity=np.full((2, 2, 2), -1.0),
        )
    with pytest.raises(ValueError, match="at least 8"):
        synthesize_dataset(Scene(inclusions=()), 4, freqs)
