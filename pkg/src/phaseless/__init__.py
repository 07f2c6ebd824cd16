"""Phaseless inverse scattering: data synthesis and tomographic reconstruction.

The package synthesizes boundary intensities ``|u_sc|^2`` for point
sources around weak dielectric inclusions by solving the volume
integral equation of the scalar wave model, and reconstructs the
perturbation two ways: a single-frequency weak-contrast (first-order)
Radon inversion, and frequency-window phase retrieval followed by
inversion of the linearized travel-time relation.
"""

from .born_recon import born_sinogram, reconstruct_born
from .forward import (
    BoundaryDataset,
    ComplexVolumeField,
    ConvergenceError,
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
from .phantom import Inclusion, Scene, beta_at, bump, load_scene, save_scene, standard_scenes
from .phase_recon import (
    CosineModelFit,
    TravelTimeField,
    cumulative_antiderivatives,
    extract_amplitude,
    extract_travel_time,
    fit_cosine_model,
    forward_scatter_mask,
    recover_travel_times,
    reconstruct_kinematic,
    reference_amplitude,
    reference_travel_time,
)
from .postprocess import smooth_and_clip
from .radon import (
    Image2D,
    Sinogram,
    SinogramSpec,
    chord_coordinates,
    radon_forward,
    radon_inverse,
    resample_to_sinogram,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryDataset",
    "ComplexVolumeField",
    "ConvergenceError",
    "CosineModelFit",
    "FrequencyGrid",
    "GridResolutionWarning",
    "Image2D",
    "Inclusion",
    "Scene",
    "Sinogram",
    "SinogramSpec",
    "TravelTimeField",
    "beta_at",
    "born_scattered_field",
    "born_sinogram",
    "bump",
    "chord_coordinates",
    "cumulative_antiderivatives",
    "extract_amplitude",
    "extract_travel_time",
    "fit_cosine_model",
    "forward_scatter_mask",
    "incident_field",
    "load_scene",
    "radon_forward",
    "radon_inverse",
    "reconstruct_born",
    "reconstruct_kinematic",
    "recover_travel_times",
    "reference_amplitude",
    "reference_travel_time",
    "resample_to_sinogram",
    "save_scene",
    "scattered_field_at",
    "smooth_and_clip",
    "solve_total_field",
    "standard_scenes",
    "suggested_spacing",
    "synthesize_dataset",
]
