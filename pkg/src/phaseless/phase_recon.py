"""Travel-time and amplitude recovery from intensity-vs-frequency data.

Per boundary pair, the intensity over the frequency window is modeled as

    f(k) = a + b cos(k alpha),
    a = A^2 + 1/(16 pi^2 d^2),  b = -A/(2 pi d),  alpha = tau - d,

with ``d = |x - x0|``.  Integrating twice turns the model into a linear
identity in the four unknowns

    xi = (alpha^2, -alpha^2 a, alpha b sin(k1 alpha), -a - b cos(k1 alpha)),

which is fit by Tikhonov-regularized least squares; the travel time is
``tau = sqrt(|xi_1|) + d`` and the amplitude follows from the per-k
quadratic.  Pairs whose chords carry negligible scattered energy are
assigned the vacuum travel time, and the delays ``tau - d`` feed the
inverse Radon transform of the linearized travel-time relation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from .forward import FOUR_PI, BoundaryDataset
from .radon import Image2D, SinogramSpec, chord_from_angles, radon_inverse, resample_to_sinogram

__all__ = [
    "CosineModelFit",
    "TravelTimeField",
    "cumulative_antiderivatives",
    "fit_cosine_model",
    "extract_travel_time",
    "extract_amplitude",
    "forward_scatter_mask",
    "recover_travel_times",
    "delay_samples",
    "reconstruct_kinematic",
    "reference_amplitude",
    "reference_travel_time",
]


@dataclass
class CosineModelFit:
    """Fitted coefficient vector and the L2 residual of the linear identity."""

    xi: np.ndarray
    residual: float
    pair: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        self.xi = np.asarray(self.xi, dtype=float)
        if self.xi.shape != (4,) or not np.all(np.isfinite(self.xi)):
            raise ValueError("xi must be a finite 4-vector")


@dataclass
class TravelTimeField:
    """Per-pair travel times, amplitudes, and the forward-scatter mask.

    Arrays are indexed (source, receiver); diagonal entries are unused.
    Masked-out pairs carry tau exactly equal to the pair distance.
    """

    radius: float
    angles: np.ndarray
    tau: np.ndarray
    amplitude: np.ndarray
    forward_mask: np.ndarray

    def __post_init__(self) -> None:
        self.angles = np.asarray(self.angles, dtype=float)
        n = self.angles.size
        for name in ("tau", "amplitude"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n, n):
                raise ValueError(f"{name} must have shape (n, n)")
            setattr(self, name, arr)
        self.forward_mask = np.asarray(self.forward_mask, dtype=bool)
        if self.forward_mask.shape != (n, n):
            raise ValueError("forward_mask must have shape (n, n)")

    def pair_distances(self) -> np.ndarray:
        pos = np.stack(
            [self.radius * np.cos(self.angles), self.radius * np.sin(self.angles)],
            axis=-1,
        )
        return np.linalg.norm(pos[None, :, :] - pos[:, None, :], axis=-1)


def cumulative_antiderivatives(samples, k) -> tuple[np.ndarray, np.ndarray]:
    """Running first and second antiderivatives of f over the k grid.

    Both are cumulative trapezoid sums starting at the window's left
    endpoint, so ``F1(k1) = F2(k1) = 0``.
    """
    samples = np.asarray(samples, dtype=float)
    k = np.asarray(k, dtype=float)
    if k.size < 2:
        raise ValueError("need at least 2 frequency samples")
    f1 = cumulative_trapezoid(samples, k, initial=0.0)
    f2 = cumulative_trapezoid(f1, k, initial=0.0)
    return f1, f2


def fit_cosine_model(
    samples,
    F2,
    k,
    eps_reg: float = 1e-14,
    pair: tuple[int, int] | None = None,
) -> CosineModelFit:
    """Least-squares fit of the twice-integrated cosine model.

    Assembles the Gram matrix of the basis ``{F2, (k-k1)^2/2, k-k1, 1}``
    under the trapezoid inner product on the window, and solves the
    Tikhonov-regularized normal equations.  For numerical stability the
    system is solved with the basis columns normalized to unit L2 norm;
    ``eps_reg`` regularizes that normalized system (it is dimensionless,
    and values around 1e-14 leave exactly representable models intact).
    """
    if not eps_reg > 0:
        raise ValueError("eps_reg must be > 0")
    f = np.asarray(samples, dtype=float)
    F2 = np.asarray(F2, dtype=float)
    k = np.asarray(k, dtype=float)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(F2))):
        raise ValueError("fit data must be finite")
    t = k - k[0]
    basis = np.stack([F2, t**2 / 2.0, t, np.ones_like(t)])
    gram = np.empty((4, 4))
    rhs = np.empty(4)
    for i in range(4):
        rhs[i] = -np.trapezoid(f * basis[i], k)
        for j in range(i, 4):
            gram[i, j] = gram[j, i] = np.trapezoid(basis[i] * basis[j], k)
    scale = np.sqrt(np.diag(gram))
    scale[scale == 0] = 1.0
    gram_n = gram / scale[:, None] / scale[None, :]
    rhs_n = rhs / scale
    eps = eps_reg * np.trace(gram_n.T @ gram_n) / 4.0
    eta = np.linalg.solve(gram_n.T @ gram_n + eps * np.eye(4), gram_n.T @ rhs_n)
    xi = eta / scale
    misfit = xi @ basis + f
    residual = math.sqrt(max(np.trapezoid(misfit**2, k), 0.0))
    return CosineModelFit(xi=xi, residual=residual, pair=pair)


def extract_travel_time(fit: CosineModelFit, d: float) -> float:
    """Travel time ``sqrt(|xi_1|) + d`` for pair distance d."""
    if not d > 0:
        raise ValueError("pair distance must be > 0")
    return math.sqrt(abs(fit.xi[0])) + d


def extract_amplitude(samples, tau: float, d: float, k) -> tuple[float, bool]:
    """Average amplitude from the per-frequency quadratic.

    For each k, solves ``A^2 - (cos(k alpha)/(2 pi d)) A +
    (1/(16 pi^2 d^2) - f(k)) = 0`` with ``alpha = tau - d`` and keeps the
    real root nearest the free-space amplitude ``1/(4 pi d)`` (the
    smaller root on a tie).  Frequencies with a negative discriminant,
    or where both roots are negative (an amplitude is a modulus), are
    skipped.  Returns the mean over the remaining frequencies, and False
    with amplitude 0 when none remain.
    """
    if tau < d:
        raise ValueError("tau must be >= pair distance")
    f = np.asarray(samples, dtype=float)
    k = np.asarray(k, dtype=float)
    alpha = tau - d
    c = np.cos(k * alpha) / (2.0 * np.pi * d)
    q = 1.0 / (FOUR_PI**2 * d**2) - f
    disc = c**2 - 4.0 * q
    real = disc >= 0
    if not real.any():
        return 0.0, False
    s = np.sqrt(disc[real])
    roots = np.stack([(c[real] - s) / 2.0, (c[real] + s) / 2.0])
    free = 1.0 / (FOUR_PI * d)
    pick = np.argmin(np.abs(roots - free), axis=0)
    chosen = roots[pick, np.arange(roots.shape[1])]
    chosen = chosen[chosen >= 0]
    if chosen.size == 0:
        return 0.0, False
    return float(np.mean(chosen)), True


def forward_scatter_mask(data: BoundaryDataset, eps_thr: float = 4e-4) -> np.ndarray:
    """Pairs whose scattered energy stands above the global level.

    A pair is forward-scattering when the L2 norm of its scattered field
    over the frequency window exceeds ``eps_thr`` times the L2 norm over
    all pairs and frequencies.  Works directly from the intensities
    (which are the squared moduli).  Diagonal entries are False.
    """
    k = data.freqs.samples
    energy2 = np.trapezoid(data.intensity, k, axis=-1)
    np.fill_diagonal(energy2, 0.0)
    energy2 = np.maximum(energy2, 0.0)
    total = math.sqrt(float(energy2.sum()))
    if total == 0.0:
        return np.zeros_like(energy2, dtype=bool)
    mask = np.sqrt(energy2) / total > eps_thr
    np.fill_diagonal(mask, False)
    return mask


def recover_travel_times(
    data: BoundaryDataset,
    eps_reg: float = 1e-14,
    eps_thr: float = 4e-4,
    alpha_window_factor: float = 10.0,
) -> TravelTimeField:
    """Fit every boundary pair and assemble the travel-time field.

    Pairs outside the forward-scatter mask, and pairs whose fitted delay
    falls below the resolvable window ``2 pi / (alpha_window_factor *
    (k2 - k1))``, get the vacuum travel time.  Amplitudes are computed
    for all pairs.
    """
    k = data.freqs.samples
    n = data.n_boundary
    dist = data.pair_distances()
    mask = forward_scatter_mask(data, eps_thr)
    alpha_min = 2.0 * np.pi / (alpha_window_factor * (k[-1] - k[0]))
    tau = np.zeros((n, n))
    amplitude = np.zeros((n, n))
    for i, j in data.pairs():
        d = dist[i, j]
        f = data.intensity[i, j]
        if mask[i, j]:
            _, f2 = cumulative_antiderivatives(f, k)
            fit = fit_cosine_model(f, f2, k, eps_reg=eps_reg, pair=(i, j))
            t = extract_travel_time(fit, d)
            if t - d < alpha_min:
                t = d
        else:
            t = d
        tau[i, j] = t
        amplitude[i, j], _ = extract_amplitude(f, t, d, k)
    return TravelTimeField(
        radius=data.radius,
        angles=data.angles,
        tau=tau,
        amplitude=amplitude,
        forward_mask=mask,
    )


def delay_samples(field: TravelTimeField) -> np.ndarray:
    """Scattered (r, theta, tau - d) samples for all ordered pairs."""
    n = field.angles.size
    src, rec = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    off = src != rec
    src = src[off]
    rec = rec[off]
    r, theta = chord_from_angles(
        field.angles[rec], field.angles[src], field.radius
    )
    delay = (field.tau - field.pair_distances())[off]
    return np.column_stack([r, theta, delay])


def reconstruct_kinematic(
    field: TravelTimeField,
    spec: SinogramSpec | None = None,
    n: int = 101,
    taper: float = 0.0,
) -> Image2D:
    """Inverse Radon transform of the recovered delays."""
    if spec is None:
        spec = SinogramSpec(
            n_offsets=129, n_angles=field.angles.size, r_max=field.radius
        )
    sino = resample_to_sinogram(delay_samples(field), spec)
    return radon_inverse(sino, n, taper=taper)


def reference_amplitude(u, k) -> float:
    """Window average of |u| over the frequency grid (trapezoid)."""
    u = np.asarray(u, dtype=complex)
    k = np.asarray(k, dtype=float)
    return float(np.trapezoid(np.abs(u), k) / (k[-1] - k[0]))


def reference_travel_time(u, k) -> float:
    """Travel time from the phase of the running frequency integral.

    With ``G(k)`` the cumulative integral of the total field from the
    window start, returns
    ``Re int i (u - u(k1)) conj(G) dk / int |G|^2 dk``.  The cumulative
    integral uses Simpson's rule (the oscillatory integrand needs the
    extra order); the outer integrals use the trapezoid rule.
    """
    u = np.asarray(u, dtype=complex)
    k = np.asarray(k, dtype=float)
    g = cumulative_simpson(u.real, x=k, initial=0.0) + 1j * cumulative_simpson(
        u.imag, x=k, initial=0.0
    )
    den = float(np.trapezoid(np.abs(g) ** 2, k))
    if den <= 0.0:
        raise ValueError("zero field integral: phase is undefined")
    num = float(np.trapezoid(np.real(1j * (u - u[0]) * np.conj(g)), k))
    return num / den
