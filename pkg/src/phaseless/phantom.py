"""Smooth, compactly supported dielectric perturbations and the scene catalog.

A scene is a set of ball-supported bump inclusions inside the ball of
radius ``domain_radius``.  The perturbation ``beta(x)`` they define is
infinitely smooth, nonnegative, and vanishes outside the cube inscribed
in that ball.  The refractive model is ``c(x) = 1 + beta(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "Inclusion",
    "Scene",
    "bump",
    "beta_at",
    "standard_scenes",
    "load_scene",
    "save_scene",
    "scene_to_text",
]

# Half-width of the cube inscribed in the unit ball, per unit of radius.
CUBE_HALF_WIDTH = np.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class Inclusion:
    """One ball-supported inclusion: ``amplitude * bump((x - center)/radius)``.

    Parameters
    ----------
    center : tuple of 3 floats
        Ball center, dimensionless length (1 unit = 1 micron).
    radius : float
        Ball radius, > 0.
    amplitude : float
        Peak value of the perturbation inside this inclusion, >= 0.
    """

    center: tuple[float, float, float]
    radius: float
    amplitude: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 3:
            raise ValueError("inclusion center must be a 3-vector")
        if not self.radius > 0:
            raise ValueError(f"inclusion radius must be > 0, got {self.radius}")
        if self.amplitude < 0:
            raise ValueError(f"inclusion amplitude must be >= 0, got {self.amplitude}")


@dataclass(frozen=True)
class Scene:
    """A collection of inclusions inside the ball of radius ``domain_radius``.

    Every inclusion ball must fit inside the inscribed cube
    ``{|x1|,|x2|,|x3| < domain_radius * sqrt(2)/2}`` so that the
    perturbation is compactly supported there.
    """

    inclusions: tuple[Inclusion, ...]
    domain_radius: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "inclusions", tuple(self.inclusions))
        if not self.domain_radius > 0:
            raise ValueError("domain_radius must be > 0")
        half = self.domain_radius * CUBE_HALF_WIDTH
        for inc in self.inclusions:
            reach = max(abs(c) for c in inc.center) + inc.radius
            if reach > half + 1e-12:
                raise ValueError(
                    f"inclusion at {inc.center} with radius {inc.radius} leaves the "
                    f"inscribed cube of half-width {half:.6f}"
                )

    @property
    def max_amplitude(self) -> float:
        """Largest inclusion amplitude (0 for an empty scene)."""
        if not self.inclusions:
            return 0.0
        return max(inc.amplitude for inc in self.inclusions)


def _bump_radial2(rho2: np.ndarray) -> np.ndarray:
    """Bump profile as a function of squared radius, vectorized."""
    rho2 = np.asarray(rho2, dtype=float)
    out = np.zeros_like(rho2)
    inside = rho2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
    return out


def bump(x) -> float | np.ndarray:
    """Unit bump: ``exp(1 - 1/(1 - |x|^2))`` for ``|x| < 1``, else 0.

    Values lie in [0, 1], the function is infinitely smooth across
    ``|x| = 1``, and ``bump(0) = 1``.

    Parameters
    ----------
    x : array_like, shape (..., 3)
        Evaluation point(s).

    Returns
    -------
    float or ndarray
        Scalar for a single point, array of shape ``(...)`` otherwise.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("expected 3-vector(s) with last axis of length 3")
    rho2 = np.sum(x * x, axis=-1)
    out = _bump_radial2(np.atleast_1d(rho2))
    if rho2.ndim == 0:
        return float(out[0])
    return out.reshape(rho2.shape)


def beta_at(scene: Scene, x) -> float | np.ndarray:
    """Evaluate the perturbation ``beta`` of a scene at point(s) ``x``.

    ``beta(x) = sum_i amplitude_i * bump((x - center_i)/radius_i)``; for
    non-overlapping inclusions at most one term is nonzero.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("expected 3-vector(s) with last axis of length 3")
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)
    total = np.zeros(pts.shape[:-1], dtype=float)
    for inc in scene.inclusions:
        diff = (pts - np.asarray(inc.center)) / inc.radius
        total += inc.amplitude * _bump_radial2(np.sum(diff * diff, axis=-1))
    if scalar:
        return float(total[0])
    return total.reshape(x.shape[:-1])


# ---------------------------------------------------------------------------
# Scene files
# ---------------------------------------------------------------------------
#
# Plain-text key/value schema:
#
#   # comments start with '#'
#   domain_radius = 1.0
#
#   [inclusion]
#   center = -0.3 0.0 0.0
#   radius = 0.15
#   amplitude = 1.0
#
# The [inclusion] section may repeat; keys inside it are required.


def load_scene(path) -> Scene:
    """Read a scene file (schema documented in this module)."""
    return parse_scene_text(Path(path).read_text(encoding="utf-8"), origin=str(path))


def parse_scene_text(text: str, origin: str = "<string>") -> Scene:
    domain_radius = None
    blocks: list[dict] = []
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[inclusion]":
            current = {}
            blocks.append(current)
            continue
        if "=" not in line:
            raise ValueError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if current is None:
            if key != "domain_radius":
                raise ValueError(f"{origin}:{lineno}: unknown scene key {key!r}")
            domain_radius = float(value)
        else:
            if key == "center":
                current[key] = tuple(float(v) for v in value.replace(",", " ").split())
            elif key in ("radius", "amplitude"):
                current[key] = float(value)
            else:
                raise ValueError(f"{origin}:{lineno}: unknown inclusion key {key!r}")
    if domain_radius is None:
        raise ValueError(f"{origin}: missing 'domain_radius'")
    inclusions = []
    for i, block in enumerate(blocks):
        missing = {"center", "radius", "amplitude"} - set(block)
        if missing:
            raise ValueError(f"{origin}: inclusion {i} missing keys {sorted(missing)}")
        inclusions.append(Inclusion(**block))
    return Scene(inclusions=tuple(inclusions), domain_radius=domain_radius)


def scene_to_text(scene: Scene, comment: str = "") -> str:
    lines = []
    if comment:
        for row in comment.splitlines():
            lines.append(f"# {row}")
    lines.append(f"domain_radius = {scene.domain_radius:.17g}")
    for inc in scene.inclusions:
        lines.append("")
        lines.append("[inclusion]")
        lines.append("center = " + " ".join(f"{c:.17g}" for c in inc.center))
        lines.append(f"radius = {inc.radius:.17g}")
        lines.append(f"amplitude = {inc.amplitude:.17g}")
    return "\n".join(lines) + "\n"


def save_scene(scene: Scene, path, comment: str = "") -> None:
    Path(path).write_text(scene_to_text(scene, comment), encoding="utf-8")


_CATALOG_FILES = {
    "a": "a.scene",
    "b": "b.scene",
    "c": "c.scene",
    "d": "d.scene",
    "e": "e.scene",
}


def standard_scenes() -> dict[str, Scene]:
    """The shipped scene catalog, keyed 'a'..'e'.

    a/b/c: two radius-0.15 inclusions placed symmetrically about the
    x2x3 plane with surface gaps 0.3 / 0.1 / 0.025; d: two radius-0.15
    inclusions at (0,0,0) and (0.2475,0.2475,0); e: radii 0.25 and 0.15
    with surface gap 0.05.  All amplitudes 1, domain radius 1.
    """
    catalog = {}
    pkg = resources.files(__package__) / "scenes"
    for name, filename in _CATALOG_FILES.items():
        text = (pkg / filename).read_text(encoding="utf-8")
        catalog[name] = parse_scene_text(text, origin=f"scenes/{filename}")
    return catalog
