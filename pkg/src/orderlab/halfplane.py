"""Plane-wave diffraction by a hard half-line screen (knife edge).

Geometry: the screen occupies the negative y-axis (theta = 3 pi / 2) and the
incident plane wave ``exp(-i k r cos(theta - theta0))`` arrives from the first
quadrant, travelling toward the origin. Angles are accepted on ``[0, 2 pi)``
and internally mapped onto ``(-pi/2, 3 pi/2]``, the sheet on which the
half-angle arguments of the exact solution are continuous.

Sectors of the far field (on the internal sheet):

* REFLECTION: ``-pi/2 < theta < -theta0``  (incident + mirror wave)
* ILLUMINATED: ``-theta0 < theta < pi + theta0``
* SHADOW: ``pi + theta0 < theta < 3 pi / 2``
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import BoundaryZoneError, DomainError, PoleError
from .specfun import fresnel_step

__all__ = [
    "HalfPlaneConfig",
    "Sector",
    "RegionLabel",
    "FailureResult",
    "exact_field",
    "asymptotic_field",
    "scattering_amplitude",
    "region_label",
    "pole_angles",
    "boundary_cone",
    "failure_cross_section",
    "forbidden_cross_section",
    "closed_form_cross_section",
    "min_resolvable_separation",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HalfPlaneConfig:
    k: float
    theta0: float

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError(f"wavenumber must be positive, got {self.k!r}")
        if not (0.0 < self.theta0 < 0.5 * math.pi):
            raise DomainError(f"theta0 must lie strictly inside (0, pi/2), got {self.theta0!r}")


class Sector(enum.Enum):
    ILLUMINATED = "illuminated"
    REFLECTION = "reflection"
    SHADOW = "shadow"


@dataclass(frozen=True)
class RegionLabel:
    tag: Sector
    quadrant: str


@dataclass(frozen=True)
class FailureResult:
    sigma_f: float
    excluded_cone_halfwidth: float
    closed_form: float


def _sheet(theta):
    """Map angles onto (-pi/2, 3 pi/2]."""
    t = np.mod(np.asarray(theta, dtype=float) + 0.5 * math.pi, TWO_PI) - 0.5 * math.pi
    return np.where(t == -0.5 * math.pi, 1.5 * math.pi, t)


def _quadrant(theta: float) -> str:
    t = float(np.mod(theta, TWO_PI))
    return ("I", "II", "III", "IV")[min(int(t // (0.5 * math.pi)), 3)]


def exact_field(r, theta, cfg: HalfPlaneConfig):
    """Exact diffracted field psi(r, theta); broadcasts over ``r`` and ``theta``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("r must be positive")
    t = _sheet(theta)
    k, t0 = cfg.k, cfg.theta0
    root = np.sqrt(2.0 * k * r)
    direct = np.exp(-1j * k * r * np.cos(t - t0)) * fresnel_step(root * np.cos(0.5 * (t - t0)))
    mirror = np.exp(1j * k * r * np.cos(t + t0)) * fresnel_step(-root * np.sin(0.5 * (t + t0)))
    out = direct - mirror
    return out[()] if out.ndim == 0 else out


def pole_angles(cfg: HalfPlaneConfig) -> tuple[float, float]:
    """Reflection and shadow boundary directions on [0, 2 pi)."""
    return (TWO_PI - cfg.theta0) % TWO_PI, math.pi + cfg.theta0


def boundary_cone(k: float, r: float) -> float:
    """Half-width of the Fresnel transition zone excluded from far-field comparisons."""
    return max(0.05, 3.0 / math.sqrt(k * r))


def region_label(theta: float, cfg: HalfPlaneConfig) -> RegionLabel:
    t = float(_sheet(theta))
    if t < -cfg.theta0:
        tag = Sector.REFLECTION
    elif t < math.pi + cfg.theta0:
        tag = Sector.ILLUMINATED
    else:
        tag = Sector.SHADOW
    return RegionLabel(tag, _quadrant(theta))


def _angular_distance(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def scattering_amplitude(theta, cfg: HalfPlaneConfig):
    """Edge-diffraction amplitude f(theta); the far field is f e^{ikr}/sqrt(r)."""
    t = _sheet(theta)
    k, t0 = cfg.k, cfg.theta0
    s = np.sin(0.5 * (t + t0))
    c = np.cos(0.5 * (t - t0))
    if np.any(np.abs(s) < 1e-12) or np.any(np.abs(c) < 1e-12):
        raise PoleError("scattering amplitude evaluated on a shadow boundary")
    out = -np.sqrt(1j / (8.0 * math.pi * k)) * (1.0 / s + 1.0 / c)
    return out[()] if out.ndim == 0 else out


def asymptotic_field(r: float, theta: float, cfg: HalfPlaneConfig, cone: float | None = None):
    """Far-field value and sector label; valid for kr >= 100 away from the boundaries.

    Returns ``(value, RegionLabel)``. Raises :class:`BoundaryZoneError` within
    ``cone`` (default :func:`boundary_cone`) of either shadow boundary.
    """
    k, t0 = cfg.k, cfg.theta0
    if r <= 0:
        raise DomainError("r must be positive")
    if k * r < 100.0:
        raise DomainError(f"far-field form needs kr >= 100, got {k * r:g}")
    width = boundary_cone(k, r) if cone is None else cone
    if any(_angular_distance(theta, p) < width for p in pole_angles(cfg)):
        raise BoundaryZoneError(f"theta={theta:g} lies within {width:g} rad of a shadow boundary")
    label = region_label(theta, cfg)
    t = float(_sheet(theta))
    value = complex(scattering_amplitude(t, cfg)) * np.exp(1j * k * r) / math.sqrt(r)
    if label.tag is not Sector.SHADOW:
        value += np.exp(-1j * k * r * math.cos(t - t0))
    if label.tag is Sector.REFLECTION:
        value -= np.exp(1j * k * r * math.cos(t + t0))
    return complex(value), label


def _intensity(theta, cfg):
    return np.abs(scattering_amplitude(theta, cfg)) ** 2


def _integrate_segments(cfg, segments, rel_tol):
    total = 0.0
    for lo, hi in segments:
        val, _ = integrate.quad(_intensity, lo, hi, args=(cfg,), epsabs=0.0, epsrel=rel_tol, limit=200)
        total += val
    return total


def failure_cross_section(
    cfg: HalfPlaneConfig, cone_halfwidth: float = 0.1, rel_tol: float = 1e-8
) -> FailureResult:
    """Regularised angular integral of |f|^2 with cones cut around both poles.

    The plain integral over the full circle diverges (double poles), so the
    regularised value is reported next to ``1 / (k cos(theta0 / 2))`` rather
    than forced to agree with it.
    """
    if not (0.0 < cone_halfwidth < 0.3):
        raise DomainError("cone half-width must lie in (0, 0.3)")
    t0 = cfg.theta0
    # integrate on the sheet (-pi/2, 3 pi/2]; poles at -theta0 and pi + theta0
    segments = [
        (-0.5 * math.pi, -t0 - cone_halfwidth),
        (-t0 + cone_halfwidth, math.pi + t0 - cone_halfwidth),
        (math.pi + t0 + cone_halfwidth, 1.5 * math.pi),
    ]
    sigma = _integrate_segments(cfg, segments, rel_tol)
    closed = closed_form_cross_section(cfg.k, t0)
    return FailureResult(sigma, cone_halfwidth, closed)


def closed_form_cross_section(k: float, theta0: float) -> float:
    """1 / (k cos(theta0 / 2)); defined for any incidence, including grazing."""
    if not k > 0:
        raise DomainError(f"wavenumber must be positive, got {k!r}")
    return 1.0 / (k * math.cos(0.5 * theta0))


def forbidden_cross_section(cfg: HalfPlaneConfig, rel_tol: float = 1e-10) -> float:
    """Integral of |f|^2 over quadrants I and II (0 < theta < pi).

    Both poles lie outside this range, so the integral is finite. It is the
    part of the edge-scattered flux that lands in the two classically
    forbidden quadrants of the order-of-arrival detector.
    """
    return _integrate_segments(cfg, [(0.0, math.pi)], rel_tol)


def min_resolvable_separation(cfg: HalfPlaneConfig) -> float:
    """Distance 2/k from the edge inside which the ordering measurement fails."""
    return 2.0 / cfg.k
