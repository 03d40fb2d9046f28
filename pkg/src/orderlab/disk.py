"""Partial-wave scattering of a plane wave off a hard disk of radius ``a``.

Conventions: the incident wave is ``exp(i k x)``; ``theta = 0`` is the forward
direction. Phase shifts follow ``tan(delta_m) = -J_m(ka) / N_m(ka)``, which
makes every ``delta_m`` start at zero and grow with ``ka``. Outgoing radial
waves are Hankel functions of the first kind, so the scattered far field is
``f(theta) exp(i k r) / sqrt(r)`` with

    f(theta) = -sqrt(2 / (pi k)) exp(i pi/4) sum_m eps_m exp(-i delta_m) sin(delta_m) cos(m theta)

and ``eps_0 = 1``, ``eps_m = 2`` otherwise. ``exp(-i delta) sin(delta)`` is
computed as ``-i J / H`` so that no branch choice enters the amplitude.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RegimeError, TruncationWarning
from .specfun import bessel_jy_orders

__all__ = [
    "PhaseShift",
    "PartialWaveSum",
    "CrossSectionProfile",
    "truncation_order",
    "phase_shift",
    "phase_shift_sweep",
    "small_ka_shift",
    "large_ka_shift",
    "shift_ratio",
    "shift_ratio_sweep",
    "partial_waves",
    "scattering_amplitude",
    "differential_cross_section",
    "cross_section_profile",
    "total_cross_section",
    "shadow_sharpness",
    "hemisphere_fractions",
]

_MARCH_FLOOR = 1e-8
_MARCH_RATIO = 1.05
_MARCH_STEP = 0.25
_TRUNCATION_LEVEL = 1e-8


@dataclass(frozen=True)
class PhaseShift:
    m: int
    ka: float
    delta: float


def truncation_order(ka: float) -> int:
    return int(math.ceil(ka + 8.0 * ka ** (1.0 / 3.0) + 10.0))


def _principal_shifts(nmax: int, ka: float) -> tuple[np.ndarray, np.ndarray]:
    """Principal-value shifts in (-pi, pi] for orders 0..nmax, plus J/H."""
    j, y = bessel_jy_orders(nmax, ka)
    delta = np.arctan2(j, -y)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.isfinite(y), j / (j + 1j * y), 0.0)
    return delta, ratio


def _march_grid(ka_max: float) -> np.ndarray:
    """Abscissae from near zero to ka_max, fine where delta_0 turns fastest."""
    pts = [_MARCH_FLOOR]
    x = _MARCH_FLOOR
    while x * _MARCH_RATIO < min(1.0, ka_max):
        x *= _MARCH_RATIO
        pts.append(x)
    x = max(pts[-1], 1.0)
    while x + _MARCH_STEP < ka_max:
        x += _MARCH_STEP
        pts.append(x)
    return np.array(pts)


def _unwrap_onto(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=float)
    jump = np.diff(out)
    fix = -np.pi * np.round(jump / np.pi)
    out[1:] += np.cumsum(fix)
    return out


def phase_shift_sweep(m: int, ka_values) -> list[PhaseShift]:
    """Phase shifts on the continuous branch anchored at delta_m(0) = 0.

    The branch is carried by marching in ``ka`` from ~0 through a grid fine
    enough that successive principal values differ by far less than pi/2,
    merged with the requested points.
    """
    if int(m) != m or m < 0:
        raise DomainError(f"partial-wave index must be a nonnegative integer, got {m!r}")
    m = int(m)
    ka_values = np.atleast_1d(np.asarray(ka_values, dtype=float))
    if np.any(ka_values < 0):
        raise DomainError("ka must be nonnegative")
    positive = ka_values[ka_values > 0]
    top = positive.max() if positive.size else 0.0
    grid = np.union1d(_march_grid(top), positive) if positive.size else np.array([])
    principal = np.array([_principal_shifts(m, x)[0][m] for x in grid])
    branch = _unwrap_onto(principal)
    lookup = dict(zip(grid.tolist(), branch.tolist()))
    return [PhaseShift(m, float(v), lookup[float(v)] if v > 0 else 0.0) for v in ka_values]


def phase_shift(m: int, ka: float) -> PhaseShift:
    return phase_shift_sweep(m, [ka])[0]


def small_ka_shift(m: int, ka: float) -> float:
    """Leading small-ka phase shift; ka < 0.1."""
    if not (0.0 < ka < 0.1):
        raise RegimeError(f"small-ka form needs 0 < ka < 0.1, got {ka!r}")
    if m == 0:
        return math.atan(-math.pi / (2.0 * math.log(ka)))
    return math.pi * m / math.factorial(m) ** 2 * (0.5 * ka) ** (2 * m)


def large_ka_shift(m: int, ka: float) -> float:
    """Large-ka form ka - (pi/2)(m + 1/2); ka > 5m + 10."""
    if not ka > 5 * m + 10:
        raise RegimeError(f"large-ka form needs ka > {5 * m + 10}, got {ka!r}")
    return ka - 0.5 * math.pi * (m + 0.5)


def shift_ratio_sweep(ka_values) -> np.ndarray:
    ka_values = np.asarray(ka_values, dtype=float)
    if np.any(ka_values <= 0):
        raise DomainError("ka must be positive")
    d0 = np.array([p.delta for p in phase_shift_sweep(0, ka_values)])
    d1 = np.array([p.delta for p in phase_shift_sweep(1, ka_values)])
    return d1 / d0


def shift_ratio(ka: float) -> float:
    """delta_1 / delta_0 on the continuous branches."""
    return float(shift_ratio_sweep([ka])[0])


@dataclass(frozen=True)
class PartialWaveSum:
    k: float
    a: float
    m_max: int
    shifts: tuple[PhaseShift, ...]
    # exp(-i delta) sin(delta) per order, branch independent
    weights: np.ndarray = field(repr=False)

    @property
    def ka(self) -> float:
        return self.k * self.a

    @property
    def neumann(self) -> np.ndarray:
        eps = np.full(self.m_max + 1, 2.0)
        eps[0] = 1.0
        return eps

    def sin2(self) -> np.ndarray:
        return np.abs(self.weights) ** 2


def partial_waves(k: float, a: float, m_max: int | None = None) -> PartialWaveSum:
    if not (k > 0 and a > 0):
        raise DomainError("k and a must be positive")
    ka = k * a
    needed = truncation_order(ka)
    if m_max is None:
        m_max = needed
    elif m_max < needed:
        warnings.warn(
            f"m_max={m_max} is below the safety order {needed} for ka={ka:g}", TruncationWarning, stacklevel=2
        )
    delta, ratio = _principal_shifts(m_max, ka)
    shifts = tuple(PhaseShift(m, ka, float(d)) for m, d in enumerate(delta))
    weights = -1j * ratio
    pw = PartialWaveSum(k, a, m_max, shifts, weights)
    _check_truncation(pw)
    return pw


def _check_truncation(pw: PartialWaveSum) -> None:
    contrib = pw.neumann * pw.sin2()
    total = contrib.sum()
    if total > 0 and contrib[-1] > _TRUNCATION_LEVEL * total:
        warnings.warn(
            f"last partial wave carries {contrib[-1] / total:.2e} of the cross section", TruncationWarning, stacklevel=3
        )


def scattering_amplitude(theta, pw: PartialWaveSum):
    theta = np.asarray(theta, dtype=float)
    m = np.arange(pw.m_max + 1)
    coef = pw.neumann * pw.weights
    series = np.cos(np.multiply.outer(theta, m)) @ coef
    out = -math.sqrt(2.0 / (math.pi * pw.k)) * np.exp(0.25j * math.pi) * series
    return out[()] if out.ndim == 0 else out


def differential_cross_section(theta, pw: PartialWaveSum):
    """sigma(theta) = |f(theta)|^2, a length per radian."""
    return np.abs(scattering_amplitude(theta, pw)) ** 2


@dataclass(frozen=True)
class CrossSectionProfile:
    angles: np.ndarray
    values: np.ndarray
    total: float


def cross_section_profile(pw: PartialWaveSum, n_angles: int | None = None) -> CrossSectionProfile:
    """sigma on a uniform periodic grid over [-pi, pi).

    The grid is at least four times the truncation order, so the periodic
    trapezoid rule integrates the trigonometric polynomial exactly.
    """
    n = max(n_angles or 0, 4 * pw.m_max + 8)
    angles = -math.pi + 2.0 * math.pi * np.arange(n) / n
    values = differential_cross_section(angles, pw)
    total = float(values.sum() * 2.0 * math.pi / n)
    return CrossSectionProfile(angles, values, total)


def total_cross_section(pw: PartialWaveSum) -> float:
    """(4/k) sum_m eps_m sin^2(delta_m)."""
    return float(4.0 / pw.k * np.sum(pw.neumann * pw.sin2()))


def _backward_overlap(m: np.ndarray) -> np.ndarray:
    """Matrix of integrals of cos(m t) cos(n t) over pi/2 < |t| < pi."""

    def seg(p):
        # integral of cos(p t) over [pi/2, pi]
        p = np.asarray(p, dtype=float)
        out = np.full(p.shape, 0.5 * math.pi)
        nz = p != 0
        out[nz] = -np.sin(0.5 * math.pi * p[nz]) / p[nz]
        return out

    mm, nn = np.meshgrid(m, m, indexing="ij")
    # two symmetric halves, each 1/2 [cos((m-n)t) + cos((m+n)t)]
    return seg(mm - nn) + seg(mm + nn)


def hemisphere_fractions(pw: PartialWaveSum) -> tuple[float, float]:
    """(forward, backward) shares of the scattered flux, split at |theta| = pi/2."""
    m = np.arange(pw.m_max + 1)
    c = pw.neumann * pw.weights
    back = float(np.real(np.conj(c) @ _backward_overlap(m) @ c))
    # full-circle integral of |sum c_m cos m t|^2
    full = float(math.pi * (2.0 * abs(c[0]) ** 2 + np.sum(np.abs(c[1:]) ** 2)))
    frac = back / full if full > 0 else 0.5
    return 1.0 - frac, frac


def shadow_sharpness(pw: PartialWaveSum) -> float:
    """Fraction of scattered flux sent into the backward hemisphere |theta| > pi/2."""
    return hemisphere_fractions(pw)[1]
