r"""Special functions used by the analytic scattering modules.

Integer-order Bessel functions of the first and second kind, the outgoing
Hankel function, the Faddeeva function and the error function along the
rotated ray that appears in knife-edge diffraction, plus the finite cosine
(Dirichlet kernel) sum used in partial-wave expansions.

Bessel evaluation strategy, by regime of the argument ``x``:

* ``x < 1``: power series for every order.
* ``1 <= x < 25``: Miller backward recurrence normalised with
  :math:`J_0 + 2\sum_k J_{2k} = 1`; :math:`Y_0, Y_1` from the Neumann series
  built on the same :math:`J` values.
* ``x >= 25``: Hankel asymptotic expansion for orders 0 and 1, upward
  recurrence while ``n <= x``, and a Miller tail matched onto it for ``n > x``.

:math:`Y_n` is always continued by forward recurrence, which is stable.
All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "EvalAccuracy",
    "DEFAULT_ACCURACY",
    "bessel_j",
    "bessel_y",
    "hankel1",
    "bessel_jy_orders",
    "faddeeva",
    "erf_complex",
    "erfc_complex",
    "diffraction_integral",
    "fresnel_step",
    "dirichlet_sum",
    "dirichlet_sum_direct",
]

MAX_ORDER = 2000
MAX_ARG = 1e6

_EULER_GAMMA = 0.5772156649015329
_SERIES_X = 1.0
_ASYMPTOTIC_X = 25.0
_BIG = 1e250


@dataclass(frozen=True)
class EvalAccuracy:
    """Absolute and relative tolerances a kernel result is expected to meet."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol"):
            value = getattr(self, name)
            if not (0.0 < value < 1e-2):
                raise DomainError(f"{name} must lie in (0, 1e-2), got {value!r}")

    def close(self, value, reference) -> bool:
        return abs(value - reference) <= self.abs_tol + self.rel_tol * abs(reference)


DEFAULT_ACCURACY = EvalAccuracy()


# --------------------------------------------------------------------------
# Bessel functions
# --------------------------------------------------------------------------


def _check_order(m):
    if int(m) != m or m < 0:
        raise DomainError(f"order must be a nonnegative integer, got {m!r}")
    if m > MAX_ORDER:
        raise DomainError(f"order {m} exceeds supported maximum {MAX_ORDER}")
    return int(m)


def _series_j(nmax: int, x: float) -> np.ndarray:
    """J_0..J_nmax from the ascending series; intended for x < 1."""
    out = np.zeros(nmax + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    half = 0.5 * x
    q = -half * half
    log_half = math.log(half)
    for n in range(nmax + 1):
        log_lead = n * log_half - math.lgamma(n + 1)
        if log_lead < -745.0:
            break
        term = 1.0
        total = 1.0
        for k in range(1, 40):
            term *= q / (k * (k + n))
            total += term
            if abs(term) < 1e-17 * abs(total):
                break
        out[n] = math.exp(log_lead) * total
    return out


def _miller_start(nmax: int, x: float) -> int:
    base = max(float(nmax), x)
    start = int(base) + 16 + int(math.sqrt(160.0 * base))
    return start + (start % 2)


def _miller_j(nmax: int, x: float) -> np.ndarray:
    """Normalised backward recurrence; returns J_0..J_start (start >= nmax)."""
    start = _miller_start(nmax, x)
    f = np.zeros(start + 2)
    f[start] = 1e-30
    for k in range(start, 0, -1):
        f[k - 1] = (2.0 * k / x) * f[k] - f[k + 1]
        if abs(f[k - 1]) > _BIG:
            f[k - 1 :] /= _BIG
    norm = f[0] + 2.0 * f[2 : start + 1 : 2].sum()
    return f[: start + 1] / norm


def _hankel_pq(nu: int, x: float) -> tuple[float, float]:
    mu = 4.0 * nu * nu
    p = q = 0.0
    term = 1.0
    prev = math.inf
    for k in range(0, 200):
        if k > 0:
            term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        size = abs(term)
        if size > prev:
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * term
        else:
            q += sign * term
        if size < 1e-17:
            break
        prev = size
    return p, q


def _asymptotic_jy(nu: int, x: float) -> tuple[float, float]:
    p, q = _hankel_pq(nu, x)
    chi = x - (0.5 * nu + 0.25) * math.pi
    c, s = math.cos(chi), math.sin(chi)
    amp = math.sqrt(2.0 / (math.pi * x))
    return amp * (p * c - q * s), amp * (p * s + q * c)


def _upward_j(nmax: int, x: float) -> np.ndarray:
    """Upward recurrence seeded from the asymptotic J_0, J_1 (x >= 25)."""
    out = np.zeros(nmax + 1)
    out[0] = _asymptotic_jy(0, x)[0]
    if nmax >= 1:
        out[1] = _asymptotic_jy(1, x)[0]
    for n in range(1, nmax):
        out[n + 1] = (2.0 * n / x) * out[n] - out[n - 1]
    return out


def _j_orders(nmax: int, x: float) -> np.ndarray:
    """J_0..J_n for some n >= nmax (extra orders feed the Neumann series)."""
    if x < _SERIES_X:
        return _series_j(max(nmax, 40), x)
    if x < _ASYMPTOTIC_X:
        return _miller_j(nmax, x)
    n_up = min(nmax, int(x))
    up = _upward_j(max(n_up, 1), x)
    if nmax <= n_up:
        return up[: nmax + 1]
    tail = _miller_j(nmax, x)
    # least-squares scale over the two overlap orders
    i = np.array([n_up - 1, n_up])
    scale = np.dot(up[i], tail[i]) / np.dot(tail[i], tail[i])
    out = tail[: nmax + 1] * scale
    out[: n_up + 1] = up[: n_up + 1]
    return out


def _y01(x: float, j: np.ndarray) -> tuple[float, float]:
    if x >= _ASYMPTOTIC_X:
        return _asymptotic_jy(0, x)[1], _asymptotic_jy(1, x)[1]
    lg = math.log(0.5 * x) + _EULER_GAMMA
    kmax = (len(j) - 2) // 2
    k = np.arange(1, kmax + 1)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    s0 = np.sum(sign * j[2 * k] / k)
    s1 = np.sum(sign * (j[2 * k - 1] - j[2 * k + 1]) / k)
    y0 = (2.0 / math.pi) * lg * j[0] - (4.0 / math.pi) * s0
    y1 = -(2.0 / math.pi) * (j[0] / x - lg * j[1]) + (2.0 / math.pi) * s1
    return y0, y1


def _y_orders(nmax: int, x: float, j: np.ndarray) -> np.ndarray:
    y = np.empty(nmax + 1)
    y0, y1 = _y01(x, j)
    y[0] = y0
    if nmax >= 1:
        y[1] = y1
    for n in range(1, nmax):
        nxt = (2.0 * n / x) * y[n] - y[n - 1]
        if not math.isfinite(nxt):
            # Y_n(x) < 0 for n > x; the remaining orders overflow
            y[n + 1 :] = -math.inf
            break
        y[n + 1] = nxt
    return y


def bessel_jy_orders(nmax: int, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Return arrays ``(J, Y)`` holding orders ``0..nmax`` at a single ``x > 0``.

    Orders where ``Y_n`` overflows double precision are returned as ``-inf``.
    """
    nmax = _check_order(nmax)
    x = float(x)
    if not (0.0 < x <= MAX_ARG):
        raise DomainError(f"x must lie in (0, {MAX_ARG:g}], got {x!r}")
    j = _j_orders(max(nmax, 1), x)
    y = _y_orders(nmax, x, j)
    return j[: nmax + 1].copy(), y


def _scalar_j(m: int, x: float) -> float:
    if not (0.0 <= x <= MAX_ARG) or math.isnan(x):
        raise DomainError(f"x must lie in [0, {MAX_ARG:g}], got {x!r}")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    return float(_j_orders(max(m, 1), x)[m])


def _scalar_y(m: int, x: float) -> float:
    if not (0.0 < x <= MAX_ARG):
        raise DomainError(f"Y_m is defined here for 0 < x <= {MAX_ARG:g}, got {x!r}")
    j = _j_orders(1, x)
    return float(_y_orders(m, x, j)[m])


def _map_scalar(fn, m, x):
    m = _check_order(m)
    if np.ndim(x) == 0:
        return fn(m, float(x))
    xs = np.asarray(x, dtype=float)
    return np.array([fn(m, float(v)) for v in xs.ravel()]).reshape(xs.shape)


def bessel_j(m: int, x):
    """Bessel function of the first kind J_m(x) for integer m >= 0, x >= 0."""
    return _map_scalar(_scalar_j, m, x)


def bessel_y(m: int, x):
    """Bessel function of the second kind N_m(x) = Y_m(x), x > 0."""
    return _map_scalar(_scalar_y, m, x)


def hankel1(m: int, x):
    """Outgoing Hankel function H^(1)_m(x) = J_m(x) + i Y_m(x)."""

    def one(order, v):
        if not (0.0 < v <= MAX_ARG):
            raise DomainError(f"H_m is defined here for 0 < x <= {MAX_ARG:g}, got {v!r}")
        j = _j_orders(max(order, 1), v)
        return complex(j[order], _y_orders(order, v, j)[order])

    m = _check_order(m)
    if np.ndim(x) == 0:
        return one(m, float(x))
    xs = np.asarray(x, dtype=float)
    return np.array([one(m, float(v)) for v in xs.ravel()], dtype=complex).reshape(xs.shape)


# --------------------------------------------------------------------------
# Faddeeva / error function
# --------------------------------------------------------------------------

_W_TERMS = 36
_W_CF_RADIUS = 8.0


def _weideman_coefficients(n: int):
    m = 2 * n
    scale = math.sqrt(n / math.sqrt(2.0))
    k = np.arange(-m + 1, m)
    t = scale * np.tan(0.5 * k * math.pi / m)
    f = np.empty(k.size + 1)
    f[0] = 0.0
    f[1:] = np.exp(-t * t) * (scale * scale + t * t)
    a = np.fft.fft(np.fft.fftshift(f)).real / (2 * m)
    return scale, a[1 : n + 1][::-1].copy()


_W_L, _W_COEF = _weideman_coefficients(_W_TERMS)


def _faddeeva_weideman(z: np.ndarray) -> np.ndarray:
    denom = _W_L - 1j * z
    zeta = (_W_L + 1j * z) / denom
    poly = np.polyval(_W_COEF, zeta)
    return 2.0 * poly / denom**2 + (1.0 / math.sqrt(math.pi)) / denom


def _faddeeva_cf(z: np.ndarray) -> np.ndarray:
    # Laplace continued fraction, evaluated bottom-up
    acc = np.zeros_like(z)
    for n in range(60, 0, -1):
        acc = (0.5 * n) / (z - acc)
    return (1j / math.sqrt(math.pi)) / (z - acc)


def _faddeeva_upper(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    far = np.abs(z) >= _W_CF_RADIUS
    if far.any():
        out[far] = _faddeeva_cf(z[far])
    if (~far).any():
        out[~far] = _faddeeva_weideman(z[~far])
    return out


def _exp_neg_square(z: np.ndarray) -> np.ndarray:
    expo = -(z * z)
    if np.any(expo.real > 709.0):
        raise OverflowError("exp(-z^2) exceeds the double-precision range")
    return np.exp(expo)


def faddeeva(z):
    """Faddeeva function w(z) = exp(-z^2) erfc(-i z)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    upper = z.imag >= 0
    out[upper] = _faddeeva_upper(z[upper])
    if (~upper).any():
        zl = z[~upper]
        out[~upper] = 2.0 * _exp_neg_square(zl) - _faddeeva_upper(-zl)
    return out[0] if scalar else out


def _erfc_right(z: np.ndarray) -> np.ndarray:
    """erfc on Re z >= 0 via exp(-z^2) w(iz); i z then lies in the upper half plane."""
    return _exp_neg_square(z) * _faddeeva_upper(1j * z)


def erfc_complex(z):
    """Complementary error function of a complex argument."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    right = z.real >= 0
    out[right] = _erfc_right(z[right])
    if (~right).any():
        out[~right] = 2.0 - _erfc_right(-z[~right])
    return out[0] if scalar else out


def erf_complex(z):
    """Error function of a complex argument (odd by construction)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    sign = np.where(z.real >= 0, 1.0, -1.0)
    out = sign * (1.0 - _erfc_right(sign * z))
    small = np.abs(z) < 1e-3
    if small.any():
        # cancellation guard: Maclaurin series
        zs = z[small]
        z2 = zs * zs
        out[small] = (2.0 / math.sqrt(math.pi)) * zs * (
            1.0 - z2 / 3.0 + z2 * z2 / 10.0 - z2**3 / 42.0
        )
    return out[0] if scalar else out


_ROT = complex(math.cos(-math.pi / 4), math.sin(-math.pi / 4))


def _check_diffraction_arg(z):
    if np.any(np.abs(z) > 1e4):
        raise DomainError("diffraction integral supported for |z| <= 1e4")


def diffraction_integral(z):
    r"""Odd Fresnel-type integral :math:`\Phi(z) = \mathrm{erf}(e^{-i\pi/4} z)`.

    Equivalently :math:`\Phi(z) = \frac{2}{\sqrt{i\pi}}\int_0^z e^{it^2}dt`, so
    :math:`\Phi(\pm\infty) = \pm 1` along the real axis.
    """
    z = np.asarray(z, dtype=complex)
    _check_diffraction_arg(z)
    return erf_complex(_ROT * z)


def fresnel_step(z):
    r"""Smooth step :math:`\tfrac12[1 + \Phi(z)] = \frac{1}{\sqrt{i\pi}}\int_{-\infty}^z e^{it^2}dt`.

    Evaluated as ``erfc(-e^{-i pi/4} z) / 2`` so that the small values reached
    for large negative real ``z`` carry full relative precision.
    """
    z = np.asarray(z, dtype=complex)
    _check_diffraction_arg(z)
    return 0.5 * erfc_complex(-_ROT * z)


# --------------------------------------------------------------------------
# Finite cosine sums
# --------------------------------------------------------------------------


def dirichlet_sum_direct(M: int, theta):
    """sum_{m=0}^{M} eps_m cos(m theta), eps_0 = 1 and eps_m = 2 otherwise."""
    theta = np.asarray(theta, dtype=float)
    m = np.arange(1, M + 1)
    if M == 0:
        return np.ones_like(theta)[()] if theta.ndim == 0 else np.ones_like(theta)
    terms = np.cos(np.multiply.outer(theta, m))
    return 1.0 + 2.0 * terms.sum(axis=-1)


def dirichlet_sum(M: int, theta):
    """Closed form sin((M + 1/2) theta) / sin(theta / 2); 2M + 1 where theta = 0 mod 2 pi."""
    if int(M) != M or M < 0:
        raise DomainError(f"M must be a nonnegative integer, got {M!r}")
    theta = np.asarray(theta, dtype=float)
    half = np.sin(0.5 * theta)
    near = np.abs(half) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin((M + 0.5) * theta) / half
    if np.any(near):
        out = np.where(near, dirichlet_sum_direct(M, theta), out)
    return out[()] if out.ndim == 0 else out
