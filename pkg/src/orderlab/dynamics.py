"""Time-dependent 2D wavepackets for the two-particle arrival problem.

Two free particles on a line with masses ``m1`` and ``m2`` are one particle
on the plane (coordinate ``x`` for the first particle, ``y`` for the second).
Rescaling each axis by ``sqrt(m_i / M)`` turns the kinetic term into that of
a single particle of mass ``M``; the detector becomes a hard obstacle in the
plane (knife edge on the negative y-axis, a disk, or a strip).

Units are ``hbar = 1``. Hard obstacles are Dirichlet nodes where the field is
pinned to zero. Time stepping is alternating-direction Crank-Nicolson: each
direction applies the Cayley transform of the 1D kinetic operator restricted
to the free nodes, so every half step is exactly unitary. The order of the
two directions alternates from step to step.

Field arrays are indexed ``field[ix, iy]``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numba
import numpy as np

from .errors import AccuracyWarning, DomainError, NumericalError

__all__ = [
    "Packet1D",
    "TwoBodyConfig",
    "PlaneConfig",
    "GridState",
    "MaskKind",
    "PotentialMask",
    "QuadrantProbabilities",
    "Outcome",
    "map_two_body_to_plane",
    "make_grid",
    "domain_half_width",
    "gaussian_state",
    "edge_mask",
    "wall_mask",
    "disk_mask",
    "strip_mask",
    "empty_mask",
    "Propagator",
    "accuracy_bound",
    "evolve",
    "norm",
    "position_moments",
    "mean_momentum",
    "energy",
    "quadrant_probabilities",
    "classify_outcome",
    "save_state",
    "load_state",
    "CHECKPOINT_VERSION",
]

CHECKPOINT_VERSION = "orderlab-gridstate/1"


# --------------------------------------------------------------------------
# configurations and the canonical rescaling
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Packet1D:
    """Gaussian packet on a line: |psi|^2 has standard deviation ``width``."""

    center: float
    width: float
    momentum: float


@dataclass(frozen=True)
class TwoBodyConfig:
    m1: float
    m2: float
    x: Packet1D
    y: Packet1D

    def __post_init__(self):
        if not (self.m1 > 0 and self.m2 > 0):
            raise DomainError("masses must be positive")
        for name, p in (("x", self.x), ("y", self.y)):
            if not p.width > 0:
                raise DomainError(f"{name}-packet width must be positive")
            if p.center < 5.0 * p.width:
                raise DomainError(f"{name}-packet must start at least 5 widths right of the origin")
            if not p.momentum < 0:
                raise DomainError(f"{name}-packet must travel toward the origin (negative momentum)")

    def mean_energy(self) -> float:
        """<E> = sum_i (p_i^2 + 1/(4 w_i^2)) / (2 m_i)."""
        ex = (self.x.momentum**2 + 0.25 / self.x.width**2) / (2.0 * self.m1)
        ey = (self.y.momentum**2 + 0.25 / self.y.width**2) / (2.0 * self.m2)
        return ex + ey


@dataclass(frozen=True)
class PlaneConfig:
    M: float
    center: tuple[float, float]
    widths: tuple[float, float]
    momentum: tuple[float, float]
    scale: tuple[float, float] = (1.0, 1.0)  # X = scale[0] * x, Y = scale[1] * y
    alpha_scale: float = 1.0

    @property
    def k(self) -> float:
        return math.hypot(*self.momentum)

    @property
    def theta0(self) -> float:
        """Direction the packet comes from, measured from the +x axis."""
        return math.atan2(-self.momentum[1], -self.momentum[0])

    def mean_energy(self) -> float:
        px, py = self.momentum
        wx, wy = self.widths
        return (px * px + py * py + 0.25 / wx**2 + 0.25 / wy**2) / (2.0 * self.M)


def map_two_body_to_plane(cfg: TwoBodyConfig, M: float = 1.0) -> PlaneConfig:
    """Rescale both axes so that the kinetic energy reads P^2 / 2M.

    New coordinates are ``X = sqrt(m1/M) x`` and new momenta
    ``P_X = sqrt(M/m1) p_x`` (likewise for y); equivalently the old operators
    are replaced by ``p_x -> sqrt(m1/M) P_X`` and ``x -> sqrt(M/m1) X``.
    """
    if not M > 0:
        raise DomainError("effective mass must be positive")
    sx = math.sqrt(cfg.m1 / M)
    sy = math.sqrt(cfg.m2 / M)
    return PlaneConfig(
        M=M,
        center=(cfg.x.center * sx, cfg.y.center * sy),
        widths=(cfg.x.width * sx, cfg.y.width * sy),
        momentum=(cfg.x.momentum / sx, cfg.y.momentum / sy),
        scale=(sx, sy),
        alpha_scale=math.sqrt(M / cfg.m1),
    )


# --------------------------------------------------------------------------
# grid state
# --------------------------------------------------------------------------


@dataclass
class GridState:
    field: np.ndarray
    spacing: tuple[float, float]
    origin: tuple[int, int]  # node index of (0, 0)
    time: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.field.shape

    @property
    def h(self) -> float:
        hx, hy = self.spacing
        if hx != hy:
            raise AttributeError("grid is anisotropic; use .spacing")
        return hx

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.shape
        hx, hy = self.spacing
        return (np.arange(nx) - self.origin[0]) * hx, (np.arange(ny) - self.origin[1]) * hy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")

    def copy(self) -> GridState:
        return replace(self, field=self.field.copy())


def make_grid(x_range, y_range, spacing) -> GridState:
    """Zero field on a grid with a node at the origin covering the given ranges."""
    if np.ndim(spacing) == 0:
        spacing = (float(spacing), float(spacing))
    hx, hy = (float(s) for s in spacing)
    ix0 = int(math.ceil(-x_range[0] / hx))
    iy0 = int(math.ceil(-y_range[0] / hy))
    nx = ix0 + int(math.ceil(x_range[1] / hx)) + 1
    ny = iy0 + int(math.ceil(y_range[1] / hy)) + 1
    return GridState(np.zeros((nx, ny), dtype=complex), (hx, hy), (ix0, iy0))


def domain_half_width(plane: PlaneConfig, t_final: float, tails: float = 6.0) -> float:
    """Half-width of a square box around the origin that keeps the packet and
    everything scattered from the origin more than ``tails`` widths from the edge
    up to ``t_final`` (6 widths leave ~1e-9 of the probability outside)."""
    speed = plane.k / plane.M
    w = max(plane.widths)
    spread = w * math.sqrt(1.0 + (t_final / (2.0 * plane.M * w * w)) ** 2)
    start = math.hypot(*plane.center)
    # the centre moves from ``start`` through the edge; scattered waves leave
    # the origin no earlier than the arrival time
    return max(start, speed * t_final - start) + tails * spread


def gaussian_state(grid: GridState, plane: PlaneConfig, mask: PotentialMask | None = None) -> GridState:
    """Normalised Gaussian packet, zeroed on mask nodes."""
    X, Y = grid.mesh()
    (x0, y0), (wx, wy), (px, py) = plane.center, plane.widths, plane.momentum
    psi = np.exp(-((X - x0) ** 2) / (4 * wx * wx) - ((Y - y0) ** 2) / (4 * wy * wy) + 1j * (px * X + py * Y))
    if mask is not None:
        psi[mask.nodes] = 0.0
    out = replace(grid, field=psi, time=0.0)
    out.field /= math.sqrt(norm(out))
    return out


def norm(state: GridState) -> float:
    hx, hy = state.spacing
    return float(np.sum(np.abs(state.field) ** 2) * hx * hy)


# --------------------------------------------------------------------------
# hard obstacles
# --------------------------------------------------------------------------


class MaskKind(enum.Enum):
    NONE = "none"
    EDGE = "edge"
    WALL = "wall"
    DISK = "disk"
    STRIP = "strip"


@dataclass(frozen=True)
class PotentialMask:
    kind: MaskKind
    nodes: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)


def empty_mask(grid: GridState) -> PotentialMask:
    return PotentialMask(MaskKind.NONE, np.zeros(grid.shape, dtype=bool))


def edge_mask(grid: GridState) -> PotentialMask:
    """Knife edge: the x = 0 column for y < 0."""
    nodes = np.zeros(grid.shape, dtype=bool)
    ix0, iy0 = grid.origin
    nodes[ix0, :iy0] = True
    return PotentialMask(MaskKind.EDGE, nodes)


def wall_mask(grid: GridState) -> PotentialMask:
    """The whole x = 0 column: a mirror for the x-particle."""
    nodes = np.zeros(grid.shape, dtype=bool)
    nodes[grid.origin[0], :] = True
    return PotentialMask(MaskKind.WALL, nodes)


def disk_mask(grid: GridState, a: float, center=(0.0, 0.0)) -> PotentialMask:
    X, Y = grid.mesh()
    nodes = (X - center[0]) ** 2 + (Y - center[1]) ** 2 <= a * a
    return PotentialMask(MaskKind.DISK, nodes, {"a": a, "center": tuple(center)})


def strip_mask(grid: GridState, a: float) -> PotentialMask:
    """Segment of half-length ``a`` through the origin along the anti-diagonal.

    It lies at pi/4 to both axes, perpendicular to the diagonal along which
    equal-speed packets approach, and is one node thick (nodes with
    ``ix + iy`` fixed, which the 5-point stencil cannot leak across).
    """
    nx, ny = grid.shape
    ix, iy = np.meshgrid(np.arange(nx) - grid.origin[0], np.arange(ny) - grid.origin[1], indexing="ij")
    X, Y = grid.mesh()
    along = np.abs(X - Y) / math.sqrt(2.0)
    nodes = (ix + iy == 0) & (along <= a)
    return PotentialMask(MaskKind.STRIP, nodes, {"a": a})


# --------------------------------------------------------------------------
# ADI Crank-Nicolson propagator
# --------------------------------------------------------------------------


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _factor_axis0(beta, mask):
    """Thomas factors for (1 + i dt/2 H) along axis 0; mask rows become identity."""
    n, m = mask.shape
    cp = np.zeros((n, m), dtype=np.complex128)
    inv = np.zeros((n, m), dtype=np.complex128)
    off = -1j * beta
    for j in range(m):
        prev_c = 0.0 + 0.0j
        for i in range(n):
            if mask[i, j]:
                d, lo, up = 1.0 + 0.0j, 0.0j, 0.0j
            else:
                d = 1.0 + 2j * beta
                lo = off if i > 0 else 0.0j
                up = off if i < n - 1 else 0.0j
            den = d - lo * prev_c
            inv[i, j] = 1.0 / den
            cp[i, j] = up / den
            prev_c = cp[i, j]
    return cp, inv


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _sweep_axis0(psi, beta, mask, cp, inv):
    """psi <- (1 + i dt/2 H)^-1 (1 - i dt/2 H) psi along axis 0, in place."""
    n, m = psi.shape
    off = -1j * beta
    rhs = np.empty(m, dtype=np.complex128)
    prev = np.zeros(m, dtype=np.complex128)
    dp = np.empty((n, m), dtype=np.complex128)
    for i in range(n):
        for j in range(m):
            if mask[i, j]:
                r = 0.0j
            else:
                r = (1.0 - 2j * beta) * psi[i, j]
                if i > 0:
                    r += 1j * beta * psi[i - 1, j]
                if i < n - 1:
                    r += 1j * beta * psi[i + 1, j]
            rhs[j] = r
        for j in range(m):
            lo = 0.0j
            if i > 0 and not mask[i, j]:
                lo = off
            val = (rhs[j] - lo * prev[j]) * inv[i, j]
            dp[i, j] = val
            prev[j] = val
    for j in range(m):
        psi[n - 1, j] = dp[n - 1, j]
    for i in range(n - 2, -1, -1):
        for j in range(m):
            psi[i, j] = dp[i, j] - cp[i, j] * psi[i + 1, j]


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _factor_axis1(beta, mask):
    n, m = mask.shape
    cp = np.zeros((n, m), dtype=np.complex128)
    inv = np.zeros((n, m), dtype=np.complex128)
    off = -1j * beta
    for i in range(n):
        prev_c = 0.0 + 0.0j
        for j in range(m):
            if mask[i, j]:
                d, lo, up = 1.0 + 0.0j, 0.0j, 0.0j
            else:
                d = 1.0 + 2j * beta
                lo = off if j > 0 else 0.0j
                up = off if j < m - 1 else 0.0j
            den = d - lo * prev_c
            inv[i, j] = 1.0 / den
            cp[i, j] = up / den
            prev_c = cp[i, j]
    return cp, inv


@numba.njit(cache=True, fastmath=True, error_model="numpy")
def _sweep_axis1(psi, beta, mask, cp, inv):
    """Same Cayley step as :func:`_sweep_axis0`, along axis 1."""
    n, m = psi.shape
    off = -1j * beta
    row = np.empty(m, dtype=np.complex128)
    dp = np.empty(m, dtype=np.complex128)
    for i in range(n):
        for j in range(m):
            row[j] = psi[i, j]
        prev = 0.0j
        for j in range(m):
            if mask[i, j]:
                r = 0.0j
                lo = 0.0j
            else:
                r = (1.0 - 2j * beta) * row[j]
                if j > 0:
                    r += 1j * beta * row[j - 1]
                if j < m - 1:
                    r += 1j * beta * row[j + 1]
                lo = off if j > 0 else 0.0j
            prev = (r - lo * prev) * inv[i, j]
            dp[j] = prev
        psi[i, m - 1] = dp[m - 1]
        for j in range(m - 2, -1, -1):
            psi[i, j] = dp[j] - cp[i, j] * psi[i, j + 1]


class Propagator:
    """Prefactored ADI step for a fixed grid, obstacle, masses and time step."""

    def __init__(self, shape, spacing, mask_nodes, dt: float, masses=(1.0, 1.0)):
        hx, hy = spacing
        mx, my = masses
        self.dt = float(dt)
        self.shape = tuple(shape)
        self.mask = np.ascontiguousarray(mask_nodes, dtype=np.bool_)
        self.beta_x = self.dt / (4.0 * mx * hx * hx)
        self.beta_y = self.dt / (4.0 * my * hy * hy)
        self._fx = _factor_axis0(self.beta_x, self.mask)
        self._fy = _factor_axis1(self.beta_y, self.mask)
        self._flip = False

    def step(self, psi: np.ndarray, steps: int = 1) -> np.ndarray:
        """Advance ``psi`` (modified in place and returned) by ``steps`` steps.

        The sweep order alternates x-y, y-x on successive steps; each pair is
        a time-symmetric composition, which keeps the scheme second order
        when an obstacle makes the two directions fail to commute.
        """
        for _ in range(steps):
            if self._flip:
                _sweep_axis1(psi, self.beta_y, self.mask, *self._fy)
                _sweep_axis0(psi, self.beta_x, self.mask, *self._fx)
            else:
                _sweep_axis0(psi, self.beta_x, self.mask, *self._fx)
                _sweep_axis1(psi, self.beta_y, self.mask, *self._fy)
            self._flip = not self._flip
        return psi


def accuracy_bound(spacing, masses=(1.0, 1.0)) -> float:
    """dt below which the implicit scheme resolves the grid's shortest waves."""
    return min(h * h * m / 2.0 for h, m in zip(spacing, masses))


def evolve(
    state: GridState,
    mask: PotentialMask,
    dt: float,
    steps: int,
    masses=(1.0, 1.0),
    propagator: Propagator | None = None,
    chunk: int = 100,
) -> GridState:
    """Advance a state by ``steps`` ADI steps; returns a new state.

    Warns with :class:`AccuracyWarning` when ``dt`` exceeds
    :func:`accuracy_bound`; raises :class:`NumericalError` on non-finite values.
    """
    if steps < 0 or dt <= 0:
        raise DomainError("dt must be positive and steps nonnegative")
    if dt > accuracy_bound(state.spacing, masses):
        warnings.warn(
            f"dt={dt:g} exceeds the accuracy bound {accuracy_bound(state.spacing, masses):g}",
            AccuracyWarning,
            stacklevel=2,
        )
    prop = propagator or Propagator(state.shape, state.spacing, mask.nodes, dt, masses)
    psi = np.array(state.field, dtype=np.complex128, order="C")
    psi[mask.nodes] = 0.0
    done = 0
    while done < steps:
        n = min(chunk, steps - done)
        prop.step(psi, n)
        done += n
        if not np.isfinite(psi).all():
            raise NumericalError(f"non-finite field after {done} steps")
    return GridState(psi, state.spacing, state.origin, state.time + steps * dt)


# --------------------------------------------------------------------------
# observables
# --------------------------------------------------------------------------


def position_moments(state: GridState) -> dict:
    """Means and standard deviations of |psi|^2 along each axis."""
    rho = np.abs(state.field) ** 2
    total = rho.sum()
    x, y = state.axes()
    px, py = rho.sum(axis=1) / total, rho.sum(axis=0) / total
    mx, my = px @ x, py @ y
    return {
        "mean": (float(mx), float(my)),
        "std": (float(math.sqrt(px @ (x - mx) ** 2)), float(math.sqrt(py @ (y - my) ** 2))),
    }


def mean_momentum(state: GridState) -> tuple[float, float]:
    """<p_x>, <p_y> from the discrete Fourier transform of the field."""
    spec = np.abs(np.fft.fft2(state.field)) ** 2
    nx, ny = state.shape
    kx = 2 * math.pi * np.fft.fftfreq(nx, state.spacing[0])
    ky = 2 * math.pi * np.fft.fftfreq(ny, state.spacing[1])
    total = spec.sum()
    return float(kx @ spec.sum(axis=1) / total), float(ky @ spec.sum(axis=0) / total)


def energy(state: GridState, masses=(1.0, 1.0)) -> float:
    """<H> with the same 3-point second differences the propagator uses."""
    psi = state.field
    hx, hy = state.spacing
    lap_x = -2.0 * psi
    lap_x[1:, :] += psi[:-1, :]
    lap_x[:-1, :] += psi[1:, :]
    lap_y = -2.0 * psi
    lap_y[:, 1:] += psi[:, :-1]
    lap_y[:, :-1] += psi[:, 1:]
    h_psi = -lap_x / (2 * masses[0] * hx * hx) - lap_y / (2 * masses[1] * hy * hy)
    return float(np.real(np.vdot(psi, h_psi)) / np.real(np.vdot(psi, psi)))


@dataclass(frozen=True)
class QuadrantProbabilities:
    p1: float
    p2: float
    p3: float
    p4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p1, self.p2, self.p3, self.p4)

    @property
    def total(self) -> float:
        return self.p1 + self.p2 + self.p3 + self.p4


def quadrant_probabilities(state: GridState) -> QuadrantProbabilities:
    """Probability in each open quadrant; axis nodes split evenly between neighbours."""
    rho = np.abs(state.field) ** 2
    ix0, iy0 = state.origin
    wx = np.ones(rho.shape[0])
    wy = np.ones(rho.shape[1])
    wx[ix0] = wy[iy0] = 0.5
    right = np.zeros_like(wx)
    right[ix0:] = wx[ix0:]
    left = np.zeros_like(wx)
    left[: ix0 + 1] = wx[: ix0 + 1]
    up = np.zeros_like(wy)
    up[iy0:] = wy[iy0:]
    down = np.zeros_like(wy)
    down[: iy0 + 1] = wy[: iy0 + 1]
    total = rho.sum()
    q = [right @ rho @ up, left @ rho @ up, left @ rho @ down, right @ rho @ down]
    return QuadrantProbabilities(*(float(v / total) for v in q))


@dataclass(frozen=True)
class Outcome:
    p_x_first: float
    p_y_first: float
    p_fail: float
    reflected_into_I: float


def classify_outcome(probs: QuadrantProbabilities) -> Outcome:
    """Order-of-arrival verdicts for the knife-edge detector.

    Quadrant III means the x-particle arrived first, quadrant IV the
    y-particle; quadrants I and II are classically forbidden and the
    measurement gives no answer there. Weight scattered back into quadrant I
    is also reported on its own.
    """
    return Outcome(probs.p3, probs.p4, probs.p1 + probs.p2, probs.p1)


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------


def save_state(path, state: GridState) -> Path:
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(
            fh,
            version=np.array(CHECKPOINT_VERSION),
            field=state.field,
            spacing=np.array(state.spacing, dtype=float),
            origin=np.array(state.origin, dtype=np.int64),
            time=np.array(state.time, dtype=float),
        )
    return path


def load_state(path) -> GridState:
    with np.load(Path(path), allow_pickle=False) as data:
        version = str(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version!r}")
        return GridState(
            field=data["field"].copy(),
            spacing=tuple(float(v) for v in data["spacing"]),
            origin=tuple(int(v) for v in data["origin"]),
            time=float(data["time"]),
        )
