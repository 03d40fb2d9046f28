"""Parameter sweeps behind the order-of-arrival, coincidence and microscope bounds.

Natural units: hbar = 1, effective mass ``M`` (default 1). The typical energy
``E_bar`` of a run is the mean kinetic energy of the mapped 2D packet, and the
arrival-time resolution attached to a transverse width ``w`` is
``delta_t = w M / k``. The products ``delta_t * E_bar`` at the point where
a detector stops working are the dimensionless numbers the bounds are about.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import disk
from .dynamics import (
    Packet1D,
    TwoBodyConfig,
    accuracy_bound,
    classify_outcome,
    domain_half_width,
    edge_mask,
    evolve,
    gaussian_state,
    make_grid,
    map_two_body_to_plane,
    norm,
    quadrant_probabilities,
)
from .errors import DomainError, NumericalError, ReportIncomplete
from .halfplane import HalfPlaneConfig, forbidden_cross_section

__all__ = [
    "SweepSpec",
    "default_order_spec",
    "configure_point",
    "run_order_point",
    "order_failure_sweep",
    "threshold_fit",
    "coincidence_sweep",
    "microscope_distinguishability",
    "microscope_sweep",
    "bound_report",
    "BOUND_WINDOW",
]

THRESHOLDS = (0.05, 0.1, 0.2)
BOUND_WINDOW = (0.1, 10.0)
MAX_SPREAD_RATIO = 0.1
NORM_DRIFT_PER_STEP = 1e-8
BOUNDARY_LEAK = 1e-6
MIN_PPW = 6.0
ORDER_COLUMNS = (
    "param", "value", "k", "theta0", "E_bar", "w", "delta_t", "p1", "p2", "p3", "p4",
    "p_fail", "p_reflected_I", "p_fail_kw", "p_fail_analytic", "norm_drift", "boundary_leak",
    "dk_over_k", "h", "ppw", "n", "dt", "steps", "flagged", "error",
)


@dataclass(frozen=True)
class SweepSpec:
    """One sweep over a single parameter of a two-body knife-edge run.

    ``param`` is ``"k"`` (mapped wavenumber; both momenta scaled together) or
    ``"momentum_ratio"`` (``p_y / p_x`` with the y-packet placed for
    simultaneous arrival). ``ppw`` is grid points per wavelength,
    ``phase_step`` bounds ``E_bar * dt``, and the run lasts until the packet
    centre has travelled ``travel`` times its initial distance to the edge.
    """

    experiment: str
    param: str
    values: tuple[float, ...]
    template: TwoBodyConfig
    M: float = 1.0
    ppw: float = 12.0
    grid: int | None = None
    phase_step: float = 0.2
    travel: float = 2.0
    tails: float = 6.0
    workers: int = 1
    seed: int = 0
    output: str | None = None

    def __post_init__(self):
        if self.param not in ("k", "momentum_ratio"):
            raise DomainError(f"unknown sweep parameter {self.param!r}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise DomainError("sweep needs at least one value")
        steps = np.diff(values)
        if values and not (np.all(steps > 0) or np.all(steps < 0)):
            raise DomainError("sweep values must be strictly monotone")
        object.__setattr__(self, "values", values)
        if not (self.ppw >= 6 and self.phase_step > 0 and self.travel > 1):
            raise DomainError("grid/solver settings out of range")
        if self.grid is not None and self.grid < 16:
            raise DomainError("grid needs at least 16 nodes per axis")


def default_order_spec(values=(2.5, 5.0, 10.0), width: float | None = None, **kw) -> SweepSpec:
    """Equal masses, equal widths, symmetric packets aimed at simultaneous arrival.

    The default width ``5 / min(k)`` keeps the momentum spread at
    ``dk / k <= 0.1`` for every point; packets start five widths out.
    """
    if width is None:
        width = 5.0 / min(values)
    p = values[0] / math.sqrt(2.0)
    packet = Packet1D(5.0 * width, width, -p)
    return SweepSpec("order", "k", tuple(values), TwoBodyConfig(1.0, 1.0, packet, packet), **kw)


def configure_point(spec: SweepSpec, value: float) -> TwoBodyConfig:
    tb = spec.template
    if spec.param == "k":
        scale = value / map_two_body_to_plane(tb, spec.M).k
        return replace(
            tb,
            x=replace(tb.x, momentum=tb.x.momentum * scale),
            y=replace(tb.y, momentum=tb.y.momentum * scale),
        )
    t_arrival = tb.x.center / abs(tb.x.momentum / tb.m1)
    py = value * tb.x.momentum
    return replace(tb, y=Packet1D(abs(py / tb.m2) * t_arrival, tb.y.width, py))


def _transverse_width(plane, t: float) -> float:
    px, py = plane.momentum
    phi = math.atan2(py, px)
    wx, wy = plane.widths
    w0 = math.sqrt((wx * math.sin(phi)) ** 2 + (wy * math.cos(phi)) ** 2)
    return w0 * math.sqrt(1.0 + (t / (2.0 * plane.M * w0 * w0)) ** 2)


def _boundary_leak(state, width: float) -> float:
    rho = np.abs(state.field) ** 2
    band = max(3, int(math.ceil(0.5 * width / min(state.spacing))))
    inner = rho[band:-band, band:-band].sum()
    return float((rho.sum() - inner) / rho.sum())


def run_order_point(spec: SweepSpec, value: float) -> dict:
    """Run one knife-edge simulation and return its table row."""
    tb = configure_point(spec, value)
    plane = map_two_body_to_plane(tb, spec.M)
    k = plane.k
    dist = math.hypot(*plane.center)
    speed = k / plane.M
    t_final = spec.travel * dist / speed
    half = domain_half_width(plane, t_final, spec.tails)
    if spec.grid is None:
        h = 2.0 * math.pi / (k * spec.ppw)
    else:
        h = 2.0 * half / (spec.grid - 1)
    grid = make_grid((-half, half), (-half, half), h)
    mask = edge_mask(grid)
    state = gaussian_state(grid, plane, mask)
    e_bar = plane.mean_energy()
    dt = min(spec.phase_step / e_bar, 0.95 * accuracy_bound(grid.spacing, (plane.M, plane.M)))
    steps = int(math.ceil(t_final / dt))
    dt = t_final / steps
    final = evolve(state, mask, dt, steps, (plane.M, plane.M))

    probs = quadrant_probabilities(final)
    outcome = classify_outcome(probs)
    t_arrival = dist / speed
    w = _transverse_width(plane, t_arrival)
    sigma_forbidden = forbidden_cross_section(HalfPlaneConfig(k, plane.theta0))
    analytic = sigma_forbidden / (math.sqrt(2.0 * math.pi) * w)
    drift = abs(norm(final) - 1.0)
    leak = _boundary_leak(final, min(plane.widths))
    spread_ratio = 0.5 / (min(plane.widths) * k)
    ppw = 2.0 * math.pi / (k * h)
    flagged = (
        drift > NORM_DRIFT_PER_STEP * steps
        or leak > BOUNDARY_LEAK
        or spread_ratio > MAX_SPREAD_RATIO + 1e-12
        or ppw < MIN_PPW
    )
    return {
        "param": spec.param,
        "value": float(value),
        "k": k,
        "theta0": plane.theta0,
        "E_bar": e_bar,
        "w": w,
        "delta_t": w * plane.M / k,
        "p1": probs.p1,
        "p2": probs.p2,
        "p3": probs.p3,
        "p4": probs.p4,
        "p_fail": outcome.p_fail,
        "p_reflected_I": outcome.reflected_into_I,
        "p_fail_kw": outcome.p_fail * k * w,
        "p_fail_analytic": analytic,
        "norm_drift": drift,
        "boundary_leak": leak,
        "dk_over_k": spread_ratio,
        "h": h,
        "ppw": ppw,
        "n": grid.shape[0],
        "dt": dt,
        "steps": steps,
        "flagged": bool(flagged),
    }


def _failed_row(spec: SweepSpec, value: float, message: str) -> dict:
    row = dict.fromkeys(ORDER_COLUMNS, math.nan)
    row.update(param=spec.param, value=float(value), n=0, steps=0, flagged=True, error=message)
    return row


def _run_point(args):
    spec, value = args
    try:
        row = run_order_point(spec, value)
    except (NumericalError, DomainError) as exc:
        return _failed_row(spec, value, f"{type(exc).__name__}: {exc}".replace(",", ";"))
    row["error"] = ""
    return row


def order_failure_sweep(spec: SweepSpec) -> list[dict]:
    """Rows in the order of ``spec.values``; points run in parallel when ``workers > 1``.

    A point whose solver fails yields a flagged row of NaNs with the error
    text in ``error`` rather than aborting the sweep.
    """
    jobs = [(spec, v) for v in spec.values]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(_run_point, jobs))
    return [_run_point(j) for j in jobs]


def threshold_fit(rows: list[dict], thresholds=THRESHOLDS, M: float = 1.0) -> dict:
    """Power-law fit of p_fail against k and the products delta_t * E_bar where
    the fit crosses each failure threshold.

    No single threshold is canonical; all requested levels are reported.
    """
    good = [r for r in rows if not r["flagged"] and r["p_fail"] > 0]
    if len(good) < 2:
        raise ReportIncomplete("threshold fit needs at least two unflagged rows with p_fail > 0")
    logk = np.log([r["k"] for r in good])
    logp = np.log([r["p_fail"] for r in good])
    slope, intercept = np.polyfit(logk, logp, 1)
    order = np.argsort(logk)
    logw = np.log([r["w"] for r in good])[order]
    # share of <E> carried by the momentum spread, interpolated to k*
    spread_part = np.array([2.0 * M * r["E_bar"] / r["k"] ** 2 - 1.0 for r in good])
    out = []
    for thr in thresholds:
        k_star = float(math.exp((math.log(thr) - intercept) / slope))
        w_star = float(math.exp(np.interp(math.log(k_star), logk[order], logw)))
        excess = float(np.interp(math.log(k_star), logk[order], spread_part[order]))
        e_bar = k_star**2 / (2.0 * M) * (1.0 + excess)
        delta_t = w_star * M / k_star
        out.append(
            {
                "threshold": thr,
                "k_star": k_star,
                "w": w_star,
                "delta_t": delta_t,
                "E_bar": e_bar,
                "product": delta_t * e_bar,
                "extrapolated": bool(not logk.min() <= math.log(k_star) <= logk.max()),
            }
        )
    return {"slope": float(slope), "intercept": float(intercept), "thresholds": out}


# --------------------------------------------------------------------------
# coincidence detector (hard disk)
# --------------------------------------------------------------------------


def _wrap(x: float) -> float:
    """Representative of x mod pi in [-pi/2, pi/2)."""
    return (x + 0.5 * math.pi) % math.pi - 0.5 * math.pi


def coincidence_sweep(ka_list, k: float = 1.0, crossover_level: float = 0.9) -> list[dict]:
    """Per ka: shift ratio on continuous branches, shadow sharpness, isotropy and regime residuals."""
    ka = np.asarray(sorted(float(v) for v in ka_list))
    if ka.size == 0 or ka[0] > 1e-3 or ka[-1] < 50.0:
        raise DomainError("ka_list must span at least [1e-3, 50]")
    d0 = [s.delta for s in disk.phase_shift_sweep(0, ka)]
    d1 = [s.delta for s in disk.phase_shift_sweep(1, ka)]
    rows = []
    crossed = False
    for x, a0, a1 in zip(ka, d0, d1):
        pw = disk.partial_waves(k, x / k)
        prof = disk.cross_section_profile(pw)
        ratio = a1 / a0
        small_res = math.nan
        large_res = math.nan
        if x < 0.1:
            small_res = a1 / disk.small_ka_shift(1, x) - 1.0
        if x > 15.0:
            large_res = _wrap(a0 - disk.large_ka_shift(0, x))
        first = (not crossed) and ratio > crossover_level
        crossed = crossed or first
        rows.append(
            {
                "ka": float(x),
                "delta0": a0,
                "delta1": a1,
                "ratio": ratio,
                "sharpness": disk.shadow_sharpness(pw),
                "anisotropy": float(prof.values.max() / prof.values.min()),
                "isotropic": bool(prof.values.max() / prof.values.min() < 1.05),
                "total": disk.total_cross_section(pw),
                "small_ka_residual": small_res,
                "large_ka_residual_mod_pi": large_res,
                "delta_tc_E": 0.5 * float(x),
                "crossover": bool(first),
            }
        )
    return rows


# --------------------------------------------------------------------------
# microscope
# --------------------------------------------------------------------------


def _far_field(k, pw, theta, alpha, weights, offset):
    """Outgoing amplitude of a beam (plane-wave spectrum ``weights`` over ``alpha``)
    scattered by the disk displaced by ``offset``."""
    dx, dy = offset
    rel = np.subtract.outer(theta, alpha)
    f = disk.scattering_amplitude(rel, pw)
    phase = np.exp(
        1j * k * ((np.cos(alpha) * dx + np.sin(alpha) * dy)[None, :] - (np.cos(theta) * dx + np.sin(theta) * dy)[:, None])
    )
    scattered = (f * phase) @ weights
    incident = math.sqrt(2.0 * math.pi / k) * np.exp(-0.25j * math.pi) * np.interp(theta, alpha, weights / np.gradient(alpha), left=0.0, right=0.0)
    return incident + scattered


def microscope_distinguishability(
    delta_r: float,
    k: float,
    a: float,
    beam_width: float | None = None,
    n_theta: int = 720,
    n_alpha: int = 361,
) -> float:
    """Total-variation distance between far-field angular distributions of a
    Gaussian beam scattered by a disk at the origin and at ``(0, delta_r)``.

    The beam travels along +x; its amplitude profile is ``exp(-y^2 / w^2)``
    with ``w = beam_width`` (default one wavelength). Returns
    ``1/2 * integral |P_0 - P_1| dtheta``.
    """
    if delta_r < 0:
        raise DomainError("delta_r must be nonnegative")
    if delta_r == 0:
        return 0.0
    w = 2.0 * math.pi / k if beam_width is None else beam_width
    pw = disk.partial_waves(k, a)
    alpha = np.linspace(-0.5 * math.pi, 0.5 * math.pi, n_alpha)
    d_alpha = alpha[1] - alpha[0]
    spectrum = np.exp(-((k * w * alpha) ** 2) / 4.0)
    weights = spectrum * d_alpha
    weights[[0, -1]] *= 0.5
    theta = -math.pi + 2.0 * math.pi * np.arange(n_theta) / n_theta
    dist = []
    for offset in ((0.0, 0.0), (0.0, float(delta_r))):
        g = _far_field(k, pw, theta, alpha, weights, offset)
        p = np.abs(g) ** 2
        dist.append(p / p.sum())
    return float(0.5 * np.abs(dist[0] - dist[1]).sum())


def microscope_sweep(fractions, k: float = 1.0, a: float = 1.0, beam_width: float | None = None) -> list[dict]:
    lam = 2.0 * math.pi / k
    return [
        {
            "delta_r_over_lambda": float(f),
            "delta_r": float(f) * lam,
            "distinguishability": microscope_distinguishability(float(f) * lam, k, a, beam_width),
        }
        for f in fractions
    ]


# --------------------------------------------------------------------------
# summary
# --------------------------------------------------------------------------


@dataclass
class BoundReport:
    order: dict = field(default_factory=dict)
    coincidence: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"order": self.order, "coincidence": self.coincidence, "checks": self.checks}


def bound_report(order_rows=None, coincidence_rows=None, thresholds=THRESHOLDS) -> dict:
    """Dimensionless delta_t * E_bar at each detector's failure point and whether
    each lies inside :data:`BOUND_WINDOW`."""
    missing = [n for n, t in (("order", order_rows), ("coincidence", coincidence_rows)) if not t]
    if missing:
        raise ReportIncomplete(f"missing sweep tables: {', '.join(missing)}")
    lo, hi = BOUND_WINDOW
    fit = threshold_fit(order_rows, thresholds)
    kw = np.array([r["p_fail_kw"] for r in order_rows if not r["flagged"]])
    nominal = next((t for t in fit["thresholds"] if t["threshold"] == 0.1), fit["thresholds"][0])
    report = BoundReport()
    report.order = {
        "slope": fit["slope"],
        "p_fail_kw_mean": float(kw.mean()),
        "p_fail_kw_spread": float(np.max(np.abs(kw / kw.mean() - 1.0))),
        "thresholds": fit["thresholds"],
        "product_at_0.1": nominal["product"],
    }
    cross = [r for r in coincidence_rows if r["crossover"]]
    if not cross:
        raise ReportIncomplete("coincidence sweep never reached its crossover level")
    ka_star = cross[0]["ka"]
    report.coincidence = {"ka_star": ka_star, "product": 0.5 * ka_star}
    report.checks = {
        "order_product_in_window": bool(lo <= nominal["product"] <= hi),
        "order_all_thresholds_in_window": bool(all(lo <= t["product"] <= hi for t in fit["thresholds"])),
        "coincidence_product_in_window": bool(lo <= 0.5 * ka_star <= hi),
    }
    return report.as_dict()
