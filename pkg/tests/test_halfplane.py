import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orderlab.errors import BoundaryZoneError, DomainError, PoleError
from orderlab.halfplane import (
    HalfPlaneConfig,
    Sector,
    asymptotic_field,
    boundary_cone,
    closed_form_cross_section,
    exact_field,
    failure_cross_section,
    forbidden_cross_section,
    min_resolvable_separation,
    pole_angles,
    region_label,
    scattering_amplitude,
)

CFG = HalfPlaneConfig(1.0, math.pi / 4)


@pytest.mark.parametrize("theta0", [0.0, -0.1, math.pi / 2, 2.0])
def test_config_rejects_bad_incidence(theta0):
    with pytest.raises(DomainError):
        HalfPlaneConfig(1.0, theta0)


def test_config_rejects_bad_k():
    with pytest.raises(DomainError):
        HalfPlaneConfig(0.0, 0.5)


@pytest.mark.parametrize("theta0", [0.1, 0.7, 1.4])
def test_screen_boundary_condition(theta0):
    cfg = HalfPlaneConfig(1.0, theta0)
    r = np.geomspace(0.1, 1e4, 60)
    assert np.max(np.abs(exact_field(r, 1.5 * math.pi, cfg))) < 1e-8


def test_field_continuous_across_positive_x_axis():
    # theta = 0 and 2 pi are the same point off the screen
    r = np.array([0.5, 3.0, 40.0])
    np.testing.assert_allclose(exact_field(r, 0.0, CFG), exact_field(r, 2 * math.pi - 1e-13, CFG), atol=1e-10)


def test_helmholtz_residual():
    rng = np.random.default_rng(7)
    k = CFG.k
    h = 1e-3 / k
    worst = 0.0
    for _ in range(40):
        r = rng.uniform(0.5, 30.0)
        t = rng.uniform(-0.4 * math.pi, 1.4 * math.pi)
        x, y = r * math.cos(t), r * math.sin(t)

        def psi(px, py):
            return complex(exact_field(math.hypot(px, py), math.atan2(py, px), CFG))

        lap = (psi(x + h, y) + psi(x - h, y) + psi(x, y + h) + psi(x, y - h) - 4 * psi(x, y)) / h**2
        worst = max(worst, abs(lap + k * k * psi(x, y)) / (k * k * abs(psi(x, y))))
    assert worst < 1e-4


def test_exact_field_rejects_nonpositive_r():
    with pytest.raises(DomainError):
        exact_field(0.0, 1.0, CFG)


def test_sectors_and_quadrants():
    t0 = CFG.theta0
    assert region_label(math.pi + t0 + 0.2, CFG).tag is Sector.SHADOW
    assert region_label(math.pi / 2, CFG).tag is Sector.ILLUMINATED
    assert region_label(2 * math.pi - t0 - 0.3, CFG).tag is Sector.REFLECTION
    assert region_label(math.pi / 2, CFG).quadrant == "II"
    assert region_label(0.1, CFG).quadrant == "I"
    assert region_label(4.0, CFG).quadrant == "III"
    assert region_label(5.5, CFG).quadrant == "IV"


def test_pole_angles():
    a, b = pole_angles(CFG)
    assert a == pytest.approx(2 * math.pi - CFG.theta0)
    assert b == pytest.approx(math.pi + CFG.theta0)


def test_amplitude_scaling_with_k():
    t = 2.0
    ratio = abs(scattering_amplitude(t, HalfPlaneConfig(4.0, 0.6))) / abs(scattering_amplitude(t, HalfPlaneConfig(1.0, 0.6)))
    assert ratio == pytest.approx(0.5, rel=1e-14)


def test_amplitude_grows_toward_shadow_pole():
    pole = math.pi + CFG.theta0
    gaps = np.geomspace(0.5, 1e-6, 30)
    mags = np.abs(scattering_amplitude(pole + gaps, CFG))
    assert np.all(np.diff(mags) > 0)


def test_amplitude_pole_error():
    with pytest.raises(PoleError):
        scattering_amplitude(math.pi + CFG.theta0, CFG)
    with pytest.raises(PoleError):
        scattering_amplitude(2 * math.pi - CFG.theta0, CFG)


def test_amplitude_against_far_field_of_exact_solution():
    # theta = pi lies in the illuminated sector: subtract the incident wave
    r = 1e5
    t = math.pi
    scattered = exact_field(r, t, CFG) - np.exp(-1j * CFG.k * r * math.cos(t - CFG.theta0))
    fitted = scattered * math.sqrt(r) * np.exp(-1j * CFG.k * r)
    f = scattering_amplitude(t, CFG)
    assert abs(fitted) ** 2 == pytest.approx(abs(f) ** 2, rel=0.02)
    assert abs(fitted - f) < 0.02 * abs(f)


def test_deep_shadow_matches_edge_wave():
    r = 1e3
    t = 0.5 * (math.pi + CFG.theta0 + 1.5 * math.pi)
    psi = exact_field(r, t, CFG)
    f = scattering_amplitude(t, CFG)
    assert abs(psi) < 0.05
    assert abs(psi) == pytest.approx(abs(f) / math.sqrt(r), rel=0.05)


@pytest.mark.parametrize("theta0", [0.3, math.pi / 4, 1.2])
def test_asymptotic_branches_match_exact(theta0):
    cfg = HalfPlaneConfig(1.0, theta0)
    r = 1e4
    cone = boundary_cone(cfg.k, r)
    sheet = np.linspace(-0.5 * math.pi + 0.01, 1.5 * math.pi - 0.01, 400)
    poles = (-theta0, math.pi + theta0)
    seen = set()
    for t in sheet:
        if min(abs(t - p) for p in poles) < cone:
            continue
        value, label = asymptotic_field(r, t % (2 * math.pi), cfg)
        exact = complex(exact_field(r, t, cfg))
        seen.add(label.tag)
        # measured against the unit incident amplitude
        assert abs(value - exact) < 0.01 * max(abs(exact), 1.0), (t, label)
    assert seen == set(Sector)


@pytest.mark.parametrize("theta0", [0.3, math.pi / 4, 1.2])
def test_asymptotic_mid_sector_relative(theta0):
    cfg = HalfPlaneConfig(1.0, theta0)
    r = 1e4
    mids = (0.5 * (-0.5 * math.pi - theta0), 0.5 * math.pi, 0.5 * (math.pi + theta0 + 1.5 * math.pi))
    for t in mids:
        value, _ = asymptotic_field(r, t % (2 * math.pi), cfg)
        exact = complex(exact_field(r, t, cfg))
        assert abs(value - exact) < 0.01 * abs(exact)


def test_asymptotic_illuminated_leading_term():
    r, t = 1e6, 1.0
    value, label = asymptotic_field(r, t, CFG)
    assert label.tag is Sector.ILLUMINATED
    assert value == pytest.approx(np.exp(-1j * CFG.k * r * math.cos(t - CFG.theta0)), abs=1e-3)


def test_asymptotic_guards():
    with pytest.raises(DomainError):
        asymptotic_field(10.0, 1.0, CFG)
    with pytest.raises(BoundaryZoneError):
        asymptotic_field(1e4, math.pi + CFG.theta0 + 0.01, CFG)
    with pytest.raises(BoundaryZoneError):
        asymptotic_field(1e4, 2 * math.pi - CFG.theta0 + 0.01, CFG)


def test_boundary_cone_default():
    assert boundary_cone(1.0, 100.0) == pytest.approx(0.3)
    assert boundary_cone(1.0, 1e6) == 0.05


def test_failure_cross_section_scaling_and_closed_form():
    ks = np.array([1.0, 2.0, 4.0, 8.0])
    res = [failure_cross_section(HalfPlaneConfig(k, math.pi / 4), 0.1) for k in ks]
    slope = np.polyfit(np.log(ks), np.log([r.sigma_f for r in res]), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)
    for k, r in zip(ks, res):
        assert r.sigma_f > 0
        assert r.excluded_cone_halfwidth == 0.1
        assert r.closed_form == pytest.approx(1 / (k * math.cos(math.pi / 8)))


def test_failure_cross_section_cone_guard():
    with pytest.raises(DomainError):
        failure_cross_section(CFG, 0.3)


def test_closed_form_values():
    assert closed_form_cross_section(1.0, 0.0) == 1.0
    assert closed_form_cross_section(2.0, 0.5) / closed_form_cross_section(1.0, 0.5) == pytest.approx(0.5)
    t = np.linspace(0.01, 1.55, 50)
    vals = [closed_form_cross_section(1.0, v) for v in t]
    assert np.all(np.diff(vals) > 0)


def test_forbidden_cross_section_bounded_by_regularised():
    # quadrants I and II hold no pole, so their share is finite and below the full regularised value
    s = forbidden_cross_section(CFG)
    assert 0 < s < failure_cross_section(CFG).sigma_f
    assert forbidden_cross_section(HalfPlaneConfig(3.0, CFG.theta0)) == pytest.approx(s / 3, rel=1e-9)


def test_min_resolvable_separation():
    assert min_resolvable_separation(HalfPlaneConfig(2.0, 0.5)) == 1.0
    assert min_resolvable_separation(HalfPlaneConfig(1.0, 0.5)) == 2.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.5), st.floats(0.1, 50.0), st.floats(0.01, 2 * math.pi - 0.01))
def test_field_bounded_and_finite(theta0, kr, theta):
    cfg = HalfPlaneConfig(1.0, theta0)
    v = exact_field(kr, theta, cfg)
    assert np.isfinite(v)
    # incident plus mirror wave plus edge diffraction never exceeds ~2 in magnitude
    assert abs(v) < 2.5
