import math

import numpy as np
import pytest
import scipy.special as ss

from enzlab import oracle
from enzlab.errors import DomainError, ResonantDopant
from enzlab.oracle import RadialLayers, axisym_solution, bessel, j0_zero, j1_zero


def test_series_values_at_zero():
    assert bessel("J0", 0.0) == 1.0
    assert bessel("J1", 0.0) == 0.0


def test_y_kind_rejects_zero_and_out_of_range():
    for kind in ("Y0", "Y1", "H1_0"):
        with pytest.raises(DomainError):
            bessel(kind, 0.0)
    with pytest.raises(DomainError):
        bessel("J0", 250.0)
    with pytest.raises(DomainError):
        bessel("J0", -1.0)


@pytest.mark.parametrize("kind,ref", [("J0", ss.j0), ("J1", ss.j1),
                                      ("Y0", ss.y0), ("Y1", ss.y1)])
def test_bessel_absolute_accuracy(kind, ref):
    z = np.concatenate([np.linspace(1e-6, 12, 300), np.linspace(12.01, 200, 300)])
    assert np.abs(bessel(kind, z) - ref(z)).max() < 1e-10


def test_hankel_combination():
    z = 3.7
    h = bessel("H1_0", z)
    assert h == complex(bessel("J0", z), bessel("Y0", z))


def test_first_j0_root_by_bisection():
    assert abs(j0_zero(1) - 2.404826) < 1e-6
    assert abs(j0_zero(2) - 5.520078) < 1e-6
    assert abs(j1_zero(1) - 3.831706) < 1e-6


def test_wronskian_identity():
    z = np.linspace(0.25, 180, 700)
    w = bessel("J0", z) * bessel("Y1", z) - bessel("J1", z) * bessel("Y0", z)
    assert np.abs(w + 2.0 / (math.pi * z)).max() < 1e-9


def _source_layers(**kw):
    base = dict(a=0.3, b=1.0, c=4.0, eps_dopant=1.0, eps_enz=1.0, eps_exterior=1.0,
                source_r1=2.3, source_r2=2.7, amplitude=1.0)
    base.update(kw)
    return RadialLayers(**base)


def test_uniform_medium_is_smooth_across_interfaces():
    sol = axisym_solution(_source_layers(), k=1.0)
    for r0 in (0.3, 1.0):
        jump = sol(np.array([r0 - 1e-10]))[0] - sol(np.array([r0 + 1e-10]))[0]
        assert abs(jump) < 1e-9


def test_green_identity_per_disk():
    k = 1.0
    sol = axisym_solution(_source_layers(eps_enz=0.05), k=k)
    r1, r2 = 2.3, 2.7
    for rho in (0.5, 1.5, 3.5):
        eps_at = 0.05 if 0.3 < rho <= 1.0 else 1.0
        flux = 2 * math.pi * rho * (1.0 / eps_at) * sol.derivative(np.array([rho]))[0]
        intu = sol.disk_integral(rho)
        intf = math.pi * (min(rho, r2) ** 2 - r1 ** 2) if rho > r1 else 0.0
        resid = flux + k * k * intu + intf
        scale = max(abs(flux), abs(intu), 1.0)
        assert abs(resid) < 1e-8 * scale


def test_quadrature_refinement_is_converged():
    sol = axisym_solution(_source_layers(eps_enz=0.01), k=1.0)
    v1 = sol.disk_integral(3.5, n_quad=200)
    v2 = sol.disk_integral(3.5, n_quad=400)
    assert abs(v1 - v2) <= 1e-8 * max(1.0, abs(v1))


def test_resonant_dopant_detected():
    k = j0_zero(1) / 0.3
    with pytest.raises(ResonantDopant):
        axisym_solution(_source_layers(), k=k)


def test_scalars_match_reference_formulas():
    k, a, b = 1.0, 0.3, 1.0
    sol = axisym_solution(_source_layers(eps_enz=0.01), k=k)
    s = sol.scalars
    h0, h1 = ss.hankel1(0, k * b), ss.hankel1(1, k * b)
    flux_e = -2 * math.pi * b * k * h1 / h0
    flux_d = -2 * math.pi * a * k * ss.j1(k * a) / ss.j0(k * a)
    beta = k * k * math.pi * (b * b - a * a) + flux_e - flux_d
    assert s["beta"] == pytest.approx(beta, rel=1e-10)
    assert s["mu_eff"] == pytest.approx(
        (math.pi * (b * b - a * a) + 2 * math.pi * a * ss.j1(k * a) / (k * ss.j0(k * a)))
        / (math.pi * b * b), rel=1e-10)
    # the balance constant has the dissipative sign
    assert (k * np.conj(s["beta"])).imag < 0


def test_enz_field_approaches_coupling_constant():
    gaps = []
    for delta in (1e-1, 1e-2, 1e-3):
        sol = axisym_solution(_source_layers(eps_enz=delta), k=1.0)
        r = np.linspace(0.35, 0.95, 13)
        gaps.append(np.abs(sol(r) - sol.scalars["c_star"]).max())
    assert gaps[0] > gaps[1] > gaps[2]
    slope = math.log10(gaps[0] / gaps[2]) / 2.0
    assert slope > 0.8
