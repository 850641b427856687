import math

import numpy as np
import pytest

from pasvlab import fock_oracle as fo
from pasvlab import pasv_core as pc
from pasvlab import scan
from pasvlab import thermal_channel as tc
from pasvlab.errors import BracketError, ContractError, DomainError, LimitPathError

ORACLE_GRID = scan.GridSpec.square(3.0, 21)


def state(r, m):
    return pc.PasvParams(r, m)


def ch(kt, nbar):
    return tc.ChannelParams(kt, nbar)


def variances(r, kt, nbar):
    # quadrature variances of the evolved squeezed vacuum
    t = -math.expm1(-2 * kt)
    decay = math.exp(-2 * kt)
    noise = (2 * nbar + 1) * t / 2
    return decay * math.exp(2 * r) / 2 + noise, decay * math.exp(-2 * r) / 2 + noise


def fitted_window(r, m, kt, nbar, n=401):
    vq, vp = variances(r, kt, nbar)
    core = (math.sqrt(2 * m + 1) + 6.5) * math.sqrt(2)
    lq, lp = core * math.sqrt(vq), core * math.sqrt(vp)
    return scan.GridSpec(-lq, lq, -lp, lp, n, n)


# parameters and coefficients


@pytest.mark.parametrize("kt, nbar", [(-0.1, 0.0), (math.nan, 0.0), (0.1, -1.0), (0.1, math.inf)])
def test_channel_params_reject_invalid(kt, nbar):
    with pytest.raises(DomainError):
        tc.ChannelParams(kt, nbar)


def test_kraus_coefficients_identity_channel():
    kc = tc.kraus_coefficients(ch(0.0, 3.0))
    assert (kc.T, kc.gamma_plus, kc.gamma_minus, kc.gamma_zero) == (0.0, 0.0, 0.0, 0.0)


def test_kraus_coefficients_long_time():
    kc = tc.kraus_coefficients(ch(20.0, 1.0))
    assert kc.T == pytest.approx(1.0, abs=1e-15)
    assert kc.gamma_plus == pytest.approx(0.5, rel=1e-15)
    assert kc.gamma_minus == pytest.approx(1.0, rel=1e-15)
    assert kc.gamma_zero + 20.0 == pytest.approx(-math.log(2), rel=1e-12)


def test_kraus_coefficients_zero_temperature():
    kc = tc.kraus_coefficients(ch(0.1, 0.0))
    assert kc.gamma_plus == 0.0
    assert kc.gamma_minus == pytest.approx(kc.T, rel=1e-15)
    assert kc.gamma_zero == pytest.approx(-0.1, rel=1e-15)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.8, 1.5])
@pytest.mark.parametrize("kt", [1e-4, 0.05, 0.2, 1.0, 5.0])
@pytest.mark.parametrize("nbar", [0.0, 1.0, 5.0])
def test_coefficient_ranges(r, kt, nbar):
    co = tc.evolution_coefficients(state(r, 1), ch(kt, nbar), 0.4, -0.7)
    assert co.C > 0
    assert co.C == pytest.approx(co.A**2 - 4 * math.sinh(2 * r) ** 2, rel=1e-12)
    assert 0 <= co.G <= 1


def test_g_vanishes_at_single_photon_threshold():
    for nbar in (0.0, 1.0, 2.0):
        co = tc.evolution_coefficients(state(0.5, 1), ch(tc.threshold_time_m1(nbar), nbar), 0.0, 0.0)
        assert abs(co.G) < 1e-12


def test_long_time_coefficients():
    r = 0.6
    co = tc.evolution_coefficients(state(r, 2), ch(20.0, 1.0), 1.0, 2.0)
    assert abs(co.B) < 1e-8
    assert co.C == pytest.approx(4.0, rel=1e-12)
    assert co.G == pytest.approx(1.0, rel=1e-12)
    assert co.F == pytest.approx(4 / math.tanh(r), rel=1e-12)


def test_origin_has_no_linear_terms():
    co = tc.evolution_coefficients(state(0.3, 1), ch(0.05, 1.0), 0.0, 0.0)
    assert co.B == 0 and co.D == 0 and co.E == 0


def test_coefficient_preconditions():
    with pytest.raises(LimitPathError):
        tc.evolution_coefficients(state(0.3, 1), ch(0.0, 1.0), 0.0, 0.0)
    with pytest.raises(DomainError):
        tc.evolution_coefficients(state(0.0, 1), ch(0.1, 1.0), 0.0, 0.0)


# evolved Wigner function


def test_zero_time_returns_ideal_state():
    q, p = ORACLE_GRID.mesh()
    s = state(0.3, 2)
    assert np.array_equal(tc.wigner_evolved(s, ch(0.0, 1.0), q, p), pc.wigner(s, q, p))


@pytest.mark.parametrize("r", [0.3, 0.9])
@pytest.mark.parametrize("kt, nbar", [(0.05, 0.0), (0.3, 1.0), (1.0, 2.5)])
def test_squeezed_vacuum_stays_gaussian(r, kt, nbar):
    q, p = ORACLE_GRID.mesh()
    vq, vp = variances(r, kt, nbar)
    expected = np.exp(-(q**2) / (2 * vq) - p**2 / (2 * vp)) / (2 * math.pi * math.sqrt(vq * vp))
    got = tc.wigner_evolved(state(r, 0), ch(kt, nbar), q, p)
    assert np.abs(got - expected).max() < 1e-12
    co = tc.evolution_coefficients(state(r, 0), ch(kt, nbar), 0.0, 0.0)
    peak = 2 / (math.pi * math.sqrt(co.C) * (2 * nbar + 1) * -math.expm1(-2 * kt))
    assert float(tc.wigner_evolved(state(r, 0), ch(kt, nbar), 0.0, 0.0)) == pytest.approx(peak, rel=1e-12)


def test_two_photon_matches_kraus_oracle():
    q, p = ORACLE_GRID.mesh()
    s, c = state(0.7, 2), ch(0.1, 1.0)
    rho = fo.evolve_kraus(fo.pasv_density(0.7, 2), c)
    assert np.abs(tc.wigner_evolved(s, c, q, p) - fo.wigner_fock(rho, q, p)).max() < 1e-6


@pytest.mark.parametrize("m", [3, 5])
def test_higher_m_matches_kraus_oracle(m):
    q, p = ORACLE_GRID.mesh()
    s, c = state(0.4, m), ch(0.15, 0.5)
    rho = fo.evolve_kraus(fo.pasv_density(0.4, m), c)
    assert np.abs(tc.wigner_evolved(s, c, q, p) - fo.wigner_fock(rho, q, p)).max() < 1e-6


@pytest.mark.parametrize("m", range(4))
@pytest.mark.parametrize("nbar", [0.0, 1.0, 2.0])
def test_long_time_thermal_limit(m, nbar):
    q, p = ORACLE_GRID.mesh()
    w = tc.wigner_evolved(state(0.5, m), ch(20.0, nbar), q, p)
    thermal = np.exp(-(q**2 + p**2) / (2 * nbar + 1)) / (math.pi * (2 * nbar + 1))
    assert np.abs(w - thermal).max() < 1e-10
    assert np.abs(w - tc.thermal_wigner(nbar, q, p)).max() < 1e-10


@pytest.mark.parametrize("m", range(4))
def test_short_time_limit(m):
    q, p = ORACLE_GRID.mesh()
    s = state(0.3, m)
    ideal = pc.wigner(s, q, p)
    devs = [np.abs(tc.wigner_evolved(s, ch(kt, 1.0), q, p) - ideal).max() for kt in (1e-4, 1e-5)]
    assert devs[1] < devs[0]
    assert devs[1] < 1e-3


@pytest.mark.parametrize("m", range(4))
@pytest.mark.parametrize("kt, nbar", [(0.05, 0.0), (0.2, 1.0), (0.5, 2.0)])
def test_normalization_preserved(m, kt, nbar):
    s, c = state(0.3, m), ch(kt, nbar)
    grid = scan.evaluate_grid(lambda q, p: tc.wigner_evolved(s, c, q, p), fitted_window(0.3, m, kt, nbar))
    assert scan.integrate(grid) == pytest.approx(1.0, abs=1e-6)


# single-photon form and threshold


def test_single_photon_form_equals_general_form():
    s, c = state(0.3, 1), ch(0.05, 1.0)
    q = np.array([0.0, 0.5, -1.2, 2.0, 3.1])
    p = np.array([0.0, -0.4, 0.9, 2.2, -0.3])
    assert np.allclose(tc.wigner_evolved_m1(s, c, q, p), tc.wigner_evolved(s, c, q, p), rtol=1e-12, atol=1e-15)


def test_single_photon_form_contract():
    with pytest.raises(ContractError):
        tc.wigner_evolved_m1(state(0.3, 2), ch(0.1, 1.0), 0.0, 0.0)
    with pytest.raises(LimitPathError):
        tc.wigner_evolved_m1(state(0.3, 1), ch(0.0, 1.0), 0.0, 0.0)


@pytest.mark.parametrize("nbar", [0.0, 1.0, 3.0])
def test_origin_negative_before_threshold(nbar):
    s = state(0.6, 1)
    for frac in (0.1, 0.5, 0.9):
        kt = frac * tc.threshold_time_m1(nbar)
        assert tc.wigner_evolved_m1(s, ch(kt, nbar), 0.0, 0.0) < 0


@pytest.mark.parametrize("nbar", [0.0, 1.0, 3.0])
@pytest.mark.parametrize("r", [0.3, 1.0])
def test_origin_vanishes_at_threshold(nbar, r):
    c = ch(tc.threshold_time_m1(nbar), nbar)
    assert abs(tc.wigner_evolved_m1(state(r, 1), c, 0.0, 0.0)) < 1e-10
    assert abs(tc.wigner_evolved(state(r, 1), c, 0.0, 0.0)) < 1e-10


@pytest.mark.parametrize("r", [0.3, 0.8, 1.5])
@pytest.mark.parametrize("nbar", [0.0, 1.0, 2.0])
def test_threshold_sign_structure(r, nbar):
    s = state(r, 1)
    kc = tc.threshold_time_m1(nbar)
    assert tc.wigner_evolved(s, ch(kc - 1e-3, nbar), 0.0, 0.0) < 0
    assert tc.wigner_evolved(s, ch(kc + 1e-3, nbar), 0.0, 0.0) > 0


def test_positive_everywhere_past_threshold():
    for nbar in (0.0, 1.0):
        kt = tc.threshold_time_m1(nbar) + 0.01
        assert tc.grid_minimum(state(0.3, 1), ch(kt, nbar)) > 0


def test_threshold_closed_form_values():
    assert tc.threshold_time_m1(0.0) == pytest.approx(0.5 * math.log(2), abs=1e-15)
    assert tc.threshold_time_m1(0.0) == pytest.approx(0.346574, abs=1e-6)
    assert tc.threshold_time_m1(1.0) == pytest.approx(0.5 * math.log(4 / 3), abs=1e-15)
    big = 1e6
    assert 0 < tc.threshold_time_m1(big) < 1 / (4 * big * 0.99)
    with pytest.raises(DomainError):
        tc.threshold_time_m1(-1.0)


def test_numeric_threshold_matches_closed_form():
    exact = tc.threshold_time_m1(1.0)
    at_03 = tc.threshold_time_numeric(state(0.3, 1), 1.0)
    at_15 = tc.threshold_time_numeric(state(1.5, 1), 1.0)
    assert at_03 == pytest.approx(exact, abs=1e-5)
    assert at_15 == pytest.approx(at_03, abs=1e-5)


def test_numeric_threshold_two_photons():
    kt = tc.threshold_time_numeric(state(0.7, 2), 1.0)
    assert 0 < kt < 2.0
    assert tc.grid_minimum(state(0.7, 2), ch(kt * 0.99, 1.0)) < 0
    assert tc.grid_minimum(state(0.7, 2), ch(kt * 1.01, 1.0)) >= 0


def test_numeric_threshold_bracket_errors():
    with pytest.raises(BracketError):
        tc.threshold_time_numeric(state(0.3, 0), 1.0)
    with pytest.raises(BracketError):
        tc.threshold_time_numeric(state(0.3, 1), 1.0, kt_range=(1e-4, 0.1))


def test_grid_minimum_increases_with_time():
    s = state(0.3, 1)
    minima = [tc.grid_minimum(s, ch(kt, 1.0)) for kt in (0.05, 0.1, 0.2, 0.5)]
    assert all(a < b for a, b in zip(minima, minima[1:]))


def test_negative_volume_shrinks_then_vanishes():
    s = state(0.3, 1)
    kc = tc.threshold_time_m1(1.0)
    kts = (0.02, 0.05, 0.08, 0.1, 0.12, 0.14, 0.2, 0.5)
    vols = []
    for kt in kts:
        grid = scan.evaluate_grid(lambda q, p: tc.wigner_evolved(s, ch(kt, 1.0), q, p), scan.FIGURE_GRID)
        vols.append(scan.negativity(grid).negative_volume)
    before = [v for kt, v in zip(kts, vols) if kt < kc]
    after = [v for kt, v in zip(kts, vols) if kt > kc]
    assert all(v > 0 for v in before)
    assert all(a > b for a, b in zip(before, before[1:]))
    assert after == [0.0] * len(after)


def test_negative_volume_shrinks_with_temperature():
    s = state(0.3, 1)
    vols = []
    for nbar in (0.0, 1.0, 2.0, 5.0):
        grid = scan.evaluate_grid(lambda q, p: tc.wigner_evolved(s, ch(0.05, nbar), q, p), scan.FIGURE_GRID)
        vols.append(scan.negativity(grid).negative_volume)
    assert all(a > b for a, b in zip(vols, vols[1:]))
