import math

import numpy as np
import pytest

from errors import ConfigError, DomainError, RegimeError
from params import derive_rates
from protocols import (
    DriveLevel, ProtocolTag, WPS_TRUNCATION, ap_gaussian_schedule, build_schedule,
    effective_couplings, photonic_schedule, sincos_schedule, wps_cutoff, wps_rate, wps_schedule,
)


def test_ap_window_ends_are_dark():
    sched = ap_gaussian_schedule(1.0, T=1.0, x_spl=0.8)
    omega_a, omega_b = sched.drives(sched.t_start)
    # Counterintuitive order: receiver dominates at the start
    assert (omega_a / omega_b) ** 2 < 1e-6
    omega_a, omega_b = sched.drives(sched.t_end)
    assert (omega_b / omega_a) ** 2 < 1e-6


def test_ap_pulse_order_and_support():
    sched = ap_gaussian_schedule(2.0, T=1.0, x_spl=1.5)
    assert sched.protocol_tag is ProtocolTag.AP_GAUSS
    assert sched.omega_b(0.0) == pytest.approx(2.0)
    assert sched.omega_a(1.5) == pytest.approx(2.0)
    assert sched.omega_a(sched.t_start - 1.0) == 0.0
    assert sched.omega_b(sched.t_end + 1.0) == 0.0


@pytest.mark.parametrize('kwargs', [
    {'omega_max': 1.0, 'T': 0.0, 'x_spl': 1.0},
    {'omega_max': 1.0, 'T': 1.0, 'x_spl': -0.1},
    {'omega_max': -1.0, 'T': 1.0, 'x_spl': 1.0},
])
def test_ap_rejects_bad_parameters(kwargs):
    with pytest.raises(DomainError):
        ap_gaussian_schedule(**kwargs)


def test_wps_rate_profile():
    gamma_max, t_off = 3.0, 5.0
    # Rising edge meets the plateau continuously
    assert wps_rate(-1e-9, gamma_max, t_off) == pytest.approx(gamma_max, rel=1e-6)
    assert wps_rate(0.0, gamma_max, t_off) == gamma_max
    assert wps_rate(t_off + 1e-9, gamma_max, t_off) == 0.0
    edge = [wps_rate(t, gamma_max, t_off) for t in np.linspace(-5.0, -0.01, 50)]
    assert all(a < b for a, b in zip(edge, edge[1:]))


def test_wps_cutoff_leaves_target_population():
    gamma_max = 7.0
    assert math.exp(-gamma_max * wps_cutoff(gamma_max)) == pytest.approx(WPS_TRUNCATION)


def test_wps_receiver_mirrors_sender(toy_setup):
    rates = derive_rates(toy_setup)
    sched = wps_schedule(rates, toy_setup.atom, 0.05 * rates.kappa)
    t_mirror = sched.params['tau']
    for t in np.linspace(sched.t_start, sched.t_end, 17)[1:-1]:
        assert sched.omega_b(t) == pytest.approx(sched.omega_a(t_mirror - t), rel=1e-12, abs=1e-9)


def test_wps_emission_matches_target_rate(toy_setup):
    rates = derive_rates(toy_setup)
    g_max = 0.05 * rates.kappa
    sched = wps_schedule(rates, toy_setup.atom, g_max)
    gamma_a, _ = effective_couplings(sched, rates, toy_setup.atom).emission(0.0)
    assert gamma_a == pytest.approx(sched.params['gamma_max'], rel=1e-9)


def test_wps_regime(toy_setup):
    rates = derive_rates(toy_setup)
    with pytest.raises(RegimeError) as info:
        wps_schedule(rates, toy_setup.atom, 0.3 * rates.kappa)
    assert info.value.ratio == pytest.approx(0.3)


def test_sincos_drive_level_reproduces_couplings(toy_setup):
    rates = derive_rates(toy_setup)
    g0, T = 0.1 * rates.g_ab, 1e-4
    sched = sincos_schedule(g0, T, rates, toy_setup.atom)
    view = effective_couplings(sched, rates, toy_setup.atom)
    for t in np.linspace(0.0, sched.t_end, 9):
        g_a, g_b = view.gtilde(t)
        assert g_a == pytest.approx(g0 * math.sin(t / T), abs=1e-9 * g0)
        assert g_b == pytest.approx(g0 * math.cos(t / T), abs=1e-9 * g0)


def test_coupling_level_schedules():
    sched = sincos_schedule(0.02, 10.0)
    assert sched.level is DriveLevel.COUPLING
    assert sched.t_end == pytest.approx(5.0 * math.pi)
    assert photonic_schedule(0.05, 10.0).protocol_tag is ProtocolTag.PHOTONIC


def test_effective_couplings_need_drive_level(toy_setup):
    with pytest.raises(DomainError):
        effective_couplings(photonic_schedule(0.05, 10.0), derive_rates(toy_setup), toy_setup.atom)


def test_build_schedule_from_block(toy_setup):
    rates = derive_rates(toy_setup)
    sched = build_schedule({'type': 'AP', 'omega_max': 1e5, 'T': 2e-4}, rates, toy_setup.atom)
    assert sched.protocol_tag is ProtocolTag.AP_GAUSS
    assert sched.params['x_spl'] == 1.5


def test_build_schedule_errors(toy_setup):
    rates = derive_rates(toy_setup)
    with pytest.raises(ConfigError) as info:
        build_schedule({'type': 'ap', 'omega_max': 1e5}, rates, toy_setup.atom)
    assert info.value.field == 'protocol.T'
    with pytest.raises(ConfigError) as info:
        build_schedule({'type': 'raman'}, rates, toy_setup.atom)
    assert info.value.field == 'protocol.type'
