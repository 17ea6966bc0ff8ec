import logging
import math
from dataclasses import replace

import pytest

from errors import ConfigError, DomainError, RegimeError
from params import (
    AtomSpec, CavitySpec, FiberSpec, attenuation_to_rate, derive_rates, emission_rate,
    fiber_transmission, photon_lengths, to_hz,
)
from config import DEFAULT_FIBER_SPEED
from conftest import make_setup


def test_attenuation_rates_match_quoted_values():
    assert to_hz(attenuation_to_rate(0.2, DEFAULT_FIBER_SPEED)) == pytest.approx(1.5e3, rel=0.05)
    assert to_hz(attenuation_to_rate(3.0, DEFAULT_FIBER_SPEED)) == pytest.approx(22e3, rel=0.05)


def test_fiber_transmission_500m():
    gamma = attenuation_to_rate(0.2, DEFAULT_FIBER_SPEED)
    p_fib = fiber_transmission(gamma, 500.0, DEFAULT_FIBER_SPEED)
    assert p_fib == pytest.approx(0.977, abs=1e-3)


def test_negative_attenuation_rejected():
    with pytest.raises(DomainError):
        attenuation_to_rate(-0.1, DEFAULT_FIBER_SPEED)
    with pytest.raises(ConfigError) as info:
        FiberSpec(length_L=100.0, attenuation=-0.1)
    assert info.value.field == 'fiber.attenuation'


@pytest.mark.parametrize('kwargs,field', [
    ({'length_l': 0.0, 't2': 1e-5}, 'cavity.length_l'),
    ({'length_l': 0.02, 't2': 0.0}, 'cavity.t2'),
    ({'length_l': 0.02, 't2': 0.6, 'loss2': 0.5}, 'cavity.loss2'),
])
def test_cavity_invariants(kwargs, field):
    with pytest.raises(ConfigError) as info:
        CavitySpec(**kwargs)
    assert info.value.field == field
    assert info.value.exit_code == 2


def test_atom_needs_nonzero_detuning():
    with pytest.raises(ConfigError):
        AtomSpec(g_atc=1.0, delta_at=0.0)


def test_zero_attenuation_gives_unit_transmission():
    rates = derive_rates(make_setup(attenuation=0.0, length_L=1000.0))
    assert rates.p_fib == 1.0
    assert rates.gamma_fib == 0.0


def test_p1_is_product_of_components():
    rates = derive_rates(make_setup(loss2=2e-6, attenuation=0.2, length_L=500.0))
    assert rates.p_out == pytest.approx(13.0 / 15.0)
    assert rates.p1 == pytest.approx(rates.p_out ** 2 * rates.p_fib, rel=1e-14)


def test_p_out_decreases_with_cavity_loss():
    values = [derive_rates(make_setup(loss2=x)).p_out for x in (0.0, 1e-6, 2e-6, 5e-6, 10e-6)]
    assert values[0] == 1.0
    assert all(a > b for a, b in zip(values, values[1:]))


def test_p_fib_decreases_with_length():
    values = [derive_rates(make_setup(attenuation=0.2, length_L=L)).p_fib for L in (10, 100, 400, 1000)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_derived_rate_relations(toy_setup):
    rates = derive_rates(toy_setup)
    assert rates.fsr_fib == pytest.approx(1e5, rel=1e-12)
    assert rates.kappa == pytest.approx(0.5 * rates.kappa_cav)
    assert rates.g_ab ** 2 == pytest.approx(rates.kappa_cav * rates.fsr_fib / (2 * math.pi))
    assert rates.sm_param == pytest.approx(2 * rates.kappa / rates.fsr_fib)
    assert rates.l_eff == pytest.approx(DEFAULT_FIBER_SPEED / rates.kappa)
    # Identical nodes
    assert rates.g_b == rates.g_ab
    assert rates.kappa_b == rates.kappa


def test_coupling_efficiency_folds_into_fiber_loss():
    base = make_setup(attenuation=0.2, length_L=500.0)
    lossy = replace(base, fiber=FiberSpec(length_L=500.0, attenuation=0.2, coupling_efficiency=0.9))
    assert derive_rates(lossy).p_fib == pytest.approx(0.9 * derive_rates(base).p_fib, rel=1e-12)


def test_photon_lengths_equal_for_critical_coupling(toy_setup):
    rates = derive_rates(toy_setup)
    g_max = rates.kappa / math.sqrt(2.0)
    l_eff, l_ph = photon_lengths(rates, g_max)
    assert emission_rate(rates, g_max) == pytest.approx(rates.kappa)
    assert l_ph == pytest.approx(l_eff)


def test_photon_lengths_regime(toy_setup):
    rates = derive_rates(toy_setup)
    with pytest.raises(RegimeError) as info:
        photon_lengths(rates, rates.kappa)
    assert info.value.ratio == pytest.approx(1.0)


def test_long_cavity_warns(caplog):
    with caplog.at_level(logging.WARNING):
        make_setup(length_L=1.0)
    assert 'length ratio' in caplog.text


def test_asymmetric_nodes():
    cfg = make_setup(loss2=2e-6, attenuation=0.2, length_L=500.0)
    cfg = replace(cfg, cavity_b=CavitySpec(length_l=0.02, t2=13e-6, loss2=5e-6))
    rates = derive_rates(cfg)
    assert not cfg.symmetric
    assert rates.p_out_b == pytest.approx(13.0 / 18.0)
    assert rates.p1 == pytest.approx(rates.p_out * rates.p_out_b * rates.p_fib)
