import math

import numpy as np
import pytest

from analytics import f1, f_fib, f_stirap
from errors import DomainError
from protocols import sincos_couplings, sincos_schedule
from reduced_models import (
    adiabatic_state, dark_bright_transform, dark_state_decay, effective_generator,
    eliminated_mode_corrections, elimination_rates, integrate_effective_three_level,
    integrate_three_mode, photonic_transfer, refuted_single_mode_model, sincos_three_mode,
    stirap_three_level,
)

FSR = 1.0
GAMMA = 2e-3
G0 = 0.02


def test_stirap_matches_closed_form():
    numeric, closed = stirap_three_level(sincos_schedule(5.0, 4.0), 1.0)
    assert closed == pytest.approx(0.9844, abs=1e-4)
    assert numeric == pytest.approx(closed, rel=0.01)


def test_stirap_error_shrinks_with_coupling():
    errors = {}
    for G in (10.0, 30.0, 100.0):
        numeric, closed = stirap_three_level(sincos_schedule(G, 4.0), 1.0)
        errors[G] = abs(numeric - closed)
    assert errors[100.0] < errors[10.0]


def test_single_mode_model_is_stirap_through_mode_zero():
    numeric, closed = refuted_single_mode_model(G0, 2500.0, GAMMA)
    assert closed == pytest.approx(f_stirap(G0, 2500.0, GAMMA), rel=1e-14)
    assert numeric == pytest.approx(closed, rel=0.01)


@pytest.mark.parametrize('x', [0.3, 1.0, pytest.param(3.0, marks=pytest.mark.slow)])
def test_three_mode_follows_trade_off(x):
    T = x * FSR / G0 ** 2
    assert sincos_three_mode(G0, T, GAMMA, FSR) == pytest.approx(f_fib(G0, T, GAMMA, FSR), rel=0.02)


@pytest.mark.slow
def test_three_mode_optimum_sits_at_unit_area():
    xs = [0.3, 1.0, 3.0]
    values = [sincos_three_mode(G0, x * FSR / G0 ** 2, GAMMA, FSR) for x in xs]
    assert xs[int(np.argmax(values))] == 1.0


def test_dark_to_resonant_mode_is_bright_to_odd_modes():
    T = FSR / G0 ** 2
    g_a, g_b = sincos_couplings(G0, T)
    _, series = integrate_three_mode(g_a, g_b, GAMMA, FSR)
    # Halfway through the passage both couplings are equal
    mid = len(series.t) // 2
    t = series.t[mid]
    assert g_a(t) == pytest.approx(g_b(t), rel=1e-9)
    c_A, c_B = series.amplitudes[mid, 0], series.amplitudes[mid, -1]
    even = g_a(t) * c_A + g_b(t) * c_B
    odd = g_a(t) * c_A - g_b(t) * c_B
    assert abs(even) < 0.1 * abs(odd)
    assert abs(odd) > 0.5 * G0


def test_dark_amplitude_reproduces_f1():
    T, gamma_cav = 2500.0, 1e-6
    a_dark = dark_state_decay(G0, T, GAMMA, FSR, gamma_cav, 0.5 * math.pi * T)
    assert a_dark ** 2 == pytest.approx(f1(G0, T, GAMMA, FSR, gamma_cav), rel=1e-12)


def test_dark_bright_transform_is_isometric():
    rng = np.random.default_rng(3)
    for _ in range(20):
        c = rng.normal(size=3) + 1j * rng.normal(size=3)
        g_a, g_b = rng.uniform(0.1, 2.0, size=2)
        a_dark, a_plus, a_minus = dark_bright_transform(c[0], c[1], c[2], g_a, g_b)
        before = np.sum(np.abs(c) ** 2)
        after = abs(a_dark) ** 2 + abs(a_plus) ** 2 + abs(a_minus) ** 2
        assert after == pytest.approx(before, abs=1e-12)


def test_dark_state_of_sender_at_start():
    # Receiver coupling alone: the sender is fully dark
    state = adiabatic_state(1.0, 0.0, 0.0, 0.0, 1.0)
    assert abs(state.a_dark) == pytest.approx(1.0)
    assert state.a_plus == 0 and state.a_minus == 0


def test_dark_bright_undefined_without_coupling():
    with pytest.raises(DomainError):
        dark_bright_transform(1.0, 0.0, 0.0, 0.0, 0.0)


def test_eliminated_modes_sum_to_pure_dissipation():
    g_a, g_b = 0.02, 0.015
    corrections = eliminated_mode_corrections(g_a, g_b, GAMMA, FSR)
    total = corrections[-1] + corrections[1]
    # Level shifts of modes -1 and +1 cancel
    assert np.allclose(corrections[1].real, -corrections[-1].real)
    assert np.allclose(total.real, 0.0, atol=1e-15)

    g_ga, g_gb, g_gab = elimination_rates(g_a, g_b, GAMMA, FSR)
    expected = np.array([[-0.5j * g_ga, 0.5j * g_gab], [0.5j * g_gab, -0.5j * g_gb]])
    assert np.allclose(total, expected, rtol=1e-12, atol=0)

    k = effective_generator(g_a, g_b, GAMMA, FSR)
    assert np.allclose(k[np.ix_([0, 2], [0, 2])], total, rtol=1e-12, atol=0)
    assert k[1, 1] == pytest.approx(-0.5j * GAMMA)


def test_effective_three_level_tracks_three_mode_chain():
    T = FSR / G0 ** 2
    g_a, g_b = sincos_couplings(G0, T)
    f_three_mode, series = integrate_three_mode(g_a, g_b, GAMMA, FSR)
    f_effective, _ = integrate_effective_three_level(g_a, g_b, GAMMA, FSR)
    assert f_effective == pytest.approx(f_three_mode, abs=5e-3)
    assert series.amplitudes.shape[1] == 5
    assert series.norm[-1] == pytest.approx(f_three_mode + np.sum(np.abs(series.amplitudes[-1, :-1]) ** 2))


def test_lossless_photonic_transfer():
    g_a, g_b = sincos_couplings(0.05, 2000.0)
    assert photonic_transfer(g_a, g_b, 0.0, FSR, 1) > 0.98


def test_photonic_transfer_needs_modes():
    g_a, g_b = sincos_couplings(0.05, 2000.0)
    with pytest.raises(DomainError):
        photonic_transfer(g_a, g_b, 0.0, FSR, 0)
