from dataclasses import replace

import numpy as np
import pytest

from conftest import make_setup
from dynamics import integrate_full
from eigenmodes import (
    analytic_three_mode_eigs, diagonalize_field_sector, integrate_hybrid, modes_from_rates,
    site_loss_rates, transform_matrix_n1,
)
from errors import DomainError
from params import derive_rates


def test_three_mode_eigenvalues_match_numeric(toy_setup):
    rates = derive_rates(toy_setup)
    modes = diagonalize_field_sector(toy_setup, 1)
    analytic = analytic_three_mode_eigs(rates.g_ab, rates.fsr_fib)
    scale = np.max(np.abs(analytic))
    assert np.allclose(modes.frequencies, analytic, rtol=0, atol=1e-12 * scale)


def test_n1_transform_matches_eigenvectors(toy_setup):
    rates = derive_rates(toy_setup)
    numeric = diagonalize_field_sector(toy_setup, 1).transform
    analytic = transform_matrix_n1(rates.g_ab, rates.fsr_fib)
    assert np.allclose(analytic.T @ analytic, np.eye(5), atol=1e-12)
    # Columns agree up to a sign
    overlaps = np.abs(np.sum(analytic * numeric, axis=0))
    assert np.allclose(overlaps, 1.0, atol=1e-10)


def test_zero_mode_cavity_content():
    g, fsr = 0.3, 1.0
    zero_mode = transform_matrix_n1(g, fsr)[:, 2]
    content = zero_mode[0] ** 2 + zero_mode[1] ** 2
    assert content == pytest.approx(2 * fsr ** 2 / (2 * fsr ** 2 + 8 * g ** 2))


def test_transform_is_orthogonal_for_many_modes(toy_setup):
    modes = diagonalize_field_sector(toy_setup, 6)
    u = modes.transform
    assert np.allclose(u.T @ u, np.eye(u.shape[0]), atol=1e-10)
    assert np.allclose(modes.cavity_content + modes.fiber_content, 1.0)
    assert len(modes.rows()) == 2 * 6 + 3


def test_equal_losses_give_uniform_hybrid_decay(lossy_setup):
    rates = derive_rates(lossy_setup)
    uniform = replace(rates, gamma_cav=1e3, gamma_cav_b=1e3, gamma_fib=1e3)
    modes = modes_from_rates(uniform, 3)
    assert np.allclose(modes.decay, 1e3, rtol=1e-10)


def test_bad_mode_counts():
    with pytest.raises(DomainError):
        transform_matrix_n1(0.0, 1.0)
    with pytest.raises(DomainError):
        analytic_three_mode_eigs(-1.0, 1.0)


def test_hybrid_basis_reproduces_full_dynamics(toy_setup, toy_ap_schedule, fast_sim):
    full = integrate_full(toy_setup, toy_ap_schedule, fast_sim)
    hybrid = integrate_hybrid(toy_setup, toy_ap_schedule, fast_sim)
    assert hybrid.meta['basis'] == 'hybrid'
    assert full.fidelity > 0.99
    assert abs(hybrid.fidelity - full.fidelity) < 1e-6
    assert hybrid.series.amplitudes.shape[1] == full.series.amplitudes.shape[1]


def test_damping_matrix_returns_site_losses(lossy_setup):
    rates = derive_rates(lossy_setup)
    modes = modes_from_rates(rates, 2)
    u = modes.transform
    assert np.allclose(modes.damping, modes.damping.T)
    assert np.allclose(np.diag(modes.damping), modes.decay)
    assert np.allclose(u @ modes.damping @ u.T, np.diag(site_loss_rates(rates, 2)), rtol=0, atol=1e-9 * rates.gamma_cav)
    # Unequal cavity and fiber losses couple the hybrid modes
    off_diagonal = modes.damping - np.diag(modes.decay)
    assert np.max(np.abs(off_diagonal)) > 1e-3 * rates.gamma_fib


@pytest.mark.parametrize('loss2,attenuation', [(3e-6, 0.0), (0.0, 0.1), (2e-6, 0.2)])
def test_hybrid_basis_matches_full_dynamics_with_loss(loss2, attenuation, toy_ap_schedule, fast_sim):
    cfg = make_setup(loss2=loss2, attenuation=attenuation)
    full = integrate_full(cfg, toy_ap_schedule, fast_sim)
    hybrid = integrate_hybrid(cfg, toy_ap_schedule, fast_sim)
    assert abs(hybrid.fidelity - full.fidelity) < 1e-6
    for channel in ('cavity_a', 'cavity_b', 'fiber'):
        assert getattr(hybrid.loss_ledger, channel) == pytest.approx(getattr(full.loss_ledger, channel), abs=1e-6)
    assert hybrid.budget_error < 1e-5


def test_hybrid_rotating_frame_matches_lab(lossy_setup, toy_ap_schedule, fast_sim):
    lab = integrate_hybrid(lossy_setup, toy_ap_schedule, fast_sim)
    rotating = integrate_hybrid(lossy_setup, toy_ap_schedule, replace(fast_sim, frame='rotating'))
    assert rotating.fidelity == pytest.approx(lab.fidelity, abs=1e-6)
