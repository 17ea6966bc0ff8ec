import math

import numpy as np
import pytest

import optimizer
from analytics import f_ap
from errors import ConfigError, ConvergenceError, IntegrationError, RegimeError
from optimizer import OptResult, SearchSpace
from params import derive_rates
from protocols import ProtocolTag

T_PEAK = 1e-3
X_PEAK = 1.3
RATIO_PEAK = 3e-3


def smooth_ap(T, x_spl, omega_ratio):
    score = math.log(T / T_PEAK) ** 2 + (x_spl - X_PEAK) ** 2 + math.log(omega_ratio / RATIO_PEAK) ** 2
    return 0.9 * math.exp(-score), 4


def use_ap(monkeypatch, fn):
    monkeypatch.setattr(optimizer, '_ap_evaluator', lambda *args, **kwargs: fn)


def test_search_space_validation():
    with pytest.raises(ConfigError) as info:
        SearchSpace(T_range=(10.0, 1.0))
    assert info.value.field == 'search.T_range'
    with pytest.raises(ConfigError):
        SearchSpace(grid_points=(0, 2, 2))
    with pytest.raises(ConfigError):
        SearchSpace(wps_points=0)


def test_grid_then_refine_improves(monkeypatch, toy_setup, fast_sim):
    use_ap(monkeypatch, smooth_ap)
    space = SearchSpace(grid_points=(4, 4, 4))
    result = optimizer.optimize_ap(toy_setup, space, fast_sim, threads=2)
    assert result.best_F >= result.grid_best_F
    assert result.best_F == pytest.approx(0.9, abs=2e-3)
    assert result.best_params['T'] == pytest.approx(T_PEAK, rel=0.1)
    assert result.evaluations > 64
    assert result.n_modes_used == 4
    assert result.failures == 0


def test_grid_ties_go_to_smallest_point(monkeypatch, toy_setup, fast_sim):
    use_ap(monkeypatch, lambda T, x, r: (0.5, 1))
    space = SearchSpace(grid_points=(3, 3, 3), refine=False)
    result = optimizer.optimize_ap(toy_setup, space, fast_sim, threads=1)
    t_axis, x_axis, r_axis = space.axes(derive_rates(toy_setup).kappa_cav)
    assert result.as_tuple() == (t_axis[0], x_axis[0], r_axis[0])
    assert result.evaluations == 27


def test_failed_cells_are_skipped(monkeypatch, toy_setup, fast_sim):
    def flaky(T, x_spl, omega_ratio):
        if x_spl > 1.5:
            raise IntegrationError("step size underflow", t_reached=0.0)
        return smooth_ap(T, x_spl, omega_ratio)

    use_ap(monkeypatch, flaky)
    result = optimizer.optimize_ap(toy_setup, SearchSpace(grid_points=(4, 4, 4), refine=False), fast_sim, threads=2)
    assert result.evaluations == 64
    assert result.failures == 32
    assert result.best_params['x_spl'] <= 1.5


def test_all_cells_failing_raises(monkeypatch, toy_setup, fast_sim):
    def broken(*point):
        raise IntegrationError("step size underflow", t_reached=0.0)

    use_ap(monkeypatch, broken)
    with pytest.raises(ConvergenceError):
        optimizer.optimize_ap(toy_setup, SearchSpace(grid_points=(2, 2, 2)), fast_sim, threads=1)


def test_cell_results_are_tallied_by_the_caller():
    def broken(x):
        raise IntegrationError("step size underflow", t_reached=0.0)

    assert optimizer._evaluate_cell(broken, (1.0,)) == (None, 0)
    tally = optimizer._Tally()
    assert tally.evaluate(lambda x: (0.5, 4), 1.0) == 0.5
    assert tally.evaluate(broken, 2.0) is None
    assert (tally.calls, tally.failures, tally.modes_used) == (2, 1, 4)


def test_wps_search(monkeypatch, toy_setup, fast_sim):
    kappa = derive_rates(toy_setup).kappa
    g_peak = 0.04 * kappa
    monkeypatch.setattr(optimizer, '_wps_evaluator',
                        lambda *args, **kwargs: lambda g: (0.95 * math.exp(-math.log(g / g_peak) ** 2), 2))
    result = optimizer.optimize_wps(toy_setup, fast_sim, threads=1)
    assert result.protocol is ProtocolTag.WPS
    assert result.best_params['g_max'] == pytest.approx(g_peak, rel=1e-2)
    assert result.best_F >= result.grid_best_F
    assert result.regime_ok


def test_wps_range_outside_regime(toy_setup, fast_sim):
    kappa = derive_rates(toy_setup).kappa
    with pytest.raises(RegimeError):
        optimizer.optimize_wps(toy_setup, fast_sim, g_max_range=(1.0, 0.3 * kappa))
    with pytest.raises(ConfigError):
        optimizer.optimize_wps(toy_setup, fast_sim, g_max_range=(0.05 * kappa, 0.01 * kappa))


def test_half_width():
    x = np.linspace(0.0, 2.0, 21)
    f = 1.0 - (x - 1.0) ** 2
    assert optimizer._half_width(x, f, 0.75) == pytest.approx(0.5, abs=1e-6)


def test_timing_sensitivity(monkeypatch, toy_setup, fast_sim):
    use_ap(monkeypatch, lambda T, x, r: (0.9 - (x - 1.4) ** 2, 2))
    optimum = OptResult(best_params={'T': T_PEAK, 'x_spl': 1.4, 'omega_ratio': RATIO_PEAK},
                        best_F=0.9, evaluations=0, regime_ok=True)
    curve = optimizer.timing_sensitivity(toy_setup, fast_sim, np.arange(0.8, 2.15, 0.1), optimum=optimum,
                                          threads=1)
    assert curve.best_x_spl == pytest.approx(1.4)
    assert curve.best_F == pytest.approx(0.9)
    assert curve.half_width == pytest.approx(math.sqrt(0.05), abs=0.01)
    assert curve.T == T_PEAK


def fixed_optimum(cfg, space, sim, delta_tol=None, threads=None):
    return OptResult(best_params={'T': T_PEAK, 'x_spl': X_PEAK, 'omega_ratio': RATIO_PEAK},
                     best_F=0.5, evaluations=1, regime_ok=True, n_modes_used=8)


def test_sweep_length_rows(monkeypatch, lossy_setup, fast_sim):
    monkeypatch.setattr(optimizer, 'optimize_ap', fixed_optimum)
    rows = optimizer.sweep_length(lossy_setup, [100.0, 500.0], SearchSpace(), fast_sim)
    assert [r.L for r in rows] == [100.0, 500.0]
    for row in rows:
        rates = derive_rates(lossy_setup.with_length(row.L))
        assert row.P1 == pytest.approx(rates.p1)
        assert row.f_ap == pytest.approx(f_ap(rates.p_out, rates.gamma_fib, row.L, rates.speed_cf))
        assert row.f_ap > row.P1
        assert row.T_opt == T_PEAK
        assert row.n_modes_used == 8
    assert rows[0].P1 > rows[1].P1


def test_cooperativity_ladder_bound_grows(monkeypatch, toy_setup, fast_sim):
    monkeypatch.setattr(optimizer, 'optimize_ap', fixed_optimum)
    rows = optimizer.cooperativity_ladder(toy_setup, [1, 10, 27, 82], 10.0, SearchSpace(), fast_sim)
    bounds = [r['P1_tilde'] for r in rows]
    assert all(a < b for a, b in zip(bounds, bounds[1:]))
    assert all(r['P1_tilde'] < r['P1'] for r in rows)


def test_ladder_forwards_the_wps_search(monkeypatch, toy_setup, fast_sim):
    seen = []

    def fake_wps(cfg, sim, g_max_range=None, grid_points=8, delta_tol=1e-4, threads=None):
        seen.append((g_max_range, grid_points))
        return OptResult({'g_max': 1.0}, 0.5, 1, True, ProtocolTag.WPS)

    monkeypatch.setattr(optimizer, 'optimize_wps', fake_wps)
    space = SearchSpace(g_max_range=(0.05, 0.1), wps_points=3)
    optimizer.cooperativity_ladder(toy_setup, [1, 10], 10.0, space, fast_sim, protocol='wps')
    kappa = derive_rates(toy_setup.with_length(10.0)).kappa
    assert seen[0][0] == pytest.approx((0.05 * kappa, 0.1 * kappa))
    assert [points for _, points in seen] == [3, 3]
    assert SearchSpace().wps_range(kappa) is None
    assert optimizer.default_g_max_range(toy_setup)[0] == pytest.approx(optimizer.WPS_FLOOR * derive_rates(toy_setup).kappa)
