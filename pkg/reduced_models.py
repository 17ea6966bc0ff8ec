"""
Reduced transfer models for FiberLink
Three-mode atom-fiber-atom chain, its eliminated 3x3 form, three-level STIRAP,
dark/bright basis and the purely photonic cavity-fiber-cavity transfer
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp

from errors import DomainError, IntegrationError
from protocols import DriveSchedule, sincos_couplings, sincos_schedule

logger = logging.getLogger(__name__)

RateLike = Union[float, Callable[[float], float]]

REDUCED_RTOL = 1e-10
REDUCED_ATOL = 1e-12
# Elimination of off-resonant modes is trusted while g̃ stays below this share of √(γ²/4 + FSR²)
ELIMINATION_RATIO_WARN = 0.1


@dataclass
class ReducedSeries:
    t: np.ndarray
    amplitudes: np.ndarray

    @property
    def norm(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    def three_mode_state(self, index: int) -> 'ThreeModeState':
        return ThreeModeState.from_vector(self.amplitudes[index])


@dataclass(frozen=True)
class ThreeModeState:
    c_A: complex
    c_minus: complex
    c_0: complex
    c_plus: complex
    c_B: complex

    @classmethod
    def from_vector(cls, vec) -> 'ThreeModeState':
        return cls(*[complex(v) for v in vec])

    @property
    def norm(self) -> float:
        return sum(abs(c) ** 2 for c in (self.c_A, self.c_minus, self.c_0, self.c_plus, self.c_B))


@dataclass(frozen=True)
class AdiabaticState:
    a_plus: complex
    a_dark: complex
    a_minus: complex


def _as_function(rate: RateLike) -> Callable[[float], float]:
    if callable(rate):
        return rate
    value = float(rate)
    return lambda t: value


def _support(fn, t_span: Optional[Tuple[float, float]]) -> Tuple[float, float]:
    if t_span is not None:
        return t_span
    if hasattr(fn, 't_lo') and hasattr(fn, 't_hi'):
        return fn.t_lo, fn.t_hi
    if isinstance(fn, DriveSchedule):
        return fn.t_start, fn.t_end
    raise DomainError("time span is required for bare coupling functions")


def sincos_cavity_decay(gamma_peak: float, T: float) -> Tuple[Callable[[float], float], Callable[[float], float]]:
    """γ̃_cav^A(t) = γ̃·sin²(t/T), γ̃_cav^B(t) = γ̃·cos²(t/T) for drives following g̃ ∝ sin, cos"""
    return (lambda t: gamma_peak * math.sin(t / T) ** 2,
            lambda t: gamma_peak * math.cos(t / T) ** 2)


def _solve(rhs, t_span, y0, n_samples: int) -> ReducedSeries:
    t_eval = np.linspace(t_span[0], t_span[1], n_samples)
    sol = solve_ivp(rhs, t_span, y0, method='DOP853', t_eval=t_eval,
                    rtol=REDUCED_RTOL, atol=REDUCED_ATOL)
    if sol.status < 0:
        t_reached = float(sol.t[-1]) if len(sol.t) else t_span[0]
        raise IntegrationError(f"reduced model integration failed: {sol.message}",
                               t_reached=t_reached, state=sol.y[:, -1] if sol.y.size else y0)
    return ReducedSeries(t=sol.t, amplitudes=sol.y.T)


def _integrate_chain(couple_a, couple_b, decay_a, decay_b, gamma_fib: float, fsr: float,
                     n_modes: int, t_span, n_samples: int = 201) -> ReducedSeries:
    """End node A - fiber modes -N..N - end node B, with (-1)^n signs on B's couplings"""
    modes = np.arange(-n_modes, n_modes + 1)
    omega = modes * fsr
    signs = np.where(modes % 2 == 0, 1.0, -1.0)
    size = 2 * n_modes + 3

    def rhs(t, y):
        c_A, c_B = y[0], y[-1]
        fib = y[1:-1]
        g_a = couple_a(t)
        g_b = couple_b(t)
        dy = np.empty(size, dtype=complex)
        dy[0] = -1j * g_a * fib.sum() - 0.5 * decay_a(t) * c_A
        dy[1:-1] = -1j * (omega * fib + g_a * c_A + signs * g_b * c_B) - 0.5 * gamma_fib * fib
        dy[-1] = -1j * g_b * np.dot(signs, fib) - 0.5 * decay_b(t) * c_B
        return dy

    y0 = np.zeros(size, dtype=complex)
    y0[0] = 1.0
    return _solve(rhs, t_span, y0, n_samples)


def _warn_elimination(peak_coupling: float, gamma_fib: float, fsr: float):
    scale = math.sqrt(0.25 * gamma_fib ** 2 + fsr ** 2)
    if peak_coupling > ELIMINATION_RATIO_WARN * scale:
        logger.warning(f"⚠️ Coupling {peak_coupling:.4g} is not small against the mode spacing "
                       f"{scale:.4g}; off-resonant elimination is unreliable")


def _peak(fn, t_span, samples: int = 64) -> float:
    return max(abs(fn(t)) for t in np.linspace(t_span[0], t_span[1], samples))


def integrate_three_mode(gtilde_a, gtilde_b, gamma_fib: float, fsr: float,
                         gamma_cav_eff_a: RateLike = 0.0, gamma_cav_eff_b: RateLike = 0.0,
                         t_span: Optional[Tuple[float, float]] = None,
                         n_samples: int = 201) -> Tuple[float, ReducedSeries]:
    """Atoms coupled through fiber modes -1, 0, +1 with the cavities eliminated

    Returns F = |c_B|² at the end of the span together with the amplitude series
    in the (c_A, c_-1, c_0, c_+1, c_B) layout.
    """
    span = _support(gtilde_a, t_span)
    _warn_elimination(max(_peak(gtilde_a, span), _peak(gtilde_b, span)), gamma_fib, fsr)
    series = _integrate_chain(gtilde_a, gtilde_b, _as_function(gamma_cav_eff_a), _as_function(gamma_cav_eff_b),
                              gamma_fib, fsr, 1, span, n_samples=n_samples)
    return float(abs(series.amplitudes[-1, -1]) ** 2), series


def eliminated_mode_corrections(gtilde_a: float, gtilde_b: float, gamma_fib: float, fsr: float):
    """Per-mode 2x2 corrections on (c_A, c_B) from adiabatically eliminating modes -1 and +1

    Each mode alone shifts the atoms coherently; the shifts of the two modes
    cancel and only the dissipative parts survive in the sum.
    """
    corrections = {}
    for n in (-1, 1):
        sign = -1.0 if n % 2 else 1.0
        response = -1.0 / (n * fsr - 0.5j * gamma_fib)
        corrections[n] = response * np.array([
            [gtilde_a ** 2, sign * gtilde_a * gtilde_b],
            [sign * gtilde_a * gtilde_b, gtilde_b ** 2],
        ], dtype=complex)
    return corrections


def elimination_rates(gtilde_a: float, gtilde_b: float, gamma_fib: float, fsr: float) -> Tuple[float, float, float]:
    """(γ_gA, γ_gB, γ_gAB) induced by the off-resonant modes"""
    strength = 2.0 * gamma_fib / (0.25 * gamma_fib ** 2 + fsr ** 2)
    return strength * gtilde_a ** 2, strength * gtilde_b ** 2, strength * gtilde_a * gtilde_b


def effective_generator(gtilde_a: float, gtilde_b: float, gamma_fib: float, fsr: float,
                        gamma_cav_eff_a: float = 0.0, gamma_cav_eff_b: float = 0.0) -> np.ndarray:
    """3x3 matrix K with i·d/dt (c_A, c_0, c_B) = K·(c_A, c_0, c_B)"""
    g_ga, g_gb, g_gab = elimination_rates(gtilde_a, gtilde_b, gamma_fib, fsr)
    return np.array([
        [-0.5j * (g_ga + gamma_cav_eff_a), gtilde_a, 0.5j * g_gab],
        [gtilde_a, -0.5j * gamma_fib, gtilde_b],
        [0.5j * g_gab, gtilde_b, -0.5j * (g_gb + gamma_cav_eff_b)],
    ], dtype=complex)


def integrate_effective_three_level(gtilde_a, gtilde_b, gamma_fib: float, fsr: float,
                                    gamma_cav_eff_a: RateLike = 0.0, gamma_cav_eff_b: RateLike = 0.0,
                                    t_span: Optional[Tuple[float, float]] = None,
                                    n_samples: int = 201) -> Tuple[float, ReducedSeries]:
    """Atom - resonant mode - atom evolution under the eliminated generator"""
    span = _support(gtilde_a, t_span)
    decay_a = _as_function(gamma_cav_eff_a)
    decay_b = _as_function(gamma_cav_eff_b)

    def rhs(t, y):
        return -1j * effective_generator(gtilde_a(t), gtilde_b(t), gamma_fib, fsr,
                                         decay_a(t), decay_b(t)) @ y

    y0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    series = _solve(rhs, span, y0, n_samples)
    return float(abs(series.amplitudes[-1, -1]) ** 2), series


def stirap_closed_form(G: float, T: float, Gamma_C: float) -> float:
    return math.exp(-(Gamma_C / (G * G * T)) * 0.5 * math.pi)


def stirap_three_level(G_schedule: DriveSchedule, Gamma_C: float,
                       n_samples: int = 201) -> Tuple[float, float]:
    """Three-level STIRAP A - C - B with a decaying middle level

    G_schedule holds the couplings 𝒢·sin(t/T), 𝒢·cos(t/T); returns the
    integrated and the closed-form transfer probabilities.
    """
    G = G_schedule.params['g0']
    T = G_schedule.params['T']
    couple_a, couple_b = G_schedule.omega_a, G_schedule.omega_b

    def rhs(t, y):
        g_a = couple_a(t)
        g_b = couple_b(t)
        return np.array([
            -1j * g_a * y[1],
            -1j * (g_a * y[0] + g_b * y[2]) - 0.5 * Gamma_C * y[1],
            -1j * g_b * y[1],
        ])

    series = _solve(rhs, (G_schedule.t_start, G_schedule.t_end),
                    np.array([1.0, 0.0, 0.0], dtype=complex), n_samples)
    f_numeric = float(abs(series.amplitudes[-1, 2]) ** 2)
    return f_numeric, stirap_closed_form(G, T, Gamma_C)


def refuted_single_mode_model(g0: float, T: float, gamma_fib: float) -> Tuple[float, float]:
    """Single-fiber-mode truncation: STIRAP through mode 0 alone, decaying at γ_fib"""
    return stirap_three_level(sincos_schedule(g0, T), gamma_fib)


def dark_bright_transform(c_A, c_C, c_B, G_a, G_b):
    """Dark state and bright superpositions with respect to the couplings (G_a, G_b)"""
    norm = np.sqrt(np.asarray(G_a, dtype=float) ** 2 + np.asarray(G_b, dtype=float) ** 2)
    if np.any(norm == 0):
        raise DomainError("dark/bright basis is undefined when both couplings vanish")
    a_dark = (G_b * c_A - G_a * c_B) / norm
    bright = (G_a * c_A + G_b * c_B) / norm
    a_plus = (bright + c_C) / math.sqrt(2.0)
    a_minus = (bright - c_C) / math.sqrt(2.0)
    return a_dark, a_plus, a_minus


def adiabatic_state(c_A: complex, c_C: complex, c_B: complex, G_a: float, G_b: float) -> AdiabaticState:
    a_dark, a_plus, a_minus = dark_bright_transform(c_A, c_C, c_B, G_a, G_b)
    return AdiabaticState(a_plus=complex(a_plus), a_dark=complex(a_dark), a_minus=complex(a_minus))


def dark_state_decay(g0: float, T: float, gamma_fib: float, fsr: float, gamma_cav_eff: float, t):
    """Amplitude of the slowly leaking dark state at time t"""
    if fsr < 10 * max(gamma_fib, gamma_cav_eff) or g0 < 10 * max(gamma_fib, gamma_cav_eff):
        logger.warning("⚠️ Dark-state decay formula used outside its weak-loss regime")
    exponent = (gamma_fib / (2.0 * g0 * g0 * T * T)
                + gamma_fib * g0 * g0 / (2.0 * fsr * fsr)
                + gamma_cav_eff / 8.0)
    return np.exp(-exponent * np.asarray(t, dtype=float))


def dark_population_from_three_mode(series: ReducedSeries, gtilde_a, gtilde_b) -> np.ndarray:
    """|a_D|² along a three-mode run, dark with respect to the resonant mode"""
    g_a = np.array([gtilde_a(t) for t in series.t])
    g_b = np.array([gtilde_b(t) for t in series.t])
    amps = series.amplitudes
    a_dark, _, _ = dark_bright_transform(amps[:, 0], amps[:, 2], amps[:, -1], g_a, g_b)
    return np.abs(a_dark) ** 2


def photonic_transfer(g_a_schedule, g_b_schedule, gamma_fib: float, fsr: float, n_modes: int,
                      gamma_cav: float = 0.0, t_span: Optional[Tuple[float, float]] = None,
                      n_samples: int = 201) -> float:
    """Cavity A - fiber - cavity B transfer with time-dependent cavity-fiber couplings

    The atomic state is assumed already mapped onto cavity A.
    """
    if n_modes < 1:
        raise DomainError("at least one fiber mode pair is required")
    span = _support(g_a_schedule, t_span)
    decay = _as_function(gamma_cav)
    series = _integrate_chain(g_a_schedule, g_b_schedule, decay, decay, gamma_fib, fsr,
                              n_modes, span, n_samples=n_samples)
    return float(abs(series.amplitudes[-1, -1]) ** 2)


def sincos_three_mode(g0: float, T: float, gamma_fib: float, fsr: float,
                      gamma_cav_peak: float = 0.0) -> float:
    """F of the three-mode chain under sine/cosine couplings with sin²/cos² cavity decays"""
    g_a, g_b = sincos_couplings(g0, T)
    decay_a, decay_b = sincos_cavity_decay(gamma_cav_peak, T)
    fidelity, _ = integrate_three_mode(g_a, g_b, gamma_fib, fsr, decay_a, decay_b)
    return fidelity
