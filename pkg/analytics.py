"""
Closed-form transfer probabilities for FiberLink
Fiber trade-off, cavity-loss mitigation by adiabatic passage, L_max and cooperativity corrections
"""

import math
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from scipy.optimize import brentq, minimize_scalar

from errors import DomainError
from params import SetupConfig, derive_rates, fiber_transmission

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi

# Search bracket for L_max in meters
L_MAX_BRACKET = (0.0, 1e6)
L_MAX_XTOL = 1e-4

# Relative disagreement tolerated between closed-form and numeric optimal T
OPTIMAL_T_CHECK_RTOL = 1e-6

CAVITY_DECAY_CONVENTIONS = ('peak', 'mean')


@dataclass(frozen=True)
class AnalyticInputs:
    g0: float
    T: float
    gamma_fib: float
    fsr_fib: float
    gamma_cav_eff: float
    p_out: float
    L: float
    cf: float

    def __post_init__(self):
        if self.T <= 0:
            raise DomainError(f"pulse width must be positive, got {self.T}")
        if not 0 < self.p_out <= 1:
            raise DomainError(f"p_out must lie in (0, 1], got {self.p_out}")
        for name in ('g0', 'gamma_fib', 'fsr_fib', 'gamma_cav_eff'):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")

    @classmethod
    def from_setup(cls, cfg: SetupConfig, g_max: float, T: float,
                   convention: str = 'peak') -> 'AnalyticInputs':
        """Consistent inputs for a setup driven with maximal atom-cavity coupling g_max"""
        rates = derive_rates(cfg)
        return cls(
            g0=rates.g_ab * g_max / rates.kappa,
            T=T,
            gamma_fib=rates.gamma_fib,
            fsr_fib=rates.fsr_fib,
            gamma_cav_eff=effective_cavity_decay(rates.gamma_cav, g_max, rates.kappa, convention),
            p_out=rates.p_out,
            L=rates.length_L,
            cf=rates.speed_cf,
        )

    def f1(self) -> float:
        return f1(self.g0, self.T, self.gamma_fib, self.fsr_fib, self.gamma_cav_eff)

    def f_ap(self) -> float:
        return f_ap(self.p_out, self.gamma_fib, self.L, self.cf)


def effective_cavity_decay(gamma_cav: float, g_max: float, kappa: float,
                           convention: str = 'peak') -> float:
    """γ̃_cav seen by an atom driven to G_max: the peak value, or its sin² time average"""
    if convention not in CAVITY_DECAY_CONVENTIONS:
        raise DomainError(f"unknown cavity decay convention {convention!r}")
    peak = gamma_cav * (g_max / kappa) ** 2
    return peak if convention == 'peak' else 0.5 * peak


def f_stirap(g0: float, T: float, gamma_fib: float) -> float:
    return math.exp(-(gamma_fib / (g0 * g0 * T)) * HALF_PI)


def f_sfm(g0: float, T: float, gamma_fib: float) -> float:
    """Single-fiber-mode truncation result; ignores the off-resonant modes entirely"""
    return f_stirap(g0, T, gamma_fib)


def f_fib(g0: float, T: float, gamma_fib: float, fsr_fib: float) -> float:
    area = g0 * g0 * T
    return math.exp(-gamma_fib * HALF_PI * (1.0 / area + area / (fsr_fib * fsr_fib)))


def f_fib_opt(gamma_fib: float, L: float, cf: float) -> float:
    return fiber_transmission(gamma_fib, L, cf)


def f1_exponent(g0: float, T: float, gamma_fib: float, fsr_fib: float, gamma_cav_eff: float) -> float:
    """Positive exponent of f1"""
    area = g0 * g0 * T
    return HALF_PI * (gamma_fib / area + gamma_fib * area / (fsr_fib * fsr_fib) + 0.25 * gamma_cav_eff * T)


def f1(g0: float, T: float, gamma_fib: float, fsr_fib: float, gamma_cav_eff: float) -> float:
    return math.exp(-f1_exponent(g0, T, gamma_fib, fsr_fib, gamma_cav_eff))


def f_ap_exponent(p_out: float, gamma_fib: float, L: float, cf: float) -> float:
    """Positive exponent of f_ap, written so that P^fib_loss -> 0 never divides 0 by 0"""
    if p_out <= 0:
        raise DomainError("p_out must be positive for adiabatic passage")
    if p_out > 1:
        raise DomainError(f"p_out must not exceed 1, got {p_out}")
    loss = gamma_fib * L / cf
    if p_out == 1.0:
        return loss
    return math.sqrt(loss * loss + loss * (math.pi ** 2 / 2.0) * (1.0 - p_out) / p_out)


def f_ap(p_out: float, gamma_fib: float, L: float, cf: float) -> float:
    return math.exp(-f_ap_exponent(p_out, gamma_fib, L, cf))


def optimal_T_numeric(gamma_fib: float, fsr_fib: float, gamma_cav_eff: float, g0: float,
                      bracket: Optional[Tuple[float, float]] = None) -> float:
    """Bounded scalar minimization of the f1 exponent over log T"""
    if bracket is None:
        center = fsr_fib / (g0 * g0)
        bracket = (center * 1e-6, center * 1e6)
    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    result = minimize_scalar(
        lambda log_t: f1_exponent(g0, math.exp(log_t), gamma_fib, fsr_fib, gamma_cav_eff),
        bounds=(lo, hi), method='bounded', options={'xatol': 1e-12, 'maxiter': 500},
    )
    return math.exp(result.x)


def optimal_T(gamma_fib: float, fsr_fib: float, gamma_cav_eff: float, g0: float,
              verify: bool = True) -> float:
    """Pulse width minimizing the f1 exponent

    The exponent is (π/2)·(a/T + b·T), so T* = √(a/b). The closed form is
    cross-checked against a bounded numeric minimization when verify is set.
    """
    if g0 <= 0 or fsr_fib <= 0:
        raise DomainError("g0 and FSR must be positive")
    a = gamma_fib / (g0 * g0)
    b = gamma_fib * g0 * g0 / (fsr_fib * fsr_fib) + 0.25 * gamma_cav_eff
    if a <= 0 or b <= 0:
        raise DomainError("unbounded optimum: losses vanish on one side of the trade-off")
    t_star = math.sqrt(a / b)

    if verify:
        t_num = optimal_T_numeric(gamma_fib, fsr_fib, gamma_cav_eff, g0,
                                  bracket=(t_star * 1e-3, t_star * 1e3))
        if abs(t_num - t_star) > OPTIMAL_T_CHECK_RTOL * t_star:
            logger.warning(f"⚠️ Closed-form optimal T {t_star:.10g} disagrees with numeric {t_num:.10g}")
    return t_star


def l_max(p_out: float, gamma_fib: float, cf: float, margin: float = 0.05) -> float:
    """Fiber length where adiabatic passage stops beating P₁ by the given margin"""
    def gap(L: float) -> float:
        return f_ap(p_out, gamma_fib, L, cf) - p_out * p_out * fiber_transmission(gamma_fib, L, cf) - margin

    lo, hi = L_MAX_BRACKET
    g_lo, g_hi = gap(lo), gap(hi)
    if not (g_lo > 0 > g_hi):
        raise DomainError(f"no crossing for p_out={p_out}, margin={margin} on [{lo}, {hi}] m")
    return brentq(gap, lo, hi, xtol=L_MAX_XTOL, maxiter=500)


def l_max_curve(p_out_values: Iterable[float], gamma_fib: float, cf: float,
                margin: float = 0.05) -> List[Tuple[float, float]]:
    """(p_out, L_max) pairs; NaN marks points with no crossing"""
    curve = []
    for p_out in p_out_values:
        try:
            curve.append((p_out, l_max(p_out, gamma_fib, cf, margin)))
        except DomainError:
            curve.append((p_out, math.nan))
    return curve


def cooperativity(g_atc: float, kappa: float, gamma_sp: float) -> float:
    """C = g_atc²/(2κ·Γ); infinite when atomic decay is switched off"""
    if kappa <= 0:
        raise DomainError("cavity linewidth must be positive")
    if gamma_sp == 0:
        return math.inf
    if gamma_sp < 0:
        raise DomainError("spontaneous decay must be non-negative")
    return g_atc * g_atc / (2.0 * kappa * gamma_sp)


def gamma_from_cooperativity(g_atc: float, kappa: float, C: float) -> float:
    """Spontaneous decay rate realizing a target cooperativity"""
    if C <= 0:
        raise DomainError("cooperativity must be positive")
    if math.isinf(C):
        return 0.0
    return g_atc * g_atc / (2.0 * kappa * C)


def retrieval_factor(C: float) -> float:
    if math.isinf(C):
        return 1.0
    return C / (0.25 + C)


def p_out_tilde(C: float, p_out: float) -> float:
    return retrieval_factor(C) * p_out


def p1_tilde(C: float, p1: float) -> float:
    return retrieval_factor(C) ** 2 * p1
