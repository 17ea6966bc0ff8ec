"""
Physical configuration types and derived rates for FiberLink
Every rate is stored in angular frequency (rad/s); "/2π" values only appear at the edges
"""

import math
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from config import SPEED_OF_LIGHT, DEFAULT_FIBER_SPEED
from errors import ConfigError, DomainError, RegimeError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DB_PER_KM_TO_NEPER_PER_M = math.log(10.0) * 1e-4

# Single-cavity-mode assumption is flagged above this ratio of cavity to fiber length
CAVITY_FIBER_RATIO_WARN = 0.01


def to_hz(rate: float) -> float:
    """rad/s -> /2π Hz"""
    return rate / TWO_PI


def from_hz(freq: float) -> float:
    """/2π Hz -> rad/s"""
    return freq * TWO_PI


@dataclass(frozen=True)
class CavitySpec:
    length_l: float
    t2: float
    loss2: float = 0.0

    def __post_init__(self):
        if not self.length_l > 0:
            raise ConfigError("cavity length must be positive", field="cavity.length_l")
        if not 0 < self.t2 < 1:
            raise ConfigError("transmission must lie in (0, 1)", field="cavity.t2")
        if not 0 <= self.loss2 < 1:
            raise ConfigError("loss must lie in [0, 1)", field="cavity.loss2")
        if not self.t2 + self.loss2 < 1:
            raise ConfigError("t2 + loss2 must stay below 1", field="cavity.loss2")


@dataclass(frozen=True)
class FiberSpec:
    length_L: float
    attenuation: float = 0.0
    speed_cf: float = DEFAULT_FIBER_SPEED
    # Cavity-fiber in/out-coupling efficiency, folded into the fiber loss
    coupling_efficiency: float = 1.0

    def __post_init__(self):
        if not self.length_L > 0:
            raise ConfigError("fiber length must be positive", field="fiber.length_L")
        if self.attenuation < 0:
            raise ConfigError("attenuation must be non-negative", field="fiber.attenuation")
        if not 0 < self.speed_cf <= SPEED_OF_LIGHT:
            raise ConfigError("fiber light speed must lie in (0, c]", field="fiber.speed_cf")
        if not 0 < self.coupling_efficiency <= 1:
            raise ConfigError("coupling efficiency must lie in (0, 1]", field="fiber.coupling_efficiency")


@dataclass(frozen=True)
class AtomSpec:
    g_atc: float
    delta_at: float
    gamma_sp: float = 0.0

    def __post_init__(self):
        if not self.g_atc > 0:
            raise ConfigError("atom-cavity coupling must be positive", field="atom.g_atc")
        if self.delta_at == 0:
            raise ConfigError("detuning must be nonzero", field="atom.delta_at")
        if self.gamma_sp < 0:
            raise ConfigError("spontaneous decay must be non-negative", field="atom.gamma_sp")

    def coupling(self, omega: float) -> float:
        """Effective atom-cavity coupling G = g_atc·Ω/Δ"""
        return self.g_atc * omega / self.delta_at

    def drive_for(self, coupling: float) -> float:
        """Inverse of coupling(): the drive Ω producing a given G"""
        return coupling * self.delta_at / self.g_atc


@dataclass(frozen=True)
class SetupConfig:
    cavity: CavitySpec
    fiber: FiberSpec
    atom: AtomSpec
    # Node B defaults to a mirror of node A
    cavity_b: Optional[CavitySpec] = None

    def __post_init__(self):
        ratio = self.cavity.length_l / self.fiber.length_L
        if ratio > CAVITY_FIBER_RATIO_WARN:
            logger.warning(f"⚠️ Cavity/fiber length ratio {ratio:.3g} exceeds {CAVITY_FIBER_RATIO_WARN}; "
                           f"single cavity mode assumption is questionable")

    @property
    def node_b(self) -> CavitySpec:
        return self.cavity_b if self.cavity_b is not None else self.cavity

    @property
    def symmetric(self) -> bool:
        return self.cavity_b is None or self.cavity_b == self.cavity

    def with_length(self, length_L: float) -> 'SetupConfig':
        return replace(self, fiber=replace(self.fiber, length_L=length_L))

    def with_atom(self, **changes) -> 'SetupConfig':
        return replace(self, atom=replace(self.atom, **changes))


@dataclass(frozen=True)
class DerivedRates:
    kappa_cav: float
    gamma_cav: float
    kappa: float
    fsr_fib: float
    g_ab: float
    gamma_fib: float
    p_out: float
    p_fib: float
    p1: float
    sm_param: float
    l_eff: float
    speed_cf: float
    length_L: float
    # Node B rates; equal to node A for identical cavities
    kappa_cav_b: float = field(default=None)
    gamma_cav_b: float = field(default=None)
    kappa_b: float = field(default=None)
    g_b: float = field(default=None)
    p_out_b: float = field(default=None)

    def __post_init__(self):
        for name, source in (('kappa_cav_b', 'kappa_cav'), ('gamma_cav_b', 'gamma_cav'),
                             ('kappa_b', 'kappa'), ('g_b', 'g_ab'), ('p_out_b', 'p_out')):
            if getattr(self, name) is None:
                object.__setattr__(self, name, getattr(self, source))

    @property
    def tau(self) -> float:
        """One-way fiber travel time L/c_f"""
        return self.length_L / self.speed_cf

    @property
    def fiber_loss_exponent(self) -> float:
        """P^fib_loss = γ_fib·L/c_f"""
        return self.gamma_fib * self.length_L / self.speed_cf

    def as_hz(self) -> dict:
        """Summary in the units used for reporting"""
        return {
            'kappa_cav_hz': to_hz(self.kappa_cav),
            'gamma_cav_hz': to_hz(self.gamma_cav),
            'kappa_hz': to_hz(self.kappa),
            'fsr_fib_hz': to_hz(self.fsr_fib),
            'g_ab_hz': to_hz(self.g_ab),
            'gamma_fib_hz': to_hz(self.gamma_fib),
            'p_out': self.p_out,
            'p_fib': self.p_fib,
            'p1': self.p1,
            'sm_param': self.sm_param,
            'l_eff_m': self.l_eff,
        }


def attenuation_to_rate(X: float, cf: float) -> float:
    """Fiber amplitude-loss rate γ_fib = α·c_f for an attenuation X in dB/km"""
    if X < 0:
        raise DomainError(f"attenuation must be non-negative, got {X}")
    if cf <= 0:
        raise DomainError(f"fiber light speed must be positive, got {cf}")
    return X * DB_PER_KM_TO_NEPER_PER_M * cf


def fiber_transmission(gamma_fib: float, length_L: float, cf: float) -> float:
    """P_fib = exp(-γ_fib·L/c_f)"""
    return math.exp(-gamma_fib * length_L / cf)


def fiber_loss_rate(fiber: FiberSpec) -> float:
    """γ_fib including the cavity-fiber coupling inefficiency"""
    rate = attenuation_to_rate(fiber.attenuation, fiber.speed_cf)
    if fiber.coupling_efficiency < 1:
        rate += -math.log(fiber.coupling_efficiency) * fiber.speed_cf / fiber.length_L
    return rate


def mirror_rate(coefficient: float, length_l: float) -> float:
    """Cavity field decay through one mirror coefficient: c·T/(2l)"""
    return SPEED_OF_LIGHT * coefficient / (2.0 * length_l)


def out_coupling_probability(kappa_cav: float, gamma_cav: float) -> float:
    total = kappa_cav + gamma_cav
    return kappa_cav / total


def free_spectral_range(length_L: float, cf: float) -> float:
    return math.pi * cf / length_L


def cavity_fiber_coupling(kappa_cav: float, fsr_fib: float) -> float:
    """g = √(κ_cav·FSR/2π)"""
    return math.sqrt(kappa_cav * fsr_fib / TWO_PI)


def effective_length(kappa: float, cf: float) -> float:
    """Natural spatial photon length L_eff = c_f/κ"""
    return cf / kappa


def derive_rates(cfg: SetupConfig) -> DerivedRates:
    """Compute every secondary quantity of a setup"""
    fiber = cfg.fiber
    cf = fiber.speed_cf

    kappa_cav = mirror_rate(cfg.cavity.t2, cfg.cavity.length_l)
    gamma_cav = mirror_rate(cfg.cavity.loss2, cfg.cavity.length_l)
    kappa = 0.5 * (kappa_cav + gamma_cav)

    node_b = cfg.node_b
    kappa_cav_b = mirror_rate(node_b.t2, node_b.length_l)
    gamma_cav_b = mirror_rate(node_b.loss2, node_b.length_l)
    kappa_b = 0.5 * (kappa_cav_b + gamma_cav_b)

    fsr = free_spectral_range(fiber.length_L, cf)
    gamma_fib = fiber_loss_rate(fiber)

    p_out = out_coupling_probability(kappa_cav, gamma_cav)
    p_out_b = out_coupling_probability(kappa_cav_b, gamma_cav_b)
    p_fib = fiber_transmission(gamma_fib, fiber.length_L, cf)

    return DerivedRates(
        kappa_cav=kappa_cav,
        gamma_cav=gamma_cav,
        kappa=kappa,
        fsr_fib=fsr,
        g_ab=cavity_fiber_coupling(kappa_cav, fsr),
        gamma_fib=gamma_fib,
        p_out=p_out,
        p_fib=p_fib,
        p1=p_out * p_out_b * p_fib,
        sm_param=2.0 * kappa / fsr,
        l_eff=effective_length(kappa, cf),
        speed_cf=cf,
        length_L=fiber.length_L,
        kappa_cav_b=kappa_cav_b,
        gamma_cav_b=gamma_cav_b,
        kappa_b=kappa_b,
        g_b=cavity_fiber_coupling(kappa_cav_b, fsr),
        p_out_b=p_out_b,
    )


def emission_rate(rates: DerivedRates, g_max: float) -> float:
    """Effective atom-fiber emission rate κ_cav·(G/κ)² in the eliminated-cavity picture"""
    return rates.kappa_cav * (g_max / rates.kappa) ** 2


def photon_lengths(rates: DerivedRates, g_max: float) -> Tuple[float, float]:
    """Return (L_eff, L_ph) for a maximal atom-cavity coupling g_max"""
    if g_max <= 0:
        raise DomainError(f"g_max must be positive, got {g_max}")
    if g_max >= rates.kappa:
        raise RegimeError("g_max must stay below κ for cavity elimination", ratio=g_max / rates.kappa)
    l_eff = rates.speed_cf / rates.kappa
    l_ph = rates.speed_cf / emission_rate(rates, g_max)
    return l_eff, l_ph
