"""
Classical drive schedules for FiberLink
Wave-packet shaping, adiabatic passage with Gaussian pulses, and sine/cosine drives
"""

import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from errors import ConfigError, DomainError, RegimeError
from params import AtomSpec, DerivedRates, emission_rate

logger = logging.getLogger(__name__)

# Sender population left when the WPS plateau is cut: exp(-γ_max·t_off)
WPS_TRUNCATION = 1e-6
# Elimination regime required by wave-packet shaping
WPS_REGIME_RATIO = 0.2
# Gaussian support half-width in units of T
DEFAULT_GAUSS_CUTOFF = 5.0


class ProtocolTag(str, Enum):
    WPS = 'wps'
    AP_GAUSS = 'ap'
    SINCOS = 'sincos'
    PHOTONIC = 'photonic'


class DriveLevel(str, Enum):
    # Ω_{A/B}(t), converted to G = g_atc·Ω/Δ by the integrators
    DRIVE = 'drive'
    # Effective couplings used directly by reduced models
    COUPLING = 'coupling'


@dataclass(frozen=True)
class DriveSchedule:
    omega_a: Callable[[float], float]
    omega_b: Callable[[float], float]
    t_start: float
    t_end: float
    protocol_tag: ProtocolTag
    params: Dict[str, Any] = field(default_factory=dict)
    level: DriveLevel = DriveLevel.DRIVE

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise DomainError(f"schedule window is empty: [{self.t_start}, {self.t_end}]")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def drives(self, t: float) -> Tuple[float, float]:
        return self.omega_a(t), self.omega_b(t)

    def sample(self, times) -> Tuple[np.ndarray, np.ndarray]:
        times = np.asarray(times, dtype=float)
        return (np.array([self.omega_a(t) for t in times]),
                np.array([self.omega_b(t) for t in times]))


class _Windowed:
    """Evaluator that is zero outside [t_lo, t_hi]"""

    def __init__(self, t_lo: float, t_hi: float):
        self.t_lo = t_lo
        self.t_hi = t_hi

    def __call__(self, t: float) -> float:
        if t < self.t_lo or t > self.t_hi:
            return 0.0
        return self.value(t)

    def value(self, t: float) -> float:
        raise NotImplementedError


class GaussianDrive(_Windowed):
    def __init__(self, peak: float, center: float, width: float, t_lo: float, t_hi: float):
        super().__init__(t_lo, t_hi)
        self.peak = peak
        self.center = center
        self.width = width

    def value(self, t: float) -> float:
        x = (t - self.center) / self.width
        return self.peak * math.exp(-x * x)


class SincosDrive(_Windowed):
    def __init__(self, peak: float, T: float, use_sine: bool):
        super().__init__(0.0, 0.5 * math.pi * T)
        self.peak = peak
        self.T = T
        self.use_sine = use_sine

    def value(self, t: float) -> float:
        phase = t / self.T
        return self.peak * (math.sin(phase) if self.use_sine else math.cos(phase))


def wps_rate(t: float, gamma_max: float, t_off: float) -> float:
    """Sender emission rate γ_A(t): rising edge for t < 0, plateau on [0, t_off], zero after"""
    if t > t_off:
        return 0.0
    if t >= 0:
        return gamma_max
    e = math.exp(gamma_max * t)
    return gamma_max * e / (2.0 - e)


class WpsDrive(_Windowed):
    """Ω(t) realizing the time-reversal-symmetric emission rate of one node

    The sender follows γ_A(t); the receiver follows γ_A(t_mirror - t).
    """

    def __init__(self, gamma_max: float, t_off: float, scale: float,
                 t_lo: float, t_hi: float, t_mirror: Optional[float] = None):
        super().__init__(t_lo, t_hi)
        self.gamma_max = gamma_max
        self.t_off = t_off
        self.scale = scale
        self.t_mirror = t_mirror

    def rate(self, t: float) -> float:
        arg = t if self.t_mirror is None else self.t_mirror - t
        return wps_rate(arg, self.gamma_max, self.t_off)

    def value(self, t: float) -> float:
        return self.scale * math.sqrt(self.rate(t))


def wps_cutoff(gamma_max: float) -> float:
    """Plateau length after which the sender keeps less than WPS_TRUNCATION of its population"""
    return -math.log(WPS_TRUNCATION) / gamma_max


def wps_schedule(rates: DerivedRates, atom: AtomSpec, g_max: float,
                 launch_offset: float = 0.0) -> DriveSchedule:
    """Wave-packet-shaping drives for a maximal atom-cavity coupling g_max

    launch_offset delays the receiver's mirrored profile beyond the fiber travel time.
    """
    ratio = g_max / rates.kappa
    if g_max <= 0:
        raise DomainError(f"g_max must be positive, got {g_max}")
    if ratio >= WPS_REGIME_RATIO:
        raise RegimeError("wave-packet shaping needs G_max well below κ", ratio=ratio)

    gamma_max = emission_rate(rates, g_max)
    t_off = wps_cutoff(gamma_max)
    tau = rates.tau
    t_mirror = tau + launch_offset
    t_start = -t_off
    t_end = t_mirror + t_off

    delta = abs(atom.delta_at)
    scale_a = delta * rates.kappa / (atom.g_atc * math.sqrt(rates.kappa_cav))
    scale_b = delta * rates.kappa_b / (atom.g_atc * math.sqrt(rates.kappa_cav_b))
    sender = WpsDrive(gamma_max, t_off, scale_a, t_start, t_end)
    # Receiver must reproduce the same γ_max through its own cavity
    gamma_max_b = rates.kappa_cav_b * (g_max / rates.kappa_b) ** 2
    receiver = WpsDrive(gamma_max_b, wps_cutoff(gamma_max_b), scale_b, t_start, t_end, t_mirror=t_mirror)

    logger.debug(f"WPS schedule: γ_max={gamma_max:.4g} rad/s, t_off={t_off:.4g} s, τ={tau:.4g} s")
    return DriveSchedule(
        omega_a=sender,
        omega_b=receiver,
        t_start=t_start,
        t_end=t_end,
        protocol_tag=ProtocolTag.WPS,
        params={'g_max': g_max, 'gamma_max': gamma_max, 't_off': t_off, 'tau': tau,
                'launch_offset': launch_offset, 'omega_max': atom.drive_for(g_max)},
    )


def ap_gaussian_schedule(omega_max: float, T: float, x_spl: float,
                         cutoff: float = DEFAULT_GAUSS_CUTOFF) -> DriveSchedule:
    """Counterintuitive Gaussian pulse pair: receiver at t=0, sender at τ_spl = x_spl·T"""
    if T <= 0:
        raise DomainError(f"pulse width must be positive, got {T}")
    if x_spl <= 0:
        raise DomainError(f"pulse separation must be positive, got {x_spl}")
    if omega_max < 0:
        raise DomainError("drive amplitude must be non-negative")
    tau_spl = x_spl * T
    t_start = -cutoff * T
    t_end = tau_spl + cutoff * T
    return DriveSchedule(
        omega_a=GaussianDrive(omega_max, tau_spl, T, t_start, t_end),
        omega_b=GaussianDrive(omega_max, 0.0, T, t_start, t_end),
        t_start=t_start,
        t_end=t_end,
        protocol_tag=ProtocolTag.AP_GAUSS,
        params={'omega_max': omega_max, 'T': T, 'x_spl': x_spl, 'tau_spl': tau_spl, 'cutoff': cutoff},
    )


def sincos_couplings(g0: float, T: float) -> Tuple[Callable[[float], float], Callable[[float], float]]:
    """Bare g̃_A = g0·sin(t/T), g̃_B = g0·cos(t/T) on [0, πT/2]"""
    return SincosDrive(g0, T, use_sine=True), SincosDrive(g0, T, use_sine=False)


def sincos_schedule(g0_eff: float, T: float, rates: Optional[DerivedRates] = None,
                    atom: Optional[AtomSpec] = None) -> DriveSchedule:
    """Sine/cosine transfer on [0, πT/2]

    With rates and atom the effective couplings are mapped back to drives
    through g̃ = g·G/κ and G = g_atc·Ω/Δ; otherwise the schedule carries the
    effective couplings themselves.
    """
    if T <= 0:
        raise DomainError(f"pulse width must be positive, got {T}")
    t_end = 0.5 * math.pi * T
    params = {'g0': g0_eff, 'T': T}
    if rates is None or atom is None:
        g_a, g_b = sincos_couplings(g0_eff, T)
        return DriveSchedule(g_a, g_b, 0.0, t_end, ProtocolTag.SINCOS, params, level=DriveLevel.COUPLING)

    delta = abs(atom.delta_at)
    omega_a = delta * rates.kappa * g0_eff / (atom.g_atc * rates.g_ab)
    omega_b = delta * rates.kappa_b * g0_eff / (atom.g_atc * rates.g_b)
    params['omega_max'] = omega_a
    return DriveSchedule(
        omega_a=SincosDrive(omega_a, T, use_sine=True),
        omega_b=SincosDrive(omega_b, T, use_sine=False),
        t_start=0.0,
        t_end=t_end,
        protocol_tag=ProtocolTag.SINCOS,
        params=params,
    )


def photonic_schedule(g_max: float, T: float) -> DriveSchedule:
    """Time-dependent cavity-fiber couplings g_A = g·sin(t/T), g_B = g·cos(t/T)"""
    if T <= 0:
        raise DomainError(f"pulse width must be positive, got {T}")
    g_a, g_b = sincos_couplings(g_max, T)
    return DriveSchedule(g_a, g_b, 0.0, 0.5 * math.pi * T, ProtocolTag.PHOTONIC,
                         {'g_max': g_max, 'T': T}, level=DriveLevel.COUPLING)


@dataclass(frozen=True)
class EffectiveCouplings:
    """Time-resolved views of an Ω-level schedule"""
    sched: DriveSchedule
    rates: DerivedRates
    atom: AtomSpec

    def G(self, t: float) -> Tuple[float, float]:
        omega_a, omega_b = self.sched.drives(t)
        return self.atom.coupling(omega_a), self.atom.coupling(omega_b)

    def gtilde(self, t: float) -> Tuple[float, float]:
        G_a, G_b = self.G(t)
        return self.rates.g_ab * G_a / self.rates.kappa, self.rates.g_b * G_b / self.rates.kappa_b

    def emission(self, t: float) -> Tuple[float, float]:
        """γ_{A/B}(t) = κ_cav·(G/κ)²"""
        G_a, G_b = self.G(t)
        return (self.rates.kappa_cav * (G_a / self.rates.kappa) ** 2,
                self.rates.kappa_cav_b * (G_b / self.rates.kappa_b) ** 2)


def effective_couplings(sched: DriveSchedule, rates: DerivedRates, atom: AtomSpec) -> EffectiveCouplings:
    if sched.level is not DriveLevel.DRIVE:
        raise DomainError("effective couplings need a drive-level schedule")
    return EffectiveCouplings(sched, rates, atom)


def build_schedule(protocol: Dict[str, Any], rates: DerivedRates, atom: AtomSpec) -> DriveSchedule:
    """Schedule from a config `protocol` block: {"type": "wps" | "ap" | "sincos", ...}"""
    try:
        return _schedule_from_block(protocol, rates, atom)
    except KeyError as e:
        raise ConfigError(f"protocol block is missing {e.args[0]!r}", field=f"protocol.{e.args[0]}")


def _schedule_from_block(protocol: Dict[str, Any], rates: DerivedRates, atom: AtomSpec) -> DriveSchedule:
    kind = str(protocol.get('type', 'ap')).lower()
    if kind == ProtocolTag.WPS.value:
        g_max = protocol.get('g_max')
        if g_max is None:
            g_max = atom.coupling(protocol['omega_ratio'] * atom.delta_at)
        return wps_schedule(rates, atom, abs(g_max), protocol.get('launch_offset', 0.0))
    if kind == ProtocolTag.AP_GAUSS.value:
        omega_max = protocol.get('omega_max')
        if omega_max is None:
            omega_max = protocol['omega_ratio'] * abs(atom.delta_at)
        return ap_gaussian_schedule(omega_max, protocol['T'], protocol.get('x_spl', 1.5),
                                    protocol.get('cutoff', DEFAULT_GAUSS_CUTOFF))
    if kind == ProtocolTag.SINCOS.value:
        return sincos_schedule(protocol['g0'], protocol['T'], rates, atom)
    raise ConfigError(f"unknown protocol type {kind!r}", field="protocol.type")
