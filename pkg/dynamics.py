"""
Full single-excitation dynamics for FiberLink
Two driven atoms, two cavities and 2N+1 fiber modes with every loss channel tracked in a ledger
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.integrate import solve_ivp

from config import ABS_TOL, MODE_CAP, REL_TOL
from errors import ConfigError, ConvergenceError, DomainError, IntegrationError
from params import AtomSpec, DerivedRates, SetupConfig, derive_rates
from protocols import DriveLevel, DriveSchedule

logger = logging.getLogger(__name__)

LOSS_CHANNELS = ('cavity_a', 'cavity_b', 'fiber', 'atom_a', 'atom_b')
FRAMES = ('auto', 'lab', 'rotating')

# Above this many fiber modes the rotating frame is used unless a frame is forced
ROTATING_FRAME_MODES = 32
# Lab-frame step bound: dt·N·FSR < LAB_STEP_PHASE
LAB_STEP_PHASE = 0.5
# Settling window grows margin -> 2x -> 4x -> 8x
MAX_MARGIN_EXTENSIONS = 3


@dataclass(frozen=True)
class SimConfig:
    n_modes: int = 8
    rel_tol: float = REL_TOL
    abs_tol: float = ABS_TOL
    t_margin: Optional[float] = None
    settle_eps: float = 1e-6
    n_samples: int = 401
    method: str = 'DOP853'
    frame: str = 'auto'
    # Replaces the (-1)^n factor on node B's mode couplings by +1 when False
    alternating_signs: bool = True
    mode_cap: int = MODE_CAP
    # Fiber modes -k..k written to the amplitude series
    track_modes: int = 3

    def __post_init__(self):
        if self.n_modes < 1:
            raise ConfigError("at least one fiber mode pair is required", field="sim.n_modes")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ConfigError("integrator tolerances must be positive", field="sim.rel_tol")
        if self.settle_eps <= 0:
            raise ConfigError("settle threshold must be positive", field="sim.settle_eps")
        if self.t_margin is not None and self.t_margin < 0:
            raise ConfigError("settling margin must be non-negative", field="sim.t_margin")
        if self.n_samples < 2:
            raise ConfigError("need at least two output samples", field="sim.n_samples")
        if self.frame not in FRAMES:
            raise ConfigError(f"frame must be one of {FRAMES}", field="sim.frame")

    def with_modes(self, n_modes: int) -> 'SimConfig':
        return replace(self, n_modes=n_modes)

    def use_rotating_frame(self) -> bool:
        if self.frame == 'auto':
            return self.n_modes > ROTATING_FRAME_MODES
        return self.frame == 'rotating'


@dataclass(frozen=True)
class AmplitudeState:
    c_A: complex
    c_a: complex
    c_fiber: np.ndarray
    c_b: complex
    c_B: complex

    @property
    def n_modes(self) -> int:
        return (len(self.c_fiber) - 1) // 2

    @classmethod
    def initial(cls, n_modes: int) -> 'AmplitudeState':
        return cls(1.0 + 0j, 0j, np.zeros(2 * n_modes + 1, dtype=complex), 0j, 0j)

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> 'AmplitudeState':
        vec = np.asarray(vec, dtype=complex)
        return cls(vec[0], vec[1], vec[2:-2].copy(), vec[-2], vec[-1])

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.c_A, self.c_a], self.c_fiber, [self.c_b, self.c_B])).astype(complex)

    def mode(self, n: int) -> complex:
        return self.c_fiber[n + self.n_modes]

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.to_vector()) ** 2))

    @property
    def photonic_population(self) -> float:
        return float(abs(self.c_a) ** 2 + abs(self.c_b) ** 2 + np.sum(np.abs(self.c_fiber) ** 2))


@dataclass
class LossLedger:
    cavity_a: float = 0.0
    cavity_b: float = 0.0
    fiber: float = 0.0
    atom_a: float = 0.0
    atom_b: float = 0.0

    @classmethod
    def from_array(cls, values) -> 'LossLedger':
        return cls(*[float(np.real(v)) for v in values])

    @property
    def total(self) -> float:
        return self.cavity_a + self.cavity_b + self.fiber + self.atom_a + self.atom_b

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in LOSS_CHANNELS}


@dataclass
class TimeSeries:
    t: np.ndarray
    # One row per sample in the [A, a, c_-N..c_N, b, B] layout
    amplitudes: np.ndarray
    norm: np.ndarray
    losses: np.ndarray

    def state_at(self, index: int) -> AmplitudeState:
        return AmplitudeState.from_vector(self.amplitudes[index])

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class SimResult:
    fidelity: float
    series: TimeSeries
    loss_ledger: LossLedger
    n_modes_used: int
    converged: bool
    residual: float = 0.0
    budget_error: float = 0.0
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def final_state(self) -> AmplitudeState:
        return self.series.state_at(-1)

    def summary(self) -> Dict[str, Any]:
        return {
            'fidelity': self.fidelity,
            'n_modes_used': self.n_modes_used,
            'converged': self.converged,
            'residual': self.residual,
            'budget_error': self.budget_error,
            **{f'loss_{k}': v for k, v in self.loss_ledger.as_dict().items()},
        }


def mode_numbers(n_modes: int) -> np.ndarray:
    return np.arange(-n_modes, n_modes + 1)


def mode_signs(n_modes: int, alternating: bool = True) -> np.ndarray:
    """(-1)^n coupling signs of node B to fiber mode n"""
    if not alternating:
        return np.ones(2 * n_modes + 1)
    return np.where(mode_numbers(n_modes) % 2 == 0, 1.0, -1.0)


def mode_inflow(c_a: complex, c_b: complex, g_a: float, g_b: float, n_modes: int,
                alternating_signs: bool = True) -> np.ndarray:
    """Source term g_A·c_a + (-1)^n·g_B·c_b driving each fiber mode"""
    return g_a * c_a + mode_signs(n_modes, alternating_signs) * g_b * c_b


def field_matrix(g_a: float, g_b: float, fsr: float, n_modes: int,
                 alternating_signs: bool = True) -> np.ndarray:
    """Real-symmetric cavity-fiber-cavity coupling matrix in the (a, b, c_-N..c_N) order"""
    size = 2 * n_modes + 3
    h = np.zeros((size, size))
    h[2:, 2:] = np.diag(mode_numbers(n_modes) * fsr)
    h[0, 2:] = h[2:, 0] = g_a
    signed = mode_signs(n_modes, alternating_signs) * g_b
    h[1, 2:] = h[2:, 1] = signed
    return h


def default_margin(rates: DerivedRates) -> float:
    """Settling time after the drives end: 10/κ plus two fiber round trips"""
    return 10.0 / min(rates.kappa, rates.kappa_b) + 4.0 * rates.tau


class _EquationsOfMotion:
    """Right-hand side of the amplitude equations plus the five ledger accumulators"""

    def __init__(self, rates: DerivedRates, atom: AtomSpec, sched: DriveSchedule,
                 n_modes: int, alternating_signs: bool, atomic_decay: bool, rotating: bool):
        self.atom = atom
        self.sched = sched
        self.size = 2 * n_modes + 5
        self.omega = mode_numbers(n_modes) * rates.fsr_fib
        self.signs = mode_signs(n_modes, alternating_signs)
        self.g_a = rates.g_ab
        self.g_b = rates.g_b
        self.gamma_cav_a = rates.gamma_cav
        self.gamma_cav_b = rates.gamma_cav_b
        self.gamma_fib = rates.gamma_fib
        self.gamma_sp = atom.gamma_sp
        self.atomic_decay = atomic_decay
        self.rotating = rotating
        self.max_frequency = n_modes * rates.fsr_fib

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.omega * t)

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        m = self.size
        c_A, c_a, c_b, c_B = y[0], y[1], y[m - 2], y[m - 1]
        fib = y[2:m - 2]

        omega_a, omega_b = self.sched.drives(t)
        G_A = self.atom.coupling(omega_a)
        G_B = self.atom.coupling(omega_b)

        if self.rotating:
            phase = self.phases(t)
            lab = phase * fib
        else:
            lab = fib

        dy = np.empty(m + len(LOSS_CHANNELS), dtype=complex)
        dy[0] = -1j * G_A * c_a
        dy[1] = -1j * (G_A * c_A + self.g_a * lab.sum()) - 0.5 * self.gamma_cav_a * c_a
        inflow = self.g_a * c_a + self.signs * (self.g_b * c_b)
        if self.rotating:
            dy[2:m - 2] = -1j * np.conj(phase) * inflow - 0.5 * self.gamma_fib * fib
        else:
            dy[2:m - 2] = -1j * (self.omega * fib + inflow) - 0.5 * self.gamma_fib * fib
        dy[m - 2] = -1j * (G_B * c_B + self.g_b * np.dot(self.signs, lab)) - 0.5 * self.gamma_cav_b * c_b
        dy[m - 1] = -1j * G_B * c_b

        dy[m] = self.gamma_cav_a * abs(c_a) ** 2
        dy[m + 1] = self.gamma_cav_b * abs(c_b) ** 2
        dy[m + 2] = self.gamma_fib * np.sum(np.abs(fib) ** 2)
        if self.atomic_decay:
            decay_a = self.gamma_sp * (omega_a / self.atom.delta_at) ** 2
            decay_b = self.gamma_sp * (omega_b / self.atom.delta_at) ** 2
            dy[0] -= 0.5 * decay_a * c_A
            dy[m - 1] -= 0.5 * decay_b * c_B
            dy[m + 3] = decay_a * abs(c_A) ** 2
            dy[m + 4] = decay_b * abs(c_B) ** 2
        else:
            dy[m + 3] = 0.0
            dy[m + 4] = 0.0
        return dy

    def to_lab(self, t: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Amplitude rows in the lab frame for samples (t, y) with y of shape (samples, size)"""
        amps = np.array(y[:, :self.size], dtype=complex)
        if self.rotating:
            amps[:, 2:self.size - 2] *= np.exp(-1j * np.outer(t, self.omega))
        return amps


def _solve_segment(eom, t0: float, t1: float, y0: np.ndarray,
                   sim: SimConfig, n_eval: int, max_step: float):
    t_eval = np.linspace(t0, t1, max(n_eval, 2))
    sol = solve_ivp(eom, (t0, t1), y0, method=sim.method, t_eval=t_eval,
                    rtol=sim.rel_tol, atol=sim.abs_tol, max_step=max_step)
    if sol.status < 0:
        t_reached = float(sol.t[-1]) if len(sol.t) else t0
        state = sol.y[:eom.size, -1] if sol.y.size else y0[:eom.size]
        raise IntegrationError(f"integrator failed: {sol.message}", t_reached=t_reached, state=state)
    return sol


def _photonic(y: np.ndarray, size: int) -> float:
    return float(np.sum(np.abs(y[1:size - 1]) ** 2))


def evolve(eom, sched: DriveSchedule, sim: SimConfig, rates: DerivedRates, atomic_decay: bool) -> SimResult:
    """Run an equations-of-motion object from |1_A> until the field settles

    eom exposes size, rotating, max_frequency, to_lab() and the right-hand side;
    its amplitude layout starts with atom A, ends with atom B and keeps the
    photonic amplitudes in between, followed by the five ledger accumulators.
    """
    rotating = eom.rotating
    m = eom.size
    max_step = np.inf if rotating or eom.max_frequency <= 0 else LAB_STEP_PHASE / eom.max_frequency

    y0 = np.zeros(m + len(LOSS_CHANNELS), dtype=complex)
    y0[0] = 1.0
    margin = sim.t_margin if sim.t_margin is not None else default_margin(rates)
    t_end = sched.t_end + margin

    logger.debug(f"Integrating {sched.protocol_tag.value} with N={sim.n_modes} "
                 f"({'rotating' if rotating else 'lab'} frame) on [{sched.t_start:.4g}, {t_end:.4g}] s")
    sol = _solve_segment(eom, sched.t_start, t_end, y0, sim, sim.n_samples, max_step)
    times: List[np.ndarray] = [sol.t]
    rows: List[np.ndarray] = [sol.y.T]
    nfev = sol.nfev

    # Field can only drain through a loss channel; without one, waiting longer is pointless
    lossy_field = max(rates.gamma_cav, rates.gamma_cav_b, rates.gamma_fib) > 0
    extensions = 0
    extension = margin
    y_last = sol.y[:, -1]
    while (_photonic(y_last, m) >= sim.settle_eps and lossy_field
           and extensions < MAX_MARGIN_EXTENSIONS and extension > 0):
        t0 = t_end
        t_end = t0 + extension
        seg = _solve_segment(eom, t0, t_end, y_last, sim, max(sim.n_samples // 8, 2), max_step)
        times.append(seg.t[1:])
        rows.append(seg.y.T[1:])
        nfev += seg.nfev
        y_last = seg.y[:, -1]
        extensions += 1
        extension *= 2.0

    t_all = np.concatenate(times)
    y_all = np.vstack(rows)
    amps = eom.to_lab(t_all, y_all)
    losses = np.real(y_all[:, m:])

    residual_field = _photonic(y_last, m)
    converged = residual_field < sim.settle_eps
    if not converged:
        logger.warning(f"⚠️ Field not settled after {extensions} extensions: "
                       f"residual photonic population {residual_field:.3g}")

    ledger = LossLedger.from_array(y_last[m:])
    fidelity = float(abs(y_last[m - 1]) ** 2)
    residual = float(np.sum(np.abs(y_last[:m - 1]) ** 2))
    budget_error = abs(fidelity + ledger.total + residual - 1.0)
    if budget_error > 10.0 * max(sim.rel_tol, sim.abs_tol):
        logger.warning(f"⚠️ Probability budget off by {budget_error:.3g}")

    series = TimeSeries(
        t=t_all,
        amplitudes=amps,
        norm=np.sum(np.abs(amps) ** 2, axis=1),
        losses=losses,
    )
    return SimResult(
        fidelity=fidelity,
        series=series,
        loss_ledger=ledger,
        n_modes_used=sim.n_modes,
        converged=converged,
        residual=residual,
        budget_error=budget_error,
        meta={'frame': 'rotating' if rotating else 'lab', 'nfev': int(nfev),
              'extensions': extensions, 't_final': float(t_end), 'atomic_decay': atomic_decay},
    )


def _integrate(cfg: SetupConfig, sched: DriveSchedule, sim: SimConfig, atomic_decay: bool) -> SimResult:
    if sched.level is not DriveLevel.DRIVE:
        raise DomainError("full dynamics needs a drive-level schedule (Ω_A, Ω_B)")
    rates = derive_rates(cfg)
    eom = _EquationsOfMotion(rates, cfg.atom, sched, sim.n_modes, sim.alternating_signs,
                             atomic_decay, sim.use_rotating_frame())
    return evolve(eom, sched, sim, rates, atomic_decay)


def integrate_full(cfg: SetupConfig, sched: DriveSchedule, sim: SimConfig) -> SimResult:
    """Evolve |1_A> under the drives without atomic decay; F = |c_B|² once the field has settled"""
    return _integrate(cfg, sched, sim, atomic_decay=False)


def integrate_full_with_atomic_decay(cfg: SetupConfig, sched: DriveSchedule, sim: SimConfig) -> SimResult:
    """As integrate_full, plus the drive-induced spontaneous decay Γ·(Ω/Δ)² of both atoms"""
    return _integrate(cfg, sched, sim, atomic_decay=cfg.atom.gamma_sp > 0)


def converge_modes(cfg: SetupConfig, sched: DriveSchedule, sim: SimConfig,
                   delta_tol: float = 1e-4) -> SimResult:
    """Double the fiber mode count until F changes by less than delta_tol"""
    if delta_tol <= 0:
        raise DomainError("delta_tol must be positive")
    n = sim.n_modes
    previous = integrate_full_with_atomic_decay(cfg, sched, sim.with_modes(n))
    history = [(n, previous.fidelity)]
    while True:
        n *= 2
        if n > sim.mode_cap:
            raise ConvergenceError(f"fiber modes exceeded cap {sim.mode_cap} without convergence "
                                   f"(last F values {[round(f, 8) for _, f in history[-2:]]})")
        current = integrate_full_with_atomic_decay(cfg, sched, sim.with_modes(n))
        history.append((n, current.fidelity))
        delta = abs(current.fidelity - previous.fidelity)
        logger.debug(f"N={n}: F={current.fidelity:.8f} (ΔF={delta:.2e})")
        if delta < delta_tol:
            current.meta['mode_history'] = history
            return current
        previous = current


def transfer_probability(cfg: SetupConfig, sched: DriveSchedule, sim: SimConfig,
                         delta_tol: Optional[float] = None) -> float:
    """F alone; converges the mode count when delta_tol is given"""
    if delta_tol is None:
        return integrate_full_with_atomic_decay(cfg, sched, sim).fidelity
    return converge_modes(cfg, sched, sim, delta_tol).fidelity
