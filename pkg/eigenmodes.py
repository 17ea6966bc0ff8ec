"""
Hybrid cavity-fiber-cavity eigenmodes for FiberLink
Diagonalizes the field sector and re-runs the transfer with atoms coupled to hybrid modes
"""

import math
import logging
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from errors import DomainError
from params import AtomSpec, DerivedRates, SetupConfig, derive_rates
from protocols import DriveLevel, DriveSchedule
from dynamics import LOSS_CHANNELS, SimConfig, SimResult, evolve, field_matrix

logger = logging.getLogger(__name__)

# Numeric transform must be unitary to this accuracy
UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class HybridModes:
    frequencies: np.ndarray
    cavity_content: np.ndarray
    fiber_content: np.ndarray
    decay: np.ndarray
    # Vᵀ·diag(γ)·V: hybrid-mode damping including the cross terms between modes
    damping: np.ndarray
    # Columns are hybrid modes, rows follow (a, b, c_-N..c_N)
    transform: np.ndarray
    n_modes: int

    @property
    def coupling_a(self) -> np.ndarray:
        """Overlap of each hybrid mode with cavity a"""
        return self.transform[0]

    @property
    def coupling_b(self) -> np.ndarray:
        return self.transform[1]

    def rows(self) -> List[Dict[str, float]]:
        return [
            {'index': k, 'frequency': float(w), 'cavity_content': float(cc), 'decay': float(g)}
            for k, (w, cc, g) in enumerate(zip(self.frequencies, self.cavity_content, self.decay))
        ]


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest component is positive"""
    fixed = vectors.copy()
    for k in range(fixed.shape[1]):
        pivot = np.argmax(np.abs(fixed[:, k]))
        if fixed[pivot, k] < 0:
            fixed[:, k] *= -1.0
    return fixed


def site_loss_rates(rates: DerivedRates, n_modes: int) -> np.ndarray:
    """Energy decay rates in the (a, b, c_-N..c_N) order"""
    return np.concatenate(([rates.gamma_cav, rates.gamma_cav_b], np.full(2 * n_modes + 1, rates.gamma_fib)))


def modes_from_rates(rates: DerivedRates, n_modes: int, alternating_signs: bool = True) -> HybridModes:
    if n_modes < 1:
        raise DomainError("at least one fiber mode pair is required")
    h = field_matrix(rates.g_ab, rates.g_b, rates.fsr_fib, n_modes, alternating_signs)
    # eigh returns an orthonormal set inside degenerate subspaces
    frequencies, vectors = np.linalg.eigh(h)
    vectors = _fix_phases(vectors)

    defect = np.max(np.abs(vectors.T @ vectors - np.eye(len(frequencies))))
    if defect > UNITARITY_TOL:
        logger.warning(f"⚠️ Hybrid transform deviates from unitarity by {defect:.3g}")

    cavity_content = vectors[0] ** 2 + vectors[1] ** 2
    fiber_content = 1.0 - cavity_content
    site_decay = site_loss_rates(rates, n_modes)
    damping = vectors.T @ (site_decay[:, None] * vectors)
    decay = np.diag(damping).copy()
    return HybridModes(
        frequencies=frequencies,
        cavity_content=cavity_content,
        fiber_content=fiber_content,
        decay=decay,
        damping=damping,
        transform=vectors,
        n_modes=n_modes,
    )


def diagonalize_field_sector(cfg: SetupConfig, n_modes: int) -> HybridModes:
    """Hybrid modes of two cavities coupled through fiber modes -N..N"""
    return modes_from_rates(derive_rates(cfg), n_modes)


def analytic_three_mode_eigs(g: float, fsr: float) -> np.ndarray:
    """Eigenfrequencies {0, ±√2·g, ±√(4g² + FSR²)} for one fiber mode pair, sorted"""
    if g < 0 or fsr < 0:
        raise DomainError("coupling and FSR must be non-negative")
    inner = math.sqrt(2.0) * g
    outer = math.sqrt(4.0 * g * g + fsr * fsr)
    return np.array(sorted([-outer, -inner, 0.0, inner, outer]))


def transform_matrix_n1(g: float, fsr: float) -> np.ndarray:
    """Normalized hybrid eigenvectors for N=1 as columns in the (a, b, c_-1, c_0, c_+1) order

    Columns follow the ascending eigenfrequencies of analytic_three_mode_eigs.
    The even cavity combination couples to c_0 only, the odd one to c_±1 only.
    """
    if g <= 0 or fsr <= 0:
        raise DomainError("coupling and FSR must be positive")
    inner = math.sqrt(2.0) * g
    outer = math.sqrt(4.0 * g * g + fsr * fsr)
    columns = []
    for w in (-outer, -inner, 0.0, inner, outer):
        if w == 0.0:
            vec = np.array([fsr, -fsr, 2.0 * g, 0.0, -2.0 * g])
        elif abs(w) == inner:
            vec = np.array([1.0, 1.0, 0.0, w / g, 0.0])
        else:
            vec = np.array([1.0, -1.0, 2.0 * g / (w + fsr), 0.0, 2.0 * g / (w - fsr)])
        columns.append(vec / np.linalg.norm(vec))
    return np.column_stack(columns)


class _HybridEquations:
    """Atoms coupled to hybrid modes; losses mix the modes through the damping matrix"""

    def __init__(self, modes: HybridModes, rates: DerivedRates, atom: AtomSpec, sched: DriveSchedule,
                 atomic_decay: bool, rotating: bool):
        self.modes = modes
        self.atom = atom
        self.sched = sched
        self.omega = modes.frequencies
        self.u_a = modes.coupling_a
        self.u_b = modes.coupling_b
        self.half_damping = 0.5 * modes.damping
        self.transform = modes.transform
        self.gamma_cav_a = rates.gamma_cav
        self.gamma_cav_b = rates.gamma_cav_b
        self.gamma_fib = rates.gamma_fib
        self.size = len(modes.frequencies) + 2
        self.gamma_sp = atom.gamma_sp
        self.atomic_decay = atomic_decay
        self.rotating = rotating
        self.max_frequency = float(np.max(np.abs(modes.frequencies)))

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        m = self.size
        c_A, c_B = y[0], y[m - 1]
        h = y[1:m - 1]

        omega_a, omega_b = self.sched.drives(t)
        G_A = self.atom.coupling(omega_a)
        G_B = self.atom.coupling(omega_b)

        if self.rotating:
            phase = np.exp(-1j * self.omega * t)
            lab = phase * h
        else:
            lab = h

        dy = np.empty(m + len(LOSS_CHANNELS), dtype=complex)
        dy[0] = -1j * G_A * np.dot(self.u_a, lab)
        source = G_A * self.u_a * c_A + G_B * self.u_b * c_B
        if self.rotating:
            dy[1:m - 1] = np.conj(phase) * (-1j * source - self.half_damping @ lab)
        else:
            dy[1:m - 1] = -1j * (self.omega * h + source) - self.half_damping @ h
        dy[m - 1] = -1j * G_B * np.dot(self.u_b, lab)

        # Ledger from the cavity and fiber amplitudes
        site = self.transform @ lab
        dy[m] = self.gamma_cav_a * abs(site[0]) ** 2
        dy[m + 1] = self.gamma_cav_b * abs(site[1]) ** 2
        dy[m + 2] = self.gamma_fib * np.sum(np.abs(site[2:]) ** 2)
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
        """Rows in the [A, a, c_-N..c_N, b, B] layout of the full model"""
        m = self.size
        h = np.array(y[:, 1:m - 1], dtype=complex)
        if self.rotating:
            h *= np.exp(-1j * np.outer(t, self.omega))
        field = h @ self.modes.transform.T
        return np.column_stack([y[:, 0], field[:, 0], field[:, 2:], field[:, 1], y[:, m - 1]])


def integrate_hybrid(cfg: SetupConfig, sched: DriveSchedule, sim: SimConfig) -> SimResult:
    """Transfer computed in the hybrid eigenmode basis; cross-checks integrate_full"""
    if sched.level is not DriveLevel.DRIVE:
        raise DomainError("hybrid dynamics needs a drive-level schedule (Ω_A, Ω_B)")
    rates = derive_rates(cfg)
    modes = modes_from_rates(rates, sim.n_modes, sim.alternating_signs)
    atomic_decay = cfg.atom.gamma_sp > 0
    eom = _HybridEquations(modes, rates, cfg.atom, sched, atomic_decay, sim.use_rotating_frame())
    result = evolve(eom, sched, sim, rates, atomic_decay)
    result.meta['basis'] = 'hybrid'
    return result
