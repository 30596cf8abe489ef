"""
Worked examples: spin-1/2 precession about z and a free particle on a
periodic Fourier grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evolution import evolve, step_count, tracked_observable
from .hilbert import (
    DimensionError,
    Observable,
    StateVector,
    commutator,
    expectation,
    spectral_decompose,
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


# --------------------------------------------------------------------------
# spin 1/2


@dataclass(frozen=True, eq=False)
class SpinSystem:
    omega: float
    hbar: float
    H: Observable
    Sx: Observable
    Sy: Observable
    Sz: Observable

    def state(self, name: str) -> StateVector:
        """Named eigenstates: ``+z``, ``-z``, ``+x``, ``-x``, ``+y``, ``-y``."""
        r = 1 / math.sqrt(2)
        table = {
            "+z": [1, 0], "-z": [0, 1],
            "+x": [r, r], "-x": [r, -r],
            "+y": [r, 1j * r], "-y": [r, -1j * r],
        }
        try:
            return StateVector(np.array(table[name], dtype=complex))
        except KeyError:
            raise ValueError(f"unknown spin state {name!r}; pick one of {sorted(table)}") from None


def spin_system(omega: float, hbar: float = 1.0) -> SpinSystem:
    """Spin-1/2 in a field along z: ``H = omega * Sz`` with ``S = (hbar/2) sigma``."""
    if not hbar > 0:
        raise ValueError(f"hbar must be positive, got {hbar!r}")
    if not math.isfinite(omega):
        raise ValueError(f"omega must be finite, got {omega!r}")
    half = hbar / 2
    sx = Observable(half * PAULI_X, "Sx")
    sy = Observable(half * PAULI_Y, "Sy")
    sz = Observable(half * PAULI_Z, "Sz")
    H = Observable(omega * sz.entries, "H")
    return SpinSystem(omega, hbar, H, sx, sy, sz)


def spin_decompose(A: Observable, hbar: float = 1.0) -> tuple[float, float, float, float]:
    """Real coefficients ``(c_I, c_x, c_y, c_z)`` of ``A`` on ``{I, Sx, Sy, Sz}``."""
    if A.dim != 2:
        raise DimensionError(f"spin_decompose needs a 2x2 observable, got dim {A.dim}")
    basis = [np.eye(2, dtype=complex)] + [hbar / 2 * s for s in (PAULI_X, PAULI_Y, PAULI_Z)]
    coeffs = []
    for b in basis:
        c = np.trace(b.conj().T @ A.entries) / np.trace(b.conj().T @ b)
        # hermiticity of A and b makes every coefficient real
        if abs(c.imag) > 1e-10 * max(1.0, abs(c.real)):
            raise ValueError(f"non-real coefficient {c!r}; is A Hermitian?")
        coeffs.append(float(c.real))
    return tuple(coeffs)


def precession_chain_infidelity(omega: float, dt: float, t_final: float) -> float:
    """
    Expected final infidelity of the measurement chain for spin precession
    started in ``|+x>`` with ``A0 = Sx``.

    Each step stays on the tracked eigenvector with probability
    ``cos^2(omega dt / 2)`` and the two branches flip symmetrically, so after
    ``N`` steps the off-track probability is ``(1 - cos(omega dt)^N) / 2``.
    """
    n = step_count(dt, t_final)
    return 0.5 * (1.0 - math.cos(omega * dt) ** n)


# --------------------------------------------------------------------------
# free particle on a periodic grid


@dataclass(frozen=True, eq=False)
class GridSystem:
    n_points: int
    box_length: float
    mass: float
    hbar: float
    x: np.ndarray
    k: np.ndarray
    fourier: np.ndarray
    X: Observable
    P: Observable
    H: Observable
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dx(self) -> float:
        return self.box_length / self.n_points

    @property
    def k_max(self) -> float:
        return math.pi / self.dx

    def momentum_projector(self, fraction: float = 0.5) -> np.ndarray:
        """Projector onto the central ``fraction`` of the signed k-grid."""
        key = ("proj", fraction)
        if key not in self._cache:
            keep = np.abs(self.k) < fraction * self.k_max
            f = self.fourier
            self._cache[key] = (f.conj().T * keep) @ f
        return self._cache[key]

    def hamiltonian_decomposition(self):
        if "H" not in self._cache:
            self._cache["H"] = spectral_decompose(self.H)
        return self._cache["H"]


def free_particle_grid(n_points: int = 256, box_length: float = 20.0, mass: float = 1.0,
                       hbar: float = 1.0) -> GridSystem:
    """
    Periodic grid ``x_j = -L/2 + j dx`` with ``P = F^dagger diag(hbar k) F``.

    ``F`` is the unitary DFT, ``k`` the signed frequency grid in
    ``[-pi/dx, pi/dx)`` and ``H = P^2 / 2m``.
    """
    if not isinstance(n_points, (int, np.integer)) or n_points < 16 or n_points & (n_points - 1):
        raise ValueError(f"n_points must be a power of two >= 16, got {n_points!r}")
    for name, value in (("box_length", box_length), ("mass", mass), ("hbar", hbar)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value!r}")
    n = int(n_points)
    dx = box_length / n
    x = -box_length / 2 + dx * np.arange(n)
    k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
    f = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    p = (f.conj().T * (hbar * k)) @ f
    h = (f.conj().T * ((hbar * k) ** 2 / (2 * mass))) @ f
    for arr in (x, k, f):
        arr.setflags(write=False)
    return GridSystem(
        n, float(box_length), float(mass), float(hbar), x, k, f,
        Observable(np.diag(x), "X"), Observable(p, "P"), Observable(h, "H"),
    )


@dataclass(frozen=True, eq=False)
class WavePacket:
    x0: float
    p0: float
    sigma: float
    state: StateVector

    @property
    def amplitudes(self) -> np.ndarray:
        return self.state.amplitudes


# fraction of k-grid counted as "outer" for the momentum-support check
OUTER_K_FRACTION = 0.1
MAX_OUTER_WEIGHT = 1e-8


def outer_momentum_weight(grid: GridSystem, psi: StateVector) -> float:
    amps_k = grid.fourier @ psi.amplitudes
    outer = np.abs(grid.k) > (1 - OUTER_K_FRACTION) * grid.k_max
    return float(np.sum(np.abs(amps_k[outer]) ** 2))


def gaussian_packet(grid: GridSystem, x0: float, p0: float, sigma: float) -> WavePacket:
    """Normalized ``exp(-(x - x0)^2 / (4 sigma^2) + i p0 x / hbar)`` on the grid."""
    if abs(x0) > 0.3 * grid.box_length:
        raise ValueError(f"x0={x0!r} lies outside the central 60% of the box")
    if sigma < 3 * grid.dx:
        raise ValueError(f"sigma={sigma!r} is narrower than 3 grid spacings ({3 * grid.dx:g})")
    x = grid.x
    amps = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * x / grid.hbar)
    psi = StateVector.normalize(amps)
    outer = outer_momentum_weight(grid, psi)
    if outer > MAX_OUTER_WEIGHT:
        raise ValueError(
            f"packet puts {outer:.2e} of its weight in the outer {OUTER_K_FRACTION:.0%} of the "
            f"k-grid; lower |p0| or widen sigma"
        )
    return WavePacket(float(x0), float(p0), float(sigma), psi)


def tracking_window(grid: GridSystem, packet: WavePacket) -> float:
    """Upper time bound before the packet is assumed to reach the periodic boundary."""
    speed = max(abs(packet.p0), grid.hbar / (2 * packet.sigma)) / grid.mass
    return (grid.box_length / 4) / speed


@dataclass(frozen=True)
class FreeParticleReport:
    times: np.ndarray
    x_expect: np.ndarray
    drift: np.ndarray                # <X - tP/m> - x0, signed
    operator_residual: np.ndarray    # max |Pi (A(t) - (X - tP/m)) Pi|
    state_residual: np.ndarray       # |A(t) psi(t) - (X - tP/m) psi(t)|
    momentum_residual: np.ndarray    # max |A_P(t) - P|
    drift_tol: float
    operator_tol: float
    momentum_tol: float

    @property
    def drift_ok(self) -> bool:
        return bool(np.all(np.abs(self.drift) <= self.drift_tol))

    @property
    def operator_ok(self) -> bool:
        return bool(np.all(self.operator_residual <= self.operator_tol))

    @property
    def momentum_ok(self) -> bool:
        return bool(np.all(self.momentum_residual <= self.momentum_tol))

    @property
    def passed(self) -> bool:
        return self.drift_ok and self.operator_ok and self.momentum_ok


def verify_free_particle_tracking(grid: GridSystem, packet: WavePacket,
                                  times: Sequence[float]) -> FreeParticleReport:
    """
    Check that ``X - tP/m`` is the observable left well defined at time ``t``.

    For each time this measures the drift of ``<X - tP/m>`` away from ``x0``,
    the max-entry gap between the tracked observable of ``X`` and
    ``X - tP/m`` inside the central-half momentum subspace, the same gap
    applied to the evolved packet, and how far the tracked observable of
    ``P`` moves from ``P``.
    """
    times = np.asarray(times, dtype=float)
    t_max = tracking_window(grid, packet)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-d sequence")
    if np.any(times < 0) or np.any(times >= t_max):
        raise ValueError(f"times must lie in [0, {t_max:g}) to avoid wraparound")

    dec = grid.hamiltonian_decomposition()
    proj = grid.momentum_projector(0.5)
    X, P = grid.X.entries, grid.P.entries
    m = grid.mass

    x_expect, drift, op_res, st_res, mom_res = [], [], [], [], []
    for t in times:
        psi_t = evolve(dec, packet.state, t, grid.hbar)
        target = X - (t / m) * P
        A_t = tracked_observable(dec, grid.X, t, grid.hbar).entries
        x_expect.append(expectation(grid.X, psi_t))
        drift.append(float(np.vdot(psi_t.amplitudes, target @ psi_t.amplitudes).real) - packet.x0)
        op_res.append(float(np.max(np.abs(proj @ (A_t - target) @ proj))))
        st_res.append(float(np.linalg.norm((A_t - target) @ psi_t.amplitudes)))
        A_p = tracked_observable(dec, grid.P, t, grid.hbar).entries
        mom_res.append(float(np.max(np.abs(A_p - P))))

    L = grid.box_length
    return FreeParticleReport(
        times, np.array(x_expect), np.array(drift), np.array(op_res), np.array(st_res),
        np.array(mom_res), drift_tol=1e-4 * L, operator_tol=1e-6 * L, momentum_tol=1e-10,
    )


def canonical_commutator_residual(grid: GridSystem) -> float:
    """``max |Pi ([H, X] + i hbar P / m) Pi|`` over the central-half momentum subspace."""
    proj = grid.momentum_projector(0.5)
    gap = commutator(grid.H, grid.X) + 1j * grid.hbar * grid.P.entries / grid.mass
    return float(np.max(np.abs(proj @ gap @ proj)))
