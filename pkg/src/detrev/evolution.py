"""
Time evolution under a time-independent Hamiltonian.

Exact evolution goes through the spectral decomposition of ``H`` so the
propagator is unitary to eigensolver precision. The first-order step
``(1 - i H dt / hbar) psi`` is kept separately for order checks, as are the
forward/backward overlap diagnostics and the tracked observable
``U(t) A0 U(t)^dagger`` with ``U(t) = exp(-i H t / hbar)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .hilbert import (
    DimensionError,
    Observable,
    SpectralDecomposition,
    StateVector,
    UnitaryMatrix,
    _check_dims,
    conjugate_observable,
    expectation,
    inner_product,
    spectral_decompose,
)

HamiltonianLike = Union[Observable, SpectralDecomposition]

# below this |<psi(t+dt)|psi(t)>| the step is no longer "infinitesimal"
MIN_OVERLAP = 0.9


@dataclass(frozen=True)
class EvolutionConfig:
    hbar: float = 1.0
    dt: float = 0.01
    t_final: float = 1.0
    renormalize_steps: bool = False

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.dt < self.t_final:
            raise ValueError(f"dt ({self.dt!r}) must be smaller than t_final ({self.t_final!r})")

    @property
    def n_steps(self) -> int:
        return step_count(self.dt, self.t_final)


def step_count(dt: float, t_final: float) -> int:
    """Number of whole steps of size ``dt`` that fit in ``[0, t_final]``."""
    return int(math.floor(t_final / dt + 1e-9))


def _decomposition(H: HamiltonianLike) -> SpectralDecomposition:
    if isinstance(H, SpectralDecomposition):
        return H
    return spectral_decompose(H)


def _check_hbar(hbar: float):
    if not hbar > 0:
        raise ValueError(f"hbar must be positive, got {hbar!r}")


def propagator(H: HamiltonianLike, t: float, hbar: float = 1.0) -> UnitaryMatrix:
    """``exp(-i H t / hbar)`` as ``V diag(exp(-i lambda t / hbar)) V^dagger``.

    ``H`` may be passed already decomposed to avoid repeated diagonalization.
    """
    _check_hbar(hbar)
    dec = _decomposition(H)
    u = dec.apply_function(lambda lam: np.exp(-1j * lam * (t / hbar)))
    return UnitaryMatrix(u, dec.eigenvectors.tol)


def evolve(H: HamiltonianLike, psi0: StateVector, t: float, hbar: float = 1.0) -> StateVector:
    """Exact solution of ``i hbar d/dt psi = H psi`` at time ``t``."""
    return propagator(H, t, hbar) @ psi0


def euler_step(H: Observable, psi: StateVector, dt: float, hbar: float = 1.0,
               renormalize: bool = False):
    """
    One first-order step ``(I - i H dt / hbar) psi``.

    In raw mode (the default) the result is returned as a bare complex
    array, because its squared norm is ``1 + <Omega^2> dt^2`` and it is not a
    valid :class:`StateVector`. With ``renormalize=True`` it is rescaled and
    wrapped.
    """
    _check_dims(H, psi)
    _check_hbar(hbar)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    out = psi.amplitudes - 1j * (dt / hbar) * (H.entries @ psi.amplitudes)
    if renormalize:
        return StateVector.normalize(out, psi.tol)
    return out


def euler_norm_sq_expected(H: Observable, psi: StateVector, dt: float, hbar: float = 1.0) -> float:
    """Analytic squared norm of the raw Euler step, ``1 + <Omega^2> dt^2``."""
    h_psi = H.entries @ psi.amplitudes / hbar
    return 1.0 + float(np.vdot(h_psi, h_psi).real) * dt * dt


@dataclass(frozen=True)
class OverlapReport:
    forward_overlap: complex
    backward_overlap: complex
    epsilon: complex
    omega_expectation: float
    omega_sq_expectation: float
    dt: float

    @property
    def limit_gap(self) -> float:
        """Distance between the extracted epsilon and its dt -> 0 value ``-i <Omega>``."""
        return abs(self.epsilon - (-1j * self.omega_expectation))

    @property
    def real_part_bound(self) -> float:
        # Re(eps) = sum_k w_k (1 - cos(w_k dt)) / dt <= <Omega^2> dt / 2
        return 0.5 * self.omega_sq_expectation * self.dt

    @property
    def conjugate_mismatch(self) -> float:
        return abs(self.backward_overlap - self.forward_overlap.conjugate())


def overlap_report(H: Observable, psi: StateVector, dt: float, hbar: float = 1.0) -> OverlapReport:
    """
    Forward and backward overlaps of one exact step and the derived epsilon.

    ``epsilon = (1 - <psi(t+dt)|psi(t)>) / dt``. The deficit ``1 - overlap`` is
    summed per eigencomponent with ``expm1`` so it stays accurate when
    ``dt`` is tiny and the overlap is within rounding of 1.
    """
    _check_dims(H, psi)
    _check_hbar(hbar)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    dec = spectral_decompose(H)
    psi_next = evolve(dec, psi, dt, hbar)
    forward = inner_product(psi_next, psi)
    backward = inner_product(psi, psi_next)
    if abs(forward) < MIN_OVERLAP:
        raise ValueError(
            f"|<psi(t+dt)|psi(t)>| = {abs(forward):.4f} < {MIN_OVERLAP}; use a smaller dt"
        )

    omega = dec.eigenvalues / hbar
    weights = np.abs(dec.eigenvectors.entries.conj().T @ psi.amplitudes) ** 2
    weights = weights / weights.sum()
    deficit = -np.sum(weights * np.expm1(1j * omega * dt))
    return OverlapReport(
        forward_overlap=forward,
        backward_overlap=backward,
        epsilon=complex(deficit / dt),
        omega_expectation=expectation(H, psi) / hbar,
        omega_sq_expectation=float(np.sum(weights * omega**2)),
        dt=dt,
    )


def tracked_observable(H: HamiltonianLike, A0: Observable, t: float, hbar: float = 1.0) -> Observable:
    """The observable left well defined at time ``t``: ``U(t) A0 U(t)^dagger``.

    If ``A0 psi0 = alpha psi0`` then ``A(t) psi(t) = alpha psi(t)`` for the
    exactly evolved state, and the spectrum of ``A0`` is carried over.
    """
    U = propagator(H, t, hbar)
    if U.dim != A0.dim:
        raise DimensionError(f"dimension mismatch: {U.dim} vs {A0.dim}")
    return conjugate_observable(U, A0)


class ConservationSample(NamedTuple):
    time: float
    norm: float
    energy_expectation: float


def conservation_report(H: Observable, psi0: StateVector, times: Sequence[float],
                        hbar: float = 1.0) -> list[ConservationSample]:
    """Norm and ``<H>`` of the exactly evolved state at each requested time."""
    _check_dims(H, psi0)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1:
        raise ValueError("times must be a 1-d sequence")
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be nonnegative and ascending")
    dec = spectral_decompose(H)
    samples = []
    for t in times:
        psi = evolve(dec, psi0, float(t), hbar)
        samples.append(ConservationSample(
            float(t), float(np.linalg.norm(psi.amplitudes)), expectation(H, psi),
        ))
    return samples
