"""Rotations between pure states and rank-one witness observables."""
from __future__ import annotations

import numpy as np

from .hilbert import Observable, StateVector, UnitaryMatrix, _check_dims

# |<a|b>| this close to 1 means the states differ only by a phase
PARALLEL_TOL = 1e-12


def plane_rotation(psi_a: StateVector, psi_b: StateVector) -> UnitaryMatrix:
    """
    Unitary mapping ``psi_a`` onto ``psi_b`` that fixes everything else.

    With ``alpha = <a|b>`` the residual ``b - alpha a`` is normalized into a
    second frame vector ``e``, and the block ``[[alpha, -beta], [beta,
    conj(alpha)]]`` acts on the ordered frame ``(a, e)``. The orthogonal
    complement of ``span{a, b}`` is left untouched. When the states are
    parallel the rotation reduces to a phase on ``a``.
    """
    _check_dims(psi_a, psi_b)
    a = psi_a.amplitudes
    b = psi_b.amplitudes
    n = a.shape[0]
    alpha = complex(np.vdot(a, b))
    eye = np.eye(n, dtype=np.complex128)

    if abs(1.0 - abs(alpha)) <= PARALLEL_TOL:
        return UnitaryMatrix(eye + (alpha - 1.0) * np.outer(a, a.conj()), psi_a.tol)

    r = b - alpha * a
    beta = np.linalg.norm(r)
    e = r / beta
    frame = np.column_stack([a, e])
    block = np.array([[alpha, -beta], [beta, alpha.conjugate()]])
    u = eye - frame @ frame.conj().T + frame @ block @ frame.conj().T
    return UnitaryMatrix(u, psi_a.tol)


def witness_observable(psi: StateVector) -> Observable:
    """Projector ``|psi><psi|``: Hermitian, with ``psi`` as its eigenvalue-1 eigenvector."""
    a = psi.amplitudes
    return Observable(np.outer(a, a.conj()), "projector", psi.tol)
