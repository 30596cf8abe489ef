"""
Dense complex linear algebra for finite-dimensional pure-state dynamics.

States, Hermitian observables and unitaries are thin immutable wrappers
around numpy arrays. Construction validates the defining invariant
(normalization, hermiticity, unitarity) against a :class:`Tolerances`
instance, so every value that reaches an operation is known to be sound.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class HilbertError(ValueError):
    """Base class for invalid inputs to the linear-algebra layer."""


class DimensionError(HilbertError):
    pass


class NotNormalizedError(HilbertError):
    pass


class NotHermitianError(HilbertError):
    pass


class NotUnitaryError(HilbertError):
    pass


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Tolerances:
    tol_norm: float = 1e-10
    tol_herm: float = 1e-10
    tol_unit: float = 1e-9
    tol_spec: float = 1e-8

    def __post_init__(self):
        for name in ("tol_norm", "tol_herm", "tol_unit", "tol_spec"):
            value = getattr(self, name)
            if not 0.0 < value < 1e-3:
                raise ValueError(f"{name} must lie in (0, 1e-3), got {value!r}")


DEFAULT_TOL = Tolerances()

# components smaller than this are skipped when fixing eigenvector phases
PHASE_CUTOFF = 1e-12


def _frozen(arr, ndim: int) -> np.ndarray:
    out = np.array(arr, dtype=np.complex128, copy=True)
    if out.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {out.shape}")
    if ndim == 2 and out.shape[0] != out.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {out.shape}")
    if out.shape[0] < 2:
        raise DimensionError("dimension must be at least 2")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state. Use :meth:`normalize` for raw amplitudes."""

    amplitudes: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes, 1)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.tol.tol_norm:
            raise NotNormalizedError(f"state norm is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalize(cls, amplitudes, tol: Tolerances = DEFAULT_TOL) -> StateVector:
        amps = np.asarray(amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if norm == 0.0 or not np.isfinite(norm):
            raise NotNormalizedError("cannot normalize a zero or non-finite vector")
        return cls(amps / norm, tol)

    @classmethod
    def basis(cls, dim: int, index: int) -> StateVector:
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __len__(self):
        return self.dim


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian matrix. ``label`` carries units or a name, nothing more."""

    entries: np.ndarray
    label: str = ""
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        m = _frozen(self.entries, 2)
        dev = np.max(np.abs(m - m.conj().T))
        if dev > self.tol.tol_herm:
            raise NotHermitianError(f"max |M - M^dagger| = {dev:.3e} exceeds {self.tol.tol_herm:g}")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    entries: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        u = _frozen(self.entries, 2)
        dev = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
        if dev > self.tol.tol_unit:
            raise NotUnitaryError(f"max |U U^dagger - I| = {dev:.3e} exceeds {self.tol.tol_unit:g}")
        object.__setattr__(self, "entries", u)

    @classmethod
    def identity(cls, dim: int) -> UnitaryMatrix:
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            _check_dims(self, other)
            return StateVector(self.entries @ other.amplitudes, other.tol)
        if isinstance(other, UnitaryMatrix):
            _check_dims(self, other)
            return UnitaryMatrix(self.entries @ other.entries, self.tol)
        return NotImplemented


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending real eigenvalues with the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: UnitaryMatrix

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors.entries
        return (v * self.eigenvalues) @ v.conj().T

    def apply_function(self, func) -> np.ndarray:
        """Return ``V diag(func(eigenvalues)) V^dagger``."""
        v = self.eigenvectors.entries
        return (v * func(self.eigenvalues)) @ v.conj().T


def _check_dims(a, b):
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Return ``<a|b>``, antilinear in ``a`` and linear in ``b``."""
    _check_dims(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation(A: Observable, psi: StateVector) -> float:
    _check_dims(A, psi)
    raw = np.vdot(psi.amplitudes, A.entries @ psi.amplitudes)
    # hermiticity is only checked to tol_herm, so scale the bound with |A|
    bound = 1e-10 * max(1.0, np.max(np.abs(A.entries)))
    if abs(raw.imag) > bound:
        raise NotHermitianError(f"expectation has imaginary part {raw.imag:.3e}")
    return float(raw.real)


def fidelity(a: StateVector, b: StateVector) -> float:
    """Return ``|<a|b>|^2``."""
    return abs(inner_product(a, b)) ** 2


def fix_phases(vectors: np.ndarray, cutoff: float = PHASE_CUTOFF) -> np.ndarray:
    """Rotate each column so its first component above ``cutoff`` is real positive."""
    out = np.array(vectors, dtype=np.complex128, copy=True)
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.flatnonzero(np.abs(col) > cutoff)
        if idx.size:
            lead = col[idx[0]]
            out[:, k] = col * (abs(lead) / lead)
            out[idx[0], k] = abs(lead)
    return out


def spectral_decompose(A: Observable) -> SpectralDecomposition:
    """
    Diagonalize a Hermitian observable.

    Eigenvalues come back ascending. Each eigenvector column has its first
    significantly nonzero component made real and positive, which pins the
    otherwise free phase. Within a degenerate eigenspace the basis is
    whatever the solver returns; compare eigenspace projectors, not columns.

    Raises
    ------
    EigenSolverError
        If LAPACK fails or the reconstruction residual exceeds ``tol_spec``.
    """
    tol = A.tol
    try:
        w, v = np.linalg.eigh(A.entries)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}") from exc
    v = fix_phases(v)
    residual = np.max(np.abs((v * w) @ v.conj().T - A.entries))
    if not residual <= tol.tol_spec:
        raise EigenSolverError(f"reconstruction residual {residual:.3e} exceeds {tol.tol_spec:g}")
    w = np.array(w, dtype=float)
    w.setflags(write=False)
    return SpectralDecomposition(w, UnitaryMatrix(v, tol))


def conjugate_observable(U: UnitaryMatrix, A: Observable) -> Observable:
    """Return ``U A U^dagger``."""
    _check_dims(U, A)
    u = U.entries
    b = u @ A.entries @ u.conj().T
    # remove the rounding-level anti-Hermitian part
    b = 0.5 * (b + b.conj().T)
    return Observable(b, A.label, A.tol)


def commutator(A, B) -> np.ndarray:
    a, b = np.asarray(A), np.asarray(B)
    return a @ b - b @ a


def random_state(dim: int, rng: np.random.Generator) -> StateVector:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector.normalize(z)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> Observable:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Observable(scale * 0.5 * (z + z.conj().T))


def random_unitary(dim: int, rng: np.random.Generator) -> UnitaryMatrix:
    """Haar-distributed unitary via QR with the diagonal phase correction."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return UnitaryMatrix(q * (d / np.abs(d)))
