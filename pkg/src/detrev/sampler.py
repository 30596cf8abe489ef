"""
Time evolution modelled as a chain of projective measurements.

At every step the state is collapsed onto an eigenspace of the tracked
observable ``A(t + dt)``. For small ``dt`` the chain stays on the
deterministic Schroedinger trajectory with probability close to one, and the
accumulated infidelity vanishes linearly in ``dt``.

Random streams
--------------
Every draw is a single ``Generator.random()`` double from numpy's PCG64.
Trajectory ``i`` of a run with master seed ``s`` uses
``default_rng(SeedSequence(s, spawn_key=(i,)))`` (what
``SeedSequence(s).spawn(...)[i]`` yields), so any trajectory can be
replayed on its own. Outcomes are chosen by inverse CDF over the distinct
eigenvalues in ascending order.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .evolution import _decomposition, evolve, step_count, tracked_observable
from .hilbert import (
    Observable,
    StateVector,
    _check_dims,
    expectation,
    fidelity,
    spectral_decompose,
)

# eigenvalues closer than this are one measurement outcome
MERGE_TOL = 1e-9
# outcome weights below this are dropped from the CDF (projection norm < 1e-14)
ZERO_PROBABILITY = 1e-28
# required eigen-residual of psi0 under A0 for a trajectory to start
EIGEN_TOL = 1e-8


class Outcome(NamedTuple):
    eigenvalue: float
    probability: float


@dataclass(frozen=True)
class MeasurementOutcome:
    eigenvalue: float
    post_state: StateVector
    probability: float
    outcome_index: int


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray
    states: list
    on_track_fidelity: np.ndarray
    outcomes: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.states) == len(self.on_track_fidelity) == len(self.outcomes) == n):
            raise ValueError("trajectory fields must have equal lengths")

    @property
    def final_infidelity(self) -> float:
        return 1.0 - float(self.on_track_fidelity[-1])


def trajectory_rng(seed: int, index: int = 0) -> np.random.Generator:
    """The pinned random stream for trajectory ``index`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


# observables are immutable, so their eigenspaces can be reused
_EIGENSPACE_CACHE: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def _eigenspaces(A: Observable):
    """Distinct eigenvalues (ascending) and the column block spanning each eigenspace."""
    try:
        return _EIGENSPACE_CACHE[A]
    except KeyError:
        pass
    dec = spectral_decompose(A)
    w, v = dec.eigenvalues, dec.eigenvectors.entries
    groups = []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > MERGE_TOL:
            groups.append((float(np.mean(w[start:k])), v[:, start:k]))
            start = k
    _EIGENSPACE_CACHE[A] = groups
    return groups


def _probabilities(groups, amps: np.ndarray) -> np.ndarray:
    # amps may be a single state (n,) or a stack (T, n)
    return np.stack(
        [np.sum(np.abs(amps @ block.conj()) ** 2, axis=-1) for _, block in groups], axis=-1
    )


def _choose(probs: np.ndarray, u):
    """Inverse-CDF selection; works on one distribution or a stack of them."""
    probs = np.where(probs < ZERO_PROBABILITY, 0.0, probs)
    cdf = np.cumsum(probs, axis=-1)
    target = np.asarray(u) * cdf[..., -1]
    idx = np.sum(cdf <= target[..., None], axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1), probs


def outcome_distribution(A: Observable, psi: StateVector) -> list[Outcome]:
    """Distinct eigenvalues of ``A`` with their Born probabilities in ``psi``."""
    _check_dims(A, psi)
    groups = _eigenspaces(A)
    probs = _probabilities(groups, psi.amplitudes)
    return [Outcome(val, float(p)) for (val, _), p in zip(groups, probs)]


def _measure_groups(groups, psi: StateVector, u: float) -> MeasurementOutcome:
    probs = _probabilities(groups, psi.amplitudes)
    idx, cleaned = _choose(probs, u)
    idx = int(idx)
    value, block = groups[idx]
    projected = block @ (block.conj().T @ psi.amplitudes)
    if np.linalg.norm(projected) < 1e-14:
        raise RuntimeError("selected an outcome with vanishing projection")
    return MeasurementOutcome(
        eigenvalue=value,
        post_state=StateVector.normalize(projected, psi.tol),
        probability=float(cleaned[idx] / cleaned.sum()),
        outcome_index=idx,
    )


def measure(A: Observable, psi: StateVector, rng: np.random.Generator) -> MeasurementOutcome:
    """
    Projective measurement of ``A`` in ``psi``.

    Draws one uniform from ``rng``. Degenerate eigenvalues are measured with
    the Lueders rule: the post-measurement state is the normalized projection
    onto the whole eigenspace.
    """
    _check_dims(A, psi)
    return _measure_groups(_eigenspaces(A), psi, rng.random())


def _check_start(A0: Observable, psi0: StateVector) -> float:
    alpha = expectation(A0, psi0)
    residual = np.linalg.norm(A0.entries @ psi0.amplitudes - alpha * psi0.amplitudes)
    if residual > EIGEN_TOL:
        raise ValueError(f"psi0 is not an eigenstate of A0: residual |A0 psi0 - a psi0| = {residual:.3e}")
    return alpha


def stochastic_trajectory(H: Observable, A0: Observable, psi0: StateVector, dt: float,
                          t_final: float, hbar: float = 1.0,
                          rng: np.random.Generator | None = None,
                          seed: int | None = None) -> TrajectoryRecord:
    """
    Run one measurement chain from ``psi0``.

    Step ``k`` measures ``A(t_{k+1})`` on the current state. Fidelity against
    the exactly evolved state is recorded at every time, including ``t = 0``.
    Pass either an explicit ``rng`` or a ``seed`` (then trajectory 0 of that
    seed is used).
    """
    _check_dims(H, psi0)
    _check_dims(A0, psi0)
    if not 0 < dt < t_final:
        raise ValueError("need 0 < dt < t_final")
    if rng is None:
        if seed is None:
            raise ValueError("pass rng or seed")
        rng = trajectory_rng(seed)
    alpha = _check_start(A0, psi0)
    dec = _decomposition(H)
    n_steps = step_count(dt, t_final)

    times = dt * np.arange(n_steps + 1)
    states = [psi0]
    fids = [1.0]
    outcomes = [alpha]
    psi = psi0
    for k in range(1, n_steps + 1):
        A_t = tracked_observable(dec, A0, times[k], hbar)
        result = measure(A_t, psi, rng)
        psi = result.post_state
        states.append(psi)
        fids.append(fidelity(psi, evolve(dec, psi0, times[k], hbar)))
        outcomes.append(result.eigenvalue)
    return TrajectoryRecord(times, states, np.array(fids), np.array(outcomes), seed)


@dataclass(frozen=True)
class EnsembleResult:
    dt: float
    times: np.ndarray
    outcomes: np.ndarray          # (trajectories, steps + 1)
    on_track_fidelity: np.ndarray  # (trajectories, steps + 1)
    seed: int

    @property
    def n_trajectories(self) -> int:
        return self.outcomes.shape[0]

    @property
    def final_infidelity(self) -> np.ndarray:
        return 1.0 - self.on_track_fidelity[:, -1]

    @property
    def mean_final_infidelity(self) -> float:
        return float(np.mean(self.final_infidelity))

    @property
    def stderr(self) -> float:
        x = self.final_infidelity
        if x.size < 2:
            return float("nan")
        return float(np.std(x, ddof=1) / np.sqrt(x.size))


def run_ensemble(H: Observable, A0: Observable, psi0: StateVector, dt: float, t_final: float,
                 n_trajectories: int, seed: int, hbar: float = 1.0) -> EnsembleResult:
    """
    Run ``n_trajectories`` independent chains in lockstep.

    ``A(t_k)`` is the same for every trajectory, so its eigenspaces are
    computed once per step and the projections are applied to the whole
    stack of states. Trajectory ``i`` consumes exactly the draws of
    ``trajectory_rng(seed, i)`` and reproduces ``stochastic_trajectory``
    with that generator.
    """
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be at least 1")
    if not 0 < dt < t_final:
        raise ValueError("need 0 < dt < t_final")
    _check_dims(H, psi0)
    alpha = _check_start(A0, psi0)
    dec = _decomposition(H)
    n_steps = step_count(dt, t_final)
    times = dt * np.arange(n_steps + 1)

    uniforms = np.empty((n_trajectories, n_steps))
    for i in range(n_trajectories):
        uniforms[i] = trajectory_rng(seed, i).random(n_steps)

    states = np.tile(psi0.amplitudes, (n_trajectories, 1))
    outcomes = np.empty((n_trajectories, n_steps + 1))
    fids = np.empty((n_trajectories, n_steps + 1))
    outcomes[:, 0] = alpha
    fids[:, 0] = 1.0
    for k in range(1, n_steps + 1):
        groups = _eigenspaces(tracked_observable(dec, A0, times[k], hbar))
        idx, _ = _choose(_probabilities(groups, states), uniforms[:, k - 1])
        new = np.empty_like(states)
        for g, (value, block) in enumerate(groups):
            sel = idx == g
            if not np.any(sel):
                continue
            proj = (states[sel] @ block.conj()) @ block.T
            new[sel] = proj / np.linalg.norm(proj, axis=1, keepdims=True)
            outcomes[sel, k] = value
        states = new
        exact = evolve(dec, psi0, times[k], hbar).amplitudes
        fids[:, k] = np.abs(states @ exact.conj()) ** 2
    return EnsembleResult(dt, times, outcomes, fids, seed)

