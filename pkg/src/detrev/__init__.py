"""Finite-dimensional Schroedinger evolution, tracked observables and projective-measurement chains."""

from .evolution import (
    EvolutionConfig,
    OverlapReport,
    conservation_report,
    euler_step,
    evolve,
    overlap_report,
    propagator,
    tracked_observable,
)
from .hilbert import (
    DEFAULT_TOL,
    Observable,
    SpectralDecomposition,
    StateVector,
    Tolerances,
    UnitaryMatrix,
    conjugate_observable,
    expectation,
    fidelity,
    inner_product,
    spectral_decompose,
)
from .rotation import plane_rotation, witness_observable
from .sampler import (
    MeasurementOutcome,
    TrajectoryRecord,
    measure,
    outcome_distribution,
    run_ensemble,
    stochastic_trajectory,
    trajectory_rng,
)
from .scenarios import (
    free_particle_grid,
    gaussian_packet,
    spin_decompose,
    spin_system,
    verify_free_particle_tracking,
)

__version__ = "0.1.0"
