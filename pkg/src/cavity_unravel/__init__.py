"""Quantum trajectory simulation of a thermally damped cavity mode.

The master-equation integrator in :mod:`.lindblad` is the reference; the
quantum-jump (:mod:`.mcwf`), homodyne (:mod:`.hssde`) and atomic-beam
(:mod:`.beam`) engines produce pure-state trajectories whose ensemble average
reproduces it. :mod:`.analysis` holds phase-space and localization diagnostics.
"""

from .errors import AccuracyWarning, ContractError, DomainError, NumericalAbort
from .fock import (
    FieldState,
    ReservoirParams,
    apply_ladder,
    bose_einstein_pmf,
    coherence_and_fock_distance,
    default_dim,
    expval_a,
    expval_number,
    make_coherent,
    make_fock,
    overlap,
    quad_stats,
)
from .lindblad import (
    DensityMatrix,
    DensitySeries,
    evolve_master,
    from_pure,
    lindblad_rhs,
    thermal_state,
    trace_distance,
)
from .records import JumpEvent, TrajectoryRecord, trajectory_seed
from .mcwf import apply_jump, jump_rates, mc_step, no_jump_step, run_mc_trajectory
from .hssde import (
    JumpCountMoments,
    WienerPair,
    hssde_increment,
    hssde_step,
    jump_count_moments,
    run_hssde_trajectory,
)
from .beam import (
    AtomPrep,
    BeamSchedule,
    DetectionOutcome,
    effective_gamma,
    run_beam_trajectory,
    three_level_pass,
    two_level_pass,
)
from .analysis import (
    DriftCheck,
    QGrid,
    coherent_drift_check,
    compare_pmf,
    husimi_q,
    localization_drift_check,
    squeezing_track,
    time_avg_photon_pmf,
)

__version__ = "0.1.0"
