"""Numerical laboratory for stiff hyperbolic relaxation toward parabolic limits."""

from .core import (
    ConvergenceTable,
    FieldState,
    RelaxationSystem,
    SpatialGrid,
    Symmetrizer,
    ValidationReport,
    limit_generator,
    principal_symbol,
    stiff_jacobian,
)
from .builder import (
    DecouplingTransform,
    QuasilinearDivergence,
    RawSystem,
    ReactionDiffusion,
    carleman,
    decouple,
    demo,
    from_quasilinear,
    from_reaction_diffusion,
    from_sqrt_symbol,
)
from .validator import SampleSet, validate_all
from .hypersolver import SolverOptions, Trajectory, max_wave_speed, run, step, well_prepared_state
from .parasolver import exact_mode_oracle, run_reference
from .diagnostics import convergence_study, energy, energy_inequality_check, limit_residual

__version__ = "0.1.0"
