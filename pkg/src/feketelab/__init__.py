"""feketelab: Fekete configurations, interpolation and random sections on model geometries."""

from .cache import CacheStore, default_cache_dir
from .errors import (
    BudgetExceeded,
    CountMismatch,
    DomainError,
    FeketeLabError,
    InsufficientTrials,
    LevelMismatch,
    ModelMismatch,
    NonConvergence,
    SchemaError,
    SingularConfiguration,
    SpaceMismatch,
    ZeroVector,
)
from .fekete import (
    Certificate,
    Configuration,
    SolverOptions,
    cap_discrepancy,
    certify,
    min_separation,
    pair_energy_oracle,
    separated_subset,
    solve_fekete,
)
from .geometry import CP1, CP1XCP1, ProjPoint, canonicalize, get_geometry
from .interpolation import (
    LagrangeBasis,
    interpolate,
    lagrange_sections,
    lebesgue_constant,
    witness_point,
    witness_radius,
    witness_section,
)
from .random import (
    GaussianEnsemble,
    covariance_check,
    fekete_max_experiment,
    l2_sampling_experiment,
    moment_report,
    oversampling_experiment,
    sample_section,
    sampling_ratio_experiment,
    sup_norm_experiment,
)
from .reporting import ExperimentReport, append_csv, render_figures
from .sections import (
    Section,
    SectionSpace,
    bergman_decay_ratio,
    bergman_norm,
    eval_basis,
    eval_norm,
    get_space,
    inner,
    peak_section,
    quadrature_inner,
    release_scan_memory,
    sup_norm,
    tensor,
    vandermonde_lognorm,
)

__version__ = "0.1.0"
