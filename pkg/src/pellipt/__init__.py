"""pellipt: p-ellipticity functionals, exponent ranges, and semigroup experiments.

A numpy/scipy toolkit around complex matrix coefficient fields of
divergence-form operators: pointwise ellipticity functionals by exact
eigenvalue reductions (with brute-force oracles), exact rational exponent
intervals with explicit constants, and a desk-scale finite-element lab that
verifies contraction, dissipativity, off-diagonal decay, and
ultracontractivity on discretized operators.
"""

from .core import (
    EigenSolverError,
    NonAccretiveError,
    PointReport,
    bounds_point,
    conjugate_exponent,
    delta_p_point,
    g_of_s,
    jp_apply,
    lemma_gap,
    mu_point,
    point_report,
    realify,
    sector_angle_point,
)
from .field import (
    BoundarySpec,
    CoefficientField,
    DegenerateFieldError,
    FieldFormatError,
    FieldReport,
    analyze_field,
    field_digest,
    generate,
    load_field,
    save_field,
)
from .lab import (
    DiscreteOperator,
    GridFunction,
    SemigroupRun,
    assemble,
    contractivity_experiment,
    dissipativity_check,
    lp_norm,
    offdiagonal_experiment,
    propagate,
    sector_check,
    ultracontractivity_experiment,
)
from .oracle import dense_expm, sphere_min_delta, sphere_min_ratio, sphere_sample
from .projection import ProjectionResult, chain_rule_residual, nittka_project, truncation_pair
from .ranges import (
    QInterval,
    contraction_interval,
    extrapolation_interval,
    generic_interval,
    nash_theta,
    od_sum_bound,
    offdiag_constant,
    p_elliptic_interval,
    pq_exponent,
    rotated_lower_bound,
    sobolev_conjugate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
