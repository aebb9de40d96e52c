"""qsheet: a desk-scale statistical laboratory for the Brownian sheet.

Exact lattice samplers for planar white noise and the sheet, the
Ornstein-Uhlenbeck process on path space built from it, and Monte Carlo
estimators for the sheet's quasi-sure path statistics: iterated-logarithm
profiles, continuity and small-ball moduli, quadratic variation,
upper-class integral tests, hitting probabilities in d dimensions, the
sojourn spectrum, and level-component pinning probabilities.
"""

from .errors import ArgumentError, NumericError, RangeError
from .mc import (
    CovarianceTable,
    EnsembleConfig,
    EstimateReport,
    covariance_table,
    ks_distance,
    mc_collect,
    mc_run,
    report_from_samples,
)
from .rng import Seed
from .sheet import (
    CornerDecomposition,
    GridSpec,
    MultiScaleSheet,
    Path,
    SheetField,
    WhiteNoiseField,
    sample_corner,
    sample_multiscale,
    sample_sheet,
    sample_sheet_d,
    sample_white_noise,
    sheet_from_white_noise,
    sheet_to_csv,
    slice_t,
)
from .ou import (
    OUSheet,
    OUTrajectory,
    PathEvent,
    PathFunctional,
    capacity_estimate,
    mehler_apply,
    mehler_symmetry_check,
    ou_from_sheet,
    ou_propagate,
    sample_ou_trajectory,
    strong_markov_test,
)
from .pathstats import (
    CHUNG_CONSTANT,
    IntegralTestResult,
    PartitionScheme,
    PhiAlpha,
    chung_modulus,
    levy_modulus,
    lil_block_scan,
    lil_profile,
    nowhere_diff_stat,
    partition_dyadic,
    quadratic_variation,
    reflection_check,
    upper_class_test,
)
from .geometry import (
    HitQuery,
    HitScaling,
    KendallEstimate,
    SojournSpectrum,
    hit_probability,
    hit_scaling,
    kendall_J,
    kendall_limit,
    kendall_profile,
    range_volume,
    sojourn_Q,
    sojourn_fourier_mc,
)

__version__ = "0.1.0"
