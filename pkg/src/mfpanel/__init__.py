"""Multifractal analysis of asset panels.

Building blocks: normalized-return ingestion and synchronization,
q-order detrended fluctuation functions for one signal or a pair,
generalized Hurst exponents and singularity spectra, the q-dependent
detrended cross-correlation coefficient rho(q, s), power-law tail
exponents, and rolling minimal-spanning-tree network metrics.
"""

__version__ = "0.1.0"

from .errors import (
    AlignmentError,
    ConfigError,
    DegenerateDataError,
    IngestError,
    MfpanelError,
)
from .series import (
    CsvSchema,
    Panel,
    PriceSeries,
    Profile,
    ReturnSeries,
    build_index,
    load_price_groups,
    load_prices,
    panel_to_returns,
    profile,
    synchronize,
    to_returns,
)
from .fluctuation import (
    FluctuationSurface,
    SegmentationConfig,
    SegmentCovariances,
    default_s_grid,
    detrended_covariances,
    fluctuation_function,
    fluctuation_moment,
    fluctuation_surface,
    segment_residuals,
)
from .spectrum import (
    ScalingExponents,
    SingularitySpectrum,
    SpectrumTimeline,
    default_fit_range,
    default_q_grid,
    fit_scaling,
    rolling_spectrum,
    singularity_spectrum,
)
from .rho import RhoMatrix, RhoTimeline, RhoValue, rho_matrix, rho_q, rolling_rho
from .tails import TailFit, TailTimeline, classify_regime, fit_tail, rolling_tail
from .network import (
    DistanceMatrix,
    MstResult,
    NetworkMetrics,
    NetworkTimeline,
    distance_matrix,
    mst,
    mst_metrics,
    rolling_mst,
)
from .synthetic import (
    GeneratorSpec,
    binomial_cascade,
    cascade_hurst,
    correlated_pair,
    fgn,
    generate,
    iid_gaussian,
    pareto,
    prices_from_series,
    rng_stream,
)
from .config import RunConfig, load_config, parse_duration, validate_config
from .pipeline import RunReport, run
