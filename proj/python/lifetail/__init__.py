"""Generalized Pareto threshold-exceedance models with a covariate-dependent
scale parameter, fitted to survival data under left truncation and right
censoring, with maximum-lifespan (upper endpoint) inference."""

from lifetail._core import (  # noqa: F401
    BootstrapRun,
    ContrastRow,
    Covariate,
    CovariateSchema,
    EndpointEstimate,
    EntryDist,
    Exceedance,
    ExtractResult,
    FitOptions,
    FitResult,
    IndividualRecord,
    ParamVector,
    ProfileEndpointRow,
    ProfileWeight,
    QqGrid,
    ScenarioConfig,
    SweepRow,
    __version__,
    bootstrap,
    bootstrap_percentile_ci,
    contrast_table,
    decode_profile,
    encode_profile,
    endpoint,
    endpoint_delta_ci,
    feasible,
    fit_mle,
    gpd,
    gradient,
    load_records,
    log_likelihood,
    profile_endpoint_table,
    qq_grid,
    resolve_references,
    schema_from_file,
    schema_from_text,
    simulate_population,
    threshold_sweep,
    to_exceedances,
    wald_intervals,
)
