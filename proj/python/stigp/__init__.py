"""Multi-task GP forecasting from short high-dimensional series."""

from ._core import (
    Dataset,
    Error,
    GpModel,
    IllConditionedError,
    IntegrationError,
    InvalidArgument,
    KernelParams,
    ParseError,
    __version__,
    add_noise,
    baseline_drift,
    baseline_persistence,
    block_rows,
    digest,
    forecast,
    generate_lorenz,
    generate_pendulum,
    gp_fit,
    gram,
    impute,
    kernel_eval,
    load_csv,
    log_marginal_likelihood,
    log_marginal_likelihood_grad,
    mapping_task,
    metrics,
    run_cli,
    save_csv,
    smooth,
)
