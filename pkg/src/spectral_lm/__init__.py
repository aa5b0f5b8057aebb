"""Numerical laboratory for long-memory Toeplitz spectra and spiked
separable sample covariance matrices.

The package is organized around the pipeline

    covariance  ->  spectral  ->  kernel
                         \\
                       sampling  ->  harness

with ``spikes`` supplying the deterministic spike-location machinery used by
the Monte Carlo harness, and ``cli`` exposing everything as subcommands.
"""

__version__ = "0.1.0"

from .covariance import (
    SlowlyVarying,
    ToeplitzSpec,
    ToeplitzMatrix,
    QuadratureParams,
    autocov_decay,
    autocov_density,
    build_toeplitz,
    moment_decay_table,
)
from .spectral import (
    EigenPairs,
    ToeplitzOperator,
    hermitian_top_eigenpairs,
    toeplitz_matvec,
    align_sign,
)
from .kernel import (
    KernelEigenSystem,
    kernel_eigs,
    constant_kernel_eigs,
    boundary_check,
    toeplitz_vs_kernel_report,
    compare_toeplitz_pair,
    density_symbol_constant,
)
from .spikes import (
    PopulationModel,
    SpikePrediction,
    g_func,
    shift,
    solve_theta,
    series_coeffs,
    theta_series,
    solve_det_equiv,
    solve_det_equiv_real,
    det_equiv_residual,
    outside_support,
    predict_spike,
)
from .sampling import (
    EntryLaw,
    ENTRY_LAWS,
    get_entry_law,
    ModelConfig,
    PreparedModel,
    sample_Z,
    assemble_S,
    lambda_stats,
)
from .harness import (
    CltReport,
    theoretical_sigma,
    run_clt_experiment,
    ks_statistic,
    levy_distance,
    convergence_sweep,
)
