"""Random transpositions on contingency tables: exact kernels, spectra, eigenfunctions and mixing."""

from .backend import BACKEND
from .chains import (ChainKernel, KERNELS, SwapMove, collapse_to_2x2, metropolis_fy_kernel,
                     metropolis_uniform_kernel, rt_kernel, rt_row, uniform_swap_kernel, verify_three_way)
from .eigenfunctions import all_quadratics, linear_f, quadratic_f
from .mixing import (avg_chi2_bound, average_chi2, chi2_distance, empirical_tv, evolve_distribution,
                     extreme_state_bounds, relaxation_comparison, spectral_gap, t_mix, tv_distance,
                     wilson_lower_bound)
from .partitions import Partition, conjugate, kostka, majorizes, partitions_of
from .spectral import Spectrum, beta, brute_force_spectrum, match_spectrum, spectrum
from .stats import builtin, chi2_decomposition, normalized_residuals, pearson_residuals, quadratic_residual_panel
from .tables import (ContingencyTable, StateSpaceTooLarge, ThreeWayTable, count_tables, enumerate_tables,
                     fisher_yates_pmf, load_table, sample_fisher_yates)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChainKernel",
    "KERNELS",
    "SwapMove",
    "collapse_to_2x2",
    "metropolis_fy_kernel",
    "metropolis_uniform_kernel",
    "rt_kernel",
    "rt_row",
    "uniform_swap_kernel",
    "verify_three_way",
    "all_quadratics",
    "linear_f",
    "quadratic_f",
    "avg_chi2_bound",
    "average_chi2",
    "chi2_distance",
    "empirical_tv",
    "evolve_distribution",
    "extreme_state_bounds",
    "relaxation_comparison",
    "spectral_gap",
    "t_mix",
    "tv_distance",
    "wilson_lower_bound",
    "Partition",
    "conjugate",
    "kostka",
    "majorizes",
    "partitions_of",
    "Spectrum",
    "beta",
    "brute_force_spectrum",
    "match_spectrum",
    "spectrum",
    "builtin",
    "chi2_decomposition",
    "normalized_residuals",
    "pearson_residuals",
    "quadratic_residual_panel",
    "ContingencyTable",
    "StateSpaceTooLarge",
    "ThreeWayTable",
    "count_tables",
    "enumerate_tables",
    "fisher_yates_pmf",
    "load_table",
    "sample_fisher_yates",
]
