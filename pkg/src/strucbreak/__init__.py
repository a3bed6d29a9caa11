"""Structural break tests at an unknown change point for growing-dimension
linear regressions: sieve regressions and long autoregressions."""

__version__ = "0.1.0"

from .break_process import (BreakGrid, BreakProcess, compute_break_process,
                            make_grid, wald_at)
from .design import (DesignMatrix, DesignSpec, RawSample, SplitDesign,
                     build_ar_design, build_design, build_polynomial_basis,
                     build_raw_design, split_design)
from .estimator import StructuralBreakTest
from .har import (HarEstimate, KernelSpec, bandwidth, har_estimate,
                  kernel_value, v_hat, zeta_series)
from .montecarlo import (DgpSpec, EnvelopeConfig, ExperimentConfig,
                         InnovationSpec, gen_covariates, gen_dgp,
                         gen_innovations, local_power_break, power_envelope,
                         run_experiment)
from .null_sim import (BesselConfig, LimitPathConfig, NullDistribution,
                       andrews_inverse, andrews_transform, critical_values,
                       limit_functional_draws, load_critical_value_table,
                       simulate_bessel_process, simulate_bessel_sup,
                       simulate_limit_paths, simulate_limit_sup,
                       simulate_q_path, simulate_wwbar_paths,
                       table_critical_values)
from .regression import MomentMatrices, OlsFit, moment_matrices, ols
from .test_stats import (TestReport, TestSpec, avg_stat, decide, expq_stat,
                         expw_stat, report_from_table, sup_stat)

__all__ = [
    "BesselConfig", "BreakGrid", "BreakProcess", "DesignMatrix", "DesignSpec",
    "DgpSpec", "EnvelopeConfig", "ExperimentConfig", "HarEstimate",
    "InnovationSpec", "KernelSpec", "LimitPathConfig", "MomentMatrices",
    "NullDistribution", "OlsFit", "RawSample", "SplitDesign",
    "StructuralBreakTest", "TestReport", "TestSpec", "andrews_inverse",
    "andrews_transform", "avg_stat", "bandwidth", "build_ar_design",
    "build_design", "build_polynomial_basis", "build_raw_design",
    "compute_break_process", "critical_values", "decide", "expq_stat",
    "expw_stat", "gen_covariates", "gen_dgp", "gen_innovations",
    "har_estimate", "kernel_value", "limit_functional_draws",
    "load_critical_value_table", "local_power_break", "make_grid",
    "moment_matrices", "ols", "power_envelope", "report_from_table",
    "run_experiment", "simulate_bessel_process", "simulate_bessel_sup",
    "simulate_limit_paths", "simulate_limit_sup", "simulate_q_path",
    "simulate_wwbar_paths", "split_design", "sup_stat",
    "table_critical_values", "v_hat", "wald_at", "zeta_series",
]
