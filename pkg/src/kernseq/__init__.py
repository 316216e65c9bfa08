"""kernseq: changepoint detection in multivariate streams with
degenerate U-statistic detectors and simulated asymptotic critical values."""

from .diagnostics import MomentTestResult, chi2_upper_quantile, moment_test, vector_moment_test
from .harness import (DEFAULT_KERNELS, ScenarioSpec, cusum_baseline, generate,
                      null_critical_value, run_cell, run_table, scale_covariance)
from .kernels import (CustomKernel, DegenerateBandwidthError, DimensionMismatchError,
                      EnergyKernel, GaussianDerivedKernel, GaussianPsdKernel,
                      GrothendieckKernel, KernelConfigError, PsdDerivedMetricKernel,
                      TablePsdKernel, derived_metric, eval_kernel, grothendieck_psi,
                      kernel_from_json, kernel_matrix, kernel_to_json,
                      median_bandwidth, resolve_kernel)
from .limits import (LimitSample, LimitSimConfig, critical_value,
                     gamma_pointwise_draws, monitor_critical_value,
                     simulate_bridge_sup, simulate_gamma_bar_sup,
                     simulate_gamma_sup, simulate_gamma_window_sup,
                     window_time_map)
from .monitor import (DelayConstants, Monitor, MonitorConfig, MonitorEvent,
                      delay_constants, detector_curves,
                      empirical_delay_distribution, first_crossings, run)
from .retro import RetroResult, retro_statistic, retro_test
from .spectrum import (SpectrumEstimate, build_centered_gram, eigenvalues,
                       estimate_spectrum, truncate_lambdas)
from .ustat import (BoundaryParams, DetectorState, boundary, boundary_curve,
                    detector_d1, detector_d2, detector_d3, u_stat_batch,
                    update_state, window_length)

__version__ = "0.1.0"
