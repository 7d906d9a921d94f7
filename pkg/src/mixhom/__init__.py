"""EM-test for homogeneity in two-component location-scale mixtures."""

__version__ = "0.1.0"

from .calibration import LimitLaw, limit_draw, limit_law, p_value, simulate_limit
from .emtest import (EmConfig, EmTestResult, MixingDistribution, e_step, em_statistic,
                     initial_pair_fit, m_step_alpha, m_step_component, penalized_loglik)
from .errors import (CalibrationError, ConfigurationError, DegenerateDataError, DomainError,
                     MixhomError, NumericalError, ParseError, UnsupportedKernelError)
from .geometry import LimitCase, ScoreMatrices, classify_limit, score_covariance
from .kernels import Kernel, ScoreVector, Theta, log_density, sample, score_vector
from .lrt import bootstrap_null, fit_full_penalized, lrt_statistic
from .nullfit import NullFit, fit_null
from .penalty import PenaltyConfig, a_n_formula, p_alpha, p_sigma
from .report import TestReport, density_curves, load_series, run_report
