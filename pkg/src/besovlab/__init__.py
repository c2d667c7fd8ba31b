"""Weighted Besov spaces on the unit ball: moments, shifts, kernels, weight
classification, Pick certificates and finite-section multiplier norms."""

from .besov import (BesovSpace, GradedSeries, GradedSpace, KernelCoefficients, besov_norm,
                    da_ratio, drury_arveson_ratio, index_shift_equivalence_check, kernel_coeffs,
                    kernel_diag, kernel_growth_check, kernel_table, radial_derivative)
from .classify import (ClassificationReport, MonotoneEnvelope, PairingMeasure,
                       almost_monotone_envelope, bekolle_b2_profile, classify,
                       construct_pairing_measure, doubling_check, doubling_equivalence_check,
                       exp_example_check, vx_doubling_asymptotic_check, weakly_normal_check,
                       weakly_normal_order, weakly_normal_shift_check)
from .kernels import BACKEND
from .measures import DiscreteMeasure, StepDensity
from .pick import (KaluzaResult, PowerSeriesKernel, binomial_kernel, binomial_space,
                   kaluza_coeffs, log_convexity_check, pick_equivalent_kernel, pick_test)
from .reports import Report
from .shift import (ball_growth_bound_check, ball_shift, hat_relation_check,
                    moment_shift_asymptotic, pointwise_bound_check, semigroup_check, shift)
from .triangular import (column_row_norms, derivative_multiplier_report, growth_norm,
                         inclusion_contractivity_check, kacnelson_block, kacnelson_conjugation,
                         mult_matrix, mult_norm_section, op_norm, rectangular_inclusion_check)
from .weights import (DomainError, ExpCusp, LineDensity, Power, PowerLog, RadialWeight, Tabulated,
                      log_moments, moment, moment_ratio_limit_check, moment_sequence,
                      to_line_density)

kaluza_c = kaluza_coeffs

__version__ = "0.1.0"
