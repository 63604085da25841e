"""Numerical toolkit for heat and Schrodinger flows on H-type groups.

Builds Heisenberg-type group structures from Clifford module data, then
provides Carnot-Caratheodory distances, heat kernels at real and complex
time, grid calculus (sub-Laplacian, twisted group convolution), the
Gaussian-mixture decomposition of kernel profiles with its heat-flow
counterexample, and the Radon-Fourier reduction of the Schrodinger
equation with decay-rate experiments.
"""

from .algebra import (GroupPoint, HTypeStructure, bracket, build_structure,
                      dilate, identity, inverse, multiply, radon_hurwitz)
from .errors import (CarnotHeatError, ConfigError, FitFailureError,
                     GridError, GridMismatchError, GridTooSmallError,
                     InadmissibleDimensionsError, InvalidDimensionError,
                     OutOfStencilError, QuadratureError,
                     StructureMismatchError, TruncationError, UsageError)
from .geometry import (DistanceResult, angle_to_ratio, cc_distance, distance,
                       distance_quad_ratio, eps_split_bounds, ratio_to_angle,
                       verify_distance_bounds)
from .grid import GridFunction, centered_origins, load_grid, sample_function
from .kernel import (KernelEvaluator, KernelProfile, center_extent_for_time,
                     check_gaussian_estimates, check_heat_equation,
                     check_radon_reduction, check_semigroup,
                     convolution_partner_grid, default_evaluator, eval_kernel,
                     grid_mass, heisenberg_center_slice, kernel_mass_constant,
                     radial_fourier, sample_kernel, z_extent_for_time)
from .operators import (apply_vector_field, group_convolve, sublaplacian,
                        sublaplacian_composed)
from .schoenberg import (SchoenbergMeasure, build_counterexample,
                         build_counterexample_grid,
                         check_dominance_under_heat_flow, fit_measure,
                         mass_near_zero_ratio, reconstruct_kernel_slice)
from .schrodinger import (DecayProfile, PlanarField, PotentialSpec,
                          check_hypothesis, fit_decay, free_evolve,
                          magnetic_matrix, magnetic_residual,
                          partial_fourier_center, radon_reduce,
                          rescale_to_unit_time, sharpness_experiment)

__version__ = "1.0.0"
