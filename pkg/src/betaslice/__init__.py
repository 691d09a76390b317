"""Numerical laboratory for beta-expansions, Bernoulli-convolution
densities, the Lebesgue-preserving area dynamics, and Hausdorff-measure
bounds for slices through self-similar sets."""

from .density import (DensityDiagnostics, DensityGrid, evaluate_density,
                      l1_distance, sample_density, solve_density, ulam_step)
from .dynamics import (PhiPoint, check_measure_preservation, fiber_interval,
                       phi_code, phi_hat_step, phi_step)
from .equidistribution import (EmpiricalMeasure, growth_series, ks_distance,
                               orbit_measure_conditional, orbit_measure_uniform,
                               wasserstein1)
from .expansions import (OrbitMultiset, RandomState, count_series,
                         enumerate_orbit, greedy_expansion, lazy_expansion,
                         random_beta_step)
from .fibers import (FiberDistribution, HausdorffBounds, UndefinedFiberError,
                     cylinder_mass, fiber_distribution, hausdorff_bounds,
                     hausdorff_exponent)
from .ifs import (IfsSpec, ProjectionSpec, SliceReport, build_slice_report,
                  check_slice_coding, enumerate_slice_cylinders,
                  estimate_ratio_constant, marstrand_report, moran_dimension,
                  odd_even_convolution, preset, project_ifs,
                  slice_cylinder_mass, slice_lower_bound,
                  solve_projected_density)
from .numerics import (AlgebraicValue, BetaParam, DomainError, Interval,
                       Region, apply_map, apply_word, bernoulli_cylinder_mass,
                       regions, shift_word)

__version__ = "0.1.0"
