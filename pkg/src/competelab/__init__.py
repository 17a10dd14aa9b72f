"""Finite-difference laboratory for competing-species energy minimization."""

from .geometry import (Grid, DomainMask, build_rectangle, build_disc,
                       build_wedge, scale_mask, save_mask, load_mask)
from .model import (Nonlinearity, ScaledFamily, Coupling, logistic,
                    custom_nonlinearity, scaled_family, identical_family,
                    f_eval, F_eval, coupling_quartic, custom_coupling,
                    adaptive_simpson, cutoff_phi)
from .energy import (DensityField, SpeciesSystem, EnergyReport, laplacian,
                     dirichlet_energy, energy_total, energy_gradient,
                     single_species_energy, lambda1, rescaled_copy,
                     bilinear_sample, field_to_csv, field_to_pgm)
from .solve import (SolverConfig, MinimizeResult, minimize_free,
                    minimize_partition, minimize_multistart,
                    default_initializers, kappa_continuation,
                    segregation_projection, merged_system, alive_flags)

__version__ = "0.1.0"
