"""Bounds on the energy distribution and its moments from measurements of other observables."""

from .bounds import (MeasurementSet, ProbabilityBounds, QuadraticConstraint, analytic_interval, cell_bounds,
                     collective_constraints, combine_cells, overlap_data, pointwise_bounds, povm_pointwise_bounds,
                     quadratic_forms, quality_factors, sweep, time_grid)
from .estimator import EstimateResult, FeasibleSet, OptimizerSettings, constrained_interval, lp_oracle
from .measurements import (Povm, ProjectiveBasis, coarse_energy_povm, computational_basis,
                           klocal_ground_state_basis, klocal_observable_basis_type1, klocal_observable_basis_type2,
                           observational_entropy, outcome_probabilities, pauli_x_basis)
from .models import ModelSpec, SymmetrySector, build_hamiltonian, full_hamiltonian, sector_basis
from .numeric import POLICY, InfeasibleBoundsError
from .spectral import Spectrum, eig_hermitian, evolve, partial_trace
from .states import StateSpec, ground_state, haar_random, pure_thermal

__version__ = "0.1.0"
