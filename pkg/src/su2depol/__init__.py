"""SU(2)-invariant depolarization of two-mode quantum light."""
from .channel import (ChannelRun, RadialLaw, apply_channel, batch_stderr, channel_batches, compose_small_steps,
                      invariance_check, small_step_law)
from .dynamics import (MultipoleCoeffs, StepSizeError, covariance_evolution, decay_rate, evolve, evolve_alt,
                       evolve_multipole, evolve_ode, multipole_decompose, multipole_reconstruct, stokes_decay,
                       variance_evolution)
from .estimators import GellMannTransformer, PolarizationFeatures, SU2Depolarizer
from .gellmann import (detect_channel_form, d_of_t, evolve_coords, from_coords, gamma_matrix, invariant_subspaces,
                       phi_matrix, to_coords)
from .operators import CoherentPoint, coherent_state, rotation_of, stokes_operators, su2_unitary
from .polarization import PolarizationReport, degree_pq, degree_ps, make_grid, q_function
from .states import (DensityState, StateValidationError, coherent, covariance, fock, maximally_mixed, noon,
                     principal_components, purity, random_state, stokes_parameters, total_variance,
                     trace_distance, twin)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
