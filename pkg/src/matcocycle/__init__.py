"""Thermodynamic formalism for locally constant matrix cocycles over subshifts of finite type.

Singular value potentials, subadditive pressure, Lyapunov spectrum entropy by
Legendre duality, structural checks (fiber bunching, pinching, twisting,
quasi-multiplicativity, domination) and induced dominated subsystems.
"""

from .cocycle import CocycleSpec, check_fiber_bunched, global_holonomy, stable_holonomy, unstable_holonomy
from .dominated import build_induced, entropy_exponent_transfer, find_loop_for_word, induced_pressure, pressure_comparison
from .errors import (BudgetExceeded, InvariantViolation, MatCocycleError, SearchExhausted, SpecParseError,
                     SpecValidationError)
from .measures import MarkovMeasure, lyapunov_vector, maximize_variational, variational_gap
from .multilinear import exterior_power, log_psi_q, phi_s, singular_values
from .pressure import PressureEstimate, estimate_pressure, partition_function
from .serialize import SCHEMA_VERSION, load_cocycle_spec
from .spectrum import SpectrumPoint, estimate_spectrum_domain, legendre_entropy, level_set_entropy_oracle
from .structure import (check_domination, check_pinching, check_twisting, check_typical,
                        homoclinic_loop_matrix, probe_quasi_multiplicativity)
from .symbolic import HomoclinicPointSym, PeriodicPointSym, Point, SubshiftSpec

__version__ = "0.1.0"
