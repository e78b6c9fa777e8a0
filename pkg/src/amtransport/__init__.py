"""Transport through irregular optical lattices under amplitude modulation."""
from .effective import (EffectiveModel, Resonance, build_effective_single,
                        build_effective_two_site, resonance_frequencies)
from .errors import (ConfigError, DegenerateSteadyStateError, FitError, IntegrationError,
                     PhysicsError, QuadratureError, SolverError, SteadyStateError)
from .experiments import Experiment, GainReport, RunConfig
from .fock import FockBasis, build_hamiltonian, gauge_out_uniform
from .lattice import (BoseHubbardParams, LatticeSpec, TunnelingFit, fit_tunneling,
                      onsite_interaction, params_at_depth, site_energy, tunneling)
from .lindblad import (CurrentTrace, PeriodicSteadyState, ReservoirSpec, current,
                       liouvillian_apply, periodic_steady_state, propagate, stationary_state,
                       steady_current)
from .modulation import ModulationScheme, modulated_hamiltonian, stationary_hamiltonian

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
