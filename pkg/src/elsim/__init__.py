"""Distributed output-feedback tracking control of networked two-link arms.

Library layout:

- :mod:`elsim.dynamics` - exact arm model (inertia, Coriolis, gravity).
- :mod:`elsim.transform` - velocity transform, partial linearization,
  reconstructed state.
- :mod:`elsim.network` - topology algebra, M-matrix certificate, gain bounds.
- :mod:`elsim.observer` - decoupled velocity observers.
- :mod:`elsim.controller` - distributed sliding-mode control law.
- :mod:`elsim.leader` - reference-trajectory models.
- :mod:`elsim.engine` - closed-loop simulation, metrics, model-equivalence
  oracles.
- :mod:`elsim.verify` - the runnable verification suites.
- :mod:`elsim.cli` - ``elsim run | check-gains | verify``.
"""

from .dynamics import (ManipulatorParams, ParameterError, PhysicalParams,
                       coriolis, derive_o_params, forward_dynamics, gravity,
                       inertia, inertia_bounds, kinetic_energy)
from .engine import (ScenarioConfig, Simulation, SimulationDiverged, TrajectoryLog,
                     WorldState, energy_drift, equivalence_oracle, metrics, run)
from .network import (GainFeasibility, GainSet, PQCertificate, SpanningTreeError,
                      Topology, TopologyError, gain_bounds, has_spanning_tree,
                      laplacian, pq_certificate)
from .transform import (a_matrix, d_matrix, delta, delta_bar, drift, input_to_torque,
                        pde_residual, transform_matrix, transformed_derivative,
                        x_initial, x_path_update)

__version__ = "0.1.0"
