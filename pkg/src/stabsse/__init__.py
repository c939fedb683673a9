"""Stochastic series expansion with exact stabilizer-state matrix elements."""

__version__ = "0.1.0"

from .engine import (Configuration, RunResult, TemperatureRecord, estimate_error,
                     evaluate_matrix_element, mc_cycle, propose_operator_update,
                     propose_state_update, run_schedule, temperature_grid)
from .errors import CapabilityError, EstimationError, ModelError, TruncationError
from .models import (CX, HamiltonianCatalog, OperatorTerm, Projector, build_cnot_chain,
                     build_field_only, build_tfi_chain, build_z2_plaquette_model)
from .pauli import PauliString, multiply
from .stabilizer import MatrixElement, StabilizerState, from_basis_state, inner_product

__all__ = [
    "CX", "CapabilityError", "Configuration", "EstimationError", "HamiltonianCatalog",
    "MatrixElement", "ModelError", "OperatorTerm", "PauliString", "Projector", "RunResult",
    "StabilizerState", "TemperatureRecord", "TruncationError", "build_cnot_chain",
    "build_field_only", "build_tfi_chain", "build_z2_plaquette_model", "estimate_error",
    "evaluate_matrix_element", "from_basis_state", "inner_product", "mc_cycle", "multiply",
    "propose_operator_update", "propose_state_update", "run_schedule", "temperature_grid",
]
