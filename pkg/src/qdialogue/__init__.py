"""Simulator of a two-way quantum dialogue over single photons carrying
polarization and spatial-mode qubits, protected by an entangled quantum key
and decoy-photon checks."""

from qdialogue.errors import ConfigError, ContractViolation, SessionAborted

__version__ = "0.1.0"

__all__ = ["ConfigError", "ContractViolation", "SessionAborted", "__version__"]
