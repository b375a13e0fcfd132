"""Finite-element laboratory for a coupled heat / thin-shell / bulk-elastic system.

The package builds a box-in-box tetrahedral geometry, assembles the coupled
energy Gram and generator with exact trace identifications, time-steps the
evolution with energy accounting, and runs frequency-domain diagnostics
(shifted resolvent solves, clamped-solid spectrum, harmonic extension,
traction recovery).
"""

from .assembly import (
    DofMap,
    RawBlocks,
    StateVector,
    SystemMatrices,
    assemble_energy,
    assemble_generator,
    assemble_system,
    build_dof_map,
    energy_inner,
    energy_norm,
)
from .elements import LameParams
from .geometry import GeometryConfig, Mesh, build_mesh, face_frame, shared_edge_table

__version__ = "0.1.0"

__all__ = [
    "DofMap",
    "GeometryConfig",
    "LameParams",
    "Mesh",
    "RawBlocks",
    "StateVector",
    "SystemMatrices",
    "assemble_energy",
    "assemble_generator",
    "assemble_system",
    "build_dof_map",
    "build_mesh",
    "energy_inner",
    "energy_norm",
    "face_frame",
    "shared_edge_table",
    "__version__",
]
