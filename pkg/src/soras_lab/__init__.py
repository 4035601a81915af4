"""One-level SORAS / ORAS preconditioners for reaction-convection-diffusion on strip domains."""

from .assembly import Coefficients, SourceTerm, assemble_global, assemble_local, robin_alpha, supg_tau
from .decomp import PUKind, add_overlap, build_decomposition, build_pu, partition_strips
from .krylov import SolveReport, gmres_right, random_initial_guess
from .mesh import Mesh, build_strip_mesh
from .schwarz import SchwarzPreconditioner, Variant, build_preconditioner

__version__ = "0.1.0"

__all__ = [
    "Coefficients", "SourceTerm", "assemble_global", "assemble_local", "robin_alpha", "supg_tau",
    "PUKind", "add_overlap", "build_decomposition", "build_pu", "partition_strips",
    "SolveReport", "gmres_right", "random_initial_guess",
    "Mesh", "build_strip_mesh",
    "SchwarzPreconditioner", "Variant", "build_preconditioner",
]
