"""Mixed finite element computation of 2D Helmholtz transmission
eigenvalues, with single-level and multi-level solvers."""

from .coefficient import Coefficient, parse_coefficient
from .eigensolver import (EigenPair, compare_eqslantless, shift_invert_arnoldi,
                          sort_eqslantless, verify_conjugate_closure)
from .estimator import TransmissionEigenSolver
from .fespace import FieldVector, LagrangeSpace, ProductSpace
from .mesh import (Mesh, build_builtin_domain, load_mesh, mesh_size,
                   refine_red, save_mesh, validate)
from .multilevel import (LevelHierarchy, algorithm_multilevel, build_hierarchy,
                         build_convergence_report, convergence_orders,
                         single_level_solve)

__version__ = "0.1.0"

__all__ = [
    "Coefficient", "parse_coefficient",
    "EigenPair", "compare_eqslantless", "shift_invert_arnoldi",
    "sort_eqslantless", "verify_conjugate_closure",
    "TransmissionEigenSolver",
    "FieldVector", "LagrangeSpace", "ProductSpace",
    "Mesh", "build_builtin_domain", "load_mesh", "mesh_size",
    "refine_red", "save_mesh", "validate",
    "LevelHierarchy", "algorithm_multilevel", "build_hierarchy",
    "build_convergence_report", "convergence_orders", "single_level_solve",
]
