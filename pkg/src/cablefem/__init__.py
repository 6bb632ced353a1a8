"""cablefem: 2-D finite-element eddy-current solver for twisted
power-cable cross-sections.

The helicoidal symmetry of a twisted cable is folded into anisotropic
material tensors on a single cross-section plane, solved with Whitney
edge elements plus a nodal axial component and per-conductor current
constraints, and post-processed back to physical Cartesian fields and
AC losses.
"""

__version__ = "0.1.0"

from .assembly import Excitation, LinearSystem, assemble, element_matrices
from .errors import (CableFemError, ConfigError, MeshError, MshParseError,
                     SingularSystemError, SolverToleranceError)
from .helicoid import (MU0, NU0, Frame, MaterialSpec, Point3, TwistMap,
                       conductivity_tensor, jacobian_inv_map,
                       map_to_cartesian, map_to_helicoidal,
                       reluctivity_tensor)
from .mesh import (DiskMeshSpec, Mesh, build_edges, generate_disk_mesh,
                   parse_msh, write_msh)
from .post import (LineProbe, LossReport, Solution, circulation_of_h,
                   compute_losses, conductor_currents, line_probe,
                   reconstruct_current_density, reconstruct_magnetic_field)
from .solve import SolveReport, solve
from .spaces import DofClass, DofMap, SpanningTree, build_dof_map, build_spanning_tree

__all__ = [
    "CableFemError", "ConfigError", "DiskMeshSpec", "DofClass", "DofMap",
    "Excitation", "Frame", "LineProbe", "LinearSystem", "LossReport",
    "MaterialSpec", "Mesh", "MeshError", "MshParseError", "MU0", "NU0",
    "Point3", "SingularSystemError", "SolveReport", "Solution",
    "SolverToleranceError", "SpanningTree", "TwistMap", "assemble",
    "build_dof_map", "build_edges", "build_spanning_tree",
    "circulation_of_h", "compute_losses", "conductivity_tensor",
    "conductor_currents", "element_matrices", "generate_disk_mesh",
    "jacobian_inv_map", "line_probe", "map_to_cartesian",
    "map_to_helicoidal", "parse_msh", "reconstruct_current_density",
    "reconstruct_magnetic_field", "reluctivity_tensor", "solve",
    "write_msh",
]
