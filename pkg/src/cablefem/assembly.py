"""Assembly of the reduced time-harmonic system.

Unknowns are the free in-plane edge coefficients, the free axial nodal
coefficients, and one constant per conductor.  For omega > 0 the
conductor constant is carried in the scaled form p_i = -g_i / (j omega)
(g_i is the axial component of grad v in conductor i, V/m), which makes
the system complex symmetric

    [ S + j w M   -j w C ] [a]   [0  ]
    [ -j w C^T     j w D ] [p] = [I_i]

while the constraint row still enforces the prescribed total conductor
current: integral of the reconstructed axial J over strand i equals I_i.
At omega = 0 that scaling degenerates; the static path assembles the
unscaled block-triangular form

    [ S   C ] [a]   [0   ]
    [ 0   D ] [g] = [-I_i]

whose constraint rows give g_i = -R_dc I_i directly.  The static path
requires the gauge tree to span the conductor interiors as well, because
the conduction term no longer regularizes the in-plane space there.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import elements
from .errors import CableFemError
from .spaces import DofClass


@dataclass(frozen=True)
class Excitation:
    """Per-conductor complex current amplitudes [A] at frequency f [Hz].

    Amplitudes are peak values (time factor e^{+j w t}); RMS is
    amplitude / sqrt(2).
    """

    currents: np.ndarray
    frequency: float

    def __post_init__(self):
        cur = np.asarray(self.currents, dtype=complex)
        if cur.ndim != 1:
            raise ValueError("currents must be a 1-D sequence")
        if not np.all(np.isfinite(cur)):
            raise ValueError("currents must be finite")
        if not (self.frequency >= 0.0 and np.isfinite(self.frequency)):
            raise ValueError("frequency must be finite and non-negative")
        object.__setattr__(self, "currents", cur)

    @property
    def omega(self):
        return 2.0 * np.pi * self.frequency

    @property
    def n_conductors(self):
        return self.currents.shape[0]


@dataclass
class LinearSystem:
    """Complex sparse system with its provenance.

    ``static`` marks the omega = 0 block-triangular form; every
    omega > 0 system is complex symmetric (K == K^T, unconjugated).
    """

    matrix: sp.csc_matrix
    rhs: np.ndarray
    dofmap: object
    omega: float
    static: bool
    assembly_seconds: float = field(default=0.0)

    @property
    def size(self):
        return self.rhs.shape[0]

    def symmetry_defect(self):
        """max |K - K^T| relative to max |K|."""
        diff = (self.matrix - self.matrix.T).tocoo()
        denom = np.abs(self.matrix.data).max() if self.matrix.nnz else 1.0
        if diff.nnz == 0:
            return 0.0
        return float(np.abs(diff.data).max() / denom)

    def canonical_triplets(self):
        """(row, col, value) triplets sorted by (row, col) — a stable
        fingerprint for determinism checks."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]


@dataclass(frozen=True)
class LocalBlocks:
    """Element integrals of one triangle (see elements.local_blocks)."""

    stiffness: np.ndarray   # (6, 6)
    mass: np.ndarray        # (6, 6)
    coupling: np.ndarray    # (6,)
    constraint: float
    area: float


def element_matrices(coords, region, twist, mat, edge_signs=None):
    """Local blocks for a single triangle given its (3, 2) vertex
    coordinates, region id and materials.

    ``edge_signs`` defaults to the orientation implied by ascending
    local vertex order.  This is the scalar mirror of the vectorized
    assembly path and exists as a testable contract.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (3, 2):
        raise ValueError("coords must have shape (3, 2)")
    if edge_signs is None:
        edge_signs = np.ones((1, 3))
    else:
        edge_signs = np.asarray(edge_signs, dtype=float).reshape(1, 3)
    nodes = coords
    tris = np.array([[0, 1, 2]], dtype=np.int32)
    try:
        blocks = elements.local_blocks(nodes, tris, edge_signs,
                                       np.array([region]), twist, mat)
    except ValueError as exc:
        raise CableFemError(str(exc))
    return LocalBlocks(stiffness=blocks["stiffness"][0],
                       mass=blocks["mass"][0],
                       coupling=blocks["coupling"][0],
                       constraint=float(blocks["constraint"][0]),
                       area=float(blocks["areas"][0]))


def _local_dofs(mesh, dofmap):
    """Global dof index per (triangle, local dof); -1 where constrained."""
    ldof = np.empty((mesh.n_triangles, elements.N_LOCAL), dtype=np.int64)
    ldof[:, :3] = dofmap.edge_dof[mesh.tri_edges]
    ldof[:, 3:] = dofmap.node_dof[mesh.triangles]
    return ldof


def assemble(mesh, dofmap, twist, mat, exc):
    """Build the global system for the given mesh, gauge and excitation."""
    t0 = time.perf_counter()
    if exc.n_conductors != mesh.n_conductors:
        raise CableFemError(
            f"excitation has {exc.n_conductors} currents but mesh has "
            f"{mesh.n_conductors} conductors")
    if mat.n_conductors != mesh.n_conductors:
        raise CableFemError(
            f"materials define {mat.n_conductors} conductors but mesh has "
            f"{mesh.n_conductors}")
    omega = exc.omega
    static = omega == 0.0
    if static and not dofmap.static_gauge and mesh.n_conductors > 0:
        raise CableFemError(
            "omega = 0 requires a dof map whose gauge tree spans the "
            "conductor interiors (build_spanning_tree(..., span_conductors=True))")
    if static and twist.tau != 0.0:
        # The static gauge eliminates in-plane equations whose consistency
        # needs the conduction term; with twist the eliminated rows carry
        # physics.  Use a small nonzero frequency instead.
        raise CableFemError(
            "the omega = 0 path supports untwisted geometries only (tau = 0); "
            "use a small nonzero frequency for twisted cables")

    try:
        blocks = elements.local_blocks(mesh.nodes, mesh.triangles,
                                       mesh.tri_edge_signs.astype(float),
                                       mesh.tri_region, twist, mat)
    except ValueError as exc_:
        raise CableFemError(str(exc_))

    ldof = _local_dofs(mesh, dofmap)
    m = dofmap.size
    nl = elements.N_LOCAL

    rows, cols, vals = [], [], []

    # a-a block: stiffness everywhere plus j w (mass) in conductors.
    if static:
        kloc = blocks["stiffness"].astype(complex)
    else:
        kloc = blocks["stiffness"] + 1j * omega * blocks["mass"]
    ra = np.repeat(ldof, nl, axis=1).ravel()
    ca = np.tile(ldof, (1, nl)).ravel()
    va = kloc.reshape(-1)
    keep = (ra >= 0) & (ca >= 0)
    rows.append(ra[keep])
    cols.append(ca[keep])
    vals.append(va[keep])

    # Conductor coupling and constraint blocks.
    cond_tris = np.flatnonzero(mesh.tri_region > 0)
    if cond_tris.size:
        cdof = dofmap.const_dof[mesh.tri_region[cond_tris] - 1]
        coup = blocks["coupling"][cond_tris]
        ld = ldof[cond_tris]
        keep = ld >= 0
        a_idx = ld[keep]
        c_idx = np.repeat(cdof, nl)[keep.ravel()]
        cval = coup[keep]
        if static:
            # a-row coupling C only; the constraint row is decoupled.
            rows.append(a_idx)
            cols.append(c_idx)
            vals.append(cval.astype(complex))
        else:
            scaled = -1j * omega * cval
            rows.append(a_idx)
            cols.append(c_idx)
            vals.append(scaled)
            rows.append(c_idx)
            cols.append(a_idx)
            vals.append(scaled)
        dval = blocks["constraint"][cond_tris]
        rows.append(cdof)
        cols.append(cdof)
        vals.append((dval if static else 1j * omega * dval).astype(complex))

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    if not np.all(np.isfinite(vals)):
        raise CableFemError("assembled matrix contains NaN or Inf")

    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(m, m)).tocsc()
    matrix.sum_duplicates()

    rhs = np.zeros(m, dtype=complex)
    rhs[dofmap.const_dof] = -exc.currents if static else exc.currents
    if not np.all(np.isfinite(rhs)):
        raise CableFemError("right-hand side contains NaN or Inf")

    return LinearSystem(matrix=matrix, rhs=rhs, dofmap=dofmap, omega=omega,
                        static=static,
                        assembly_seconds=time.perf_counter() - t0)


def constants_from_solution(system, x):
    """Physical per-conductor constants g_i [V/m] from the raw solution."""
    p = x[system.dofmap.const_dof]
    if system.static:
        return p.copy()
    return -1j * system.omega * p
