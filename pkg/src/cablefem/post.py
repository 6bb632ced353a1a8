"""Reconstruction of physical fields and loss post-processing.

The reduced solution lives on the w = 0 plane; w-invariance of the
helicoidal fields lets any Cartesian point be evaluated by mapping it to
helicoidal coordinates and sampling the plane solution at (u, v).  The
Cartesian current density and magnetic field follow from the inverse-map
Jacobian:

    J_xyz = -sigma_xyz J^-T (j w A_uvw + grad v_uvw)
    H_xyz = nu_xyz J curl A_uvw            (det J = 1)

Losses are integrated with the same degree-4 rule as assembly so energy
and loss bookkeeping agree to roundoff.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import elements
from .assembly import constants_from_solution
from .errors import CableFemError
from .helicoid import Frame, Point3, map_to_helicoidal, rotation_about_axis
from .quadrature import DEG4_BARY, DEG4_WEIGHTS
from .spaces import DofClass


@dataclass
class Solution:
    """Solved coefficient vector plus everything needed to evaluate it."""

    x: np.ndarray
    mesh: object
    dofmap: object
    twist: object
    materials: object
    excitation: object
    omega: float
    g: np.ndarray            # physical per-conductor constants [V/m]
    edge_coeffs: np.ndarray  # (Ne,) complex, zeros where constrained
    node_coeffs: np.ndarray  # (Nn,) complex
    _locator: object = field(default=None, repr=False)

    @classmethod
    def from_system(cls, system, x, mesh, twist, materials, excitation):
        if x.shape[0] != system.dofmap.size:
            raise CableFemError(
                f"solution length {x.shape[0]} != dof count {system.dofmap.size}")
        if not np.all(np.isfinite(x.view(float))):
            raise CableFemError("solution vector contains NaN or Inf")
        dofmap = system.dofmap
        edge = np.zeros(mesh.n_edges, dtype=complex)
        free = dofmap.edge_dof >= 0
        edge[free] = x[dofmap.edge_dof[free]]
        node = np.zeros(mesh.n_nodes, dtype=complex)
        free_n = dofmap.node_dof >= 0
        node[free_n] = x[dofmap.node_dof[free_n]]
        g = constants_from_solution(system, x)
        return cls(x=x, mesh=mesh, dofmap=dofmap, twist=twist,
                   materials=materials, excitation=excitation,
                   omega=system.omega, g=g, edge_coeffs=edge,
                   node_coeffs=node)

    def locator(self):
        if self._locator is None:
            self._locator = _BucketLocator(self.mesh)
        return self._locator


class _BucketLocator:
    """Uniform bucket grid over triangle bounding boxes.

    Candidate triangles are tested in ascending index order, so points on
    shared edges deterministically resolve to the lowest-index element.
    """

    def __init__(self, mesh, bary_tol=1e-10):
        self.mesh = mesh
        self.bary_tol = bary_tol
        pts = mesh.nodes
        self.lo = pts.min(axis=0)
        self.hi = pts.max(axis=0)
        n = max(4, int(np.sqrt(mesh.n_triangles)))
        self.shape = (n, n)
        self.cell = (self.hi - self.lo) / n
        self.cell[self.cell == 0.0] = 1.0
        buckets = [[] for _ in range(n * n)]
        tri_pts = pts[mesh.triangles]
        lo_idx = self._clip_index(tri_pts.min(axis=1))
        hi_idx = self._clip_index(tri_pts.max(axis=1))
        for t in range(mesh.n_triangles):
            for ix in range(lo_idx[t, 0], hi_idx[t, 0] + 1):
                for iy in range(lo_idx[t, 1], hi_idx[t, 1] + 1):
                    buckets[ix * n + iy].append(t)
        self.buckets = [np.array(sorted(b), dtype=np.int64) for b in buckets]

    def _clip_index(self, pts):
        idx = ((pts - self.lo) / self.cell).astype(int)
        return np.clip(idx, 0, self.shape[0] - 1)

    def candidates(self, p):
        ix, iy = self._clip_index(np.asarray(p, dtype=float)[None, :])[0]
        return self.buckets[ix * self.shape[0] + iy]

    def locate(self, p, prefer_conductor=False):
        """Containing triangle index and barycentric coords, or (None, None).

        With ``prefer_conductor`` a conductor-region containing triangle
        wins over an insulation one: points exactly on a strand boundary
        then evaluate the conductor-side limit.
        """
        mesh = self.mesh
        best = None
        for t in self.candidates(p):
            lam = _barycentric(mesh.nodes[mesh.triangles[t]], p)
            if lam.min() >= -self.bary_tol:
                if not prefer_conductor or mesh.tri_region[t] > 0:
                    return int(t), lam
                if best is None:
                    best = (int(t), lam)
        if best is not None:
            return best
        return None, None


def _barycentric(tri_pts, p):
    v0 = tri_pts[1] - tri_pts[0]
    v1 = tri_pts[2] - tri_pts[0]
    d = p - tri_pts[0]
    det = v0[0] * v1[1] - v0[1] * v1[0]
    l1 = (d[0] * v1[1] - d[1] * v1[0]) / det
    l2 = (v0[0] * d[1] - v0[1] * d[0]) / det
    return np.array([1.0 - l1 - l2, l1, l2])


def _plane_jacobian_invt(u, v, tau):
    """J^-T of the inverse map at w = 0 (rows of J0^-1 transposed)."""
    return np.array([[1.0, 0.0, 0.0],
                     [0.0, 1.0, 0.0],
                     [tau * v, -tau * u, 1.0]])


def _plane_jacobian(u, v, tau):
    return np.array([[1.0, 0.0, -tau * v],
                     [0.0, 1.0, tau * u],
                     [0.0, 0.0, 1.0]])


def evaluate_potentials(sol, p_uv, element=None, lam=None):
    """A_uvw, curl A_uvw and grad v_uvw at a point of the w = 0 plane.

    Returns ``(A, curlA, gradv, region)`` as complex 3-vectors plus the
    region id; raises when the point lies outside the mesh.
    """
    mesh = sol.mesh
    if element is None:
        element, lam = sol.locator().locate(np.asarray(p_uv, dtype=float))
        if element is None:
            raise CableFemError(f"point {tuple(p_uv)} is outside the mesh")
    tri = mesh.triangles[element]
    areas, grad = elements.tri_geometry(mesh.nodes, mesh.triangles[element:element + 1])
    area = areas[0]
    grad = grad[0]
    signs = mesh.tri_edge_signs[element]
    edge_ids = mesh.tri_edges[element]

    a_uv = np.zeros(2, dtype=complex)
    curl_w = 0.0 + 0.0j
    for loc in range(3):
        coeff = sol.edge_coeffs[edge_ids[loc]]
        if coeff == 0.0:
            continue
        i, j = (loc + 1) % 3, (loc + 2) % 3
        w = lam[i] * grad[j] - lam[j] * grad[i]
        a_uv += coeff * signs[loc] * w
        curl_w += coeff * signs[loc] / area

    node_vals = sol.node_coeffs[tri]
    a_w = complex(np.dot(lam, node_vals))
    grad_aw = node_vals @ grad  # (du Aw, dv Aw)

    a = np.array([a_uv[0], a_uv[1], a_w])
    curl = np.array([grad_aw[1], -grad_aw[0], curl_w])
    region = int(mesh.tri_region[element])
    gradv = np.zeros(3, dtype=complex)
    if region > 0:
        gradv[2] = sol.g[region - 1]
    return a, curl, gradv, region


def reconstruct_current_density(sol, p):
    """Cartesian J [A/m^2] at a Cartesian point inside a conductor."""
    p = p if isinstance(p, Point3) else Point3(np.asarray(p, dtype=float),
                                               Frame.CARTESIAN)
    q = map_to_helicoidal(p, sol.twist)
    u, v, w = q.coords
    element, lam = sol.locator().locate(np.array([u, v]), prefer_conductor=True)
    if element is None:
        raise CableFemError(f"point {tuple(p.coords)} is outside the domain")
    a, _, gradv, region = evaluate_potentials(sol, (u, v), element, lam)
    if region == 0:
        raise CableFemError(f"point {tuple(p.coords)} is not in a conductor")
    sigma = sol.materials.sigma_of_region(region)
    drive = 1j * sol.omega * a + gradv
    jinvt = rotation_about_axis(w * sol.twist.tau) @ _plane_jacobian_invt(
        u, v, sol.twist.tau)
    return -sigma * (jinvt @ drive)


def reconstruct_magnetic_field(sol, p):
    """Cartesian H [A/m] at a Cartesian point of the domain."""
    p = p if isinstance(p, Point3) else Point3(np.asarray(p, dtype=float),
                                               Frame.CARTESIAN)
    q = map_to_helicoidal(p, sol.twist)
    u, v, w = q.coords
    _, curl, _, region = evaluate_potentials(sol, (u, v))
    nu = sol.materials.nu_of_region(region)
    jac = rotation_about_axis(w * sol.twist.tau) @ _plane_jacobian(
        u, v, sol.twist.tau)
    return nu * (jac @ curl)


def _conductor_quadrature_fields(sol):
    """Drive field j w A + grad v and sigma tensors at the conductor
    quadrature points; mirrors the assembly integrals exactly."""
    mesh = sol.mesh
    cond = np.flatnonzero(mesh.tri_region > 0)
    tris = mesh.triangles[cond]
    signs = mesh.tri_edge_signs[cond].astype(float)
    areas, grad = elements.tri_geometry(mesh.nodes, tris)
    vals = elements.basis_values(grad, signs, DEG4_BARY)
    pts = elements.quad_points_uv(mesh.nodes, tris, DEG4_BARY)

    coeffs = np.empty((cond.size, elements.N_LOCAL), dtype=complex)
    coeffs[:, :3] = sol.edge_coeffs[mesh.tri_edges[cond]]
    coeffs[:, 3:] = sol.node_coeffs[tris]

    a_q = np.einsum("ta,tqai->tqi", coeffs, vals)
    drive = 1j * sol.omega * a_q
    region = mesh.tri_region[cond]
    drive[..., 2] += sol.g[region - 1][:, None]

    sigma = np.array([sol.materials.sigma_of_region(int(r)) for r in region])
    sig_t, _ = elements.material_tensors_at(pts, sol.twist.tau,
                                            sigma=sigma[:, None])
    w_area = DEG4_WEIGHTS[None, :] * areas[:, None]
    return cond, region, drive, sig_t, w_area


def conductor_currents(sol):
    """Reconstructed total current per conductor, integral of J over the
    strand cross-section (equals the prescribed currents through the
    constraint rows)."""
    _, region, drive, sig_t, w_area = _conductor_quadrature_fields(sol)
    jw = -np.einsum("tqi,tqi->tq", sig_t[..., 2, :], drive)
    per_tri = np.einsum("tq,tq->t", w_area, jw)
    out = np.zeros(sol.mesh.n_conductors, dtype=complex)
    np.add.at(out, region - 1, per_tri)
    return out


@dataclass(frozen=True)
class LossReport:
    """Time-average ohmic losses per unit cable length."""

    per_conductor: np.ndarray   # (N,) W/m
    total: float                # W/m
    scaled_total: float         # W, total * beta
    beta: float                 # m
    currents: np.ndarray        # (N,) complex A

    def as_dict(self):
        return {
            "per_conductor_W_per_m": [float(p) for p in self.per_conductor],
            "total_W_per_m": float(self.total),
            "scaled_total_W": float(self.scaled_total),
            "length_m": float(self.beta),
            "currents_A_re": [float(c.real) for c in self.currents],
            "currents_A_im": [float(c.imag) for c in self.currents],
        }


def compute_losses(sol):
    """Per-conductor and total time-average loss per unit length.

    P_i = 1/2 int over strand i of (j w A + grad v)^H sigma_uvw
    (j w A + grad v) dS — identical to the Cartesian loss-density
    integral because det J = 1.
    """
    _, region, drive, sig_t, w_area = _conductor_quadrature_fields(sol)
    dens = np.einsum("tqi,tqij,tqj->tq", np.conj(drive), sig_t, drive).real
    per_tri = 0.5 * np.einsum("tq,tq->t", w_area, dens)
    per_cond = np.zeros(sol.mesh.n_conductors)
    np.add.at(per_cond, region - 1, per_tri)
    total = float(per_cond.sum())
    beta = sol.twist.beta
    return LossReport(per_conductor=per_cond, total=total,
                      scaled_total=total * beta, beta=beta,
                      currents=conductor_currents(sol))


def scale_losses(total_w_per_m, length_m):
    """Length-related loss [W/m] scaled to a cable length [m]."""
    return total_w_per_m * length_m


def circulation_of_h(sol, radius, center=(0.0, 0.0), n_samples=720, z=0.0):
    """Line integral of H_xyz around a circle (midpoint rule).

    By the integral law of Ampere this equals the enclosed total current.
    """
    ang = 2.0 * np.pi * (np.arange(n_samples) + 0.5) / n_samples
    dl = 2.0 * np.pi * radius / n_samples
    total = 0.0 + 0.0j
    for a in ang:
        p = np.array([center[0] + radius * np.cos(a),
                      center[1] + radius * np.sin(a), z])
        h = reconstruct_magnetic_field(sol, p)
        tangent = np.array([-np.sin(a), np.cos(a), 0.0])
        total += np.dot(h, tangent) * dl
    return total


@dataclass(frozen=True)
class LineProbe:
    """Point samples of |J| and |H| along a straight Cartesian segment."""

    s: np.ndarray          # (n,) arc-length parameter [m]
    points: np.ndarray     # (n, 3) Cartesian sample points
    abs_j: np.ndarray      # (n,) peak magnitude of J [A/m^2]
    abs_h: np.ndarray      # (n,) peak magnitude of H [A/m]
    in_domain: np.ndarray  # (n,) bool


def line_probe(sol, start, end, n_samples):
    """Sample |J_xyz| and |H_xyz| along the segment start -> end.

    Conductor-exterior points report J = 0; samples falling outside the
    mesh are flagged (NaN magnitudes) rather than fatal.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    if start.shape == (2,):
        start = np.append(start, 0.0)
    if end.shape == (2,):
        end = np.append(end, 0.0)
    ts = np.linspace(0.0, 1.0, n_samples)
    pts = start[None, :] + ts[:, None] * (end - start)[None, :]
    s = ts * np.linalg.norm(end - start)

    abs_j = np.full(n_samples, np.nan)
    abs_h = np.full(n_samples, np.nan)
    inside = np.zeros(n_samples, dtype=bool)
    for k, p in enumerate(pts):
        q = map_to_helicoidal(Point3(p, Frame.CARTESIAN), sol.twist)
        u, v, _ = q.coords
        element, lam = sol.locator().locate(np.array([u, v]),
                                            prefer_conductor=True)
        if element is None:
            continue
        inside[k] = True
        _, _, _, region = evaluate_potentials(sol, (u, v), element, lam)
        if region > 0:
            j = reconstruct_current_density(sol, p)
            abs_j[k] = np.linalg.norm(np.abs(j))
        else:
            abs_j[k] = 0.0
        h = reconstruct_magnetic_field(sol, p)
        abs_h[k] = np.linalg.norm(np.abs(h))
    return LineProbe(s=s, points=pts, abs_j=abs_j, abs_h=abs_h,
                     in_domain=inside)


# ---------------------------------------------------------------------------
# Exports (all byte-deterministic for identical inputs)
# ---------------------------------------------------------------------------

def _fmt(x):
    return f"{x:.17g}"


def export_probe_csv(probe, path):
    """CSV contract: header ``s,x,y,z,absJ,absH`` in SI units."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("s,x,y,z,absJ,absH\n")
        for k in range(probe.s.shape[0]):
            row = [probe.s[k], *probe.points[k], probe.abs_j[k], probe.abs_h[k]]
            f.write(",".join(_fmt(v) for v in row) + "\n")


def export_loss_json(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(report.as_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def export_loss_csv(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("conductor,loss_W_per_m,current_A_re,current_A_im\n")
        for i, (p, c) in enumerate(zip(report.per_conductor, report.currents),
                                   start=1):
            f.write(f"{i},{_fmt(p)},{_fmt(c.real)},{_fmt(c.imag)}\n")
        f.write(f"total,{_fmt(report.total)},,\n")
        f.write(f"scaled_total_W,{_fmt(report.scaled_total)},,\n")


def cell_fields(sol):
    """Re/Im of J_xyz and H_xyz evaluated at every triangle centroid."""
    mesh = sol.mesh
    tris = mesh.triangles
    signs = mesh.tri_edge_signs.astype(float)
    areas, grad = elements.tri_geometry(mesh.nodes, tris)
    center = np.full((1, 3), 1.0 / 3.0)
    vals = elements.basis_values(grad, signs, center)[:, 0]  # (Nt, 6, 3)
    curls = elements.basis_curls(areas, grad, signs)

    coeffs = np.empty((mesh.n_triangles, elements.N_LOCAL), dtype=complex)
    coeffs[:, :3] = sol.edge_coeffs[mesh.tri_edges]
    coeffs[:, 3:] = sol.node_coeffs[tris]

    a = np.einsum("ta,tai->ti", coeffs, vals)
    curl = np.einsum("ta,tai->ti", coeffs, curls)
    cent = mesh.centroids()
    tau = sol.twist.tau

    region = mesh.tri_region
    sigma = np.array([sol.materials.sigma_of_region(int(r)) for r in region])
    nu = np.array([sol.materials.nu_of_region(int(r)) for r in region])

    drive = 1j * sol.omega * a
    g_full = np.zeros(mesh.n_triangles, dtype=complex)
    mask = region > 0
    g_full[mask] = sol.g[region[mask] - 1]
    drive[:, 2] += g_full

    u, v = cent[:, 0], cent[:, 1]
    jinvt = np.zeros((mesh.n_triangles, 3, 3))
    jinvt[:, 0, 0] = jinvt[:, 1, 1] = jinvt[:, 2, 2] = 1.0
    jinvt[:, 2, 0] = tau * v
    jinvt[:, 2, 1] = -tau * u
    jfwd = np.zeros((mesh.n_triangles, 3, 3))
    jfwd[:, 0, 0] = jfwd[:, 1, 1] = jfwd[:, 2, 2] = 1.0
    jfwd[:, 0, 2] = -tau * v
    jfwd[:, 1, 2] = tau * u

    j_xyz = -sigma[:, None] * np.einsum("tij,tj->ti", jinvt, drive)
    j_xyz[~mask] = 0.0
    h_xyz = nu[:, None] * np.einsum("tij,tj->ti", jfwd, curl)
    return j_xyz, h_xyz


def export_vtk(sol, path):
    """Legacy VTK 2.0 ASCII unstructured grid with per-triangle Re/Im of
    J_xyz and H_xyz (evaluated at centroids)."""
    mesh = sol.mesh
    j_xyz, h_xyz = cell_fields(sol)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# vtk DataFile Version 2.0\n")
        f.write("cablefem reconstructed fields\n")
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {mesh.n_nodes} double\n")
        for x, y in mesh.nodes:
            f.write(f"{_fmt(x)} {_fmt(y)} 0\n")
        nt = mesh.n_triangles
        f.write(f"CELLS {nt} {4 * nt}\n")
        for a, b, c in mesh.triangles:
            f.write(f"3 {a} {b} {c}\n")
        f.write(f"CELL_TYPES {nt}\n")
        f.write("\n".join(["5"] * nt) + "\n")
        f.write(f"CELL_DATA {nt}\n")
        f.write("FIELD fields 5\n")
        arrays = [
            ("J_re", j_xyz.real), ("J_im", j_xyz.imag),
            ("H_re", h_xyz.real), ("H_im", h_xyz.imag),
            ("region", mesh.tri_region[:, None].astype(float)),
        ]
        for name, arr in arrays:
            ncomp = arr.shape[1]
            f.write(f"{name} {ncomp} {nt} double\n")
            for row in arr:
                f.write(" ".join(_fmt(x) for x in row) + "\n")
