"""2-D triangular meshes: MSH 2.2 ingestion, a built-in circular-strand
mesher, and oriented edge connectivity.

Region ids: 0 is insulation, 1..N are the conductor strands.  All
coordinates are meters in the (u, v) plane at w = 0; ingested files must
have a zero third coordinate.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .errors import MeshError, MshParseError

INSULATION = 0

# Roles accepted in the physical-tag dictionary.
_ROLE_BOUNDARY = "boundary"
_ROLE_INSULATION = "insulation"
_ROLE_CONDUCTOR_PREFIX = "conductor:"


@dataclass
class Mesh:
    """Triangulated cable cross-section with region tags and oriented edges.

    ``triangles`` are stored counter-clockwise (positive signed area).
    Edge arrays are populated by :func:`build_edges`; global edge
    orientation runs from the lower to the higher node index.
    """

    nodes: np.ndarray            # (Nn, 2) float64
    triangles: np.ndarray        # (Nt, 3) int32, CCW
    tri_region: np.ndarray       # (Nt,) int32, 0 = insulation, i >= 1 = strand i
    n_conductors: int

    edges: np.ndarray | None = None           # (Ne, 2) int32, sorted pairs
    tri_edges: np.ndarray | None = None       # (Nt, 3) int32, edge opposite local vertex
    tri_edge_signs: np.ndarray | None = None  # (Nt, 3) int8, +1 if triangle agrees
    edge_tri_count: np.ndarray | None = None  # (Ne,) int32
    boundary_edge_mask: np.ndarray | None = None
    boundary_node_mask: np.ndarray | None = None
    # 0 = not on any conductor boundary, i >= 1 = on boundary of strand i
    node_conductor_boundary: np.ndarray | None = None
    # edges whose two incident triangles lie in different regions
    interface_edge_mask: np.ndarray | None = None

    _areas: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def n_edges(self):
        return 0 if self.edges is None else self.edges.shape[0]

    def signed_areas(self):
        p = self.nodes[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))

    def areas(self):
        if self._areas is None:
            self._areas = self.signed_areas()
        return self._areas

    def centroids(self):
        return self.nodes[self.triangles].mean(axis=1)

    def region_area(self, region):
        return float(self.areas()[self.tri_region == region].sum())

    def conductor_triangles(self, i):
        return np.flatnonzero(self.tri_region == i)


def _orient_ccw(nodes, triangles):
    """Flip triangles with negative signed area in place."""
    p = nodes[triangles]
    signed = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
              - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = signed < 0.0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    return triangles


def build_edges(mesh):
    """Derive the unique edge set, per-triangle incidence and boundary markers.

    Local edge ``l`` of a triangle is the side opposite local vertex ``l``.
    The incidence sign is +1 when the triangle traverses the edge from its
    lower-index node to its higher-index node.  Raises on non-manifold
    edges (more than two incident triangles).
    """
    tris = mesh.triangles
    # side l of triangle t: (node[l+1], node[l+2])
    raw = np.stack([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]], axis=1)
    flat = raw.reshape(-1, 2)
    signs = np.where(flat[:, 0] < flat[:, 1], 1, -1).astype(np.int8)
    sorted_pairs = np.sort(flat, axis=1)
    edges, inverse, counts = np.unique(
        sorted_pairs, axis=0, return_inverse=True, return_counts=True)
    if np.any(counts > 2):
        bad = edges[counts > 2][0]
        raise MeshError(f"non-manifold edge between nodes {bad[0]} and {bad[1]}")

    mesh.edges = edges.astype(np.int32)
    mesh.tri_edges = inverse.reshape(-1, 3).astype(np.int32)
    mesh.tri_edge_signs = signs.reshape(-1, 3)
    mesh.edge_tri_count = counts.astype(np.int32)
    mesh.boundary_edge_mask = counts == 1

    boundary_nodes = np.zeros(mesh.n_nodes, dtype=bool)
    boundary_nodes[edges[mesh.boundary_edge_mask].ravel()] = True
    mesh.boundary_node_mask = boundary_nodes

    # Region of each incident triangle per edge: interface edges separate
    # insulation from a conductor (or would separate two conductors, which
    # validation rejects).
    ne = edges.shape[0]
    reg_a = np.full(ne, -1, dtype=np.int32)
    reg_b = np.full(ne, -1, dtype=np.int32)
    tri_idx = np.repeat(np.arange(tris.shape[0]), 3)
    for e, t in zip(inverse, tri_idx):
        if reg_a[e] < 0:
            reg_a[e] = mesh.tri_region[t]
        else:
            reg_b[e] = mesh.tri_region[t]
    interior = reg_b >= 0
    mesh.interface_edge_mask = interior & (reg_a != reg_b)

    node_cb = np.zeros(mesh.n_nodes, dtype=np.int32)
    for e in np.flatnonzero(mesh.interface_edge_mask):
        cond = max(reg_a[e], reg_b[e])
        other = min(reg_a[e], reg_b[e])
        if other != INSULATION:
            raise MeshError(
                f"conductors {other} and {cond} share an edge; strands must be disjoint")
        for n in edges[e]:
            if node_cb[n] not in (0, cond):
                raise MeshError(
                    f"node {n} lies on the boundary of two conductors")
            node_cb[n] = cond
    mesh.node_conductor_boundary = node_cb
    return mesh


def validate_mesh(mesh):
    """Check the structural invariants of a fully built mesh."""
    if mesh.edges is None:
        build_edges(mesh)
    if np.any(mesh.signed_areas() <= 0.0):
        raise MeshError("mesh contains degenerate or negatively oriented triangles")
    regions = np.unique(mesh.tri_region)
    if regions.min() < 0 or regions.max() > mesh.n_conductors:
        raise MeshError("triangle region tag out of range")
    for i in range(1, mesh.n_conductors + 1):
        if not np.any(mesh.tri_region == i):
            raise MeshError(f"conductor {i} has no triangles (empty region)")
        if not _region_edge_connected(mesh, i):
            raise MeshError(f"conductor {i} is not edge-connected")
    euler = mesh.n_nodes - mesh.n_edges + mesh.n_triangles
    if euler != 1:
        raise MeshError(f"Euler characteristic {euler} != 1; not a triangulated disk")
    if not _boundary_single_loop(mesh):
        raise MeshError("outer boundary is not a single closed loop")
    return mesh


def _region_edge_connected(mesh, region):
    tris = np.flatnonzero(mesh.tri_region == region)
    if tris.size == 0:
        return False
    # union-find over triangles joined through shared edges
    pos = {t: k for k, t in enumerate(tris)}
    parent = list(range(tris.size))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    edge_owner = {}
    for t in tris:
        for e in mesh.tri_edges[t]:
            if e in edge_owner:
                ra, rb = find(pos[t]), find(edge_owner[e])
                if ra != rb:
                    parent[ra] = rb
            else:
                edge_owner[e] = pos[t]
    root = find(0)
    return all(find(k) == root for k in range(tris.size))


def _boundary_single_loop(mesh):
    bedges = mesh.edges[mesh.boundary_edge_mask]
    if bedges.shape[0] == 0:
        return False
    adj = {}
    for a, b in bedges:
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    if any(len(v) != 2 for v in adj.values()):
        return False
    start = int(bedges[0, 0])
    prev, cur = None, start
    visited = 1
    while True:
        nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
        prev, cur = cur, nxt
        if cur == start:
            break
        visited += 1
        if visited > len(adj):
            return False
    return visited == len(adj)


# ---------------------------------------------------------------------------
# MSH 2.2 ASCII ingestion and export
# ---------------------------------------------------------------------------

def parse_tag_dictionary(raw):
    """Validate a {physical tag -> role} mapping from configuration.

    Roles: "boundary", "insulation", or "conductor:<i>" with i >= 1.
    """
    tags = {}
    for key, role in raw.items():
        tag = int(key)
        if role == _ROLE_BOUNDARY or role == _ROLE_INSULATION:
            tags[tag] = role
        elif isinstance(role, str) and role.startswith(_ROLE_CONDUCTOR_PREFIX):
            idx = role[len(_ROLE_CONDUCTOR_PREFIX):]
            if not idx.isdigit() or int(idx) < 1:
                raise MeshError(f"bad conductor role {role!r} for tag {tag}")
            tags[tag] = role
        else:
            raise MeshError(f"unknown role {role!r} for physical tag {tag}")
    return tags


class _LineReader:
    def __init__(self, stream):
        self._lines = stream.read().splitlines()
        self.lineno = 0

    def next(self):
        if self.lineno >= len(self._lines):
            raise MshParseError("unexpected end of file", self.lineno)
        line = self._lines[self.lineno].strip()
        self.lineno += 1
        return line

    def at_end(self):
        return self.lineno >= len(self._lines)


def parse_msh(source, tag_roles):
    """Parse an MSH 2.2 ASCII file into a validated :class:`Mesh`.

    ``source`` is a path or a text stream.  ``tag_roles`` maps physical
    tags to region roles (see :func:`parse_tag_dictionary`).  Third node
    coordinates must all be zero: the file describes the w = 0 plane.
    """
    tag_roles = parse_tag_dictionary(tag_roles)
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as f:
            rd = _LineReader(f)
    else:
        rd = _LineReader(source)

    header = rd.next()
    if header != "$MeshFormat":
        raise MshParseError("expected $MeshFormat", rd.lineno)
    fmt = rd.next().split()
    if len(fmt) != 3 or fmt[0] != "2.2" or fmt[1] != "0":
        raise MshParseError(f"unsupported mesh format {' '.join(fmt)!r}; need '2.2 0 8'",
                            rd.lineno)
    if rd.next() != "$EndMeshFormat":
        raise MshParseError("expected $EndMeshFormat", rd.lineno)

    nodes = None
    node_index = {}
    elements_seen = False
    tri_nodes, tri_tags = [], []
    line_nodes, line_tags = [], []

    while not rd.at_end():
        section = rd.next()
        if section == "":
            continue
        if section == "$PhysicalNames":
            try:
                count = int(rd.next())
            except ValueError:
                raise MshParseError("malformed $PhysicalNames count", rd.lineno)
            for _ in range(count):
                rd.next()  # names are informational; roles come from the config
            if rd.next() != "$EndPhysicalNames":
                raise MshParseError("expected $EndPhysicalNames", rd.lineno)
        elif section == "$Nodes":
            try:
                count = int(rd.next())
            except ValueError:
                raise MshParseError("malformed $Nodes count", rd.lineno)
            nodes = np.empty((count, 2), dtype=float)
            for k in range(count):
                parts = rd.next().split()
                if len(parts) != 4:
                    raise MshParseError("malformed node line", rd.lineno)
                try:
                    nid = int(parts[0])
                    x, y, z = (float(p) for p in parts[1:])
                except ValueError:
                    raise MshParseError("malformed node line", rd.lineno)
                if z != 0.0:
                    raise MshParseError(
                        f"node {nid} has non-zero third coordinate {z}", rd.lineno)
                if nid in node_index:
                    raise MshParseError(f"duplicate node id {nid}", rd.lineno)
                node_index[nid] = k
                nodes[k] = (x, y)
            if rd.next() != "$EndNodes":
                raise MshParseError("expected $EndNodes", rd.lineno)
        elif section == "$Elements":
            if nodes is None:
                raise MshParseError("$Elements before $Nodes", rd.lineno)
            elements_seen = True
            try:
                count = int(rd.next())
            except ValueError:
                raise MshParseError("malformed $Elements count", rd.lineno)
            for _ in range(count):
                parts = rd.next().split()
                if len(parts) < 3:
                    raise MshParseError("malformed element line", rd.lineno)
                try:
                    etype = int(parts[1])
                    ntags = int(parts[2])
                    tags = [int(t) for t in parts[3:3 + ntags]]
                    conn = [int(n) for n in parts[3 + ntags:]]
                except ValueError:
                    raise MshParseError("malformed element line", rd.lineno)
                if ntags < 1 or not tags:
                    raise MshParseError("element carries no physical tag", rd.lineno)
                phys = tags[0]
                if phys not in tag_roles:
                    raise MshParseError(f"unknown physical tag {phys}", rd.lineno)
                role = tag_roles[phys]
                if etype == 1:
                    if len(conn) != 2:
                        raise MshParseError("line element needs 2 nodes", rd.lineno)
                    if role != _ROLE_BOUNDARY:
                        raise MshParseError(
                            f"line element tagged {role!r}; expected boundary", rd.lineno)
                    line_nodes.append(conn)
                    line_tags.append(phys)
                elif etype == 2:
                    if len(conn) != 3:
                        raise MshParseError("triangle element needs 3 nodes", rd.lineno)
                    if role == _ROLE_BOUNDARY:
                        raise MshParseError(
                            "triangle element tagged as boundary", rd.lineno)
                    tri_nodes.append(conn)
                    tri_tags.append(role)
                else:
                    raise MshParseError(f"unsupported element type {etype}", rd.lineno)
            if rd.next() != "$EndElements":
                raise MshParseError("expected $EndElements", rd.lineno)
        else:
            raise MshParseError(f"unexpected section {section!r}", rd.lineno)

    if nodes is None:
        raise MshParseError("missing $Nodes section", rd.lineno)
    if not elements_seen:
        raise MshParseError("missing $Elements section", rd.lineno)
    if not tri_nodes:
        raise MshParseError("file contains no triangles", rd.lineno)

    conductor_ids = sorted(
        int(r[len(_ROLE_CONDUCTOR_PREFIX):]) for r in set(tag_roles.values())
        if r.startswith(_ROLE_CONDUCTOR_PREFIX))
    n_cond = len(conductor_ids)
    if conductor_ids != list(range(1, n_cond + 1)):
        raise MeshError(f"conductor indices {conductor_ids} must span 1..N without gaps")

    try:
        triangles = np.array(
            [[node_index[n] for n in t] for t in tri_nodes], dtype=np.int32)
    except KeyError as exc:
        raise MeshError(f"element references unknown node id {exc.args[0]}")
    region = np.array(
        [0 if r == _ROLE_INSULATION else int(r[len(_ROLE_CONDUCTOR_PREFIX):])
         for r in tri_tags], dtype=np.int32)

    for i in range(1, n_cond + 1):
        if not np.any(region == i):
            raise MeshError(f"conductor {i} has no triangles (empty region)")
    if not np.any(region == INSULATION) and any(
            r == _ROLE_INSULATION for r in tag_roles.values()):
        raise MeshError("insulation region is empty")

    triangles = _orient_ccw(nodes, triangles)
    mesh = Mesh(nodes=nodes, triangles=triangles, tri_region=region,
                n_conductors=n_cond)
    build_edges(mesh)

    # Boundary line elements, when present, must lie on the topological boundary.
    if line_nodes:
        bset = {tuple(e) for e in mesh.edges[mesh.boundary_edge_mask].tolist()}
        for (a, b) in line_nodes:
            try:
                pair = tuple(sorted((node_index[a], node_index[b])))
            except KeyError as exc:
                raise MeshError(f"boundary line references unknown node id {exc.args[0]}")
            if pair not in bset:
                raise MeshError(
                    f"boundary line ({a}, {b}) is not on the mesh boundary")

    return validate_mesh(mesh)


def default_tag_roles(n_conductors):
    """Physical tags used by :func:`write_msh`: 1 insulation, 100+i strand i,
    1000 boundary."""
    roles = {1: _ROLE_INSULATION, 1000: _ROLE_BOUNDARY}
    for i in range(1, n_conductors + 1):
        roles[100 + i] = f"{_ROLE_CONDUCTOR_PREFIX}{i}"
    return roles


def write_msh(mesh, target):
    """Serialize a mesh to MSH 2.2 ASCII; returns the tag dictionary used.

    Output is byte-deterministic for identical meshes, so a parse ->
    write -> parse cycle is a fixed point.
    """
    roles = default_tag_roles(mesh.n_conductors)
    phys_of_region = {0: 1}
    for i in range(1, mesh.n_conductors + 1):
        phys_of_region[i] = 100 + i

    out = io.StringIO()
    out.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
    out.write("$PhysicalNames\n")
    names = [(2, 1, _ROLE_INSULATION), (1, 1000, _ROLE_BOUNDARY)]
    names += [(2, 100 + i, f"{_ROLE_CONDUCTOR_PREFIX}{i}")
              for i in range(1, mesh.n_conductors + 1)]
    out.write(f"{len(names)}\n")
    for dim, tag, name in sorted(names, key=lambda r: r[1]):
        out.write(f'{dim} {tag} "{name}"\n')
    out.write("$EndPhysicalNames\n$Nodes\n")
    out.write(f"{mesh.n_nodes}\n")
    for k, (x, y) in enumerate(mesh.nodes, start=1):
        out.write(f"{k} {x:.17g} {y:.17g} 0\n")
    out.write("$EndNodes\n$Elements\n")

    bedges = mesh.edges[mesh.boundary_edge_mask]
    out.write(f"{bedges.shape[0] + mesh.n_triangles}\n")
    eid = 1
    for a, b in bedges:
        out.write(f"{eid} 1 2 1000 1000 {a + 1} {b + 1}\n")
        eid += 1
    for t in range(mesh.n_triangles):
        phys = phys_of_region[int(mesh.tri_region[t])]
        n0, n1, n2 = (int(n) + 1 for n in mesh.triangles[t])
        out.write(f"{eid} 2 2 {phys} {phys} {n0} {n1} {n2}\n")
        eid += 1
    out.write("$EndElements\n")

    text = out.getvalue()
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        target.write(text)
    return roles


# ---------------------------------------------------------------------------
# Built-in mesher: shield disk with circular strands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiskMeshSpec:
    """Shield disk of radius ``shield_radius`` containing circular strands.

    ``strands`` is a sequence of (center_u, center_v, radius) triples;
    ``h`` is the target edge length.  Strand shapes are circles in the
    w = 0 plane; the physical conductor is their helicoidal extrusion.
    """

    shield_radius: float
    strands: tuple
    h: float

    def __post_init__(self):
        strands = tuple((float(c[0]), float(c[1]), float(c[2])) for c in self.strands)
        object.__setattr__(self, "strands", strands)
        if not (self.h > 0.0):
            raise MeshError("target edge length h must be positive")
        if not (self.shield_radius > 0.0):
            raise MeshError("shield radius must be positive")
        if not strands:
            raise MeshError("at least one strand is required")
        for k, (cu, cv, r) in enumerate(strands):
            if r <= 0.0:
                raise MeshError(f"strand {k + 1} has non-positive radius")
            if np.hypot(cu, cv) + r >= self.shield_radius:
                raise MeshError(f"strand {k + 1} is not strictly inside the shield")
        for a in range(len(strands)):
            for b in range(a + 1, len(strands)):
                ca, cb = strands[a], strands[b]
                if np.hypot(ca[0] - cb[0], ca[1] - cb[1]) <= ca[2] + cb[2]:
                    raise MeshError(f"strands {a + 1} and {b + 1} overlap")

    @property
    def n_strands(self):
        return len(self.strands)


def _circle_points(cu, cv, r, n, phase=0.0):
    ang = phase + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([cu + r * np.cos(ang), cv + r * np.sin(ang)])


def generate_disk_mesh(spec, smoothing_sweeps=12, min_angle_deg=20.0):
    """Triangulate the shield disk with nodes placed exactly on every
    strand circle and on the shield circle.

    Construction: fixed node rings on each circle plus staggered offset
    rings on both sides, a hexagonal lattice fill elsewhere, Laplacian
    smoothing of the loose lattice, and a final Delaunay triangulation.
    Region tags come from centroid-in-circle tests; a straddle check
    guarantees no triangle crosses a material interface.  Deterministic:
    no randomness anywhere.
    """
    R = spec.shield_radius
    h = spec.h

    # Strand circles are sampled denser than h: the conductor region is the
    # inscribed polygon, whose area deficit ~ (2 pi^2 / 3) / n^2 directly
    # biases the DC resistance, so n is cheap insurance.
    circle_oversample = 1.4
    n_shield = int(np.ceil(2.0 * np.pi * R / h))
    circle_counts = []
    for k, (cu, cv, r) in enumerate(spec.strands):
        n_natural = int(np.round(2.0 * np.pi * r / h))
        if n_natural < 8:
            raise MeshError(
                f"h = {h} too coarse for strand {k + 1}: only {n_natural} "
                "circle nodes (< 8)")
        circle_counts.append(int(np.round(circle_oversample * n_natural)))

    fixed = [_circle_points(0.0, 0.0, R, n_shield)]
    ring_specs = []  # (cu, cv, radius, spacing) bands that exclude lattice points
    s_shield = 2.0 * np.pi * R / n_shield
    fixed.append(_circle_points(0.0, 0.0, R - 0.87 * s_shield, n_shield,
                                phase=np.pi / n_shield))
    ring_specs.append((0.0, 0.0, R, s_shield))
    ring_specs.append((0.0, 0.0, R - 0.87 * s_shield, s_shield))

    for (cu, cv, r), n in zip(spec.strands, circle_counts):
        s = 2.0 * np.pi * r / n
        fixed.append(_circle_points(cu, cv, r, n))
        ring_specs.append((cu, cv, r, s))
        for offset in (-0.87 * s, 0.87 * s):
            r_off = r + offset
            if r_off > 0.25 * r:
                fixed.append(_circle_points(cu, cv, r_off, n, phase=np.pi / n))
                ring_specs.append((cu, cv, r_off, s))
    fixed_pts = np.vstack(fixed)

    # Hexagonal lattice fill, excluding bands around every placed ring.
    dy = h * np.sqrt(3.0) / 2.0
    ny = int(np.ceil(2.0 * R / dy)) + 2
    nx = int(np.ceil(2.0 * R / h)) + 2
    iy = np.arange(ny)
    ys = -R + (iy - 0.5) * dy
    rows = []
    for row, y in zip(iy, ys):
        xs = -R + (np.arange(nx) + (0.5 if row % 2 else 0.0)) * h
        rows.append(np.column_stack([xs, np.full_like(xs, y)]))
    lattice = np.vstack(rows)

    keep = np.hypot(lattice[:, 0], lattice[:, 1]) < R - 1.05 * s_shield
    for cu, cv, r, s in ring_specs:
        d = np.hypot(lattice[:, 0] - cu, lattice[:, 1] - cv)
        keep &= np.abs(d - r) > 0.62 * s
    lattice = lattice[keep]

    # Ensure tiny strands still get an interior site.
    extra = []
    for (cu, cv, r), n in zip(spec.strands, circle_counts):
        if lattice.size:
            d = np.hypot(lattice[:, 0] - cu, lattice[:, 1] - cv)
            if not np.any(d < 0.45 * r):
                extra.append([cu, cv])
        else:
            extra.append([cu, cv])
    if extra:
        lattice = np.vstack([lattice] + [np.asarray(extra)])

    points = np.vstack([fixed_pts, lattice])
    n_fixed = fixed_pts.shape[0]

    # Freeze lattice points hugging a ring so smoothing cannot break the
    # Gabriel property of the circle chords.
    movable = np.ones(points.shape[0], dtype=bool)
    movable[:n_fixed] = False
    for cu, cv, r, s in ring_specs:
        d = np.hypot(points[:, 0] - cu, points[:, 1] - cv)
        movable &= np.abs(d - r) > 1.35 * s

    for sweep in range(smoothing_sweeps):
        tri = Delaunay(points)
        indptr, indices = tri.vertex_neighbor_vertices
        new_pts = points.copy()
        for p in np.flatnonzero(movable):
            nb = indices[indptr[p]:indptr[p + 1]]
            if nb.size:
                new_pts[p] = points[nb].mean(axis=0)
        points = new_pts

    tri = Delaunay(points)
    triangles = _orient_ccw(points, tri.simplices.astype(np.int32).copy())

    # Drop zero-area slivers on the hull (collinear shield nodes cannot
    # occur, but keep the guard cheap).
    areas = 0.5 * np.abs(
        (points[triangles[:, 1], 0] - points[triangles[:, 0], 0])
        * (points[triangles[:, 2], 1] - points[triangles[:, 0], 1])
        - (points[triangles[:, 1], 1] - points[triangles[:, 0], 1])
        * (points[triangles[:, 2], 0] - points[triangles[:, 0], 0]))
    if np.any(areas < 1e-16):
        raise MeshError("mesher produced a degenerate triangle")

    centroids = points[triangles].mean(axis=1)
    region = np.zeros(triangles.shape[0], dtype=np.int32)
    for k, (cu, cv, r) in enumerate(spec.strands, start=1):
        inside = np.hypot(centroids[:, 0] - cu, centroids[:, 1] - cv) < r
        region[inside] = k

    _check_no_straddle(points, triangles, spec)
    _check_min_angle(points, triangles, min_angle_deg)

    mesh = Mesh(nodes=points, triangles=triangles, tri_region=region,
                n_conductors=spec.n_strands)
    build_edges(mesh)
    return validate_mesh(mesh)


def _check_no_straddle(points, triangles, spec):
    p = points[triangles]
    for k, (cu, cv, r) in enumerate(spec.strands, start=1):
        d = np.hypot(p[..., 0] - cu, p[..., 1] - cv)
        tol = 1e-9 * r
        has_inside = np.any(d < r - tol, axis=1)
        has_outside = np.any(d > r + tol, axis=1)
        if np.any(has_inside & has_outside):
            t = int(np.flatnonzero(has_inside & has_outside)[0])
            raise MeshError(
                f"triangle {t} straddles the boundary circle of strand {k}")


def _check_min_angle(points, triangles, min_angle_deg):
    p = points[triangles]
    angles = np.empty((triangles.shape[0], 3))
    for loc in range(3):
        a = p[:, loc]
        b = p[:, (loc + 1) % 3]
        c = p[:, (loc + 2) % 3]
        v1 = b - a
        v2 = c - a
        cosang = np.einsum("ij,ij->i", v1, v2) / (
            np.linalg.norm(v1, axis=1) * np.linalg.norm(v2, axis=1))
        angles[:, loc] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    worst = float(angles.min())
    if worst < min_angle_deg:
        raise MeshError(
            f"mesh quality too low: min angle {worst:.2f} deg < {min_angle_deg} deg")


def single_triangle_mesh():
    """Smallest valid mesh: one insulation triangle (testing aid)."""
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    triangles = np.array([[0, 1, 2]], dtype=np.int32)
    mesh = Mesh(nodes=nodes, triangles=triangles,
                tri_region=np.zeros(1, dtype=np.int32), n_conductors=0)
    return build_edges(mesh)
