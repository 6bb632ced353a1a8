"""Discrete function spaces and global unknown numbering.

Three unknown families share one global index range:

* in-plane edge coefficients (Whitney edge functions) — tree-cotree
  gauged inside the insulation, fixed to zero on the outer boundary,
  free in and around the conductors;
* nodal coefficients for the axial component A_w — fixed to zero on the
  outer boundary (PEC shield), free elsewhere;
* one axial constant per conductor for the electric-potential gradient.

The gauge tree is a breadth-first forest over the insulation edge graph
whose roots (outer boundary and every conductor boundary) are collapsed
into a single pre-connected ground set; with separate root potentials the
in-plane curl-curl operator would keep one watershed-gradient null vector
per conductor.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import MeshError
from .mesh import INSULATION


class DofClass(IntEnum):
    FREE = 0
    GAUGED_ZERO = 1
    BOUNDARY_ZERO = 2


@dataclass(frozen=True)
class SpanningTree:
    """Gauge forest over the insulation (optionally also conductor) edges."""

    tree_edge_mask: np.ndarray       # (Ne,) bool
    candidate_edge_mask: np.ndarray  # (Ne,) bool, edges eligible for gauging
    ground_node_mask: np.ndarray     # (Nn,) bool, collapsed root set
    seed: int
    constrain_boundary: bool
    spans_conductors: bool

    @property
    def n_tree_edges(self):
        return int(self.tree_edge_mask.sum())


def _edge_regions(mesh):
    """Per-edge region ids of the incident triangles (-1 where absent)."""
    ne = mesh.n_edges
    reg_a = np.full(ne, -1, dtype=np.int32)
    reg_b = np.full(ne, -1, dtype=np.int32)
    for t in range(mesh.n_triangles):
        r = mesh.tri_region[t]
        for e in mesh.tri_edges[t]:
            if reg_a[e] < 0:
                reg_a[e] = r
            else:
                reg_b[e] = r
    return reg_a, reg_b


def _neighbor_key(seed):
    if seed == 0:
        return lambda node: node
    # Deterministic seed-dependent shuffle of the BFS expansion order.
    mix = np.uint64(2654435761 * (seed + 1))
    return lambda node: int((np.uint64(node + 1) * mix) % np.uint64(2**31))


def build_spanning_tree(mesh, seed=0, constrain_boundary=True,
                        span_conductors=False):
    """Breadth-first gauge tree over the collapsed insulation graph.

    The graph's nodes are the interior insulation nodes plus one collapsed
    supernode for the outer boundary and one per conductor boundary; its
    edges are the mesh edges with all incident triangles in the
    insulation (boundary edges excluded when the boundary is
    constrained).  One connected tree ties every supernode and interior
    node together.  This collapse is load-bearing twice over: eliminating
    a gauged edge's test equation is only valid when the indicator
    gradient of the subtree below it annihilates the full operator, which
    requires tree subtrees to contain conductor boundaries *entirely or
    not at all*; and leaving the conductor boundaries as disconnected
    roots would keep one watershed-gradient null vector per strand.

    ``span_conductors`` switches to the static gauge (tree through
    conductor interiors, rooted at the outer boundary) used by the
    omega = 0 path.  Deterministic for a given mesh and seed; different
    seeds give different trees with identical physics.
    """
    if mesh.edges is None:
        raise MeshError("mesh edges not built")
    reg_a, reg_b = _edge_regions(mesh)

    if span_conductors:
        # Static gauge: without the conduction term every gradient field
        # is a null vector, so the tree must span all nodes — conductor
        # interiors and interface loops included.
        candidates = np.ones(mesh.n_edges, dtype=bool)
        if constrain_boundary:
            candidates &= ~mesh.boundary_edge_mask
        super_id = np.arange(mesh.n_nodes, dtype=np.int64)
        if constrain_boundary:
            super_id[mesh.boundary_node_mask] = -1
    else:
        insul = (reg_a == INSULATION) & ((reg_b == INSULATION) | (reg_b < 0))
        candidates = insul & ~mesh.interface_edge_mask
        if constrain_boundary:
            candidates &= ~mesh.boundary_edge_mask
        # Collapsed ids: -1 outer boundary, -(1+i) conductor i, else self.
        super_id = np.arange(mesh.n_nodes, dtype=np.int64)
        cb = mesh.node_conductor_boundary
        super_id[cb > 0] = -(1 + cb[cb > 0].astype(np.int64))
        if constrain_boundary:
            super_id[mesh.boundary_node_mask] = -1

    tree = _collapsed_bfs_tree(mesh, candidates, super_id, seed,
                               constrain_boundary)
    ground = super_id < 0
    return SpanningTree(tree_edge_mask=tree, candidate_edge_mask=candidates,
                        ground_node_mask=ground, seed=seed,
                        constrain_boundary=constrain_boundary,
                        spans_conductors=span_conductors)


def _collapsed_bfs_tree(mesh, candidates, super_id, seed, constrain_boundary):
    """BFS spanning tree over the graph with supernodes collapsed.

    Visiting any member mesh-node of a supernode marks the whole
    supernode visited; the edge that first reaches it becomes the single
    tree edge tying that supernode in.
    """
    adjacency = [[] for _ in range(mesh.n_nodes)]
    for e in np.flatnonzero(candidates):
        a, b = mesh.edges[e]
        adjacency[a].append((int(b), int(e)))
        adjacency[b].append((int(a), int(e)))
    key = _neighbor_key(seed)
    for lst in adjacency:
        lst.sort(key=lambda item: key(item[0]))

    graph_nodes = np.zeros(mesh.n_nodes, dtype=bool)
    if np.any(candidates):
        graph_nodes[mesh.edges[candidates].ravel()] = True

    members = {}
    for n in np.flatnonzero(graph_nodes):
        members.setdefault(int(super_id[n]), []).append(int(n))

    if not members:
        return np.zeros(mesh.n_edges, dtype=bool)

    # Root: the outer-boundary supernode when present, else the smallest id.
    if constrain_boundary and -1 in members:
        root = -1
    else:
        root = min(members, key=lambda s: (s >= 0, key(s) if s >= 0 else s))

    visited_super = {root}
    tree = np.zeros(mesh.n_edges, dtype=bool)
    queue = deque(sorted(members[root], key=key))
    while queue:
        node = queue.popleft()
        for nbr, e in adjacency[node]:
            s = int(super_id[nbr])
            if s in visited_super:
                continue
            visited_super.add(s)
            tree[e] = True
            queue.extend(sorted(members.get(s, [nbr]), key=key))

    unreached = set(members) - visited_super
    if unreached:
        raise MeshError(
            f"insulation region disconnected: {len(unreached)} graph nodes "
            "cannot be reached by the gauge tree")
    return tree


@dataclass(frozen=True)
class DofMap:
    """Global unknown numbering: free edges, then free A_w nodes, then the
    per-conductor constants."""

    edge_class: np.ndarray  # (Ne,) uint8 of DofClass
    edge_dof: np.ndarray    # (Ne,) int32, -1 where constrained
    node_class: np.ndarray  # (Nn,) uint8
    node_dof: np.ndarray    # (Nn,) int32
    const_dof: np.ndarray   # (N,) int32
    n_edge_free: int
    n_node_free: int
    n_conductors: int
    constrain_boundary: bool
    static_gauge: bool

    @property
    def size(self):
        return self.n_edge_free + self.n_node_free + self.n_conductors

    def counts(self):
        return {
            "edges_free": self.n_edge_free,
            "edges_gauged": int(np.sum(self.edge_class == DofClass.GAUGED_ZERO)),
            "edges_boundary": int(np.sum(self.edge_class == DofClass.BOUNDARY_ZERO)),
            "nodes_free": self.n_node_free,
            "nodes_boundary": int(np.sum(self.node_class == DofClass.BOUNDARY_ZERO)),
            "constants": self.n_conductors,
            "total": self.size,
        }


def build_dof_map(mesh, tree=None, constrain_boundary=True):
    """Classify every edge and node and assign global indices.

    ``tree=None`` skips the gauge entirely (all insulation edges stay
    free); the assembled system is then singular on any mesh with an
    interior insulation node — kept as an explicit regression path.
    """
    ne, nn = mesh.n_edges, mesh.n_nodes
    if tree is not None:
        constrain_boundary = tree.constrain_boundary

    edge_class = np.full(ne, DofClass.FREE, dtype=np.uint8)
    if tree is not None:
        edge_class[tree.tree_edge_mask] = DofClass.GAUGED_ZERO
    if constrain_boundary:
        edge_class[mesh.boundary_edge_mask] = DofClass.BOUNDARY_ZERO

    node_class = np.full(nn, DofClass.FREE, dtype=np.uint8)
    node_class[mesh.boundary_node_mask] = DofClass.BOUNDARY_ZERO

    edge_dof = np.full(ne, -1, dtype=np.int32)
    free_edges = np.flatnonzero(edge_class == DofClass.FREE)
    edge_dof[free_edges] = np.arange(free_edges.size, dtype=np.int32)

    node_dof = np.full(nn, -1, dtype=np.int32)
    free_nodes = np.flatnonzero(node_class == DofClass.FREE)
    node_dof[free_nodes] = free_edges.size + np.arange(free_nodes.size,
                                                       dtype=np.int32)

    n_cond = mesh.n_conductors
    const_dof = (free_edges.size + free_nodes.size
                 + np.arange(n_cond, dtype=np.int32))

    return DofMap(edge_class=edge_class, edge_dof=edge_dof,
                  node_class=node_class, node_dof=node_dof,
                  const_dof=const_dof,
                  n_edge_free=int(free_edges.size),
                  n_node_free=int(free_nodes.size),
                  n_conductors=n_cond,
                  constrain_boundary=bool(constrain_boundary),
                  static_gauge=bool(tree.spans_conductors) if tree else False)


def write_gauge_csv(mesh, tree, dofmap, path):
    """Debug dump of the gauge classification, one row per edge."""
    classes = {DofClass.FREE: "free", DofClass.GAUGED_ZERO: "gauged",
               DofClass.BOUNDARY_ZERO: "boundary"}
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("edge,node_a,node_b,class,tree\n")
        for e in range(mesh.n_edges):
            a, b = mesh.edges[e]
            cls = classes[DofClass(dofmap.edge_class[e])]
            in_tree = int(bool(tree.tree_edge_mask[e])) if tree is not None else 0
            f.write(f"{e},{a},{b},{cls},{in_tree}\n")
