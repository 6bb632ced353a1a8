"""Lowest-order basis functions on triangles, vectorized over the mesh.

Local degree-of-freedom order on every triangle is
``[edge0, edge1, edge2, node0, node1, node2]`` where edge ``l`` is the
side opposite local vertex ``l``.  Edge functions are 2-D Whitney
functions carrying the in-plane potential components; nodal hat
functions carry the axial component.  The reduced curl treats fields as
w-invariant:

    curl (A_u, A_v, A_w) = (d_v A_w, -d_u A_w, d_u A_v - d_v A_u)

so every basis curl is constant on its triangle.
"""
from __future__ import annotations

import numpy as np

from .quadrature import DEG4_BARY, DEG4_WEIGHTS

N_LOCAL = 6


def tri_geometry(nodes, triangles):
    """Areas and barycentric gradients for a batch of CCW triangles.

    Returns ``(areas, grad_l)`` with shapes (Nt,) and (Nt, 3, 2);
    ``grad_l[t, i]`` is the in-plane gradient of barycentric function i.
    """
    p = nodes[triangles]
    x = p[..., 0]
    y = p[..., 1]
    twice_area = ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
                  - (y[:, 1] - y[:, 0]) * (x[:, 2] - x[:, 0]))
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grad = np.stack([b, c], axis=2) / twice_area[:, None, None]
    return 0.5 * twice_area, grad


def basis_curls(areas, grad, edge_signs):
    """Constant curl 3-vectors of the six local basis functions.

    Shape (Nt, 6, 3).  Edge l contributes (0, 0, sign/area); node m
    contributes (grad_m_v, -grad_m_u, 0).
    """
    nt = areas.shape[0]
    curls = np.zeros((nt, N_LOCAL, 3))
    inv_area = 1.0 / areas
    for loc in range(3):
        curls[:, loc, 2] = edge_signs[:, loc] * inv_area
    for m in range(3):
        curls[:, 3 + m, 0] = grad[:, m, 1]
        curls[:, 3 + m, 1] = -grad[:, m, 0]
    return curls


def basis_values(grad, edge_signs, bary=DEG4_BARY):
    """Basis 3-vectors at quadrature points; shape (Nt, nq, 6, 3)."""
    nt = grad.shape[0]
    nq = bary.shape[0]
    vals = np.zeros((nt, nq, N_LOCAL, 3))
    for loc in range(3):
        i, j = (loc + 1) % 3, (loc + 2) % 3
        # lambda_i grad_j - lambda_j grad_i, oriented low -> high node
        w = (bary[None, :, i, None] * grad[:, None, j, :]
             - bary[None, :, j, None] * grad[:, None, i, :])
        vals[:, :, loc, :2] = edge_signs[:, None, loc, None] * w
    for m in range(3):
        vals[:, :, 3 + m, 2] = bary[None, :, m]
    return vals


def quad_points_uv(nodes, triangles, bary=DEG4_BARY):
    """Physical (u, v) quadrature points; shape (Nt, nq, 2)."""
    p = nodes[triangles]
    return np.einsum("qi,tij->tqj", bary, p)


def material_tensors_at(points_uv, tau, sigma=None, nu=None):
    """Evaluate transformed tensors at (..., 2) points in the w = 0 plane.

    Returns (sigma_uvw, nu_uvw); entries are None when the corresponding
    scalar is None.  ``sigma``/``nu`` broadcast against the leading axes.
    """
    u = points_uv[..., 0]
    v = points_uv[..., 1]
    tu = tau * u
    tv = tau * v
    one = np.ones_like(u)

    sig_t = None
    if sigma is not None:
        sig_t = np.empty(u.shape + (3, 3))
        sig_t[..., 0, 0] = 1.0 + tv * tv
        sig_t[..., 0, 1] = -tu * tv
        sig_t[..., 0, 2] = tv
        sig_t[..., 1, 0] = -tu * tv
        sig_t[..., 1, 1] = 1.0 + tu * tu
        sig_t[..., 1, 2] = -tu
        sig_t[..., 2, 0] = tv
        sig_t[..., 2, 1] = -tu
        sig_t[..., 2, 2] = one
        sig_t *= np.asarray(sigma)[..., None, None]

    nu_t = None
    if nu is not None:
        nu_t = np.empty(u.shape + (3, 3))
        nu_t[..., 0, 0] = one
        nu_t[..., 0, 1] = 0.0
        nu_t[..., 0, 2] = -tv
        nu_t[..., 1, 0] = 0.0
        nu_t[..., 1, 1] = one
        nu_t[..., 1, 2] = tu
        nu_t[..., 2, 0] = -tv
        nu_t[..., 2, 1] = tu
        nu_t[..., 2, 2] = 1.0 + tu * tu + tv * tv
        nu_t *= np.asarray(nu)[..., None, None]
    return sig_t, nu_t


def local_blocks(nodes, triangles, edge_signs, region, twist, mat,
                 bary=DEG4_BARY, weights=DEG4_WEIGHTS):
    """Element integrals for a batch of triangles.

    Returns a dict with

    * ``stiffness`` (Nt, 6, 6): (nu_uvw curl phi_a, curl phi_b)
    * ``mass``      (Nt, 6, 6): (sigma_uvw phi_a, phi_b), zero on insulation
    * ``coupling``  (Nt, 6):    (sigma_uvw e_w, phi_a)
    * ``constraint``(Nt,):      (sigma_uvw e_w, e_w)

    All integrals use the degree-4 rule, which is exact for these
    integrands at w = 0 (tensor entries quadratic, basis products at
    most quadratic).
    """
    areas, grad = tri_geometry(nodes, triangles)
    if np.any(areas < 1e-16):
        t = int(np.argmin(areas))
        raise ValueError(f"degenerate triangle {t}: area {areas[t]:.3e} < 1e-16")
    curls = basis_curls(areas, grad, edge_signs)
    vals = basis_values(grad, edge_signs, bary)
    pts = quad_points_uv(nodes, triangles, bary)

    sigma = np.array([mat.sigma_of_region(int(r)) for r in region])
    nu = np.array([mat.nu_of_region(int(r)) for r in region])
    sig_t, nu_t = material_tensors_at(pts, twist.tau,
                                      sigma=sigma[:, None], nu=nu[:, None])

    # curl-curl: curls are constant, so integrate the tensor first.
    nu_bar = np.einsum("q,tqij->tij", weights, nu_t) * areas[:, None, None]
    stiffness = np.einsum("tai,tij,tbj->tab", curls, nu_bar, curls)

    w_area = weights[None, :] * areas[:, None]
    mass = np.einsum("tq,tqai,tqij,tqbj->tab", w_area, vals, sig_t, vals)
    coupling = np.einsum("tq,tqij,tqai->taj", w_area, sig_t, vals)[..., 2]
    constraint = np.einsum("tq,tq->t", w_area, sig_t[..., 2, 2])
    return {"stiffness": stiffness, "mass": mass,
            "coupling": coupling, "constraint": constraint,
            "areas": areas}
