"""Independent reference computations used by the tests.

Everything in this module is deliberately written from first principles
(Kelvin/Bessel formulas, central finite differences, a collapsed-square
Gauss rule) so that it shares no code path with the package it checks.
"""
import numpy as np
import scipy.special as special

MU0 = 4e-7 * np.pi


def skin_depth(frequency, sigma, mu=MU0):
    omega = 2.0 * np.pi * frequency
    return np.sqrt(2.0 / (omega * mu * sigma))


def round_wire_rdc(radius, sigma):
    """DC resistance per unit length of a solid round wire [Ohm/m]."""
    return 1.0 / (sigma * np.pi * radius**2)


def round_wire_rac_over_rdc(radius, delta):
    """AC/DC resistance ratio of a solid round wire via Kelvin functions."""
    q = np.sqrt(2.0) * radius / delta
    num = special.ber(q) * special.beip(q) - special.bei(q) * special.berp(q)
    den = special.berp(q) ** 2 + special.beip(q) ** 2
    return q / 2.0 * num / den


def round_wire_fields(r, radius, sigma, frequency, current, mu=MU0):
    """Interior (J_z, H_phi) phasors of a round wire carrying ``current``.

    Uses J_z(r) = k I J0(k r) / (2 pi a J1(k a)) with k^2 = -j w mu sigma
    (time factor e^{+j w t}); outside the wire J = 0 and
    H_phi = I / (2 pi r).
    """
    r = np.asarray(r, dtype=float)
    omega = 2.0 * np.pi * frequency
    k = np.sqrt(-1j * omega * mu * sigma)
    denom = 2.0 * np.pi * radius * special.jv(1, k * radius)
    inside = r <= radius
    j_z = np.where(inside, k * current * special.jv(0, k * r) / denom, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_out = current / (2.0 * np.pi * np.where(r > 0, r, np.inf))
    h_phi = np.where(inside, current * special.jv(1, k * r) / denom, h_out)
    return j_z, h_phi


def numeric_jacobian(fn, p, step=1e-6):
    """Central-difference Jacobian of a R^3 -> R^3 map."""
    p = np.asarray(p, dtype=float)
    out = np.zeros((3, 3))
    for k in range(3):
        dp = np.zeros(3)
        dp[k] = step
        out[:, k] = (fn(p + dp) - fn(p - dp)) / (2.0 * step)
    return out


def collapsed_gauss_rule(n=16):
    """Triangle quadrature by collapsing an n x n Gauss-Legendre grid on
    the unit square onto the reference triangle (Duffy transform).

    Returns (barycentric (m, 3), weights summing to 1).
    """
    x, wx = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    wx = 0.5 * wx
    pts = []
    wts = []
    for a, wa in zip(x, wx):
        for b, wb in zip(x, wx):
            u = a
            v = b * (1.0 - a)
            pts.append((1.0 - u - v, u, v))
            wts.append(wa * wb * (1.0 - a))
    bary = np.array(pts)
    w = np.array(wts)
    return bary, w / w.sum() * 1.0


def _tri_basis(coords):
    """Barycentric gradients and area of one triangle, standalone."""
    (x0, y0), (x1, y1), (x2, y2) = coords
    det = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    area = 0.5 * det
    grads = np.array([
        [y1 - y2, x2 - x1],
        [y2 - y0, x0 - x2],
        [y0 - y1, x1 - x0],
    ]) / det
    return area, grads


def _sigma_tensor(u, v, tau, sigma):
    tu, tv = tau * u, tau * v
    return sigma * np.array([
        [1.0 + tv * tv, -tu * tv, tv],
        [-tu * tv, 1.0 + tu * tu, -tu],
        [tv, -tu, 1.0],
    ])


def _nu_tensor(u, v, tau, nu):
    tu, tv = tau * u, tau * v
    return nu * np.array([
        [1.0, 0.0, -tv],
        [0.0, 1.0, tu],
        [-tv, tu, 1.0 + tu * tu + tv * tv],
    ])


def dense_element_integrals(coords, tau, sigma, nu, n=16):
    """Reference element integrals by brute-force dense quadrature.

    Local order [edge0, edge1, edge2, node0, node1, node2]; edge l is
    opposite vertex l and oriented from local vertex l+1 to l+2.
    Returns (stiffness, mass, coupling, constraint).
    """
    coords = np.asarray(coords, dtype=float)
    area, grads = _tri_basis(coords)
    bary, wts = collapsed_gauss_rule(n)

    curls = np.zeros((6, 3))
    for loc in range(3):
        curls[loc, 2] = 1.0 / area
    for m in range(3):
        curls[3 + m] = (grads[m, 1], -grads[m, 0], 0.0)

    stiff = np.zeros((6, 6))
    mass = np.zeros((6, 6))
    coup = np.zeros(6)
    constraint = 0.0
    for lam, w in zip(bary, wts):
        u, v = lam @ coords
        sig = _sigma_tensor(u, v, tau, sigma)
        nut = _nu_tensor(u, v, tau, nu)
        vals = np.zeros((6, 3))
        for loc in range(3):
            i, j = (loc + 1) % 3, (loc + 2) % 3
            vals[loc, :2] = lam[i] * grads[j] - lam[j] * grads[i]
        for m in range(3):
            vals[3 + m, 2] = lam[m]
        stiff += w * area * curls @ nut @ curls.T
        mass += w * area * vals @ sig @ vals.T
        coup += w * area * vals @ sig[:, 2]
        constraint += w * area * sig[2, 2]
    return stiff, mass, coup, constraint
