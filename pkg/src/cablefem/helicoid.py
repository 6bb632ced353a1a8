"""Helicoidal coordinate transform and the transformed material tensors.

A twisted cable is invariant under the screw motion that rotates the
cross-section by ``tau`` radians per meter of axial travel.  Mapping
Cartesian coordinates ``(x, y, z)`` to helicoidal coordinates
``(u, v, w)`` straightens the helical conductors, so the 3-D problem can
be solved on a single ``w = 0`` plane.  The price is that the scalar
conductivity and reluctivity become anisotropic 3x3 tensors built from
the Jacobian of the inverse map.  All functions here are pure and safe
to call concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

MU0 = 4e-7 * np.pi
NU0 = 1.0 / MU0


class Frame(Enum):
    """Coordinate frame a point is expressed in."""

    CARTESIAN = "xyz"
    HELICOIDAL = "uvw"


@dataclass(frozen=True)
class Point3:
    """A point with an explicit coordinate-frame flag."""

    coords: np.ndarray
    frame: Frame

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.shape != (3,):
            raise ValueError(f"expected 3 coordinates, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "coords", c)

    @classmethod
    def xyz(cls, x, y, z):
        return cls(np.array([x, y, z], dtype=float), Frame.CARTESIAN)

    @classmethod
    def uvw(cls, u, v, w):
        return cls(np.array([u, v, w], dtype=float), Frame.HELICOIDAL)


@dataclass(frozen=True)
class TwistMap:
    """Screw-motion parameters: total twist ``alpha`` [rad] over length ``beta`` [m].

    Only the rate ``tau = alpha / beta`` [rad/m] enters the coordinate maps;
    alpha and beta are kept for provenance.  ``tau = 0`` reduces every map to
    the identity on (x, y) and every tensor to an isotropic multiple of I.
    """

    alpha: float
    beta: float
    tau: float = field(init=False)

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        tau = self.alpha / self.beta
        if not np.isfinite(tau):
            raise ValueError("twist rate alpha/beta must be finite")
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_rate(cls, tau, beta=1.0):
        """Build from a twist rate [rad/m] directly."""
        return cls(alpha=tau * beta, beta=beta)


@dataclass(frozen=True)
class MaterialSpec:
    """Per-region scalar conductivity [S/m] and reluctivity [m/H].

    ``conductor_sigma`` may be a scalar (shared by all strands) or one value
    per strand.  Insulation must be non-conducting; reluctivities must be
    positive everywhere.
    """

    conductor_sigma: tuple
    conductor_nu: tuple
    insulation_nu: float = NU0
    insulation_sigma: float = 0.0

    @classmethod
    def copper_cable(cls, n_conductors, sigma=58.12e6, mu_r=1.0):
        nu = NU0 / mu_r
        return cls(
            conductor_sigma=(float(sigma),) * n_conductors,
            conductor_nu=(nu,) * n_conductors,
        )

    def __post_init__(self):
        sig = tuple(float(s) for s in np.atleast_1d(self.conductor_sigma))
        nu = tuple(float(n) for n in np.atleast_1d(self.conductor_nu))
        if len(nu) == 1 and len(sig) > 1:
            nu = nu * len(sig)
        if len(sig) != len(nu):
            raise ValueError("conductor_sigma and conductor_nu lengths differ")
        if any(s <= 0.0 for s in sig):
            raise ValueError("conductor conductivity must be positive")
        if any(n <= 0.0 for n in nu) or self.insulation_nu <= 0.0:
            raise ValueError("reluctivity must be positive")
        if self.insulation_sigma != 0.0:
            raise ValueError("insulation must have zero conductivity")
        object.__setattr__(self, "conductor_sigma", sig)
        object.__setattr__(self, "conductor_nu", nu)

    @property
    def n_conductors(self):
        return len(self.conductor_sigma)

    def sigma_of_region(self, region):
        """Conductivity for a region id (0 = insulation, i >= 1 = strand i)."""
        if region == 0:
            return self.insulation_sigma
        return self.conductor_sigma[region - 1]

    def nu_of_region(self, region):
        if region == 0:
            return self.insulation_nu
        return self.conductor_nu[region - 1]


def map_to_helicoidal(p, twist):
    """Cartesian -> helicoidal: rotate (x, y) by -z*tau, keep z.

    u = x cos(z tau) + y sin(z tau)
    v = -x sin(z tau) + y cos(z tau)
    w = z
    """
    if p.frame is not Frame.CARTESIAN:
        raise ValueError("map_to_helicoidal expects a Cartesian-frame point")
    x, y, z = p.coords
    c, s = np.cos(z * twist.tau), np.sin(z * twist.tau)
    return Point3(np.array([x * c + y * s, -x * s + y * c, z]), Frame.HELICOIDAL)


def map_to_cartesian(p, twist):
    """Helicoidal -> Cartesian: rotate (u, v) by +w*tau, keep w."""
    if p.frame is not Frame.HELICOIDAL:
        raise ValueError("map_to_cartesian expects a helicoidal-frame point")
    u, v, w = p.coords
    c, s = np.cos(w * twist.tau), np.sin(w * twist.tau)
    return Point3(np.array([u * c - v * s, u * s + v * c, w]), Frame.CARTESIAN)


def jacobian_inv_map(p, twist):
    """Jacobian of the helicoidal->Cartesian map at a helicoidal point.

    Closed form, with (x, y) the Cartesian image of ``p``:

        [ cos(w tau)  -sin(w tau)  -tau*y ]
        [ sin(w tau)   cos(w tau)   tau*x ]
        [ 0            0            1     ]

    Its determinant is identically 1 (volume-preserving screw motion).
    """
    if p.frame is not Frame.HELICOIDAL:
        raise ValueError("jacobian_inv_map expects a helicoidal-frame point")
    u, v, w = p.coords
    tau = twist.tau
    c, s = np.cos(w * tau), np.sin(w * tau)
    x = u * c - v * s
    y = u * s + v * c
    return np.array([
        [c, -s, -tau * y],
        [s, c, tau * x],
        [0.0, 0.0, 1.0],
    ])


def _plane_jacobian_factors(u, v, tau):
    """J^T J and J^-1 J^-T of the inverse-map Jacobian, evaluated at w = 0.

    Both products are independent of w (the screw rotation drops out), so
    assembly only ever needs the w = 0 forms.  Entries are polynomials of
    degree <= 2 in (u, v).  Accepts scalars or broadcastable arrays and
    returns arrays with two trailing 3x3 axes.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    shape = np.broadcast_shapes(u.shape, v.shape)
    u = np.broadcast_to(u, shape)
    v = np.broadcast_to(v, shape)
    one = np.ones(shape)
    zero = np.zeros(shape)
    tu = tau * u
    tv = tau * v

    jtj = np.empty(shape + (3, 3))
    jtj[..., 0, 0] = one
    jtj[..., 0, 1] = zero
    jtj[..., 0, 2] = -tv
    jtj[..., 1, 0] = zero
    jtj[..., 1, 1] = one
    jtj[..., 1, 2] = tu
    jtj[..., 2, 0] = -tv
    jtj[..., 2, 1] = tu
    jtj[..., 2, 2] = 1.0 + tu * tu + tv * tv

    jinv_jinvt = np.empty(shape + (3, 3))
    jinv_jinvt[..., 0, 0] = 1.0 + tv * tv
    jinv_jinvt[..., 0, 1] = -tu * tv
    jinv_jinvt[..., 0, 2] = tv
    jinv_jinvt[..., 1, 0] = -tu * tv
    jinv_jinvt[..., 1, 1] = 1.0 + tu * tu
    jinv_jinvt[..., 1, 2] = -tu
    jinv_jinvt[..., 2, 0] = tv
    jinv_jinvt[..., 2, 1] = -tu
    jinv_jinvt[..., 2, 2] = one
    return jtj, jinv_jinvt


def conductivity_tensor(p, mat, twist, region):
    """Transformed conductivity sigma_xyz * J^-1 J^-T * det(J) at a point.

    Symmetric positive definite whenever sigma_xyz > 0, and independent
    of the w coordinate.  ``region`` is the mesh region id the point
    belongs to (element tag, not a geometric query).
    """
    if p.frame is not Frame.HELICOIDAL:
        raise ValueError("conductivity_tensor expects a helicoidal-frame point")
    if region is None:
        raise ValueError("point has no resolved region tag")
    sigma = mat.sigma_of_region(region)
    u, v, _ = p.coords
    _, jinv_jinvt = _plane_jacobian_factors(u, v, twist.tau)
    return sigma * jinv_jinvt


def reluctivity_tensor(p, mat, twist, region):
    """Transformed reluctivity nu_xyz * J^T J / det(J) at a point."""
    if p.frame is not Frame.HELICOIDAL:
        raise ValueError("reluctivity_tensor expects a helicoidal-frame point")
    if region is None:
        raise ValueError("point has no resolved region tag")
    nu = mat.nu_of_region(region)
    u, v, _ = p.coords
    jtj, _ = _plane_jacobian_factors(u, v, twist.tau)
    return nu * jtj


def rotation_about_axis(angle):
    """Rotation matrix about the w/z axis; J_inv = R(w tau) @ J_inv(w=0)."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def map_points_to_helicoidal(points, twist):
    """Vectorized Cartesian -> helicoidal for an (n, 3) array."""
    points = np.asarray(points, dtype=float)
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    c, s = np.cos(z * twist.tau), np.sin(z * twist.tau)
    return np.column_stack([x * c + y * s, -x * s + y * c, z])


def map_points_to_cartesian(points, twist):
    """Vectorized helicoidal -> Cartesian for an (n, 3) array."""
    points = np.asarray(points, dtype=float)
    u, v, w = points[:, 0], points[:, 1], points[:, 2]
    c, s = np.cos(w * twist.tau), np.sin(w * twist.tau)
    return np.column_stack([u * c - v * s, u * s + v * c, w])


def jacobian_inv_map_many(points, twist):
    """Vectorized inverse-map Jacobians, shape (n, 3, 3)."""
    points = np.asarray(points, dtype=float)
    u, v, w = points[:, 0], points[:, 1], points[:, 2]
    tau = twist.tau
    c, s = np.cos(w * tau), np.sin(w * tau)
    x = u * c - v * s
    y = u * s + v * c
    out = np.zeros((points.shape[0], 3, 3))
    out[:, 0, 0] = c
    out[:, 0, 1] = -s
    out[:, 0, 2] = -tau * y
    out[:, 1, 0] = s
    out[:, 1, 1] = c
    out[:, 1, 2] = tau * x
    out[:, 2, 2] = 1.0
    return out
