"""Triangle quadrature rules.

The assembly and loss integrals use the 6-point, degree-4 symmetric rule:
at w = 0 the transformed material tensors are quadratic in (u, v) and the
lowest-order basis products are at most quadratic, so degree 4 integrates
every element integrand exactly.
"""
import numpy as np

# Degree-4 symmetric rule, 6 points, barycentric coordinates and weights
# normalized to sum to 1 (multiply by the triangle area).
_A1 = 0.445948490915965
_W1 = 0.223381589678011
_A2 = 0.091576213509771
_W2 = 0.109951743655322

DEG4_BARY = np.array([
    [1.0 - 2.0 * _A1, _A1, _A1],
    [_A1, 1.0 - 2.0 * _A1, _A1],
    [_A1, _A1, 1.0 - 2.0 * _A1],
    [1.0 - 2.0 * _A2, _A2, _A2],
    [_A2, 1.0 - 2.0 * _A2, _A2],
    [_A2, _A2, 1.0 - 2.0 * _A2],
])
DEG4_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])


def physical_points(coords, bary=DEG4_BARY):
    """Map barycentric quadrature points to physical (u, v) coordinates.

    ``coords`` has shape (..., 3, 2); returns shape (..., nq, 2).
    """
    return np.einsum("qi,...ij->...qj", bary, coords)
