"""
Pointwise kernels of the Gauss linking integral.

``gauss_kernel`` follows the right-handed convention

    G = (1/4pi) (B1, B2, x1 - x2) / |x1 - x2|^3

with ``(a, b, c) = a . (b x c)``.  On a periodic box the separation is the
minimum image and pairs further apart than L/2 do not interact (spherical
truncation).  For every lattice mode with |k| L / 2pi integer this
truncation reproduces the mode's helicity exactly, which is why it is used
instead of the bare minimum image.
"""

import numpy as np
from numba import njit

from .errors import SingularityError

FOUR_PI = 4.0 * np.pi


def _sep(x1, x2):
    d = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    r = float(np.sqrt(d @ d))
    if r == 0.0:
        raise SingularityError("kernel evaluated at coincident points")
    return d, r


def psi(x1, x2):
    """Inverse cubed distance."""
    _, r = _sep(x1, x2)
    return 1.0 / r**3


def biot_savart(B2, x1, x2):
    """Biot-Savart potential of the field value ``B2`` at ``x2``, seen from ``x1``."""
    d, r = _sep(x1, x2)
    return np.cross(np.asarray(B2, dtype=float), d) / (FOUR_PI * r**3)


def gauss_kernel(B1, x1, B2, x2):
    """Gauss-integral kernel for field values ``B1`` at ``x1`` and ``B2`` at ``x2``."""
    return float(np.dot(np.asarray(B1, dtype=float), biot_savart(B2, x1, x2)))


def delta2_sim(G_sum, G_1, G_2):
    """Symmetrised two-field correlation: half the squared polarisation defect."""
    return 0.5 * (G_sum - G_1 - G_2) ** 2


def min_image(d, period):
    """Minimum-image separation vectors (no-op when ``period`` is 0)."""
    if period > 0:
        return d - period * np.round(d / period)
    return d


def kernel_values(B1, X1, B2, X2, period=0.0):
    """Vectorised kernel for paired rows; truncated beyond ``period / 2``."""
    d = min_image(np.asarray(X1, float) - np.asarray(X2, float), period)
    r2 = np.einsum("ij,ij->i", d, d)
    if np.any(r2 == 0):
        raise SingularityError("kernel evaluated at coincident points")
    trip = np.einsum("ij,ij->i", B1, np.cross(B2, d))
    G = trip / (FOUR_PI * r2 * np.sqrt(r2))
    if period > 0:
        G = np.where(r2 < (0.5 * period) ** 2, G, 0.0)
    return G


def field_kernel(field, X1, X2):
    """Gauss kernel of ``field`` at point pairs, with the domain's periodic convention."""
    X1 = np.atleast_2d(X1)
    X2 = np.atleast_2d(X2)
    return kernel_values(field(X1), X1, field(X2), X2, field.domain.period)


def delta2_tensor(field, x1, x2):
    """Squared Gauss kernel of a single field (the correlation tensor)."""
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    G = field_kernel(field, x1, x2)
    out = G * G
    return float(out[0]) if x1.ndim == 1 else out


@njit(cache=True, inline="always")
def kernel_scalar(b1x, b1y, b1z, b2x, b2y, b2z, dx, dy, dz, period):
    if period > 0.0:
        dx -= period * np.round(dx / period)
        dy -= period * np.round(dy / period)
        dz -= period * np.round(dz / period)
    r2 = dx * dx + dy * dy + dz * dz
    if period > 0.0 and r2 >= 0.25 * period * period:
        return 0.0
    cx = b2y * dz - b2z * dy
    cy = b2z * dx - b2x * dz
    cz = b2x * dy - b2y * dx
    return (b1x * cx + b1y * cy + b1z * cz) / (4.0 * np.pi * r2 * np.sqrt(r2))
