"""Real orthonormal spherical harmonics on the unit sphere.

Flat coefficient layout: ``(l, m) -> l*l + l + m`` for ``|m| <= l``.
``m > 0`` carries ``cos(m phi)``, ``m < 0`` carries ``sin(|m| phi)``; no
Condon-Shortley phase.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "index",
    "degree_of_index",
    "n_coeffs",
    "real_sph_harm_all",
    "real_sph_harm",
    "gauss_grid",
    "synthesize",
    "analyze",
    "surface_gradient",
]


def index(l: int, m: int) -> int:
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l (l={l}, m={m})")
    return l * l + l + m


def n_coeffs(L_max: int) -> int:
    return (L_max + 1) ** 2


def degree_of_index(L_max: int) -> np.ndarray:
    """Degree ``l`` of every flat index up to ``L_max``."""
    return np.repeat(np.arange(L_max + 1), 2 * np.arange(L_max + 1) + 1)


def _legendre_normalised(L_max, x, s):
    """``P[l][m]`` = sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) P_l^m(x) without phase."""
    P = {}
    pmm = np.full(np.shape(x), math.sqrt(1.0 / (4 * math.pi)))
    for m in range(L_max + 1):
        if m > 0:
            pmm = math.sqrt((2 * m + 1) / (2.0 * m)) * s * pmm
        P[(m, m)] = pmm
        if m + 1 <= L_max:
            P[(m + 1, m)] = math.sqrt(2 * m + 3) * x * pmm
        for l in range(m + 2, L_max + 1):
            a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            P[(l, m)] = a * (x * P[(l - 1, m)] - b * P[(l - 2, m)])
    return P


def real_sph_harm_all(L_max: int, theta, phi) -> np.ndarray:
    """All ``Y_lm`` up to ``L_max``; shape ``((L_max+1)**2,) + broadcast shape``."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    P = _legendre_normalised(L_max, np.cos(theta), np.sin(theta))
    out = np.empty((n_coeffs(L_max),) + theta.shape)
    root2 = math.sqrt(2.0)
    for l in range(L_max + 1):
        out[index(l, 0)] = P[(l, 0)]
        for m in range(1, l + 1):
            out[index(l, m)] = root2 * P[(l, m)] * np.cos(m * phi)
            out[index(l, -m)] = root2 * P[(l, m)] * np.sin(m * phi)
    return out


def real_sph_harm(l: int, m: int, theta, phi) -> np.ndarray:
    return real_sph_harm_all(l, theta, phi)[index(l, m)]


def gauss_grid(n_theta: int, n_phi: int):
    """Gauss-Legendre colatitudes, uniform longitudes and quadrature weights.

    Returns ``theta`` (n_theta,), ``phi`` (n_phi,) and ``weights`` (n_theta,)
    such that ``sum_ij weights[i] * F[i, j]`` integrates ``F`` over the sphere.
    Exact for band limits below ``min(2*n_theta, n_phi)`` in the products.
    """
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x[::-1])
    weights = w[::-1] * (2 * math.pi / n_phi)
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    return theta, phi, weights


def synthesize(coeffs, L_max: int, theta, phi) -> np.ndarray:
    """``sum c_lm Y_lm`` on the tensor grid ``theta x phi``."""
    T, PH = np.meshgrid(theta, phi, indexing="ij")
    Y = real_sph_harm_all(L_max, T, PH)
    return np.tensordot(np.asarray(coeffs, dtype=float), Y, axes=(0, 0))


def analyze(values, L_max: int, theta, phi, weights) -> np.ndarray:
    """Coefficients of grid samples by Gauss quadrature."""
    T, PH = np.meshgrid(theta, phi, indexing="ij")
    Y = real_sph_harm_all(L_max, T, PH)
    return np.tensordot(Y, np.asarray(values, dtype=float) * weights[:, None], axes=([1, 2], [0, 1]))


def _unit_vectors(theta, phi):
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    radial = np.stack([st * cp, st * sp, ct])
    e_theta = np.stack([ct * cp, ct * sp, -st])
    e_phi = np.stack([-sp, cp, np.zeros_like(theta)])
    return radial, e_theta, e_phi


def surface_gradient(l: int, m: int, theta, phi, h: float = 1e-3) -> np.ndarray:
    """Cartesian components of the surface gradient of ``Y_lm``; shape ``(3, ...)``.

    The colatitude derivative uses a five-point stencil; the longitude
    derivative is exact.  Requires ``0 < theta < pi``.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    Y = lambda t: real_sph_harm(l, m, t, phi)
    dtheta = (-Y(theta + 2 * h) + 8 * Y(theta + h) - 8 * Y(theta - h) + Y(theta - 2 * h)) / (12 * h)
    P = _legendre_normalised(l, np.cos(theta), np.sin(theta))
    if m == 0:
        dphi = np.zeros_like(theta)
    elif m > 0:
        dphi = -math.sqrt(2.0) * P[(l, m)] * m * np.sin(m * phi)
    else:
        dphi = math.sqrt(2.0) * P[(l, -m)] * (-m) * np.cos(-m * phi)
    _, e_theta, e_phi = _unit_vectors(theta, phi)
    return e_theta * dtheta + e_phi * dphi / np.sin(theta)
