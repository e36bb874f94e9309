"""Brute-force integrals that check the closed forms elsewhere in the package.

Nothing here is used by the solver. These routines exist so tests can compare
algebraic results against direct quadrature of their defining integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad

from .core import f_kernel, g_kernel

__all__ = [
    "QuadratureSpec",
    "radial_volume_closed_form",
    "radial_volume_integral_single_center",
    "sphere_surface_integral",
    "yukawa_overlap_quadrature",
]


@dataclass(frozen=True)
class QuadratureSpec:
    n_xi: int = 96
    n_eta: int = 64
    n_theta: int = 32
    n_phi: int = 64
    rel_tol: float = 1e-10


def yukawa_overlap_quadrature(
    a: float, b: float, R: float, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """``int exp(-a r1 - b r2)/(r1 r2) d^3r`` by Gauss-Legendre in prolate spheroidal coordinates.

    ``r1 = R (xi + eta)/2``, ``r2 = R (xi - eta)/2`` and
    ``d^3r = (R^3/8)(xi^2 - eta^2) dxi deta dphi``. The ``xi`` range is cut
    at ``1 + 60/(R (a+b))``, where the integrand has decayed by ``e^-30``.
    ``R = 0`` falls back to a radial rule.
    """
    if a <= 0.0 or b <= 0.0 or R < 0.0:
        raise ValueError("need a, b > 0 and R >= 0")
    if R == 0.0:
        rmax = 60.0 / (a + b)
        x, w = np.polynomial.legendre.leggauss(spec.n_xi)
        r = 0.5 * rmax * (x + 1.0)
        return float(4.0 * math.pi * np.sum(0.5 * rmax * w * np.exp(-(a + b) * r)))
    xi_max = 1.0 + 60.0 / (R * (a + b))
    xg, xw = np.polynomial.legendre.leggauss(spec.n_xi)
    xi = 1.0 + 0.5 * (xi_max - 1.0) * (xg + 1.0)
    xiw = 0.5 * (xi_max - 1.0) * xw
    eta, etaw = np.polynomial.legendre.leggauss(spec.n_eta)
    XI, ETA = np.meshgrid(xi, eta, indexing="ij")
    r1 = 0.5 * R * (XI + ETA)
    r2 = 0.5 * R * (XI - ETA)
    jac = R**3 / 8.0 * (XI * XI - ETA * ETA)
    integrand = np.exp(-a * r1 - b * r2) / (r1 * r2) * jac
    return float(2.0 * math.pi * np.einsum("i,j,ij->", xiw, etaw, integrand))


def sphere_surface_integral(
    field_b: Callable[[NDArray[np.float64]], NDArray[np.complex128]],
    field_a: Callable[[NDArray[np.float64]], NDArray[np.complex128]] | None,
    center: ArrayLike,
    rho: float,
    weight: NDArray[np.complex128] | None = None,
    spec: QuadratureSpec = QuadratureSpec(),
) -> complex:
    """``oint Phi_b^H W Phi_a dS`` over the sphere of radius ``rho`` about ``center``.

    Fields map a ``(P, 3)`` point cloud to ``(P, 4)`` bispinors. ``field_a``
    defaults to ``field_b`` and ``weight`` to the identity. Uses a product
    rule: Gauss-Legendre in ``cos(theta)``, trapezoid in ``phi``.
    """
    c = np.asarray(center, dtype=np.float64).reshape(3)
    xg, wg = np.polynomial.legendre.leggauss(spec.n_theta)
    phi = 2.0 * math.pi * np.arange(spec.n_phi) / spec.n_phi
    ct = np.repeat(xg, spec.n_phi)
    st = np.sqrt(1.0 - ct * ct)
    ph = np.tile(phi, spec.n_theta)
    normals = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=1)
    w = np.repeat(wg, spec.n_phi) * (2.0 * math.pi / spec.n_phi) * rho * rho
    pts = c[None, :] + rho * normals
    pb = field_b(pts)
    pa = pb if field_a is None else field_a(pts)
    W = np.eye(pb.shape[-1]) if weight is None else np.asarray(weight)
    vals = np.einsum("pi,ij,pj->p", pb.conj(), W, pa)
    return complex(np.sum(w * vals))


def radial_volume_integral_single_center(k: float, eps: float, rho: float, chi_norm2: float = 1.0,
                                         rel_tol: float = 1e-10) -> float:
    """``int_{r > rho} Psi^H Psi d^3r`` for a one-center state, by adaptive quadrature.

    The angular integral is exact: ``|(mu.sigma) chi|^2 = |chi|^2``, which
    leaves ``4 pi |chi|^2 int_rho^inf r^2 (f(kr)^2 + eps^2 g(kr)^2) dr``.
    """
    def integrand(r: float) -> float:
        z = k * r
        return r * r * (f_kernel(z) ** 2 + eps * eps * g_kernel(z) ** 2)

    # split at a few decay lengths so the 1/r^2 start is resolved separately
    edges = [rho, rho + 1.0 / k, rho + 10.0 / k, math.inf]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = quad(integrand, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=200)
        total += val
    return 4.0 * math.pi * chi_norm2 * total


def radial_volume_closed_form(k: float, eps: float, rho: float, chi_norm2: float = 1.0) -> float:
    """``(2 pi/k^3) [1 + eps^2 (1 + 2/(k rho))] exp(-2 k rho) |chi|^2``."""
    return (
        (2.0 * math.pi / k**3)
        * (1.0 + eps * eps * (1.0 + 2.0 / (k * rho)))
        * math.exp(-2.0 * k * rho)
        * chi_norm2
    )
