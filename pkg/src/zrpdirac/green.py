"""Energy-dependent Green's function of the Dirac operator with point interactions.

The free part is the Dirac operator applied to the Yukawa kernel. The
interaction enters as a sum over the Sturmian functions of L(E):

    G(E; r, r') = G0(E; r, r') - (1/eps) sum_a lambda_a(E)^-1 S_a(r) S_a(r')^H

which has poles exactly where some lambda_a(E) vanishes.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels
from .core import CenterConfig, Geometry, PoleError, geometry, kinematics_from_energy, pauli_dot
from .operator import build_L_batch, eig_L

__all__ = ["POLE_TOL", "free_green", "full_green", "green_pole_scan", "scattered_green"]

POLE_TOL = 1e-10


def free_green(E: float, r: ArrayLike, r_src: ArrayLike) -> NDArray[np.complex128]:
    """Free 4x4 Green's function for ``|r - r_src| > 0``.

    ``(k/4 pi) [[(E+1) f I, i k g (mu.sigma)], [i k g (mu.sigma), (E-1) f I]]``
    with ``f, g`` evaluated at ``k |r - r_src|`` and ``mu`` the unit vector
    from ``r_src`` to ``r``.
    """
    kin = kinematics_from_energy(E)
    if kin.E >= 1.0:
        raise ValueError("the bound-state Green's function needs E < 1")
    d = np.asarray(r, dtype=np.float64) - np.asarray(r_src, dtype=np.float64)
    dist = float(np.linalg.norm(d))
    if dist < 1e-12:
        raise ValueError("free Green's function is singular at r = r_src")
    z = kin.k * dist
    f = math.exp(-z) / z
    g = math.exp(-z) * (1.0 / z + 1.0 / (z * z))
    ms = pauli_dot(d / dist)
    eye = np.eye(2)
    off = 1j * kin.k * g * ms
    G = np.block([[(kin.E + 1.0) * f * eye, off], [off, (kin.E - 1.0) * f * eye]])
    return (kin.k / (4.0 * math.pi)) * G


def _sturmian_sum(E: float, r: ArrayLike, r_src: ArrayLike, centers) -> NDArray[np.complex128]:
    geom = centers if isinstance(centers, Geometry) else geometry(centers)
    dec = eig_L(E, geom)
    lam = dec.eigenvalues
    bad = np.abs(lam) <= POLE_TOL
    if np.any(bad):
        raise PoleError(f"E={E!r} is a pole: lambda={lam[bad][0]:.3e} (bound-state energy)")
    pts = np.stack([np.asarray(r, float), np.asarray(r_src, float)])
    dmin = np.linalg.norm(pts[:, None, :] - geom.positions[None], axis=-1).min()
    if dmin < 1e-12:
        raise ValueError("Green's function is singular at a center")
    coeffs = dec.eigenvectors.T.reshape(-1, geom.n, 2)
    S = _kernels.fields(pts, geom.positions, coeffs, dec.kin.k, dec.kin.eps)  # (2N, 2, 4)
    terms = S[:, 0, :, None] * S[:, 1, None, :].conj() / lam[:, None, None]
    return -terms.sum(axis=0) / dec.kin.eps


def scattered_green(
    E: float, r: ArrayLike, r_src: ArrayLike, centers: Sequence[CenterConfig]
) -> NDArray[np.complex128]:
    """``G - G0``: the interaction part, finite also at ``r = r_src``."""
    return _sturmian_sum(E, r, r_src, centers)


def full_green(
    E: float, r: ArrayLike, r_src: ArrayLike, centers: Sequence[CenterConfig]
) -> NDArray[np.complex128]:
    """Full 4x4 Green's function; raises :class:`PoleError` at bound-state energies."""
    if len(centers) == 0:
        return free_green(E, r, r_src)
    return free_green(E, r, r_src) + _sturmian_sum(E, r, r_src, centers)


def green_pole_scan(
    centers: Sequence[CenterConfig],
    r: ArrayLike | None = None,
    r_src: ArrayLike | None = None,
    grid: ArrayLike | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``min_a |lambda_a(E)|`` on an energy grid; its zeros are the poles of G.

    The pole set does not depend on the field points, so ``r`` and ``r_src``
    are accepted only for call-site symmetry with :func:`full_green`.
    """
    E = np.linspace(-1 + 1e-6, 1 - 1e-6, 2001) if grid is None else np.asarray(grid, float)
    vals = np.linalg.eigvalsh(build_L_batch(E, centers))
    return E, np.min(np.abs(vals), axis=1)
