"""The energy-dependent coefficient matrix L(E), its derivative, and its spectrum.

For N centers, L(E) is a 2N x 2N Hermitian matrix of 2x2 blocks:
``K_n/(2 eps) - I`` on the diagonal and ``f(k d_nm) I`` off it. Bound states
are the energies where L has a null vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels
from .core import (
    CenterConfig,
    DomainError,
    Geometry,
    Kinematics,
    g_kernel,
    geometry,
    kinematics_from_energy,
)

__all__ = [
    "EigDecomposition",
    "LMatrix",
    "build_L",
    "build_L_batch",
    "build_dL_dE",
    "det_L",
    "eig_L",
    "pseudo_gram",
    "sturmian_normalization",
]

DEGENERACY_RTOL = 1e-10


@dataclass(frozen=True)
class LMatrix:
    matrix: NDArray[np.complex128]
    kin: Kinematics

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def block(self, n: int, m: int) -> NDArray[np.complex128]:
        return self.matrix[2 * n : 2 * n + 2, 2 * m : 2 * m + 2]


@dataclass(frozen=True)
class EigDecomposition:
    """Ascending eigenvalues with Sturmian-normalised eigenvectors as columns."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.complex128]
    kin: Kinematics


def _open_kinematics(E: float) -> Kinematics:
    if not -1.0 < E < 1.0:
        raise DomainError(f"L(E) needs E strictly inside (-1, 1), got {E!r}")
    return kinematics_from_energy(E)


def _geom(centers: Sequence[CenterConfig] | Geometry) -> Geometry:
    return centers if isinstance(centers, Geometry) else geometry(centers)


def build_L(E: float, centers: Sequence[CenterConfig] | Geometry) -> LMatrix:
    kin = _open_kinematics(E)
    g = _geom(centers)
    mat = _kernels.l_batch(np.array([kin.k]), np.array([kin.eps]), g.distances, g.kmats)[0]
    return LMatrix(mat, kin)


def build_L_batch(
    energies: ArrayLike, centers: Sequence[CenterConfig] | Geometry
) -> NDArray[np.complex128]:
    """Stack of L(E) over an energy grid, shape ``(M, 2N, 2N)``."""
    E = np.asarray(energies, dtype=np.float64)
    if np.any(E <= -1.0) or np.any(E >= 1.0):
        raise DomainError("L(E) needs every E strictly inside (-1, 1)")
    g = _geom(centers)
    k = np.sqrt((1.0 - E) * (1.0 + E))
    eps = np.sqrt((1.0 - E) / (1.0 + E))
    return _kernels.l_batch(k, eps, g.distances, g.kmats)


def build_dL_dE(E: float, centers: Sequence[CenterConfig] | Geometry) -> NDArray[np.complex128]:
    """Analytic energy derivative of L.

    Diagonal blocks: ``K_n / (2 eps (1 - E^2))``. Off-diagonal blocks:
    ``(E d / k) g(k d) I`` with ``g = -f'``.
    """
    kin = _open_kinematics(E)
    g = _geom(centers)
    n = g.n
    out = np.zeros((n, 2, n, 2), dtype=np.complex128)
    off = ~np.eye(n, dtype=bool)
    d = np.where(off, g.distances, 1.0)
    offd = np.where(off, (kin.E * d / kin.k) * g_kernel(kin.k * d), 0.0)
    out += offd[:, None, :, None] * np.eye(2)[None, :, None, :]
    scale = 1.0 / (2.0 * kin.eps * kin.k * kin.k)
    for a in range(n):
        out[a, :, a, :] = g.kmats[a] * scale
    return out.reshape(2 * n, 2 * n)


def det_L(E: float, centers: Sequence[CenterConfig] | Geometry) -> float:
    # L is Hermitian, so its determinant is real; use the spectrum for accuracy
    lm = build_L(E, centers)
    return float(np.prod(np.linalg.eigvalsh(lm.matrix)))


def sturmian_normalization(vecs: NDArray[np.complex128], k: float) -> NDArray[np.complex128]:
    """Scale columns so that ``(4 pi / k^2) y^H y = 1``."""
    norms = np.linalg.norm(vecs, axis=0)
    return vecs * (k / (np.sqrt(4.0 * np.pi) * norms))


def fix_phase(vecs: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Rotate each column so its largest-magnitude component is real positive."""
    vecs = np.array(vecs, dtype=np.complex128, copy=True)
    single = vecs.ndim == 1
    if single:
        vecs = vecs[:, None]
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    vecs *= np.conj(lead) / np.abs(lead)
    vecs[idx, np.arange(vecs.shape[1])] = np.abs(lead)
    return vecs[:, 0] if single else vecs


def eig_L(E: float, centers: Sequence[CenterConfig] | Geometry) -> EigDecomposition:
    """Eigen-decomposition of L(E).

    ``numpy.linalg.eigh`` already returns an orthonormal basis inside a
    degenerate cluster. The clusters are re-orthonormalised with a QR
    factorisation anyway, so the guarantee holds regardless of LAPACK driver.
    """
    lm = build_L(E, centers)
    vals, vecs = np.linalg.eigh(lm.matrix)
    scale = max(float(np.max(np.abs(vals))), 1.0)
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > DEGENERACY_RTOL * scale:
            if i - start > 1:
                q, _ = np.linalg.qr(vecs[:, start:i])
                vecs[:, start:i] = q
            start = i
    vecs = fix_phase(sturmian_normalization(vecs, lm.kin.k))
    return EigDecomposition(vals, vecs, lm.kin)


def pseudo_gram(
    kin: Kinematics, coeffs: NDArray[np.complex128], centers: Sequence[CenterConfig] | Geometry
) -> NDArray[np.complex128]:
    """Pseudo-product matrix between equal-energy states given by coefficient columns.

    ``(2 pi / k^3) [(1 - eps^2) X^H (e^{-k d} (x) I) X + eps X^H diag(K) X]``.
    The diagonal of ``e^{-k d}`` is 1.
    """
    g = _geom(centers)
    n = g.n
    X = np.asarray(coeffs, dtype=np.complex128).reshape(2 * n, -1)
    ekd = np.exp(-kin.k * g.distances)
    overlap = np.kron(ekd, np.eye(2))
    kdiag = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    for a in range(n):
        kdiag[2 * a : 2 * a + 2, 2 * a : 2 * a + 2] = g.kmats[a]
    form = (1.0 - kin.eps**2) * overlap + kin.eps * kdiag
    return (2.0 * np.pi / kin.k**3) * (X.conj().T @ form @ X)
