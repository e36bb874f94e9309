"""Model primitives: kinematics, radial kernels, interaction matrices, Dirac algebra.

Natural units throughout (hbar = c = m = 1): energies in units of the rest
energy, lengths in reduced Compton wavelengths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "DIRAC",
    "PAULI",
    "CenterConfig",
    "CoincidentCentersError",
    "ConvergenceError",
    "DiracMatrices",
    "DomainError",
    "Kinematics",
    "NullStateError",
    "PoleError",
    "decompose_interaction",
    "energy_from_epsilon",
    "epsilon_from_k",
    "f_kernel",
    "g_kernel",
    "interaction_matrix",
    "kinematics_from_energy",
    "pauli_dot",
]

HERMITICITY_TOL = 1e-12


class DomainError(ValueError):
    """Argument outside the domain where a quantity is defined."""


class CoincidentCentersError(ValueError):
    """Two centers closer than the coincidence threshold."""


class ConvergenceError(RuntimeError):
    """An iterative procedure did not reach its tolerance."""


class PoleError(ValueError):
    """Evaluation requested at (or numerically on) a pole of a resolvent."""


class NullStateError(ValueError):
    """Operation needs a state of nonzero signature but got a null one."""


# -- Pauli and Dirac matrices (standard representation) -----------------------

PAULI: NDArray[np.complex128] = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)
PAULI.setflags(write=False)


def pauli_dot(vec: ArrayLike) -> NDArray[np.complex128]:
    """Return ``vec . sigma`` for a 3-vector, or a stack for shape ``(..., 3)``."""
    v = np.asarray(vec)
    return np.einsum("...i,ijk->...jk", v, PAULI)


@dataclass(frozen=True)
class DiracMatrices:
    alpha: NDArray[np.complex128]  # (3, 4, 4)
    beta: NDArray[np.complex128]
    beta_plus: NDArray[np.complex128]
    beta_minus: NDArray[np.complex128]
    alpha_plus: NDArray[np.complex128]  # beta_plus @ alpha_i = alpha_i @ beta_minus
    alpha_minus: NDArray[np.complex128]  # beta_minus @ alpha_i = alpha_i @ beta_plus


def _build_dirac() -> DiracMatrices:
    eye2 = np.eye(2, dtype=np.complex128)
    zero2 = np.zeros((2, 2), dtype=np.complex128)
    alpha = np.array([np.block([[zero2, s], [s, zero2]]) for s in PAULI])
    beta = np.block([[eye2, zero2], [zero2, -eye2]])
    eye4 = np.eye(4, dtype=np.complex128)
    bp = 0.5 * (eye4 + beta)
    bm = 0.5 * (eye4 - beta)
    ap = np.einsum("jk,ikl->ijl", bp, alpha)
    am = np.einsum("jk,ikl->ijl", bm, alpha)
    for arr in (alpha, beta, bp, bm, ap, am):
        arr.setflags(write=False)
    return DiracMatrices(alpha, beta, bp, bm, ap, am)


DIRAC = _build_dirac()


# -- kinematics ---------------------------------------------------------------


@dataclass(frozen=True)
class Kinematics:
    """Energy together with its decay constant ``k`` and ratio ``eps``.

    ``k = sqrt(1 - E^2)`` and ``eps = sqrt((1 - E)/(1 + E))``; the pair obeys
    ``k = 2 eps/(1 + eps^2)``.
    """

    E: float
    k: float
    eps: float


def kinematics_from_energy(E: float) -> Kinematics:
    E = float(E)
    if not np.isfinite(E) or E <= -1.0 or E > 1.0:
        raise DomainError(f"energy must lie in (-1, 1], got {E!r}")
    # product form keeps k accurate near both thresholds
    k = float(np.sqrt((1.0 - E) * (1.0 + E)))
    eps = float(np.sqrt((1.0 - E) / (1.0 + E)))
    return Kinematics(E, k, eps)


def energy_from_epsilon(eps: float) -> Kinematics:
    eps = float(eps)
    if not np.isfinite(eps) or eps < 0.0:
        raise DomainError(f"eps must be finite and >= 0, got {eps!r}")
    d = 1.0 + eps * eps
    return Kinematics((1.0 - eps * eps) / d, 2.0 * eps / d, eps)


def epsilon_from_k(k: float, upper: bool = True) -> float:
    """Invert ``k(eps)``; ``upper`` selects the ``E >= 0`` root (``eps <= 1``)."""
    if not 0.0 <= k <= 1.0:
        raise DomainError(f"k must lie in [0, 1], got {k!r}")
    s = np.sqrt(1.0 - k * k)
    if upper:
        return float(k / (1.0 + s))
    if k == 0.0:
        raise DomainError("k = 0 has no lower-half energy partner")
    return float((1.0 + s) / k)


# -- radial kernels -----------------------------------------------------------


def _positive(z: ArrayLike) -> NDArray[np.float64]:
    z = np.asarray(z, dtype=np.float64)
    if not np.all(z > 0.0):
        raise DomainError("kernel argument must be > 0")
    return z


def f_kernel(z: ArrayLike) -> NDArray[np.float64] | float:
    """Yukawa kernel ``exp(-z)/z``; singular at ``z = 0``."""
    z = _positive(z)
    out = np.exp(-z) / z
    return out if out.ndim else float(out)


def g_kernel(z: ArrayLike) -> NDArray[np.float64] | float:
    """``exp(-z)/z + exp(-z)/z^2``, the negative derivative of :func:`f_kernel`."""
    z = _positive(z)
    out = np.exp(-z) * (1.0 / z + 1.0 / (z * z))
    return out if out.ndim else float(out)


# -- interaction matrices -----------------------------------------------------


def interaction_matrix(varkappa: float, kappa_vec: ArrayLike) -> NDArray[np.complex128]:
    """``varkappa * I + kappa_vec . sigma`` as a 2x2 Hermitian matrix."""
    kv = np.asarray(kappa_vec, dtype=np.float64).reshape(3)
    return float(varkappa) * np.eye(2, dtype=np.complex128) + pauli_dot(kv)


def decompose_interaction(K: ArrayLike) -> tuple[float, NDArray[np.float64]]:
    """Split a Hermitian 2x2 matrix into its scalar part and Pauli vector."""
    K = np.asarray(K, dtype=np.complex128)
    if K.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {K.shape}")
    if np.max(np.abs(K - K.conj().T)) > HERMITICITY_TOL:
        raise ValueError("interaction matrix is not Hermitian")
    varkappa = 0.5 * np.trace(K).real
    kappa = np.array([0.5 * np.trace(s @ K).real for s in PAULI])
    return float(varkappa), kappa


@dataclass(frozen=True)
class CenterConfig:
    """One point interaction: location plus the parameters of its matrix."""

    position: NDArray[np.float64]
    varkappa: float
    kappa_vec: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        pos = np.asarray(self.position, dtype=np.float64).reshape(3)
        kv = np.asarray(self.kappa_vec, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(kv)) and np.isfinite(self.varkappa)):
            raise ValueError("center parameters must be finite")
        pos.setflags(write=False)
        kv.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "kappa_vec", kv)
        object.__setattr__(self, "varkappa", float(self.varkappa))

    @property
    def kappa(self) -> float:
        return float(np.linalg.norm(self.kappa_vec))

    @property
    def matrix(self) -> NDArray[np.complex128]:
        return interaction_matrix(self.varkappa, self.kappa_vec)

    @classmethod
    def from_matrix(cls, position: ArrayLike, K: ArrayLike) -> "CenterConfig":
        vk, kv = decompose_interaction(K)
        return cls(np.asarray(position, dtype=np.float64), vk, kv)


COINCIDENCE_TOL = 1e-12


@dataclass(frozen=True)
class Geometry:
    """Arrays derived from a list of centers, shared by the numerical kernels."""

    positions: NDArray[np.float64]  # (N, 3)
    distances: NDArray[np.float64]  # (N, N), zero diagonal
    kmats: NDArray[np.complex128]  # (N, 2, 2)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


def geometry(centers: Sequence[CenterConfig]) -> Geometry:
    if len(centers) == 0:
        raise ValueError("at least one center is required")
    pos = np.array([c.position for c in centers], dtype=np.float64)
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    off = d[~np.eye(len(centers), dtype=bool)]
    if off.size and off.min() < COINCIDENCE_TOL:
        raise CoincidentCentersError("two centers coincide; merge their interaction matrices")
    kmats = np.array([c.matrix for c in centers])
    return Geometry(pos, d, kmats)
