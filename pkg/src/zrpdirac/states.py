"""Bispinor wave functions and the algebra of bound states.

A state with coefficients ``chi_n`` (one 2-spinor per center) at energy E is

    Psi(r) = sum_n ( f(k r_n) chi_n ,  i eps g(k r_n) (mu_n . sigma) chi_n )

with ``r_n = |r - R_n|`` and ``mu_n`` the unit vector from center n to r.
States are not orthogonal in the ordinary sense. The natural form is the
indefinite pseudo-product: a volume integral of the upper components plus
surface terms at each center.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels
from .core import (
    DIRAC,
    CenterConfig,
    Geometry,
    f_kernel,
    geometry,
    kinematics_from_energy,
)
from .operator import build_dL_dE, build_L, fix_phase, pseudo_gram
from .solver import BoundState, _sign

__all__ = [
    "IDENTITY_KINDS",
    "assemble_sturmian",
    "assemble_wavefunction",
    "current_density",
    "flux_through_sphere",
    "identity_residual",
    "limiting_bracket",
    "null_residual",
    "normalize_state",
    "pseudo_orthonormality_residual",
    "pseudo_product",
    "richardson",
    "self_product_from_slope",
    "surface_overlap_beta_plus",
    "volume_overlap_beta_plus",
    "yukawa_overlap",
]

MIN_DISTANCE = 1e-12


def _geom(centers: Sequence[CenterConfig] | Geometry) -> Geometry:
    return centers if isinstance(centers, Geometry) else geometry(centers)


def _points(r: ArrayLike) -> tuple[NDArray[np.float64], bool]:
    pts = np.asarray(r, dtype=np.float64)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    return pts, single


def _guard(pts: NDArray, geom: Geometry) -> None:
    d = np.linalg.norm(pts[:, None, :] - geom.positions[None], axis=-1)
    if d.size and d.min() < MIN_DISTANCE:
        raise ValueError("field point coincides with a center; the bispinor is singular there")


def assemble_sturmian(
    E: float, coeffs: ArrayLike, r: ArrayLike, centers: Sequence[CenterConfig] | Geometry
) -> NDArray[np.complex128]:
    """Bispinor built from arbitrary coefficients at energy ``E``.

    ``r`` is a point ``(3,)`` or a cloud ``(P, 3)``; the result is ``(4,)`` or
    ``(P, 4)``. ``coeffs`` may also be a stack ``(S, 2N)``, giving ``(S, P, 4)``.
    """
    geom = _geom(centers)
    kin = kinematics_from_energy(E)
    pts, single = _points(r)
    _guard(pts, geom)
    c = np.asarray(coeffs, dtype=np.complex128)
    stacked = c.ndim == 2
    c = c.reshape(-1, geom.n, 2)
    out = _kernels.fields(pts, geom.positions, c, kin.k, kin.eps)
    if stacked:
        return out[:, 0] if single else out
    return out[0, 0] if single else out[0]


def assemble_wavefunction(
    state: BoundState, r: ArrayLike, centers: Sequence[CenterConfig] | Geometry
) -> NDArray[np.complex128]:
    return assemble_sturmian(state.energy, state.coeffs, r, centers)


def limiting_bracket(
    E: float, values: ArrayLike, offsets: ArrayLike, K: ArrayLike, lam: float = 0.0
) -> NDArray[np.complex128]:
    """Apply the contact-condition operator of one center to field values near it.

    ``[i rho.alpha_plus + (|rho|/2) K_plus - lam eps |rho| beta_plus + (eps/k) beta_plus] Phi``
    with ``rho = offsets``. ``values`` is ``(P, 4)`` or ``(P, 4, M)`` (columns
    of a Green's function). ``lam = 0`` is the bound-state condition; a
    Sturmian of eigenvalue ``lam`` passes its own ``lam``. For a field obeying
    the condition the result is ``O(|rho|)``.
    """
    kin = kinematics_from_energy(E)
    rho = np.asarray(offsets, dtype=np.float64).reshape(-1, 3)
    phi = np.asarray(values, dtype=np.complex128)
    col = phi.ndim == 3
    if not col:
        phi = phi[..., None]
    r = np.linalg.norm(rho, axis=1)
    Kp = np.zeros((4, 4), dtype=np.complex128)
    Kp[:2, :2] = np.asarray(K)
    bp = DIRAC.beta_plus
    ra = np.einsum("pi,iab->pab", rho, DIRAC.alpha_plus)
    op = (1j * ra + (0.5 * r)[:, None, None] * Kp
          + (kin.eps / kin.k - lam * kin.eps * r)[:, None, None] * bp)
    out = np.einsum("pab,pbm->pam", op, phi)
    return out if col else out[..., 0]


# -- overlaps ---------------------------------------------------------------------


def yukawa_overlap(a: float, b: float, R: float) -> float:
    """``int exp(-a r1 - b r2)/(r1 r2) d^3r`` for foci a distance ``R`` apart.

    Closed form ``4 pi exp(-R (a+b)/2) sinhc(R (a-b)/2)/(a+b)``; it reduces to
    ``2 pi exp(-a R)/a`` for ``a = b`` and ``4 pi/(a+b)`` for ``R = 0``.
    """
    if a <= 0.0 or b <= 0.0 or R < 0.0:
        raise ValueError("need a, b > 0 and R >= 0")
    p = 0.5 * R * (a + b)
    q = 0.5 * R * (a - b)
    if abs(q) < 1e-4:
        shape = math.exp(-p) * (1.0 + q * q / 6.0 + q**4 / 120.0)
    else:
        # exp(-p) sinh(q)/q, arranged so neither factor overflows (p >= |q|)
        shape = (math.exp(q - p) - math.exp(-q - p)) / (2.0 * q)
    return 4.0 * math.pi * shape / (a + b)


def _pair_overlaps(kb: float, ka: float, geom: Geometry) -> NDArray[np.float64]:
    n = geom.n
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = yukawa_overlap(kb, ka, geom.distances[i, j])
    return out


def volume_overlap_beta_plus(
    state_b: BoundState, state_a: BoundState, centers: Sequence[CenterConfig] | Geometry
) -> complex:
    """Integral over all space of ``Psi_b^H beta_plus Psi_a`` (upper components only)."""
    geom = _geom(centers)
    kb, ka = state_b.kin.k, state_a.kin.k
    M = _pair_overlaps(kb, ka, geom)
    cb, ca = state_b.spinors, state_a.spinors
    return complex(np.einsum("ni,nm,mi->", cb.conj(), M, ca) / (kb * ka))


def surface_overlap_beta_plus(
    state_b: BoundState, state_a: BoundState, centers: Sequence[CenterConfig] | Geometry
) -> complex:
    """Vanishing-sphere limit of the upper-component surface integrals: ``sum_n (4 pi/(k_b k_a)) chi_bn^H chi_an``."""
    geom = _geom(centers)
    if state_b.spinors.shape != state_a.spinors.shape or state_a.spinors.shape[0] != geom.n:
        raise ValueError("states and centers disagree on the number of centers")
    return complex(
        4.0 * math.pi / (state_b.kin.k * state_a.kin.k) * np.vdot(state_b.coeffs, state_a.coeffs)
    )


def pseudo_product(
    state_b: BoundState, state_a: BoundState, centers: Sequence[CenterConfig] | Geometry
) -> complex:
    """Indefinite pseudo-product of two bound states.

    ``[(E_b + E_a) V + (1/2) sum_n (4 pi/(k_b k_a)) chi_bn^H K_n chi_an] / sqrt((E_b+1)(E_a+1))``
    where ``V`` is the beta_plus volume overlap.
    """
    geom = _geom(centers)
    Eb, Ea = state_b.energy, state_a.energy
    V = volume_overlap_beta_plus(state_b, state_a, geom)
    cb, ca = state_b.spinors, state_a.spinors
    S = np.einsum("ni,nij,nj->", cb.conj(), geom.kmats, ca)
    surf = 0.5 * 4.0 * math.pi / (state_b.kin.k * state_a.kin.k) * S
    return complex(((Eb + Ea) * V + surf) / math.sqrt((Eb + 1.0) * (Ea + 1.0)))


def self_product_from_slope(state: BoundState, centers: Sequence[CenterConfig] | Geometry) -> float:
    """Self pseudo-product via the energy derivative: ``(4 pi eps/k^2) x^H L'(E) x``."""
    kin = state.kin
    x = state.coeffs
    return float((4.0 * math.pi * kin.eps / kin.k**2) * np.vdot(x, build_dL_dE(kin.E, centers) @ x).real)


def normalize_state(state: BoundState, centers: Sequence[CenterConfig] | Geometry) -> BoundState:
    """Rescale so the self pseudo-product equals the signature.

    Null states (signature 0) cannot be normalised this way; they get unit
    Euclidean norm and ``normalized=False``.
    """
    geom = _geom(centers)
    x = np.asarray(state.coeffs, dtype=np.complex128)
    L = build_dL_dE(state.energy, geom)
    slope = float(np.vdot(x, L @ x).real / np.vdot(x, x).real)
    sig = 0 if state.tangential else _sign(slope)
    value = float(pseudo_gram(state.kin, x[:, None], geom)[0, 0].real)
    if sig == 0:
        x = fix_phase(x / np.linalg.norm(x))
        pn = float(pseudo_gram(state.kin, x[:, None], geom)[0, 0].real)
        return replace(state, coeffs=x, signature=0, slope=slope, pseudo_norm=pn, normalized=False)
    x = fix_phase(x / math.sqrt(abs(value)))
    pn = float(pseudo_gram(state.kin, x[:, None], geom)[0, 0].real)
    return replace(state, coeffs=x, signature=sig, slope=slope, pseudo_norm=pn, normalized=True)


def pseudo_orthonormality_residual(
    states: Sequence[BoundState], centers: Sequence[CenterConfig] | Geometry
) -> float:
    """``max |<<b|a>> - signature_a delta_ab|`` over normalised, non-null states."""
    good = [s for s in states if s.normalized and s.signature != 0]
    worst = 0.0
    for i, sb in enumerate(good):
        for j, sa in enumerate(good):
            target = sa.signature if i == j else 0.0
            worst = max(worst, abs(pseudo_product(sb, sa, centers) - target))
    return worst


# -- identities among bound states ------------------------------------------------

IdentityKind = Literal["null_vector", "energy_derivative", "cross_energy", "eps_weighted", "inverse_eps"]
IDENTITY_KINDS: tuple[str, ...] = (
    "null_vector",
    "energy_derivative",
    "cross_energy",
    "eps_weighted",
    "inverse_eps",
)


def _f_offdiag(k: float, geom: Geometry) -> NDArray[np.float64]:
    off = ~np.eye(geom.n, dtype=bool)
    d = np.where(off, geom.distances, 1.0)
    return np.where(off, f_kernel(k * d), 0.0)


def _ratio(terms: Sequence[complex], bounds: Sequence[float]) -> float:
    scale = max(max(bounds), max(abs(t) for t in terms))
    if scale == 0.0:
        return 0.0
    return abs(sum(terms)) / scale


def _pair_terms(kind: str, sb: BoundState, sa: BoundState, geom: Geometry):
    cb, ca = sb.spinors, sa.spinors
    nb = np.linalg.norm(cb, axis=1)
    na = np.linalg.norm(ca, axis=1)
    knorm = np.linalg.norm(geom.kmats, ord=2, axis=(1, 2))
    SK = np.einsum("ni,nij,nj->", cb.conj(), geom.kmats, ca)
    S = np.vdot(cb.ravel(), ca.ravel())
    SKb = float(np.sum(nb * knorm * na))
    Sb = float(np.sum(nb * na))
    fb = _f_offdiag(sb.kin.k, geom)
    fa = _f_offdiag(sa.kin.k, geom)
    G = cb.conj() @ ca.T  # G[n, m] = chi_bn^H chi_am
    Gb = np.outer(nb, na)
    if kind == "cross_energy":
        C = sb.kin.k * fb - sa.kin.k * fa
        terms = [0.5 * (sb.energy - sa.energy) * SK, -(sb.kin.k - sa.kin.k) * S, np.sum(G * C)]
        bounds = [0.5 * abs(sb.energy - sa.energy) * SKb, abs(sb.kin.k - sa.kin.k) * Sb, np.sum(Gb * np.abs(C))]
    elif kind == "eps_weighted":
        C = sb.kin.eps * fb - sa.kin.eps * fa
        terms = [(sb.kin.eps - sa.kin.eps) * S, -np.sum(G * C)]
        bounds = [abs(sb.kin.eps - sa.kin.eps) * Sb, np.sum(Gb * np.abs(C))]
    elif kind == "inverse_eps":
        C = fb - fa
        c0 = 0.5 * (1.0 / sb.kin.eps - 1.0 / sa.kin.eps)
        terms = [c0 * SK, np.sum(G * C)]
        bounds = [abs(c0) * SKb, np.sum(Gb * np.abs(C))]
    else:
        raise ValueError(kind)
    return terms, bounds


def null_residual(E: float, x: ArrayLike, centers: Sequence[CenterConfig] | Geometry) -> float:
    """``||L(E) x|| / ((1 + ||L||) ||x||)``.

    The unit floor matters: ``L`` vanishes identically when ``K/(2 eps) = I``
    (one center, ``varkappa = 2 eps``), and a purely relative measure would
    then be 0/0.
    """
    L = build_L(E, _geom(centers)).matrix
    x = np.asarray(x, dtype=np.complex128)
    return float(np.linalg.norm(L @ x) / ((1.0 + np.linalg.norm(L, 2)) * np.linalg.norm(x)))


def identity_residual(
    kind: str, states: Sequence[BoundState], centers: Sequence[CenterConfig] | Geometry
) -> float:
    """Largest scale-normalised residual of an algebraic identity over the given states.

    ``kind`` is one of :data:`IDENTITY_KINDS`:

    * ``null_vector``: see :func:`null_residual`.
    * ``energy_derivative``: ``(1/2) sum chi^H K chi + (E/k) sum e^{-k d} chi_n^H chi_m = k x^H L' x``.
    * ``cross_energy``, ``eps_weighted``, ``inverse_eps``: pair identities
      between states of different energies. Each residual is divided by the
      sum of magnitude bounds of its terms, with inner products replaced by
      products of norms.
    """
    geom = _geom(centers)
    worst = 0.0
    if kind == "null_vector":
        for s in states:
            worst = max(worst, null_residual(s.energy, s.coeffs, geom))
        return worst
    if kind == "energy_derivative":
        for s in states:
            c = s.spinors
            kin = s.kin
            t1 = 0.5 * np.einsum("ni,nij,nj->", c.conj(), geom.kmats, c).real
            ekd = np.exp(-kin.k * geom.distances)
            t2 = (kin.E / kin.k) * np.einsum("ni,nm,mi->", c.conj(), ekd, c).real
            rhs = kin.k * np.vdot(s.coeffs, build_dL_dE(kin.E, geom) @ s.coeffs).real
            worst = max(worst, _ratio([t1, t2, -rhs], [abs(t1), abs(t2), abs(rhs)]))
        return worst
    if kind not in IDENTITY_KINDS:
        raise ValueError(f"unknown identity {kind!r}; choose from {IDENTITY_KINDS}")
    for i, sb in enumerate(states):
        for sa in states[:i]:
            if abs(sb.energy - sa.energy) <= 1e-10:
                continue
            for b, a in ((sb, sa), (sa, sb)):
                terms, bounds = _pair_terms(kind, b, a, geom)
                worst = max(worst, _ratio(terms, bounds))
    return worst


# -- current and flux -------------------------------------------------------------


def current_density(psi: ArrayLike) -> NDArray[np.float64]:
    """``j_i = Psi^H alpha_i Psi`` for a bispinor ``(4,)`` or a stack ``(P, 4)``."""
    psi = np.asarray(psi, dtype=np.complex128)
    return np.einsum("...a,iab,...b->...i", psi.conj(), DIRAC.alpha, psi).real


def _sphere_nodes(center: NDArray, rho: float, n_theta: int = 32, n_phi: int = 64):
    xg, wg = np.polynomial.legendre.leggauss(n_theta)  # nodes in cos(theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    ct = np.repeat(xg, n_phi)
    st = np.sqrt(1.0 - ct * ct)
    ph = np.tile(phi, n_theta)
    normals = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=1)
    weights = np.repeat(wg, n_phi) * (2.0 * np.pi / n_phi) * rho * rho
    return center[None, :] + rho * normals, normals, weights


def flux_through_sphere(
    state: BoundState,
    center_index: int,
    rho: float,
    centers: Sequence[CenterConfig] | Geometry,
    n_theta: int = 32,
    n_phi: int = 64,
) -> tuple[float, float]:
    """Outward probability flux through a sphere of radius ``rho`` about one center.

    Returns ``(flux, scale)``, where ``scale`` integrates ``|j|`` over the
    same sphere. The normal current alone is no scale: for one center it
    vanishes pointwise. Quadrature is Gauss-Legendre in
    ``cos(theta)`` by trapezoid in ``phi``.
    """
    geom = _geom(centers)
    if geom.n > 1:
        dmin = geom.distances[~np.eye(geom.n, dtype=bool)].min()
        if rho >= 0.5 * dmin:
            raise ValueError("sphere radius must be below half the smallest center separation")
    pts, normals, w = _sphere_nodes(geom.positions[center_index], rho, n_theta, n_phi)
    psi = assemble_wavefunction(state, pts, geom)
    j = current_density(psi)
    jn = np.einsum("pi,pi->p", j, normals)
    return float(np.sum(w * jn)), float(np.sum(w * np.linalg.norm(j, axis=1)))


def richardson(values: Sequence, steps: Sequence[float], order: int = 1):
    """Extrapolate ``values(steps)`` to step 0 assuming ``v = v0 + c1 h + c2 h^2 + ...``.

    Interpolates the values with a polynomial in the step size whose lowest
    non-constant power is ``order`` and returns its constant term. Values may
    be arrays of any common shape; extrapolation is elementwise.
    """
    h = np.asarray(steps, dtype=np.float64)
    v = np.asarray(values)
    powers = order + np.arange(len(h) - 1)
    A = np.column_stack([np.ones_like(h)] + [h**p for p in powers])
    out = np.linalg.solve(A, v.reshape(len(h), -1))[0].reshape(v.shape[1:])
    return out[()] if out.ndim == 0 else out

