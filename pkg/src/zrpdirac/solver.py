"""Bound-state search: follow the eigenvalue branches of L(E) and find their zeros.

Each eigenvalue lambda_a(E) of L(E) is a smooth branch once eigenvectors are
matched between neighbouring energies by overlap. A bound state sits wherever a
branch crosses (or touches) zero. The sign of the branch slope there is the
state's signature.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq, linear_sum_assignment

from .core import (
    CenterConfig,
    ConvergenceError,
    Geometry,
    Kinematics,
    NullStateError,
    geometry,
    kinematics_from_energy,
)
from .operator import (
    DEGENERACY_RTOL,
    build_dL_dE,
    build_L,
    build_L_batch,
    fix_phase,
    pseudo_gram,
    sturmian_normalization,
)

log = logging.getLogger(__name__)

__all__ = [
    "BoundState",
    "SolverSettings",
    "SturmianBranch",
    "energy_grid",
    "find_bound_states",
    "hellmann_feynman_slope",
    "signature_of",
    "sturmian_normalizer",
    "threshold_candidates",
    "trace_branches",
]

SLOPE_ZERO_TOL = 1e-8
TANGENCY_TOL = 1e-12
DEDUP_TOL = 1e-10
EIGVEC_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SolverSettings:
    grid_points: int = 2001
    delta: float = 1e-6
    root_tol: float = 1e-12
    min_overlap: float = 0.5
    max_depth: int = 40

    def __post_init__(self) -> None:
        if self.grid_points < 3:
            raise ValueError("grid_points must be at least 3")
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 0.5)")
        if not self.root_tol > 0.0:
            raise ValueError("root_tol must be positive")


@dataclass(frozen=True)
class SturmianBranch:
    """One eigenvalue branch sampled on an (adaptively refined) energy grid.

    ``eigenvectors[i]`` is Sturmian-normalised: ``(4 pi/k^2) y^H y = 1``.
    """

    index: int
    energies: NDArray[np.float64]
    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.complex128]


@dataclass(frozen=True)
class BoundState:
    """A zero of some branch, with its coefficient vector.

    ``coeffs`` stacks the N two-spinors. For ``signature != 0`` they are scaled
    so the self pseudo-product equals the signature. ``pseudo_norm`` stores
    that signed self pseudo-product. ``normalized`` is False for null states,
    which carry unit Euclidean norm instead.
    """

    energy: float
    kin: Kinematics
    coeffs: NDArray[np.complex128]
    branch: int
    signature: int
    slope: float
    pseudo_norm: float
    normalized: bool
    tangential: bool = False

    @property
    def spinors(self) -> NDArray[np.complex128]:
        return self.coeffs.reshape(-1, 2)


def energy_grid(grid_points: int = 2001, delta: float = 1e-6) -> NDArray[np.float64]:
    return np.linspace(-1.0 + delta, 1.0 - delta, grid_points)


# -- branch tracking ----------------------------------------------------------


def _cluster_slices(vals: NDArray[np.float64]) -> list[slice]:
    tol = DEGENERACY_RTOL * max(float(np.max(np.abs(vals))), 1.0)
    out, start = [], 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > tol:
            if i - start > 1:
                out.append(slice(start, i))
            start = i
    return out


def _align_clusters(U_prev: NDArray, vals: NDArray, V: NDArray) -> NDArray:
    """Rotate each degenerate cluster of ``V`` onto the previous branch vectors.

    Inside a degenerate eigenspace the basis is arbitrary. The orthogonal
    Procrustes rotation picks the basis closest to the vectors being tracked.
    """
    clusters = _cluster_slices(vals)
    if not clusters:
        return V
    V = V.copy()
    for sl in clusters:
        block = V[:, sl]
        proj = U_prev.conj().T @ block
        m = block.shape[1]
        rows = np.argsort(-np.linalg.norm(proj, axis=1))[:m]
        S = block.conj().T @ U_prev[:, rows]
        A, _, Bh = np.linalg.svd(S)
        V[:, sl] = block @ (A @ Bh)
    return V


class _Tracker:
    def __init__(self, geom: Geometry, min_overlap: float, max_depth: int) -> None:
        self.geom = geom
        self.min_overlap = min_overlap
        self.max_depth = max_depth

    def eigh(self, E: float) -> tuple[NDArray, NDArray]:
        return np.linalg.eigh(build_L(E, self.geom).matrix)

    def advance(self, E0, U0, E1, vals1, V1, depth=0):
        """Match branch vectors ``U0`` at ``E0`` to the eigenpairs at ``E1``.

        Returns the list of accepted samples ``(E, vals, vecs, perm)`` in
        branch order, bisecting the step while any overlap is below threshold.
        """
        V1r = _align_clusters(U0, vals1, V1)
        O = np.abs(U0.conj().T @ V1r)
        rows, perm = linear_sum_assignment(-O)
        if O[rows, perm].min() >= self.min_overlap:
            return [(E1, vals1[perm], V1r[:, perm], perm)]
        if depth >= self.max_depth:
            raise ConvergenceError(
                f"branch matching failed between E={E0!r} and E={E1!r} after {depth} bisections"
            )
        Em = 0.5 * (E0 + E1)
        valsm, Vm = self.eigh(Em)
        first = self.advance(E0, U0, Em, valsm, Vm, depth + 1)
        Um = first[-1][2]
        return first + self.advance(Em, Um, E1, vals1, V1, depth + 1)


def _track(
    geom: Geometry, E: NDArray[np.float64], min_overlap: float, max_depth: int
) -> tuple[NDArray, NDArray, NDArray]:
    """Branch-ordered samples: energies ``(M,)``, values ``(M, 2N)``, unit vectors ``(M, 2N, 2N)``."""
    vals, vecs = np.linalg.eigh(build_L_batch(E, geom))
    n2 = vals.shape[1]
    ar = np.arange(n2)
    scale = np.maximum(np.max(np.abs(vals), axis=1), 1.0)
    degenerate = np.any(np.diff(vals, axis=1) <= DEGENERACY_RTOL * scale[:, None], axis=1)
    ov = np.abs(np.einsum("mji,mjk->mik", vecs[:-1].conj(), vecs[1:]))
    # identity matching between consecutive sorted orders needs no bookkeeping
    fast = (
        (ov[:, ar, ar] >= min_overlap).all(axis=1)
        & (np.argmax(ov, axis=2) == ar).all(axis=1)
        & (np.argmax(ov, axis=1) == ar).all(axis=1)
        & ~degenerate[:-1]
        & ~degenerate[1:]
    )
    tracker = _Tracker(geom, min_overlap, max_depth)
    out_E = [E[0]]
    out_vals = [vals[0]]
    out_vecs = [vecs[0]]
    perm = ar
    U = vecs[0]
    for i in range(len(E) - 1):
        if fast[i]:
            U = vecs[i + 1][:, perm]
            out_E.append(E[i + 1])
            out_vals.append(vals[i + 1][perm])
            out_vecs.append(U)
            continue
        for Es, vs, Vs, perm in tracker.advance(E[i], U, E[i + 1], vals[i + 1], vecs[i + 1]):
            out_E.append(Es)
            out_vals.append(vs)
            out_vecs.append(Vs)
        U = out_vecs[-1]
    return np.array(out_E), np.array(out_vals), np.array(out_vecs)


def trace_branches(
    centers: Sequence[CenterConfig],
    energies: ArrayLike | None = None,
    *,
    settings: SolverSettings = SolverSettings(),
) -> list[SturmianBranch]:
    """Follow every eigenvalue of L(E) across an energy grid.

    Eigenpairs at consecutive energies are matched by maximising ``|u^H v|``
    (linear assignment on unit vectors). Wherever a matched overlap drops
    below ``settings.min_overlap`` the interval is bisected, at most
    ``settings.max_depth`` times.
    """
    geom = geometry(centers)
    E = energy_grid(settings.grid_points, settings.delta) if energies is None else np.asarray(energies, float)
    Es, vals, vecs = _track(geom, E, settings.min_overlap, settings.max_depth)
    k = np.sqrt((1.0 - Es) * (1.0 + Es))
    scale = (k / np.sqrt(4.0 * np.pi))[:, None, None]
    vecs = vecs * scale
    return [
        SturmianBranch(b, Es, vals[:, b].copy(), vecs[:, :, b].copy()) for b in range(vals.shape[1])
    ]


# -- slopes and signatures ----------------------------------------------------


def hellmann_feynman_slope(
    E: float, y: ArrayLike, centers: Sequence[CenterConfig] | Geometry
) -> float:
    """``d lambda/dE = y^H L'(E) y / y^H y`` for an eigenvector ``y`` of L(E).

    Raises ``ValueError`` when ``y`` is not an eigenvector to relative
    residual 1e-10.
    """
    y = np.asarray(y, dtype=np.complex128).ravel()
    L = build_L(E, centers).matrix
    nrm2 = float(np.vdot(y, y).real)
    lam = float(np.vdot(y, L @ y).real) / nrm2
    resid = np.linalg.norm(L @ y - lam * y) / np.sqrt(nrm2)
    if resid > EIGVEC_RESIDUAL_TOL * max(np.linalg.norm(L, 2), 1.0):
        raise ValueError(f"vector is not an eigenvector of L({E!r}): residual {resid:.3e}")
    return float(np.vdot(y, build_dL_dE(E, centers) @ y).real) / nrm2


def _sign(slope: float) -> int:
    if abs(slope) < SLOPE_ZERO_TOL:
        return 0
    return 1 if slope > 0 else -1


def signature_of(state: BoundState, centers: Sequence[CenterConfig] | Geometry) -> int:
    if state.tangential:
        return 0
    return _sign(hellmann_feynman_slope(state.energy, state.coeffs, centers))


def sturmian_normalizer(state: BoundState) -> float:
    """``sqrt(eps |d lambda/dE|)``: divides a Sturmian to give the bound state."""
    if state.signature == 0:
        raise NullStateError("null states (signature 0) have no Sturmian normalizer")
    return float(np.sqrt(state.kin.eps * abs(state.slope)))


# -- root finding -------------------------------------------------------------


def _tracked_value(E: float, geom: Geometry, ref: NDArray) -> tuple[float, NDArray]:
    vals, vecs = np.linalg.eigh(build_L(E, geom).matrix)
    j = int(np.argmax(np.abs(ref.conj() @ vecs)))
    return float(vals[j]), vecs[:, j]


def _refine_root(geom: Geometry, a: float, b: float, ref: NDArray, root_tol: float) -> float:
    def fn(E: float) -> float:
        return _tracked_value(E, geom, ref)[0]

    E = brentq(fn, a, b, xtol=min(root_tol, 1e-13) * 1e-2, rtol=8.9e-16, maxiter=200)
    # one Hellmann-Feynman Newton step, kept only if it improves the residual
    lam, v = _tracked_value(E, geom, ref)
    if lam != 0.0:
        slope = float(np.vdot(v, build_dL_dE(E, geom) @ v).real)
        if slope != 0.0:
            E1 = E - lam / slope
            if min(a, b) <= E1 <= max(a, b):
                lam1, _ = _tracked_value(E1, geom, ref)
                if abs(lam1) < abs(lam):
                    E = E1
    return E


def _tracked_slope(E: float, geom: Geometry, ref: NDArray) -> float:
    _, v = _tracked_value(E, geom, ref)
    return float(np.vdot(v, build_dL_dE(E, geom) @ v).real)


def _branch_roots(
    geom: Geometry, Es: NDArray, lam: NDArray, vecs: NDArray, root_tol: float
) -> list[tuple[float, NDArray, bool]]:
    """Zeros of one branch as ``(E, reference vector, tangential)``."""
    roots: list[tuple[float, NDArray, bool]] = []
    for i in np.nonzero(lam == 0.0)[0]:
        roots.append((float(Es[i]), vecs[i], False))
    for i in np.nonzero(lam[:-1] * lam[1:] < 0.0)[0]:
        roots.append((_refine_root(geom, Es[i], Es[i + 1], vecs[i], root_tol), vecs[i], False))
    # extrema approaching zero without a sampled sign change: two nearby roots or a touch
    d = np.diff(lam)
    for i in np.nonzero(d[:-1] * d[1:] < 0.0)[0] + 1:
        li = lam[i]
        if li == 0.0 or lam[i - 1] * li <= 0.0 or lam[i + 1] * li <= 0.0:
            continue
        if abs(li) > abs(lam[i - 1]) or abs(li) > abs(lam[i + 1]):
            continue  # extremum points away from zero
        if abs(li) > 10.0 * max(abs(d[i - 1]), abs(d[i])):
            continue  # too far from zero for the curvature to reach it
        a, b = Es[i - 1], Es[i + 1]
        ref = vecs[i]
        sa, sb = _tracked_slope(a, geom, ref), _tracked_slope(b, geom, ref)
        if sa * sb >= 0.0:
            continue
        Ex = brentq(lambda E: _tracked_slope(E, geom, ref), a, b, xtol=1e-16, rtol=8.9e-16)
        lx, _ = _tracked_value(Ex, geom, ref)
        if abs(lx) <= TANGENCY_TOL:
            roots.append((Ex, ref, True))
        elif lx * li < 0.0:
            roots.append((_refine_root(geom, a, Ex, ref, root_tol), ref, False))
            roots.append((_refine_root(geom, Ex, b, ref, root_tol), ref, False))
    return roots


def threshold_candidates(
    centers: Sequence[CenterConfig], settings: SolverSettings = SolverSettings()
) -> list[tuple[float, int]]:
    """Roots hiding in the slivers ``(-1, -1+delta)`` and ``(1-delta, 1)``.

    Two signatures are checked at each end of the scan. The number of
    negative eigenvalues may change between ``1-delta`` and ``1-delta^2``.
    An eigenvalue may also shrink toward zero without changing sign: a root
    sitting exactly on the threshold makes ``lambda`` vanish like
    ``sqrt(1-E)``, where generic branches diverge or level off. Returns
    ``(threshold, count)`` pairs for each sliver that shows either signature.
    """
    geom = geometry(centers)
    d = settings.delta
    probes = np.array([-1.0 + d, -1.0 + d * d, 1.0 - d, 1.0 - d * d])
    probes = np.clip(probes, -1.0 + 1e-15, 1.0 - 1e-15)
    vals = np.linalg.eigvalsh(build_L_batch(probes, geom))
    out = []
    for thr, outer, inner in ((-1.0, vals[0], vals[1]), (1.0, vals[2], vals[3])):
        crossed = abs(int((outer < 0.0).sum()) - int((inner < 0.0).sum()))
        shrinking = int(np.sum((np.sign(outer) == np.sign(inner)) & (np.abs(inner) < 0.5 * np.abs(outer))))
        if crossed or shrinking:
            out.append((thr, crossed + shrinking))
    return out


def _make_state(
    E: float, y: NDArray, branch: int, tangential: bool, geom: Geometry
) -> BoundState:
    kin = kinematics_from_energy(E)
    slope = float(np.vdot(y, build_dL_dE(E, geom) @ y).real / np.vdot(y, y).real)
    sig = 0 if tangential else _sign(slope)
    if sig != 0:
        x = sturmian_normalization(y[:, None], kin.k)[:, 0]
        x = x / np.sqrt(kin.eps * abs(slope))
        normalized = True
    else:
        x = y / np.linalg.norm(y)
        normalized = False
    x = fix_phase(x)
    pn = float(pseudo_gram(kin, x[:, None], geom)[0, 0].real)
    return BoundState(E, kin, x, branch, sig, slope, pn, normalized, tangential)


def find_bound_states(
    centers: Sequence[CenterConfig], settings: SolverSettings = SolverSettings()
) -> list[BoundState]:
    """All bound states with energies inside ``(-1 + delta, 1 - delta)``, ascending.

    Roots closer than 1e-10 in energy are merged into one level whose
    multiplicity equals the number of branches that vanish there. A degenerate
    null space is diagonalised with the pseudo-product so the returned states
    are mutually pseudo-orthogonal.
    """
    geom = geometry(centers)
    branches = trace_branches(centers, settings=settings)
    raw: list[tuple[float, int, NDArray, bool]] = []
    for br in branches:
        for E, ref, tang in _branch_roots(geom, br.energies, br.eigenvalues, br.eigenvectors, settings.root_tol):
            raw.append((E, br.index, ref, tang))
    raw.sort(key=lambda t: t[0])

    groups: list[list[tuple[float, int, NDArray, bool]]] = []
    for item in raw:
        if groups and item[0] - groups[-1][-1][0] <= DEDUP_TOL:
            groups[-1].append(item)
        else:
            groups.append([item])

    states: list[BoundState] = []
    for grp in groups:
        E = float(np.mean([g[0] for g in grp]))
        m = len(grp)
        vals, vecs = np.linalg.eigh(build_L(E, geom).matrix)
        order = np.argsort(np.abs(vals))[:m]
        Y = vecs[:, order]
        tangential = all(g[3] for g in grp)
        if m > 1:
            kin = kinematics_from_energy(E)
            G = pseudo_gram(kin, Y, geom)
            _, Q = np.linalg.eigh(0.5 * (G + G.conj().T))
            Y = Y @ Q
        branch_ids = sorted(g[1] for g in grp)
        for j in range(m):
            states.append(_make_state(E, Y[:, j], branch_ids[j], tangential, geom))

    cands = threshold_candidates(centers, settings)
    for thr, count in cands:
        log.warning(
            "%d branch(es) change sign within %.1e of the threshold E=%+.0f; "
            "such near-threshold states are not returned",
            count,
            settings.delta,
            thr,
        )
    return sorted(states, key=lambda s: s.energy)
