"""Self-consistency checks for a configuration's bound states, Sturmians and Green's function."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import DIRAC, CenterConfig, geometry
from .green import full_green
from .operator import eig_L
from .quadrature import sphere_surface_integral, yukawa_overlap_quadrature
from .solver import BoundState, SolverSettings, find_bound_states
from .states import (
    assemble_sturmian,
    flux_through_sphere,
    identity_residual,
    pseudo_orthonormality_residual,
    richardson,
    self_product_from_slope,
    yukawa_overlap,
)

__all__ = ["Check", "TOLERANCES", "run_verification", "sturmian_test_energy"]

TOLERANCES = {
    "null_vector": 1e-10,
    "energy_derivative": 1e-10,
    "cross_energy": 1e-10,
    "eps_weighted": 1e-10,
    "inverse_eps": 1e-10,
    "pseudo_orthonormality": 1e-9,
    "yukawa_oracle": 1e-7,
    "self_product_vs_slope": 1e-10,
    "sturmian_orthonormality_algebraic": 1e-12,
    "sturmian_orthonormality_quadrature": 1e-5,
    "green_symmetry": 1e-12,
    "flux": 1e-6,
}


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def sturmian_test_energy(centers: Sequence[CenterConfig], candidates=(0.1, -0.2, 0.35, -0.45, 0.55)) -> float:
    """An energy comfortably away from every bound state (``min |lambda| > 1e-2``)."""
    best, best_gap = candidates[0], -1.0
    for E in candidates:
        gap = float(np.min(np.abs(eig_L(E, centers).eigenvalues)))
        if gap > 1e-2:
            return E
        if gap > best_gap:
            best, best_gap = E, gap
    return best


def _sturmian_checks(centers, E: float) -> tuple[float, float]:
    geom = geometry(centers)
    dec = eig_L(E, geom)
    Y = dec.eigenvectors
    k = dec.kin.k
    alg = float(np.max(np.abs((4 * math.pi / k**2) * (Y.conj().T @ Y) - np.eye(Y.shape[1]))))

    coeffs = Y.T
    bp = DIRAC.beta_plus
    dmin = geom.distances[~np.eye(geom.n, dtype=bool)].min() if geom.n > 1 else 1.0
    rho1 = min(1e-4, 0.1 * dmin)
    rhos = (rho1, 0.5 * rho1)
    m = Y.shape[1]
    gram = np.zeros((len(rhos), m, m), dtype=complex)
    for ir, rho in enumerate(rhos):
        for n in range(geom.n):
            for b in range(m):
                for a in range(b, m):
                    val = sphere_surface_integral(
                        lambda p, c=coeffs[b]: assemble_sturmian(E, c, p, geom),
                        lambda p, c=coeffs[a]: assemble_sturmian(E, c, p, geom),
                        geom.positions[n],
                        rho,
                        bp,
                    )
                    gram[ir, b, a] += val
                    if a != b:
                        gram[ir, a, b] += np.conj(val)
    extrap = richardson([gram[0], gram[1]], rhos)
    quad_err = float(np.max(np.abs(extrap - np.eye(m))))
    return alg, quad_err


def _green_symmetry(centers, E: float, rng: np.random.Generator, pairs: int = 20) -> float:
    geom = geometry(centers)
    lo = geom.positions.min(axis=0) - 1.5
    hi = geom.positions.max(axis=0) + 1.5
    worst = 0.0
    done = 0
    while done < pairs:
        r, rp = rng.uniform(lo, hi), rng.uniform(lo, hi)
        near = np.linalg.norm(np.stack([r, rp])[:, None] - geom.positions[None], axis=-1).min()
        if near < 0.1 or np.linalg.norm(r - rp) < 0.1:
            continue
        G = full_green(E, r, rp, centers)
        Gt = full_green(E, rp, r, centers)
        worst = max(worst, float(np.max(np.abs(G - Gt.conj().T)) / np.max(np.abs(G))))
        done += 1
    return worst


def _flux(states: Sequence[BoundState], centers) -> float:
    geom = geometry(centers)
    dmin = geom.distances[~np.eye(geom.n, dtype=bool)].min() if geom.n > 1 else 1.0
    rho = min(1e-3, 0.25 * dmin)
    worst = 0.0
    for s in states:
        for n in range(geom.n):
            flux, scale = flux_through_sphere(s, n, rho, geom)
            if scale > 0.0:
                worst = max(worst, abs(flux) / scale)
    return worst


def _yukawa(states: Sequence[BoundState], centers) -> float:
    geom = geometry(centers)
    ks = sorted({s.kin.k for s in states})[:3]
    ds = sorted({float(d) for d in geom.distances.ravel()})[:3]
    worst = 0.0
    for a in ks:
        for b in ks:
            for d in ds:
                exact = yukawa_overlap(a, b, d)
                worst = max(worst, abs(yukawa_overlap_quadrature(a, b, d) / exact - 1.0))
    return worst


def run_verification(
    centers: Sequence[CenterConfig],
    seed: int = 0,
    settings: SolverSettings = SolverSettings(),
    corrupt: bool = False,
    states: Sequence[BoundState] | None = None,
) -> list[Check]:
    """Run every consistency check and return the results in a fixed order.

    ``corrupt`` perturbs the first state's coefficients. This is a negative
    control: at least the null-vector check must then fail.
    """
    rng = np.random.default_rng(seed)
    if states is None:
        states = find_bound_states(centers, settings)
    states = list(states)
    if corrupt and states:
        x = states[0].coeffs
        noise = 1e-3 * np.linalg.norm(x) * (rng.normal(size=x.shape) + 1j * rng.normal(size=x.shape))
        states[0] = replace(states[0], coeffs=x + noise)

    checks = [Check(kind, identity_residual(kind, states, centers), TOLERANCES[kind]) for kind in
              ("null_vector", "energy_derivative", "cross_energy", "eps_weighted", "inverse_eps")]
    checks.append(Check("pseudo_orthonormality", pseudo_orthonormality_residual(states, centers),
                        TOLERANCES["pseudo_orthonormality"]))
    checks.append(Check("yukawa_oracle", _yukawa(states, centers), TOLERANCES["yukawa_oracle"]))
    spv = max((abs(s.pseudo_norm - self_product_from_slope(s, centers)) / max(1.0, abs(s.pseudo_norm))
               for s in states), default=0.0)
    checks.append(Check("self_product_vs_slope", spv, TOLERANCES["self_product_vs_slope"]))
    E = sturmian_test_energy(centers)
    alg, quad = _sturmian_checks(centers, E)
    checks.append(Check("sturmian_orthonormality_algebraic", alg, TOLERANCES["sturmian_orthonormality_algebraic"]))
    checks.append(Check("sturmian_orthonormality_quadrature", quad, TOLERANCES["sturmian_orthonormality_quadrature"]))
    checks.append(Check("green_symmetry", _green_symmetry(centers, E, rng), TOLERANCES["green_symmetry"]))
    checks.append(Check("flux", _flux(states, centers), TOLERANCES["flux"]))
    return checks
