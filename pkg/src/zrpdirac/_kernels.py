"""Hot loops with a numba implementation and a pure-numpy fallback.

Two kernels carry the cost of every scan: assembling the coefficient matrix on
a whole energy grid, and summing the per-center bispinor contributions on a
cloud of field points. Both exist twice, once as vectorised numpy and once as
numba ``@njit`` loops, and the active backend is picked at import time:

* ``ZRP_NUMBA=0`` (or ``false``/``off``) forces numpy;
* otherwise numba is used when it imports.

``ZRP_THREADS`` caps the numba thread pool. Every point is computed
independently, so results do not depend on the thread count.
"""

from __future__ import annotations

import logging
import os
from typing import Callable

import numpy as np
from numpy.typing import NDArray

log = logging.getLogger(__name__)

try:
    import numba as nb

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is often too old and numba warns on every parallel call
        nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
    HAVE_NUMBA = False


# -- numpy reference implementations ------------------------------------------


def _l_batch_numpy(k, eps, distances, kmats):
    m = k.shape[0]
    n = distances.shape[0]
    out = np.zeros((m, n, 2, n, 2), dtype=np.complex128)
    off = ~np.eye(n, dtype=bool)
    kd = k[:, None, None] * np.where(off, distances, 1.0)[None]
    fk = np.where(off[None], np.exp(-kd) / kd, 0.0)
    eye2 = np.eye(2)
    out += fk[:, :, None, :, None] * eye2[None, None, :, None, :]
    idx = np.arange(n)
    diag = kmats[None] / (2.0 * eps[:, None, None, None]) - eye2
    out[:, idx, :, idx, :] = np.moveaxis(diag, 1, 0)
    return out.reshape(m, 2 * n, 2 * n)


def _fields_numpy(points, positions, coeffs, k, eps):
    # points (P,3), positions (N,3), coeffs (S,N,2) -> (S,P,4)
    diff = points[:, None, :] - positions[None, :, :]
    r = np.sqrt(np.einsum("pni,pni->pn", diff, diff))
    z = k * r
    ez = np.exp(-z)
    f = ez / z
    g = ez * (1.0 / z + 1.0 / (z * z))
    mu = diff / r[..., None]
    c0 = coeffs[..., 0][:, None, :]
    c1 = coeffs[..., 1][:, None, :]
    mx, my, mz = (mu[None, ..., i] for i in range(3))
    # (mu . sigma) chi, written out per component
    s0 = mz * c0 + (mx - 1j * my) * c1
    s1 = (mx + 1j * my) * c0 - mz * c1
    out = np.empty((coeffs.shape[0], points.shape[0], 4), dtype=np.complex128)
    out[..., 0] = np.sum(f[None] * c0, axis=-1)
    out[..., 1] = np.sum(f[None] * c1, axis=-1)
    ig = 1j * eps * g[None]
    out[..., 2] = np.sum(ig * s0, axis=-1)
    out[..., 3] = np.sum(ig * s1, axis=-1)
    return out


# -- numba implementations ----------------------------------------------------

if HAVE_NUMBA:

    @nb.njit(cache=True, nogil=True)
    def _l_batch_numba(k, eps, distances, kmats):  # pragma: no cover - jitted
        m = k.shape[0]
        n = distances.shape[0]
        out = np.zeros((m, 2 * n, 2 * n), dtype=np.complex128)
        for e in range(m):
            inv = 1.0 / (2.0 * eps[e])
            for a in range(n):
                for i in range(2):
                    for j in range(2):
                        v = kmats[a, i, j] * inv
                        if i == j:
                            v -= 1.0
                        out[e, 2 * a + i, 2 * a + j] = v
                for b in range(n):
                    if a != b:
                        z = k[e] * distances[a, b]
                        fv = np.exp(-z) / z
                        out[e, 2 * a, 2 * b] = fv
                        out[e, 2 * a + 1, 2 * b + 1] = fv
        return out

    @nb.njit(cache=True, nogil=True, parallel=True)
    def _fields_numba(points, positions, coeffs, k, eps):  # pragma: no cover - jitted
        ns = coeffs.shape[0]
        npts = points.shape[0]
        nc = positions.shape[0]
        out = np.zeros((ns, npts, 4), dtype=np.complex128)
        for p in nb.prange(npts):
            for c in range(nc):
                dx = points[p, 0] - positions[c, 0]
                dy = points[p, 1] - positions[c, 1]
                dz = points[p, 2] - positions[c, 2]
                r = np.sqrt(dx * dx + dy * dy + dz * dz)
                z = k * r
                ez = np.exp(-z)
                f = ez / z
                ig = 1j * eps * ez * (1.0 / z + 1.0 / (z * z))
                mx = dx / r
                my = dy / r
                mz = dz / r
                for s in range(ns):
                    c0 = coeffs[s, c, 0]
                    c1 = coeffs[s, c, 1]
                    out[s, p, 0] += f * c0
                    out[s, p, 1] += f * c1
                    out[s, p, 2] += ig * (mz * c0 + (mx - 1j * my) * c1)
                    out[s, p, 3] += ig * ((mx + 1j * my) * c0 - mz * c1)
        return out

else:  # pragma: no cover
    _l_batch_numba = None
    _fields_numba = None


IMPLEMENTATIONS: dict[str, dict[str, Callable]] = {
    "numpy": {"l_batch": _l_batch_numpy, "fields": _fields_numpy},
}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {"l_batch": _l_batch_numba, "fields": _fields_numba}


def _initial_backend() -> str:
    flag = os.environ.get("ZRP_NUMBA", "").strip().lower()
    if flag in {"0", "false", "off", "no"}:
        return "numpy"
    if not HAVE_NUMBA:
        if flag:
            log.warning("ZRP_NUMBA=%s requested but numba is unavailable; using numpy", flag)
        return "numpy"
    return "numba"


_backend = _initial_backend()


def _apply_thread_cap() -> None:
    raw = os.environ.get("ZRP_THREADS")
    if not raw or not HAVE_NUMBA:
        return
    try:
        n = int(raw)
    except ValueError:
        log.warning("ignoring non-integer ZRP_THREADS=%r", raw)
        return
    nb.set_num_threads(max(1, min(n, nb.config.NUMBA_NUM_THREADS)))


_apply_thread_cap()


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in IMPLEMENTATIONS:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(IMPLEMENTATIONS)}")
    _backend = name


def l_batch(
    k: NDArray[np.float64],
    eps: NDArray[np.float64],
    distances: NDArray[np.float64],
    kmats: NDArray[np.complex128],
) -> NDArray[np.complex128]:
    """Coefficient matrices for a batch of energies, shape ``(M, 2N, 2N)``."""
    fn = IMPLEMENTATIONS[_backend]["l_batch"]
    return fn(
        np.ascontiguousarray(k, dtype=np.float64),
        np.ascontiguousarray(eps, dtype=np.float64),
        np.ascontiguousarray(distances, dtype=np.float64),
        np.ascontiguousarray(kmats, dtype=np.complex128),
    )


def fields(
    points: NDArray[np.float64],
    positions: NDArray[np.float64],
    coeffs: NDArray[np.complex128],
    k: float,
    eps: float,
) -> NDArray[np.complex128]:
    """Bispinors for several coefficient sets at once, shape ``(S, P, 4)``.

    Each set ``coeffs[s]`` has shape ``(N, 2)`` (one 2-spinor per center).
    Points must not coincide with a center; callers enforce the distance guard.
    """
    fn = IMPLEMENTATIONS[_backend]["fields"]
    return fn(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(positions, dtype=np.float64),
        np.ascontiguousarray(coeffs, dtype=np.complex128),
        float(k),
        float(eps),
    )
