"""Closed forms and one-dimensional reductions used as benchmarks.

* single center: energies and spinors in closed form;
* two identical centers: the "universal" energies eps_g(x, y), eps_u(x, y)
  with ``x = 1/R`` and ``y = (varkappa +- kappa) R``, their fold (critical)
  curve, asymptotic series and the nonrelativistic limit.

The two-center energies solve

    x y/(2 eps) - 1 +- (x/k) exp(-k/x) = 0      (+ for g, - for u)

where ``eps = sqrt((1-E)/(1+E))`` and ``k = 2 eps/(1+eps^2)``. The
root search runs in ``w = artanh(E) = -ln eps``, which keeps both thresholds
at finite distance in double precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq, minimize_scalar

from .core import ConvergenceError, DomainError, kinematics_from_energy

__all__ = [
    "SERIES",
    "SingleCenterLevel",
    "critical_point",
    "existence_map",
    "find_xc",
    "lambert_w0",
    "nonrel_energies",
    "series_eval",
    "single_center_spectrum",
    "single_center_spinors",
    "solve_eps_g",
    "solve_eps_u",
    "two_center_slope",
    "universal_residual",
]

# -- Lambert W, principal branch ----------------------------------------------

_INV_E = math.exp(-1.0)


def _w0_scalar(z: float) -> float:
    if math.isnan(z):
        return math.nan
    if z < -_INV_E:
        # tolerate the rounding of -1/e itself
        if z < -_INV_E * (1.0 + 4e-16):
            raise DomainError(f"W0 is real only for z >= -1/e, got {z!r}")
        return -1.0
    if z == 0.0:
        return 0.0
    if math.isinf(z):
        return math.inf
    if z < -0.32:
        # branch-point expansion in p = sqrt(2 (e z + 1))
        p = math.sqrt(max(2.0 * (math.e * z + 1.0), 0.0))
        w = -1.0 + p * (1.0 + p * (-1.0 / 3 + p * (11.0 / 72 + p * (-43.0 / 540 + p * (769.0 / 17280 + p * (-221.0 / 8505))))))
        if p < 1e-3:
            return w  # truncation error below p**7
    elif z < 3.0:
        w = math.log1p(z) * (1.0 - math.log1p(math.log1p(z)) / (2.0 + math.log1p(z)))
    else:
        l1 = math.log(z)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - z
        if abs(f) <= 4e-16 * abs(z):
            return w
        wp1 = w + 1.0
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 4e-16 * (1.0 + abs(w)):
            return w
    raise ConvergenceError(f"Halley iteration for W0({z!r}) did not converge")


def lambert_w0(z: ArrayLike) -> float | NDArray[np.float64]:
    """Principal real branch of the inverse of ``w exp(w)``, for ``z >= -1/e``."""
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim == 0:
        return _w0_scalar(float(arr))
    return np.vectorize(_w0_scalar, otypes=[np.float64])(arr)


# -- single center --------------------------------------------------------------


@dataclass(frozen=True)
class SingleCenterLevel:
    label: Literal["+", "-"]
    E: float
    k: float
    eps: float


def single_center_spectrum(varkappa: float, kappa: float) -> list[SingleCenterLevel]:
    """Bound levels of one center, ascending in energy.

    ``eps_pm = (varkappa +- kappa)/2`` must be non-negative for the level to
    exist. This gives no level for ``varkappa < -kappa``, one level for
    ``-kappa <= varkappa < kappa`` and two otherwise.
    """
    if kappa < 0:
        raise DomainError("kappa is a vector length and must be >= 0")
    out = []
    for label, e in (("+", 0.5 * (varkappa + kappa)), ("-", 0.5 * (varkappa - kappa))):
        if e >= 0.0:
            d = 1.0 + e * e
            out.append(SingleCenterLevel(label, (1.0 - e * e) / d, 2.0 * e / d, e))
    return sorted(out, key=lambda lv: lv.E)


def single_center_spinors(kappa_vec: ArrayLike) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Eigen-spinors of ``kappa_vec . sigma`` for eigenvalues ``+kappa`` and ``-kappa``.

    Uses the polar angles of ``kappa_vec``. A zero vector returns the
    canonical basis.
    """
    kv = np.asarray(kappa_vec, dtype=np.float64).reshape(3)
    kap = float(np.linalg.norm(kv))
    if kap == 0.0:
        return np.array([1.0 + 0j, 0.0]), np.array([0.0 + 0j, 1.0])
    # atan2 keeps full precision near the poles, where acos does not
    theta = math.atan2(math.hypot(kv[0], kv[1]), kv[2])
    phi = math.atan2(kv[1], kv[0])
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    ph = complex(math.cos(phi), math.sin(phi))
    return np.array([c, s * ph]), np.array([s, -c * ph])


# -- two identical centers: universal functions ---------------------------------

_W_GRID = np.concatenate(([-60.0], np.linspace(-19.0, 19.0, 4000), [60.0]))


def _phi(t: NDArray[np.float64]) -> NDArray[np.float64]:
    """``(exp(-t) - 1 + t)/t`` without cancellation for small ``t``."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    small = t < 0.1
    ts = t[small]
    acc = np.zeros_like(ts)
    term = np.ones_like(ts)
    # sum_{n>=2} (-t)^n/n! / t  =  sum_{n>=1} (-1)^(n+1) t^n/(n+1)!
    for n in range(1, 18):
        term = term * ts / (n + 1) if n > 1 else ts / 2.0
        acc += term if n % 2 == 1 else -term
    out[small] = acc
    tb = t[~small]
    out[~small] = (np.expm1(-tb) + tb) / tb
    return out


def _residual_w(w: ArrayLike, x: float, y: float, parity: int) -> NDArray[np.float64]:
    """The two-center equation in ``w = -ln eps``, rearranged to avoid cancellation.

    With ``phi(t) = (e^-t - 1 + t)/t`` and ``x/k = x/(2 eps) + x eps/2``:

    * g: ``x (y+1)/(2 eps) + x eps/2 - 2 + phi(k/x)``
    * u: ``x (y-1)/(2 eps) - x eps/2 - phi(k/x)``
    """
    w = np.asarray(w, dtype=np.float64)
    eps = np.exp(-w)
    inv = np.exp(w)
    k = 1.0 / np.cosh(w)
    ph = _phi(k / x)
    if parity > 0:
        return 0.5 * x * (y + 1.0) * inv + 0.5 * x * eps - 2.0 + ph
    return 0.5 * x * (y - 1.0) * inv - 0.5 * x * eps - ph


def universal_residual(E: float, x: float, y: float, parity: Literal["g", "u"]) -> float:
    """Left side of the two-center equation at energy ``E`` (direct form)."""
    kin = kinematics_from_energy(E)
    sign = 1.0 if parity == "g" else -1.0
    return 0.5 * x * y / kin.eps - 1.0 + sign * (x / kin.k) * math.exp(-kin.k / x)


def _check_x(x: float) -> None:
    if not (x > 0.0 and math.isfinite(x)):
        raise DomainError(f"x = 1/R must be positive and finite, got {x!r}")


def _roots_w(x: float, y: float, parity: int) -> list[float]:
    def fn(w: float) -> float:
        return float(_residual_w(np.array([w]), x, y, parity)[0])

    vals = _residual_w(_W_GRID, x, y, parity)
    roots: list[float] = []
    for i in np.nonzero(vals == 0.0)[0]:
        roots.append(float(_W_GRID[i]))
    for i in np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]:
        roots.append(brentq(fn, _W_GRID[i], _W_GRID[i + 1], xtol=1e-300, rtol=8.9e-16, maxiter=500))
    if parity > 0 and len(roots) == 0 and y > -1.0:
        # both ends positive: the fold may hide two close roots or a touch
        i = int(np.argmin(vals[1:-1])) + 1
        res = minimize_scalar(
            fn, bounds=(_W_GRID[i - 1], _W_GRID[i + 1]), method="bounded", options={"xatol": 1e-14}
        )
        wm, fm = float(res.x), float(res.fun)
        scale = 1.0 + abs(0.5 * x * (y + 1.0) * math.exp(wm))
        if fm < 0.0:
            roots.append(brentq(fn, _W_GRID[i - 1], wm, xtol=1e-300, rtol=8.9e-16))
            roots.append(brentq(fn, wm, _W_GRID[i + 1], xtol=1e-300, rtol=8.9e-16))
        elif fm <= 1e-12 * scale:
            roots.append(wm)
    return sorted(roots)


def solve_eps_g(x: float, y: float) -> tuple[float | None, float | None]:
    """Gerade energies ``(eps_g_minus, eps_g_plus)``; ``None`` marks a missing branch.

    ``eps_g_minus`` exists for ``y <= y_c(x)``, ``eps_g_plus`` for
    ``-1 <= y <= y_c(x)``. At ``y = -1`` the upper branch sits exactly at the
    threshold and is returned as ``1.0``.
    """
    _check_x(x)
    roots = [math.tanh(w) for w in _roots_w(x, y, +1)]
    if y == -1.0:
        # root escapes to w = +inf; the limit value is the threshold itself
        roots = [r for r in roots if r < 1.0 - 1e-12] + [1.0]
    if len(roots) == 0:
        return None, None
    if len(roots) == 1:
        return (roots[0], None) if y <= -1.0 and roots[0] < 1.0 else (roots[0], roots[0])
    if len(roots) == 2:
        return roots[0], roots[1]
    raise ConvergenceError(f"unexpected {len(roots)} gerade roots at x={x!r}, y={y!r}")


def solve_eps_u(x: float, y: float) -> float | None:
    """Ungerade energy; exists for ``y >= 1``, exactly ``1.0`` at ``y = 1``."""
    _check_x(x)
    if y == 1.0:
        return 1.0
    roots = _roots_w(x, y, -1)
    if not roots:
        return None
    if len(roots) > 1:
        raise ConvergenceError(f"unexpected {len(roots)} ungerade roots at x={x!r}, y={y!r}")
    return math.tanh(roots[0])


def _fold_parts(w: float, x: float) -> tuple[float, float, float]:
    """``h = (x/k) e^{-k/x}`` and its first two ``w``-derivatives (``k = sech w``)."""
    s = 1.0 / math.cosh(w)
    th = math.tanh(w)
    ex = math.exp(-s / x)
    h = x * math.cosh(w) * ex
    a = x * math.sinh(w) + th
    h1 = ex * a
    h2 = ex * ((s * th / x) * a + x * math.cosh(w) + s * s)
    return h, h1, h2


def _yc_of_w(w: float, x: float) -> float:
    h, _, _ = _fold_parts(w, x)
    return 2.0 * math.exp(-w) * (1.0 - h) / x


def critical_point(x: float) -> tuple[float, float]:
    """Fold of the gerade branch: ``(y_c(x), eps_gc(x))``.

    Along the gerade curve ``y(w) = 2 e^{-w} (1 - h(w))/x``; the fold is its
    maximum, where ``1 - h + h' = 0``.
    """
    _check_x(x)
    wg = np.linspace(-19.0, 19.0, 4001)
    with np.errstate(over="ignore"):
        yg = np.array([_yc_of_w(w, x) for w in wg])
    i = int(np.nanargmax(yg))
    if i == 0 or i == len(wg) - 1:
        raise ConvergenceError(f"fold of the gerade branch not bracketed for x={x!r}")

    def dfun(w: float) -> float:
        h, h1, _ = _fold_parts(w, x)
        return 1.0 - h + h1

    a, b = wg[i - 1], wg[i + 1]
    if dfun(a) * dfun(b) > 0.0:
        raise ConvergenceError(f"fold condition not bracketed for x={x!r}")
    w = brentq(dfun, a, b, xtol=1e-300, rtol=8.9e-16, maxiter=500)
    # Newton polish on the fold condition
    for _ in range(3):
        h, h1, h2 = _fold_parts(w, x)
        g = 1.0 - h + h1
        dg = -h1 + h2
        if dg == 0.0 or abs(g) < 1e-16:
            break
        w -= g / dg
    return _yc_of_w(w, x), math.tanh(w)


def find_xc(lo: float = 0.5, hi: float = 2.0) -> tuple[float, float]:
    """The ``x`` where the fold crosses ``y = 1``, and the fold energy there."""
    xc = brentq(lambda x: critical_point(x)[0] - 1.0, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return xc, critical_point(xc)[1]


def existence_map(x: float, y: float) -> dict[str, bool]:
    """Which of ``g_minus``, ``g_plus``, ``u`` exist at ``(x, y)``."""
    yc, _ = critical_point(x)
    return {"g_minus": y <= yc, "g_plus": -1.0 <= y <= yc, "u": y >= 1.0}


# -- asymptotic series ------------------------------------------------------------


def _small_x(x: float, y: float, sign: float) -> float:
    W = lambert_w0(sign * math.exp(-y))
    a = y + W
    if 1.0 + W == 0.0:
        return 1.0
    return 1.0 - 0.5 * x * x * a * a + x**4 / 8.0 * a**3 / (1.0 + W) * (y - (y + 1.0) * W - W * W)


def _g_plus_near_threshold(x: float, y: float) -> float:
    t = y + 1.0
    return 1.0 - x * x * t * t / 8.0 - x * x * (x * x + 2.0) * t**3 / 64.0


def _g_minus_large_y(x: float, y: float) -> float:
    a = abs(y)
    return (
        -1.0
        + 2.0 / a
        - 8.0 / (x * a**1.5)
        + 20.0 / (x * x * a * a)
        + 4.0 * (3.0 * x * x - 32.0) / (3.0 * x**3 * a**2.5)
        - 4.0 * (27.0 * x * x - 71.0) / (3.0 * x**4 * a**3)
    )


def _u_near_threshold(x: float, y: float) -> float:
    t = y - 1.0
    q = x * x + 2.0
    return (
        1.0
        - 2.0 * x * x / q * t
        - 8.0 / 3.0 * x * x / q**2.5 * t**1.5
        + 2.0 / 3.0 * x * x * (3 * x**6 + 6 * x**4 + 2 * x * x - 4) / q**4 * t * t
    )


def _u_large_y(x: float, y: float) -> float:
    return (
        -1.0
        + 2.0 / y
        + 4.0 / (x * x * y * y)
        - 8.0 / (3.0 * x**3 * y**2.5)
        - 4.0 * (3.0 * x * x - 7.0) / (3.0 * x**4 * y**3)
    )


SERIES = {
    "g_plus_small_x": lambda x, y: _small_x(x, y, 1.0),
    "g_plus_near_threshold": _g_plus_near_threshold,
    "g_minus_large_y": _g_minus_large_y,
    "u_small_x": lambda x, y: _small_x(x, y, -1.0),
    "u_near_threshold": _u_near_threshold,
    "u_large_y": _u_large_y,
}

_SERIES_DOMAIN = {
    "g_plus_small_x": lambda y: y >= -1.0,
    "g_plus_near_threshold": lambda y: y >= -1.0,
    "g_minus_large_y": lambda y: y < 0.0,
    "u_small_x": lambda y: y >= 1.0,
    "u_near_threshold": lambda y: y >= 1.0,
    "u_large_y": lambda y: y > 0.0,
}


def series_eval(name: str, x: float, y: float) -> float:
    """Truncated asymptotic expansion ``name`` (a key of :data:`SERIES`)."""
    try:
        fn = SERIES[name]
    except KeyError:
        raise ValueError(f"unknown series {name!r}; choose from {sorted(SERIES)}") from None
    _check_x(x)
    if not _SERIES_DOMAIN[name](y):
        raise DomainError(f"series {name!r} is not defined at y={y!r}")
    return float(fn(x, y))


# -- nonrelativistic limit and slopes ---------------------------------------------


def nonrel_energies(R: float | None, varkappa: float, kappa: float) -> list[tuple[str, float]]:
    """Leading nonrelativistic energies, ascending.

    ``R=None`` gives the single-center levels ``1 - (varkappa +- kappa)^2/2``.
    Otherwise the two-center levels ``1 - [y + W0(+-e^{-y})]^2/(2 R^2)`` with
    ``y = (varkappa +- kappa) R`` are returned, using ``+`` for gerade
    (``y >= -1``) and ``-`` for ungerade (``y >= 1``). The approximation is
    poor once ``1/R`` is not small, and a warning says so.
    """
    out: list[tuple[str, float]] = []
    if R is None:
        for lab, v in (("+", varkappa + kappa), ("-", varkappa - kappa)):
            if v >= 0.0:
                out.append((lab, 1.0 - 0.5 * v * v))
        return sorted(out, key=lambda t: t[1])
    if not R > 0.0:
        raise DomainError("R must be positive")
    if 1.0 / R > 0.1:
        warnings.warn(f"nonrelativistic formulas need 1/R << 1; got 1/R = {1.0 / R:.3g}", stacklevel=2)
    for lab, v in (("+", varkappa + kappa), ("-", varkappa - kappa)):
        y = v * R
        if y >= -1.0:
            out.append((f"{lab}g", 1.0 - (y + _w0_scalar(math.exp(-y))) ** 2 / (2.0 * R * R)))
        if y >= 1.0:
            out.append((f"{lab}u", 1.0 - (y + _w0_scalar(-math.exp(-y))) ** 2 / (2.0 * R * R)))
    return sorted(out, key=lambda t: t[1])


def two_center_slope(E: float, sigma: int, R: float) -> float:
    """Branch slope ``d lambda/dE`` at a two-center root.

    Valid only at a root of the branch with parity ``sigma`` (+1 gerade,
    -1 ungerade), where the equation has been used to eliminate ``y``.
    """
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 (gerade) or -1 (ungerade)")
    kin = kinematics_from_energy(E)
    ek = math.exp(-kin.k * R)
    e2 = kin.eps * kin.eps
    return ((1.0 + sigma * ek) + e2 * (1.0 - sigma * ek - sigma * 2.0 * ek / (kin.k * R))) / (
        2.0 * kin.eps * kin.k
    )
