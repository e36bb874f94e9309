"""Run configuration: a single JSON document, validated strictly.

Example::

    {
      "units": "natural",
      "centers": [
        {"position": [0, 0, -1], "varkappa": 1.2, "kappa": [0, 0, 0.3]},
        {"position": [0, 0,  1], "varkappa": 1.2, "kappa": [0, 0, 0.3]}
      ],
      "solver": {"grid_points": 2001, "delta": 1e-6, "root_tol": 1e-12},
      "output": "spectrum.csv"
    }

Unknown or duplicated keys are errors. Every error names the offending field
and, when it can be located in the text, its line.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .core import COINCIDENCE_TOL, CenterConfig
from .solver import SolverSettings

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]

_TOP_KEYS = {"units", "centers", "solver", "output"}
_CENTER_KEYS = {"position", "varkappa", "kappa"}
_SOLVER_KEYS = {"grid_points", "delta", "root_tol"}


class ConfigError(ValueError):
    """Invalid configuration; the message carries the field path and line when known."""


@dataclass(frozen=True)
class RunConfig:
    centers: tuple[CenterConfig, ...]
    solver: SolverSettings
    output: str | None
    units: str
    digest: str


class _Locator:
    """Maps a field path to a line number by scanning the source for its key."""

    def __init__(self, text: str) -> None:
        self.text = text

    def line_of(self, key: str, occurrence: int = 0) -> int | None:
        matches = list(re.finditer(r'"%s"\s*:' % re.escape(key), self.text))
        if occurrence < len(matches):
            return self.text.count("\n", 0, matches[occurrence].start()) + 1
        return None


def _no_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _fail(loc: _Locator, path: str, msg: str, key: str | None = None, occurrence: int = 0) -> ConfigError:
    line = loc.line_of(key, occurrence) if key else None
    where = f"line {line}: " if line else ""
    return ConfigError(f"{where}{path}: {msg}")


def _number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _vec3(v: Any) -> bool:
    return isinstance(v, list) and len(v) == 3 and all(_number(c) for c in v)


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: invalid JSON: {exc.msg}") from None
    loc = _Locator(text)
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object")
    for key in doc:
        if key not in _TOP_KEYS:
            raise _fail(loc, key, f"unknown key (allowed: {sorted(_TOP_KEYS)})", key)

    units = doc.get("units", "natural")
    if units != "natural":
        raise _fail(loc, "units", f"only 'natural' units are supported, got {units!r}", "units")

    raw_centers = doc.get("centers")
    if not isinstance(raw_centers, list) or not raw_centers:
        raise _fail(loc, "centers", "must be a non-empty list", "centers")
    centers = []
    counts = {k: 0 for k in _CENTER_KEYS}
    for i, c in enumerate(raw_centers):
        path = f"centers[{i}]"
        if not isinstance(c, dict):
            raise _fail(loc, path, "must be an object", "centers")
        for key in c:
            if key not in _CENTER_KEYS:
                raise _fail(loc, f"{path}.{key}", f"unknown key (allowed: {sorted(_CENTER_KEYS)})", key)
        if "position" not in c:
            raise _fail(loc, f"{path}.position", "missing", "centers")
        if not _vec3(c["position"]):
            raise _fail(loc, f"{path}.position", "must be three finite numbers", "position", counts["position"])
        if "varkappa" not in c:
            raise _fail(loc, f"{path}.varkappa", "missing", "centers")
        if not _number(c["varkappa"]):
            raise _fail(loc, f"{path}.varkappa", "must be a finite number", "varkappa", counts["varkappa"])
        kappa = c.get("kappa", [0.0, 0.0, 0.0])
        if not _vec3(kappa):
            raise _fail(loc, f"{path}.kappa", "must be three finite numbers", "kappa", counts["kappa"])
        for key in c:
            counts[key] += 1
        centers.append(CenterConfig(c["position"], c["varkappa"], kappa))

    for i in range(len(centers)):
        for j in range(i):
            d = math.dist(centers[i].position, centers[j].position)
            if d < COINCIDENCE_TOL:
                raise _fail(loc, f"centers[{i}].position", f"coincides with centers[{j}]", "position", i)

    raw_solver = doc.get("solver", {})
    if not isinstance(raw_solver, dict):
        raise _fail(loc, "solver", "must be an object", "solver")
    for key in raw_solver:
        if key not in _SOLVER_KEYS:
            raise _fail(loc, f"solver.{key}", f"unknown key (allowed: {sorted(_SOLVER_KEYS)})", key)
    gp = raw_solver.get("grid_points", 2001)
    if not isinstance(gp, int) or isinstance(gp, bool) or gp < 3:
        raise _fail(loc, "solver.grid_points", "must be an integer >= 3", "grid_points")
    delta = raw_solver.get("delta", 1e-6)
    if not _number(delta) or not 0.0 < delta < 0.5:
        raise _fail(loc, "solver.delta", "must be a number in (0, 0.5)", "delta")
    root_tol = raw_solver.get("root_tol", 1e-12)
    if not _number(root_tol) or root_tol <= 0.0:
        raise _fail(loc, "solver.root_tol", "must be a positive number", "root_tol")

    output = doc.get("output")
    if output is not None and not isinstance(output, str):
        raise _fail(loc, "output", "must be a string path or null", "output")

    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canonical.encode()).hexdigest()
    return RunConfig(
        tuple(centers),
        SolverSettings(grid_points=gp, delta=float(delta), root_tol=float(root_tol)),
        output,
        units,
        digest,
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
