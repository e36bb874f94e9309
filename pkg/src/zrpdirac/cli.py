"""Command-line front end: ``zrpdirac <command> [options]``.

Every table goes to ``--out`` (or the config's ``output``, or stdout) as CSV
with a ``# config_sha256=...`` comment line and a header row, or as a JSON
object with ``--format json``. Numbers carry 15 significant digits; a branch
that does not exist is a blank cell (``null`` in JSON).

Exit codes: 0 success, 2 configuration error, 3 numerical failure or failed
verification, 4 energy at a pole of the Green's function.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from contextlib import contextmanager
from typing import Any, Iterator, Sequence, TextIO

import numpy as np

from .analytic import critical_point, find_xc, solve_eps_g, solve_eps_u
from .config import ConfigError, RunConfig, load_config
from .core import ConvergenceError, DomainError, NullStateError, PoleError, geometry
from .green import full_green
from .solver import find_bound_states
from .states import MIN_DISTANCE, assemble_wavefunction, current_density, null_residual
from .verify import run_verification

log = logging.getLogger("zrpdirac")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_POLE = 0, 2, 3, 4


class UsageError(ValueError):
    """Bad command-line values; reported with the configuration exit code."""


# -- formatting -------------------------------------------------------------------


def fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".15g")


def _json_value(v: Any) -> Any:
    if v is None:
        return None
    if isinstance(v, (int, np.integer)) and not isinstance(v, (bool, np.bool_)):
        return int(v)
    return float(format(float(v), ".15g"))


def args_digest(command: str, params: dict[str, Any]) -> str:
    """Hash of the command parameters, for tables that are not driven by a config file."""
    canonical = json.dumps({"command": command, **params}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@contextmanager
def _sink(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield fh


def write_table(
    columns: Sequence[str],
    rows: Sequence[Sequence[Any]],
    digest: str,
    out: str | None,
    form: str = "csv",
) -> None:
    with _sink(out) as fh:
        if form == "json":
            doc = {
                "config_sha256": digest,
                "columns": list(columns),
                "rows": [[_json_value(v) for v in row] for row in rows],
            }
            json.dump(doc, fh, indent=1)
            fh.write("\n")
            return
        fh.write(f"# config_sha256={digest}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


# -- argument parsing helpers -------------------------------------------------------


def parse_floats(text: str, n: int, what: str, sep: str = ",") -> list[float]:
    parts = text.split(sep)
    if len(parts) != n:
        raise UsageError(f"{what}: expected {n} values separated by {sep!r}, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"{what}: non-numeric value in {text!r}") from None
    if not all(np.isfinite(vals)):
        raise UsageError(f"{what}: values must be finite")
    return vals


def parse_y_range(text: str) -> np.ndarray:
    a, b, step = parse_floats(text, 3, "--y-range", sep=":")
    if step <= 0.0 or b < a:
        raise UsageError("--y-range: need A <= B and STEP > 0")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def parse_grid(text: str) -> np.ndarray:
    nx, ny, nz, extent = parse_floats(text, 4, "--grid")
    counts = [int(v) for v in (nx, ny, nz)]
    if any(c != v or c < 1 for c, v in zip(counts, (nx, ny, nz))) or extent <= 0.0:
        raise UsageError("--grid: need positive integer counts and EXTENT > 0")
    axes = [np.linspace(-extent, extent, c) if c > 1 else np.zeros(1) for c in counts]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])


def _drop_singular(points: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    if anchors.size == 0:
        return points
    d = np.linalg.norm(points[:, None, :] - anchors[None], axis=-1).min(axis=1)
    keep = d >= MIN_DISTANCE
    if not np.all(keep):
        log.info("skipping %d grid point(s) at a singular location", int(np.sum(~keep)))
    return points[keep]


def _require_config(args: argparse.Namespace) -> RunConfig:
    if not args.config:
        raise UsageError(f"{args.command}: --config is required")
    return load_config(args.config)


def _out(args: argparse.Namespace, cfg: RunConfig | None) -> str | None:
    if args.out:
        return args.out
    return cfg.output if cfg is not None else None


# -- commands -------------------------------------------------------------------------


SPECTRUM_COLUMNS = ("state_index", "branch", "E", "k", "eps", "signature", "residual")


def spectrum_rows(cfg: RunConfig) -> list[list[Any]]:
    geom = geometry(cfg.centers)
    rows = []
    for i, s in enumerate(find_bound_states(cfg.centers, cfg.solver)):
        residual = null_residual(s.energy, s.coeffs, geom)
        rows.append([i, s.branch, s.energy, s.kin.k, s.kin.eps, s.signature, residual])
    return rows


def cmd_spectrum(args: argparse.Namespace) -> int:
    cfg = _require_config(args)
    write_table(SPECTRUM_COLUMNS, spectrum_rows(cfg), cfg.digest, _out(args, cfg), args.format)
    return EXIT_OK


TWOCENTER_COLUMNS = ("y", "eps_g_minus", "eps_g_plus", "eps_u")


def twocenter_rows(x: float, ys: Sequence[float]) -> list[list[Any]]:
    rows = []
    for y in ys:
        gm, gp = solve_eps_g(x, float(y))
        rows.append([float(y), gm, gp, solve_eps_u(x, float(y))])
    return rows


def cmd_twocenter(args: argparse.Namespace) -> int:
    if args.x is None or args.y_range is None:
        raise UsageError("twocenter: --x and --y-range are required")
    ys = parse_y_range(args.y_range)
    digest = args_digest("twocenter", {"x": args.x, "y_range": args.y_range})
    write_table(TWOCENTER_COLUMNS, twocenter_rows(args.x, ys), digest, args.out, args.format)
    return EXIT_OK


def cmd_critical(args: argparse.Namespace) -> int:
    if args.find_xc:
        xc, egc = find_xc()
        digest = args_digest("critical", {"find_xc": True})
        write_table(("x_c", "eps_gc"), [[xc, egc]], digest, args.out, args.format)
        return EXIT_OK
    if args.x is None:
        raise UsageError("critical: give --x or --find-xc")
    yc, egc = critical_point(args.x)
    digest = args_digest("critical", {"x": args.x})
    write_table(("x", "y_c", "eps_gc"), [[args.x, yc, egc]], digest, args.out, args.format)
    return EXIT_OK


WAVEFUNCTION_COLUMNS = (
    ("x", "y", "z")
    + tuple(f"{part}{i}" for i in range(4) for part in ("re", "im"))
    + ("density", "jx", "jy", "jz")
)


def wavefunction_rows(cfg: RunConfig, state_index: int, points: np.ndarray) -> list[list[Any]]:
    states = find_bound_states(cfg.centers, cfg.solver)
    if not 0 <= state_index < len(states):
        raise UsageError(f"--state {state_index}: configuration has {len(states)} bound state(s)")
    geom = geometry(cfg.centers)
    pts = _drop_singular(points, geom.positions)
    psi = assemble_wavefunction(states[state_index], pts, geom).reshape(-1, 4)
    comps = np.empty((len(pts), 8))
    comps[:, 0::2] = psi.real
    comps[:, 1::2] = psi.imag
    density = np.sum(comps * comps, axis=1)
    j = current_density(psi)
    return np.column_stack([pts, comps, density, j]).tolist()


def cmd_wavefunction(args: argparse.Namespace) -> int:
    cfg = _require_config(args)
    if args.grid is None:
        raise UsageError("wavefunction: --grid is required")
    rows = wavefunction_rows(cfg, args.state, parse_grid(args.grid))
    write_table(WAVEFUNCTION_COLUMNS, rows, cfg.digest, _out(args, cfg), args.format)
    return EXIT_OK


GREEN_COLUMNS = ("x", "y", "z") + tuple(
    f"G{i}{j}_{part}" for i in range(4) for j in range(4) for part in ("re", "im")
)


def green_rows(centers, E: float, source: Sequence[float], points: np.ndarray) -> list[list[Any]]:
    anchors = [np.asarray(source, float)]
    if centers:
        anchors.extend(geometry(centers).positions)
    pts = _drop_singular(points, np.array(anchors))
    rows = []
    for p in pts:
        G = full_green(E, p, source, centers)
        flat = np.empty(32)
        flat[0::2] = G.real.ravel()
        flat[1::2] = G.imag.ravel()
        rows.append([*p, *flat])
    return rows


def cmd_green(args: argparse.Namespace) -> int:
    if args.energy is None or args.source is None or args.grid is None:
        raise UsageError("green: --energy, --source and --grid are required")
    source = parse_floats(args.source, 3, "--source")
    points = parse_grid(args.grid)
    if args.config:
        cfg = load_config(args.config)
        centers, digest, out = cfg.centers, cfg.digest, _out(args, cfg)
    else:
        # no configuration: free-particle propagator
        centers, out = (), args.out
        digest = args_digest("green", {"energy": args.energy, "source": source, "grid": args.grid})
    rows = green_rows(centers, args.energy, source, points)
    write_table(GREEN_COLUMNS, rows, digest, out, args.format)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _require_config(args)
    checks = run_verification(cfg.centers, seed=args.seed, settings=cfg.solver, corrupt=args.corrupt)
    rows = [[c.name, c.value, c.tolerance, "pass" if c.passed else "FAIL"] for c in checks]
    with _sink(_out(args, cfg)) as fh:
        if args.format == "json":
            json.dump({"config_sha256": cfg.digest, "seed": args.seed,
                       "checks": [dict(zip(("name", "value", "tolerance", "status"), r)) for r in rows]}, fh, indent=1)
            fh.write("\n")
        else:
            fh.write(f"# config_sha256={cfg.digest}\n")
            fh.write("check,value,tolerance,status\n")
            for r in rows:
                fh.write(f"{r[0]},{fmt(r[1])},{fmt(r[2])},{r[3]}\n")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"verification FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "twocenter": cmd_twocenter,
    "critical": cmd_critical,
    "wavefunction": cmd_wavefunction,
    "green": cmd_green,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: config 'output' or stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="zrpdirac", description="Dirac bound states of zero-range potentials.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="bound-state energies of a configuration")
    p.add_argument("--config", help="JSON configuration")

    p = sub.add_parser("twocenter", parents=[common], help="universal two-center energies on a y sweep")
    p.add_argument("--x", type=float, help="1/R in reduced Compton wavelengths")
    p.add_argument("--y-range", help="A:B:STEP (use --y-range=-A:B:STEP for negative A)")

    p = sub.add_parser("critical", parents=[common], help="fold point of the gerade branch")
    p.add_argument("--x", type=float)
    p.add_argument("--find-xc", action="store_true", help="solve for the x at which the fold sits at y=1")

    p = sub.add_parser("wavefunction", parents=[common], help="bispinor, density and current on a grid")
    p.add_argument("--config")
    p.add_argument("--state", type=int, default=0)
    p.add_argument("--grid", help="NX,NY,NZ,EXTENT (cube [-EXTENT, EXTENT]^3)")

    p = sub.add_parser("green", parents=[common], help="4x4 Green's function on a grid")
    p.add_argument("--config", help="JSON configuration (omit for the free propagator)")
    p.add_argument("--energy", type=float)
    p.add_argument("--source", help="X,Y,Z")
    p.add_argument("--grid", help="NX,NY,NZ,EXTENT")

    p = sub.add_parser("verify", parents=[common], help="run the consistency checks")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", action="store_true", help="perturb one state first (negative control)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PoleError as exc:
        print(f"pole: {exc}", file=sys.stderr)
        return EXIT_POLE
    except (ConvergenceError, NullStateError, DomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
