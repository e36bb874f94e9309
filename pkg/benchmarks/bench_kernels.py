"""Time the numpy and numba kernel backends against each other.

Run from the repository root:

    python3 benchmarks/bench_kernels.py --centers 8 --energies 4000 --points 200000

The first numba call compiles (or loads the on-disk cache), so every backend is
warmed up once before timing. Outputs of the two backends are compared before
any timing is reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from zrpdirac import _kernels


def make_inputs(n_centers: int, n_energies: int, n_points: int, n_states: int, seed: int):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(-2.0, 2.0, (n_centers, 3))
    d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    kmats = rng.normal(size=(n_centers, 2, 2)) + 1j * rng.normal(size=(n_centers, 2, 2))
    kmats = 0.5 * (kmats + kmats.conj().transpose(0, 2, 1))
    E = np.linspace(-0.999, 0.999, n_energies)
    k = np.sqrt(1 - E * E)
    eps = np.sqrt((1 - E) / (1 + E))
    # keep field points off the centers so every kernel value is finite
    pts = rng.uniform(-3.0, 3.0, (n_points, 3))
    near = np.min(np.linalg.norm(pts[:, None] - pos[None], axis=-1), axis=1) < 1e-3
    pts[near] += 0.01
    coeffs = rng.normal(size=(n_states, n_centers, 2)) + 1j * rng.normal(size=(n_states, n_centers, 2))
    return (k, eps, d, kmats), (pts, pos, coeffs, 0.8, 0.5)


def best_of(fn, args, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--centers", type=int, default=8)
    p.add_argument("--energies", type=int, default=4000)
    p.add_argument("--points", type=int, default=200_000)
    p.add_argument("--states", type=int, default=4)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    l_args, f_args = make_inputs(args.centers, args.energies, args.points, args.states, args.seed)
    backends = sorted(_kernels.IMPLEMENTATIONS)
    timings: dict[str, dict[str, float]] = {}
    results: dict[str, dict[str, np.ndarray]] = {}
    for name in backends:
        impl = _kernels.IMPLEMENTATIONS[name]
        results[name] = {"l_batch": impl["l_batch"](*l_args), "fields": impl["fields"](*f_args)}
        timings[name] = {
            "l_batch": best_of(impl["l_batch"], l_args, args.repeats),
            "fields": best_of(impl["fields"], f_args, args.repeats),
        }

    ref = results["numpy"]
    for name in backends:
        for kernel in ("l_batch", "fields"):
            got = results[name][kernel]
            scale = np.max(np.abs(ref[kernel]))
            err = np.max(np.abs(got - ref[kernel])) / scale
            if err > 1e-12:
                print(f"MISMATCH {name} {kernel}: relative error {err:.2e}")
                return 1

    print(f"centers={args.centers} energies={args.energies} points={args.points} states={args.states}")
    print(f"{'kernel':<10}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for kernel in ("l_batch", "fields"):
        row = "".join(f"{timings[b][kernel] * 1e3:>10.2f}ms" for b in backends)
        speed = ""
        if "numba" in timings:
            speed = f"{timings['numpy'][kernel] / timings['numba'][kernel]:>9.1f}x"
        print(f"{kernel:<10}{row}{speed}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
