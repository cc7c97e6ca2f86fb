#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

The two hot paths are the fixed-step RK4 integrator and the per-interval
trapezoid integrals of signal outer products; everything else in the package
is small dense linear algebra.  Usage: python benchmarks/bench_backends.py
"""

import time

import numpy as np

from aoreg import _pykernels
from aoreg.kernels import pair_integrals, rk4_forced_lti

try:
    from aoreg import _corekernels
except ImportError:
    _corekernels = None


def time_call(fn, *args, repeat=3):
    best = np.inf
    out = None
    for _ in range(repeat):
        tic = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - tic)
    return best, out


def main():
    rng = np.random.default_rng(0)
    n, q, m = 6, 4, 2
    nz = n + q
    drift = rng.normal(size=(nz, nz))
    drift -= (np.max(np.linalg.eigvals(drift).real) + 1.0) * np.eye(nz)
    gain = np.vstack([rng.normal(size=(n, m)), np.zeros((q, m))])
    nf = 12
    amps = rng.uniform(0.2, 1.0, size=(nf, m))
    freqs = rng.uniform(0.3, 5.0, size=nf)
    phases = rng.uniform(0, 2 * np.pi, size=nf)
    z0 = rng.normal(size=nz)
    dt = 1e-4
    n_steps = 200_000

    print(f"rk4_forced_lti: {nz}-state system, {n_steps} steps")
    rows = [("python", _pykernels)]
    if _corekernels is not None:
        rows.append(("compiled", _corekernels))
    results = {}
    for name, impl in rows:
        t, (Z, status) = time_call(
            lambda: rk4_forced_lti(
                drift, gain, amps, freqs, phases, z0, 0.0, dt, n_steps, impl=impl
            )
        )
        assert status == -1
        results[name] = (t, Z)
        print(f"  {name:9s} {t * 1e3:9.1f} ms")
    if len(results) == 2:
        zp, zc = results["python"][1], results["compiled"][1]
        print(f"  speedup {results['python'][0] / results['compiled'][0]:6.1f}x, "
              f"max |diff| {np.max(np.abs(zp - zc)):.2e}")
        Z = zc
    else:
        Z = results["python"][1]

    r, s = 40, 4000
    fa = Z[: r * s + 1, :n]
    fb = Z[: r * s + 1, n:]
    print(f"pair_integrals: ({fa.shape[1]}x{fb.shape[1]}) products, "
          f"{s} intervals of {r} steps")
    results = {}
    for name, impl in rows:
        t, G = time_call(lambda: pair_integrals(fa, fb, r, dt, impl=impl))
        results[name] = (t, G)
        print(f"  {name:9s} {t * 1e3:9.1f} ms")
    if len(results) == 2:
        gp, gc = results["python"][1], results["compiled"][1]
        print(f"  speedup {results['python'][0] / results['compiled'][0]:6.1f}x, "
              f"max |diff| {np.max(np.abs(gp - gc)):.2e}")

    if _corekernels is None:
        print("compiled extension not available; only the NumPy path was timed")


if __name__ == "__main__":
    main()
