"""NumPy implementations of the hot kernels.

Same call contracts as the compiled module ``aoreg._corekernels``; the
active implementation is chosen at import time by ``aoreg.kernels``.
"""

import numpy as np

DIVERGENCE_LIMIT = 1e12


def rk4_forced_lti(drift, gain, amps, freqs, phases, z0, t0, dt, n_steps):
    """Fixed-step fourth-order Runge-Kutta for z' = drift@z + gain@exc(t).

    exc(t) = sum_l amps[l, :] * sin(freqs[l]*t + phases[l]) is an m-vector;
    ``amps`` has shape (n_freq, m).  Returns (Z, status) where Z is
    (n_steps+1, nz) and status is -1 on success or the first step index at
    which the state left the finite range (remaining rows are NaN).
    """
    nz = z0.shape[0]
    Z = np.empty((n_steps + 1, nz))
    Z[0] = z0
    z = z0.copy()
    half = 0.5 * dt
    sixth = dt / 6.0
    forced = freqs.size > 0
    zero_force = np.zeros(nz)

    def force(t):
        if not forced:
            return zero_force
        return gain @ (amps.T @ np.sin(freqs * t + phases))

    for k in range(n_steps):
        t = t0 + k * dt
        f0 = force(t)
        fh = force(t + half)
        f1 = force(t + dt)
        k1 = drift @ z + f0
        k2 = drift @ (z + half * k1) + fh
        k3 = drift @ (z + half * k2) + fh
        k4 = drift @ (z + dt * k3) + f1
        z = z + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > DIVERGENCE_LIMIT:
            Z[k + 1 :] = np.nan
            return Z, k + 1
        Z[k + 1] = z
    return Z, -1


def pair_integrals(fa, fb, r, dt):
    """Per-sample-interval trapezoid integrals of the outer product fa(t) (x) fb(t).

    ``fa`` (N+1, da) and ``fb`` (N+1, db) sit on the integration grid with
    step ``dt``, N = r*s.  Row k of the (s, da*db) result integrates over the
    grid span [k*r, (k+1)*r]; the flattened column index is a*db + b, matching
    the Kronecker product of the two sample vectors.
    """
    npts = fa.shape[0]
    s = (npts - 1) // r
    prod = (fa[:, :, None] * fb[:, None, :]).reshape(npts, -1)
    left = prod[:-1].reshape(s, r, -1).sum(axis=1)
    right = prod[1:].reshape(s, r, -1).sum(axis=1)
    return 0.5 * dt * (left + right)
