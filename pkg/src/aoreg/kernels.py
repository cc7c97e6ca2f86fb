"""Hot-kernel backend selection.

The compiled extension is used when built; otherwise the NumPy
implementations take over.  Set ``AOREG_FORCE_PYTHON=1`` to force the NumPy
path (used by the backend benchmark and the cross-backend tests).
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("AOREG_FORCE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _corekernels as _impl
    except ImportError:
        _impl = _pykernels


def backend_name():
    """'compiled' when the extension is active, 'python' otherwise."""
    return "python" if _impl is _pykernels else "compiled"


def _c2d(a):
    return np.ascontiguousarray(np.atleast_2d(np.asarray(a, dtype=np.float64)))


def _c1d(a):
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64).ravel())


def rk4_forced_lti(drift, gain, amps, freqs, phases, z0, t0, dt, n_steps,
                   impl=None):
    """See :func:`aoreg._pykernels.rk4_forced_lti`."""
    impl = impl or _impl
    gain = _c2d(gain)
    amps = np.ascontiguousarray(
        np.asarray(amps, dtype=np.float64).reshape(-1, gain.shape[1])
    )
    return impl.rk4_forced_lti(
        _c2d(drift), gain, amps, _c1d(freqs), _c1d(phases), _c1d(z0),
        float(t0), float(dt), int(n_steps),
    )


def pair_integrals(fa, fb, r, dt, impl=None):
    """See :func:`aoreg._pykernels.pair_integrals`."""
    impl = impl or _impl
    return impl.pair_integrals(_c2d(fa), _c2d(fb), int(r), float(dt))
