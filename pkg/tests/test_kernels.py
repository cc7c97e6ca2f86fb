import numpy as np
import pytest
from numpy.testing import assert_allclose

from aoreg import _pykernels, kernels

try:
    from aoreg import _corekernels
except ImportError:
    _corekernels = None

needs_compiled = pytest.mark.skipif(
    _corekernels is None, reason="compiled extension not built"
)


def _workload():
    rng = np.random.default_rng(0)
    nz, m, nf = 5, 2, 6
    drift = rng.normal(size=(nz, nz))
    drift -= (np.max(np.linalg.eigvals(drift).real) + 1.0) * np.eye(nz)
    gain = rng.normal(size=(nz, m))
    amps = rng.uniform(0.2, 1.0, size=(nf, m))
    freqs = rng.uniform(0.3, 4.0, size=nf)
    phases = rng.uniform(0, 2 * np.pi, size=nf)
    z0 = rng.normal(size=nz)
    return drift, gain, amps, freqs, phases, z0


@needs_compiled
def test_rk4_backends_agree():
    args = _workload()
    Zp, sp = kernels.rk4_forced_lti(*args, 0.0, 0.01, 2000, impl=_pykernels)
    Zc, sc = kernels.rk4_forced_lti(*args, 0.0, 0.01, 2000, impl=_corekernels)
    assert sp == sc == -1
    assert_allclose(Zc, Zp, rtol=1e-10, atol=1e-12)


@needs_compiled
def test_pair_integrals_backends_agree():
    rng = np.random.default_rng(1)
    fa = rng.normal(size=(401, 3))
    fb = rng.normal(size=(401, 2))
    Gp = kernels.pair_integrals(fa, fb, 20, 0.005, impl=_pykernels)
    Gc = kernels.pair_integrals(fa, fb, 20, 0.005, impl=_corekernels)
    assert Gp.shape == (20, 6)
    assert_allclose(Gc, Gp, rtol=1e-12, atol=1e-14)


@needs_compiled
def test_divergence_status_agrees():
    drift = np.array([[5.0]])
    gain = np.zeros((1, 1))
    none = np.zeros(0)
    z0 = np.array([1.0])
    Zp, sp = kernels.rk4_forced_lti(
        drift, gain, np.zeros((0, 1)), none, none, z0, 0.0, 2.0, 50, impl=_pykernels
    )
    Zc, sc = kernels.rk4_forced_lti(
        drift, gain, np.zeros((0, 1)), none, none, z0, 0.0, 2.0, 50, impl=_corekernels
    )
    assert sp == sc >= 0
    assert np.isnan(Zp[-1, 0]) and np.isnan(Zc[-1, 0])


def test_rk4_no_forcing_matches_expm():
    rng = np.random.default_rng(2)
    drift = rng.normal(size=(3, 3))
    drift -= (np.max(np.linalg.eigvals(drift).real) + 0.5) * np.eye(3)
    z0 = rng.normal(size=3)
    Z, status = kernels.rk4_forced_lti(
        drift, np.zeros((3, 1)), np.zeros((0, 1)), np.zeros(0), np.zeros(0),
        z0, 0.0, 0.002, 500,
    )
    assert status == -1
    # exact flow via the eigen-decomposition of the drift
    w, V = np.linalg.eig(drift)
    z_exact = (V @ np.diag(np.exp(w)) @ np.linalg.inv(V) @ z0).real
    assert_allclose(Z[-1], z_exact, atol=1e-10)


def test_pair_integrals_quadratic_exact():
    # trapezoid integrates piecewise-linear products of constants exactly;
    # for f(t) = t the product t*t has a known integral over [0, 1]
    r = 100
    t = np.linspace(0.0, 1.0, r + 1)[:, None]
    G = kernels.pair_integrals(t, t, r, 1.0 / r)
    # composite trapezoid on t^2 over [0,1]: 1/3 + dt^2/6 exactly
    assert G[0, 0] == pytest.approx(1.0 / 3.0 + (1.0 / r) ** 2 / 6.0, rel=1e-12)


def test_backend_name_reports_active():
    assert kernels.backend_name() in ("compiled", "python")
