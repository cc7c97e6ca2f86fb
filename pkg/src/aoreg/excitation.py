"""Trajectory simulation and integral data-matrix assembly.

One exploration trajectory is simulated under u = -K0 x + (sinusoid sum) and
logged on the fine integration grid.  From that single log the per-basis
error states xbar_i = x - X_i v are formed and, for every sample interval,
the increment rows vecv(xbar_i(t_k)) - vecv(xbar_i(t_{k-1})) and the
trapezoid integrals of xbar_i (x) xbar_i, xbar_i (x) u and xbar_i (x) v are
collected.  Those matrices are the only thing the learner ever sees.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError, SimulationDivergedError
from .tensorops import RANK_RTOL, sym_vec_len, vecv_rows


def required_sample_count(n, m, q):
    """Unknown count of the full-size identification solve."""
    return sym_vec_len(n) + (m + q) * n


def recommended_frequency_count(n, m, q):
    """Rule-of-thumb excitation richness: unknowns per input channel."""
    return math.ceil(required_sample_count(n, m, q) / m)


@dataclass
class ExcitationSpec:
    """Exploration input: stabilizing gain plus a sum of sinusoids.

    ``amplitudes`` has one m-vector per frequency.  ``seed`` feeds the
    generator used to fill in omitted phases/amplitudes at config time.
    """

    K0: np.ndarray
    amplitudes: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.K0 = np.atleast_2d(np.asarray(self.K0, dtype=float))
        self.amplitudes = np.atleast_2d(np.asarray(self.amplitudes, dtype=float))
        self.frequencies = np.asarray(self.frequencies, dtype=float).ravel()
        self.phases = np.asarray(self.phases, dtype=float).ravel()
        L = self.frequencies.size
        if L == 0:
            self.amplitudes = self.amplitudes.reshape(0, self.K0.shape[0])
        if self.amplitudes.shape[0] != L or self.phases.size != L:
            raise DimensionError(
                "amplitudes and phases must have one entry per frequency"
            )

    def signal(self, times):
        """Evaluate the sinusoid sum on a time grid, shape (len(times), m)."""
        times = np.asarray(times, dtype=float)
        if self.frequencies.size == 0:
            return np.zeros((times.size, self.K0.shape[0]))
        return np.sin(np.outer(times, self.frequencies) + self.phases) @ self.amplitudes


@dataclass
class SampleSchedule:
    """Sampling grid: s intervals of width sample_dt, integrated at integration_dt."""

    sample_count: int
    sample_dt: float
    integration_dt: float
    t0: float = 0.0

    def __post_init__(self):
        if self.sample_count < 1:
            raise ConfigError("schedule.sample_count must be >= 1")
        if self.sample_dt <= 0 or self.integration_dt <= 0:
            raise ConfigError("schedule time steps must be positive")
        r = round(self.sample_dt / self.integration_dt)
        if r < 1 or abs(r * self.integration_dt - self.sample_dt) > 1e-9 * self.sample_dt:
            raise ConfigError(
                "schedule.integration_dt must divide schedule.sample_dt exactly"
            )

    @property
    def steps_per_sample(self):
        return round(self.sample_dt / self.integration_dt)

    @property
    def n_steps(self):
        return self.sample_count * self.steps_per_sample

    def grid(self):
        return self.t0 + self.integration_dt * np.arange(self.n_steps + 1)


@dataclass
class TrajectoryLog:
    """Signals on the integration grid: state, input and exosystem state."""

    times: np.ndarray
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray


def _closed_loop_matrices(plant, exo, K, L):
    n, q, m = plant.n, plant.q, plant.m
    drift = np.block(
        [
            [plant.A - plant.B @ K, plant.D + plant.B @ L],
            [np.zeros((q, n)), exo.E],
        ]
    )
    gain = np.vstack([plant.B, np.zeros((q, m))])
    return drift, gain


def _run(plant, exo, K, L, excitation, t0, dt, n_steps, x0, v0):
    x0 = np.asarray(x0, dtype=float).ravel()
    v0 = np.asarray(v0, dtype=float).ravel()
    if x0.size != plant.n or v0.size != plant.q:
        raise DimensionError("x0/v0 dimensions disagree with the plant")
    drift, gain = _closed_loop_matrices(plant, exo, K, L)
    if excitation is not None:
        amps, freqs, phases = excitation.amplitudes, excitation.frequencies, excitation.phases
    else:
        amps = np.zeros((0, plant.m))
        freqs = phases = np.zeros(0)
    Z, status = kernels.rk4_forced_lti(
        drift, gain, amps, freqs, phases, np.concatenate([x0, v0]), t0, dt, n_steps
    )
    if status >= 0:
        raise SimulationDivergedError(
            f"state became non-finite at step {status} (t = {t0 + status * dt:.3f}); "
            "gain not stabilizing or step too large"
        )
    times = t0 + dt * np.arange(n_steps + 1)
    x = Z[:, : plant.n]
    v = Z[:, plant.n :]
    u = -x @ K.T + v @ L.T
    if excitation is not None:
        u = u + excitation.signal(times)
    return TrajectoryLog(times, x, u, v)


def simulate(plant, exo, excitation, schedule, x0, v0):
    """Integrate the exploration phase and log every integration grid point."""
    if excitation.K0.shape != (plant.m, plant.n):
        raise DimensionError(f"K0 must be {plant.m}x{plant.n}")
    return _run(
        plant, exo, excitation.K0, np.zeros((plant.m, plant.q)), excitation,
        schedule.t0, schedule.integration_dt, schedule.n_steps, x0, v0,
    )


def simulate_closed_loop(plant, exo, controller, horizon, dt, x0, v0, t0=0.0):
    """Evaluation run under u = -Kx + Lv with no exploration signal."""
    n_steps = round(horizon / dt)
    return _run(plant, exo, controller.K, controller.L, None, t0, dt, n_steps, x0, v0)


def tracking_error(plant, log):
    """e(t) = C x(t) + F v(t) along a logged trajectory, shape (N+1, p)."""
    return log.x @ plant.C.T + log.v @ plant.F.T


def error_state(x, v, Xi):
    """xbar_i = x - X_i v; accepts single vectors or (N, dim) signal arrays."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    Xi = np.atleast_2d(np.asarray(Xi, dtype=float))
    if x.ndim == 1:
        return x - Xi @ v
    return x - v @ Xi.T


@dataclass
class DataMatrices:
    """Per-basis-index integral data: delta[i], gamma_xx[i], gamma_xu[i], gamma_xv[i]."""

    delta: list
    gamma_xx: list
    gamma_xu: list
    gamma_xv: list
    n: int
    m: int
    q: int
    h: int
    s: int


def build_data_matrices(log, basis, schedule):
    """Assemble the increment and integral matrices for every basis index.

    The log must sit exactly on the schedule's integration grid and cover all
    sample instants; quadrature is composite trapezoid on that grid.
    """
    r = schedule.steps_per_sample
    s = schedule.sample_count
    dt = schedule.integration_dt
    npts = s * r + 1
    if log.times.size < npts:
        raise DimensionError(
            f"log has {log.times.size} grid points but the schedule needs {npts}"
        )
    steps = np.diff(log.times[:npts])
    if np.max(np.abs(steps - dt)) > 1e-9 * dt:
        raise DimensionError("log grid step disagrees with schedule.integration_dt")

    x = log.x[:npts]
    u = log.u[:npts]
    v = log.v[:npts]
    n = x.shape[1]
    m = u.shape[1]
    q = v.shape[1]

    delta, gxx, gxu, gxv = [], [], [], []
    for Xi in basis.X:
        xbar = error_state(x, v, Xi)
        vv = vecv_rows(xbar[::r])
        delta.append(vv[1:] - vv[:-1])
        gxx.append(kernels.pair_integrals(xbar, xbar, r, dt))
        gxu.append(kernels.pair_integrals(xbar, u, r, dt))
        gxv.append(kernels.pair_integrals(xbar, v, r, dt))
    return DataMatrices(delta, gxx, gxu, gxv, n, m, q, basis.h, s)


@dataclass
class RankEntry:
    """One data-richness condition: required vs achieved numerical rank."""

    name: str
    kind: str  # "full", "exo" or "reduced"
    index: int
    shape: tuple
    required: int
    achieved: int
    smallest_kept: float
    passed: bool
    informational: bool = False
    note: str = ""


@dataclass
class RankDiagnostics:
    """A bundle of rank conditions for one algorithm path."""

    entries: list = field(default_factory=list)

    @property
    def all_required_pass(self):
        return all(e.passed for e in self.entries if not e.informational)

    def count(self, kind):
        return sum(1 for e in self.entries if e.kind == kind and not e.informational)

    def failed(self):
        return [e for e in self.entries if not e.informational and not e.passed]


def _rank_entry(M, name, kind, index, required, rank_tol, informational=False, note=""):
    sing = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
    if sing.size == 0 or sing[0] == 0.0:
        achieved = 0
    else:
        achieved = int(np.count_nonzero(sing >= rank_tol * sing[0]))
    smallest = float(sing[achieved - 1]) if achieved > 0 else 0.0
    return RankEntry(
        name, kind, index, tuple(M.shape), required, achieved, smallest,
        achieved == required, informational, note,
    )


def check_rank_original(data, i, rank_tol=RANK_RTOL):
    """Full-size data-richness condition for basis index i.

    Requires rank([Gxx_i, Gxu_i, Gxv_i]) to equal the unknown count
    n(n+1)/2 + (m+q)n; the quadratic block contributes at most n(n+1)/2
    independent columns, so equality is exactly full usable rank.
    """
    M = np.hstack([data.gamma_xx[i], data.gamma_xu[i], data.gamma_xv[i]])
    required = required_sample_count(data.n, data.m, data.q)
    return _rank_entry(M, f"full-data-rank[i={i}]", "full", i, required, rank_tol)


def original_rank_diagnostics(data, rank_tol=RANK_RTOL):
    """The h+2 full-size conditions the original algorithm needs (i = 0..h+1)."""
    return RankDiagnostics(
        [check_rank_original(data, i, rank_tol) for i in range(data.h + 2)]
    )


def check_rank_refined(data, rank_tol=RANK_RTOL):
    """Conditions for the decoupled algorithm.

    (a) the single full-size condition at i = 0; (b) rank(Gxv_i) = qn for
    i = 1..h+1; (c) the reduced condition rank([Gxx_0, Gxu_0]) =
    n(n+1)/2 + mn, reported for information only since (a) implies it.
    """
    entries = [check_rank_original(data, 0, rank_tol)]
    qn = data.q * data.n
    for i in range(1, data.h + 2):
        entries.append(
            _rank_entry(
                data.gamma_xv[i], f"exo-data-rank[i={i}]", "exo", i, qn, rank_tol
            )
        )
    M = np.hstack([data.gamma_xx[0], data.gamma_xu[0]])
    required = sym_vec_len(data.n) + data.m * data.n
    entries.append(
        _rank_entry(
            M, "reduced-data-rank[i=0]", "reduced", 0, required, rank_tol,
            informational=True, note="implied by full-data-rank[i=0]",
        )
    )
    return RankDiagnostics(entries)


def export_trajectory(log, path):
    """Write the log as CSV: t,x1..xn,u1..um,v1..vq with round-trippable floats."""
    n = log.x.shape[1]
    m = log.u.shape[1]
    q = log.v.shape[1]
    header = (
        ["t"]
        + [f"x{i + 1}" for i in range(n)]
        + [f"u{i + 1}" for i in range(m)]
        + [f"v{i + 1}" for i in range(q)]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(log.times.size):
            row = [log.times[k], *log.x[k], *log.u[k], *log.v[k]]
            fh.write(",".join(f"{val:.17g}" for val in row) + "\n")
