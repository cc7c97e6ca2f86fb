import numpy as np
import pytest
from numpy.testing import assert_allclose

from aoreg import kernels
from aoreg.basis import build_basis
from aoreg.errors import ConfigError, DimensionError, SimulationDivergedError
from aoreg.excitation import (
    ExcitationSpec,
    SampleSchedule,
    TrajectoryLog,
    build_data_matrices,
    check_rank_original,
    check_rank_refined,
    error_state,
    export_trajectory,
    original_rank_diagnostics,
    required_sample_count,
    simulate,
)
from aoreg.learner import assemble_regression
from aoreg.oracle import Exosystem, Plant
from aoreg.tensorops import kron, vec, vecs, vecv, vecv_rows


def _quiet_excitation(m, n):
    return ExcitationSpec(np.zeros((m, n)), np.zeros((0, m)), [], [])


class TestSchedule:
    def test_divisibility_enforced(self):
        with pytest.raises(ConfigError):
            SampleSchedule(10, 0.1, 0.03)

    def test_grid(self):
        sched = SampleSchedule(4, 0.1, 0.05)
        assert sched.steps_per_sample == 2
        assert sched.n_steps == 8
        assert_allclose(sched.grid()[-1], 0.4)


class TestSimulate:
    def test_equilibrium_stays_zero(self, b1_cfg):
        sched = SampleSchedule(5, 0.1, 0.01)
        log = simulate(
            b1_cfg.plant, b1_cfg.exo, _quiet_excitation(1, 1), sched, [0.0], [0.0]
        )
        assert_allclose(log.x, 0.0)
        assert_allclose(log.u, 0.0)
        assert_allclose(log.v, 0.0)

    def test_constant_exosystem(self, b1_cfg):
        sched = SampleSchedule(5, 0.1, 0.01)
        log = simulate(
            b1_cfg.plant, b1_cfg.exo, _quiet_excitation(1, 1), sched, [0.0], [1.0]
        )
        assert_allclose(log.v, 1.0)

    def test_exponential_decay_accuracy(self):
        plant = Plant([[-1.0]], [[1.0]], [[1.0]], [[0.0]], [[0.0]])
        exo = Exosystem([[0.0]])
        sched = SampleSchedule(10, 0.1, 0.005)
        log = simulate(plant, exo, _quiet_excitation(1, 1), sched, [1.0], [0.0])
        assert abs(log.x[-1, 0] - np.exp(-1.0)) <= 1e-8

    def test_divergence_detected(self):
        plant = Plant([[2.0]], [[1.0]], [[1.0]], [[0.0]], [[0.0]])
        exo = Exosystem([[0.0]])
        sched = SampleSchedule(200, 1.0, 0.5)
        with pytest.raises(SimulationDivergedError):
            simulate(plant, exo, _quiet_excitation(1, 1), sched, [1.0], [0.0])


class TestErrorState:
    def test_zero_slot_passes_state_through(self):
        x = np.array([1.0, 2.0])
        assert_allclose(error_state(x, [3.0], np.zeros((2, 1))), x)

    def test_exact_cancellation(self):
        Xi = np.array([[1.0], [2.0]])
        v = np.array([3.0])
        assert_allclose(error_state(Xi @ v, v, Xi), [0.0, 0.0])

    def test_scalar_case(self):
        assert_allclose(error_state([2.0], [1.0], [[1.0]]), [1.0])


class TestDataMatrices:
    def test_constant_signal_integral(self):
        r = 10
        fa = np.tile([1.0, 2.0], (r + 1, 1))
        fb = np.tile([3.0], (r + 1, 1))
        out = kernels.pair_integrals(fa, fb, r, 1.0 / r)
        assert_allclose(out, [[3.0, 6.0]], rtol=1e-14)

    def test_delta_row_is_vecv_difference(self):
        pts = np.array([[1.0, 0.0], [0.0, 1.0]])
        vv = vecv_rows(pts)
        assert_allclose(vv[1] - vv[0], [-1.0, 0.0, 1.0])

    def test_off_grid_log_rejected(self, b2_pipe):
        sched = b2_pipe.cfg.schedule
        log = b2_pipe.log
        bad = TrajectoryLog(log.times * 1.001, log.x, log.u, log.v)
        with pytest.raises(DimensionError):
            build_data_matrices(bad, b2_pipe.basis, sched)

    def test_short_log_rejected(self, b2_pipe):
        sched = b2_pipe.cfg.schedule
        log = b2_pipe.log
        short = TrajectoryLog(log.times[:50], log.x[:50], log.u[:50], log.v[:50])
        with pytest.raises(DimensionError):
            build_data_matrices(short, b2_pipe.basis, sched)

    def test_shapes(self, b2_pipe):
        data = b2_pipe.data
        n, m, q, s = data.n, data.m, data.q, data.s
        assert len(data.delta) == data.h + 2
        for i in range(data.h + 2):
            assert data.delta[i].shape == (s, n * (n + 1) // 2)
            assert data.gamma_xx[i].shape == (s, n * n)
            assert data.gamma_xu[i].shape == (s, n * m)
            assert data.gamma_xv[i].shape == (s, n * q)

    def test_delta_consistency_with_log(self, b2_pipe):
        # same arithmetic as the builder: exact bitwise agreement at i = 0
        r = b2_pipe.cfg.schedule.steps_per_sample
        vv = np.array([vecv(row) for row in b2_pipe.log.x[::r]])
        assert np.array_equal(b2_pipe.data.delta[0], vv[1:] - vv[:-1])

    def test_shift_identity(self, b2_pipe):
        # Gxu on xbar_i equals Gxu on x minus Gvu mapped through X_i (x) I_m
        data = b2_pipe.data
        sched = b2_pipe.cfg.schedule
        r, dt = sched.steps_per_sample, sched.integration_dt
        log = b2_pipe.log
        gvu = kernels.pair_integrals(log.v, log.u, r, dt)
        m = data.m
        for i in range(data.h + 2):
            Xi = b2_pipe.basis.X[i]
            expected = data.gamma_xu[0] - gvu @ kron(Xi, np.eye(m)).T
            assert np.max(np.abs(data.gamma_xu[i] - expected)) <= 1e-10

    def test_determinism(self, b2_cfg):
        cfg = b2_cfg
        basis = build_basis(cfg.plant.C, cfg.plant.F, cfg.plant.q)
        log1 = simulate(cfg.plant, cfg.exo, cfg.excitation, cfg.schedule, cfg.x0, cfg.v0)
        log2 = simulate(cfg.plant, cfg.exo, cfg.excitation, cfg.schedule, cfg.x0, cfg.v0)
        assert np.array_equal(log1.x, log2.x)
        assert np.array_equal(log1.u, log2.u)
        d1 = build_data_matrices(log1, basis, cfg.schedule)
        d2 = build_data_matrices(log2, basis, cfg.schedule)
        for i in range(d1.h + 2):
            assert np.array_equal(d1.gamma_xx[i], d2.gamma_xx[i])
            assert np.array_equal(d1.delta[i], d2.delta[i])


class TestIrlIdentity:
    def _max_row_residual(self, pipe, i, iterate):
        plant, weights = pipe.plant, pipe.weights
        K_next = np.linalg.solve(weights.R, plant.B.T @ iterate.P)
        S_i = np.zeros((plant.n, plant.q)) if i == 0 else pipe.sylvester.S[i - 1]
        W = (plant.D - S_i).T @ iterate.P
        theta = np.concatenate([vecs(iterate.P), vec(K_next), vec(W)])
        lhs, rhs = assemble_regression(pipe.data, i, iterate.K, plant.C, weights)
        return np.max(np.abs(lhs @ theta - rhs))

    def test_b1_audit(self, b1_pipe):
        for it in b1_pipe.oracle_history:
            for i in range(b1_pipe.data.h + 2):
                assert self._max_row_residual(b1_pipe, i, it) <= 1e-6

    def test_b2_audit(self, b2_pipe):
        for it in b2_pipe.oracle_history:
            for i in range(b2_pipe.data.h + 2):
                assert self._max_row_residual(b2_pipe, i, it) <= 1e-4

    def test_audit_tightens_with_finer_grid(self, b2_cfg):
        # trapezoid quadrature error should drop roughly 4x when the
        # integration step halves
        from aoreg.config import config_to_dict, parse_config

        raw = config_to_dict(b2_cfg)
        residuals = {}
        for dt in (0.01, 0.005, 0.0025):
            raw["schedule"] = {
                "sample_count": 20, "sample_dt": 0.1, "integration_dt": dt,
            }
            from conftest import Pipeline

            pipe = Pipeline(parse_config(raw))
            it = pipe.oracle_history[0]
            residuals[dt] = self._max_row_residual(pipe, 0, it)
        assert residuals[0.005] < residuals[0.01] / 2.0
        assert residuals[0.0025] < residuals[0.005] / 2.0


class TestRankChecks:
    def test_zero_trajectory_fails(self, b1_cfg):
        cfg = b1_cfg
        basis = build_basis(cfg.plant.C, cfg.plant.F, cfg.plant.q)
        log = simulate(
            cfg.plant, cfg.exo, _quiet_excitation(1, 1), cfg.schedule, [0.0], [0.0]
        )
        data = build_data_matrices(log, basis, cfg.schedule)
        entry = check_rank_original(data, 0)
        assert not entry.passed
        assert entry.achieved == 0

    def test_b2_rich_excitation_passes(self, b2_pipe):
        diag = original_rank_diagnostics(b2_pipe.data)
        assert diag.all_required_pass
        assert len(diag.entries) == b2_pipe.data.h + 2

    def test_row_deficit_fails_by_pigeonhole(self, b2_pipe):
        short_sched = SampleSchedule(4, 0.1, 0.005)
        data = build_data_matrices(b2_pipe.log, b2_pipe.basis, short_sched)
        entry = check_rank_original(data, 0)
        assert not entry.passed
        assert entry.achieved <= 4 < entry.required

    def test_refined_entry_accounting(self, b2_pipe):
        diag = check_rank_refined(b2_pipe.data)
        h = b2_pipe.data.h
        assert len(diag.entries) == h + 3  # 1 full + (h+1) exo + informational
        required = [e for e in diag.entries if not e.informational]
        assert len(required) == h + 2
        assert sum(1 for e in required if e.kind == "exo") == h + 1
        assert diag.all_required_pass
        info = [e for e in diag.entries if e.informational]
        assert len(info) == 1 and info[0].kind == "reduced" and info[0].passed

    def test_zero_exosystem_fails_refined(self, b2_cfg):
        cfg = b2_cfg
        basis = build_basis(cfg.plant.C, cfg.plant.F, cfg.plant.q)
        log = simulate(cfg.plant, cfg.exo, cfg.excitation, cfg.schedule, cfg.x0, np.zeros(2))
        data = build_data_matrices(log, basis, cfg.schedule)
        diag = check_rank_refined(data)
        by_kind = {e.name: e for e in diag.entries}
        assert not by_kind["full-data-rank[i=0]"].passed
        for i in range(1, data.h + 2):
            entry = by_kind[f"exo-data-rank[i={i}]"]
            assert not entry.passed
            assert entry.achieved == 0

    def test_required_sample_count_formula(self, b2_cfg):
        assert required_sample_count(2, 1, 2) == 9
        assert required_sample_count(4, 2, 2) == 26


class TestExport:
    def test_header_and_roundtrip(self, b1_pipe, tmp_path):
        path = tmp_path / "traj.csv"
        export_trajectory(b1_pipe.log, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,x1,u1,v1"
        assert len(lines) == b1_pipe.log.times.size + 1
        fields = lines[5].split(",")
        assert float(fields[1]) == b1_pipe.log.x[4, 0]
