import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aoreg.basis import build_basis, sylvester_images
from aoreg.benchmarks import b1, b2, b3
from aoreg.excitation import build_data_matrices, simulate
from aoreg.oracle import solve_are_kleinman, solve_regulator, synthesize_controller

from polysynth import exact_data


@pytest.fixture(scope="session")
def b1_cfg():
    return b1()


@pytest.fixture(scope="session")
def b2_cfg():
    return b2()


@pytest.fixture(scope="session")
def b3_cfg():
    return b3()


class Pipeline:
    """Shared per-benchmark artifacts: oracle, basis, trajectory and data."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.plant = cfg.plant
        self.exo = cfg.exo
        self.weights = cfg.weights
        self.oracle, self.oracle_history = solve_are_kleinman(
            cfg.plant, cfg.weights, cfg.K0
        )
        self.regulator = solve_regulator(cfg.plant, cfg.exo)
        self.controller = synthesize_controller(self.oracle.K_star, self.regulator)
        self.basis = build_basis(cfg.plant.C, cfg.plant.F, cfg.plant.q)
        self.sylvester = sylvester_images(cfg.plant.A, cfg.exo.E, self.basis)
        self.log = simulate(
            cfg.plant, cfg.exo, cfg.excitation, cfg.schedule, cfg.x0, cfg.v0
        )
        self.data = build_data_matrices(self.log, self.basis, cfg.schedule)


@pytest.fixture(scope="session")
def b1_pipe(b1_cfg):
    return Pipeline(b1_cfg)


@pytest.fixture(scope="session")
def b2_pipe(b2_cfg):
    return Pipeline(b2_cfg)


class ExactCase:
    """Polynomial system whose data matrices carry exact integrals.

    Nilpotent A and E keep every signal polynomial; the model-based oracle
    for the same matrices provides the reference iterates.
    """

    def __init__(self):
        from aoreg.oracle import CostWeights, Exosystem, Plant

        self.A = np.array([[0.0, 1.0], [0.0, 0.0]])
        self.B = np.array([[0.0], [1.0]])
        self.C = np.array([[1.0, 0.0]])
        self.D = np.array([[0.3, -0.2], [0.5, 0.4]])
        self.E = np.array([[0.0, 1.0], [0.0, 0.0]])
        self.F = np.array([[0.7, -0.3]])
        self.plant = Plant(self.A, self.B, self.C, self.D, self.F)
        self.exo = Exosystem(self.E)
        self.weights = CostWeights([[1.0]], [[1.0]])
        self.K0 = np.array([[1.0, 1.0]])
        self.basis = build_basis(self.C, self.F, 2)
        rng = np.random.default_rng(42)
        self.u_coeffs = rng.uniform(-1.0, 1.0, size=(5, 1))
        self.x0 = np.array([0.4, -0.3])
        self.v0 = np.array([0.5, 0.8])
        # centered window keeps the polynomial regressors well conditioned
        self.sample_times = -1.0 + 0.1 * np.arange(21)
        self.data, self.points = exact_data(
            self.A, self.B, self.D, self.E, self.u_coeffs,
            self.x0, self.v0, self.basis, self.sample_times,
        )
        self.oracle, self.oracle_history = solve_are_kleinman(
            self.plant, self.weights, self.K0
        )
        self.sylvester = sylvester_images(self.A, self.E, self.basis)


@pytest.fixture(scope="session")
def exact_case():
    return ExactCase()
