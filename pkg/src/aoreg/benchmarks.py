"""Built-in benchmark systems.

b1: scalar plant with a constant exosystem; every learned quantity has a
    hand-computable limit (the scalar Riccati equation gives sqrt(2) - 1).
b2: second-order plant tracking a harmonic exosystem; the workhorse case.
b3: a randomly generated stable 4-state, 2-input, 2-output plant produced
    from a fixed seed and checked against the standing assumptions at
    generation time.

Expected values for b2/b3 always come from the model-based oracle at test
time, never from constants baked in here.
"""

import numpy as np

from .config import parse_config
from .oracle import check_assumptions

B3_SEED = 13


def b1():
    """Scalar benchmark: A=-1, B=C=D=1, E=0, F=-1, Q=R=1."""
    return parse_config(
        {
            "plant": {
                "A": [[-1.0]],
                "B": [[1.0]],
                "C": [[1.0]],
                "D": [[1.0]],
                "E": [[0.0]],
                "F": [[-1.0]],
            },
            "weights": {"Q": [[1.0]], "R": [[1.0]]},
            "init": {"x0": [1.0], "v0": [1.0], "K0": [[0.0]]},
            "excitation": {
                "frequencies": [0.9, 1.7, 2.6],
                "amplitudes": [[0.4], [0.3], [0.3]],
                "phases": [0.3, 1.1, 2.0],
                "seed": 0,
            },
            "schedule": {
                "sample_count": 12,
                "sample_dt": 0.1,
                "integration_dt": 0.002,
            },
            "algorithm": "both",
        }
    )


def b2():
    """Two-state plant, harmonic exosystem (n=2, m=1, p=1, q=2, h=2)."""
    return parse_config(
        {
            "plant": {
                "A": [[0.0, 1.0], [-2.0, -3.0]],
                "B": [[0.0], [1.0]],
                "C": [[1.0, 0.0]],
                "D": [[0.0, 0.0], [1.0, 0.0]],
                "E": [[0.0, 1.0], [-1.0, 0.0]],
                "F": [[-1.0, 0.0]],
            },
            "weights": {"Q": [[1.0]], "R": [[1.0]]},
            "init": {"x0": [1.0, -1.0], "v0": [1.0, 0.5], "K0": [[0.0, 0.0]]},
            "excitation": {
                "frequencies": [0.5, 0.9, 1.4, 1.9, 2.5, 3.1, 3.6, 4.2],
                "amplitudes": [[0.8]] * 8,
                "phases": [0.0, 0.7, 1.4, 2.1, 2.8, 3.5, 4.2, 4.9],
                "seed": 0,
            },
            "schedule": {
                "sample_count": 60,
                "sample_dt": 0.1,
                "integration_dt": 0.005,
            },
            "algorithm": "both",
        }
    )


def b3(seed=B3_SEED):
    """Random stable 4-state plant (n=4, m=2, p=2, q=2) from a fixed seed.

    The spectrum is shifted 0.8 left of the imaginary axis; the default seed
    was picked for a well-conditioned Riccati solution so the benchmark
    exercises the learners without error amplification through P^{-1}.
    """
    rng = np.random.default_rng(seed)
    n, m, p, q = 4, 2, 2, 2
    A = rng.normal(size=(n, n))
    A = A - (np.max(np.linalg.eigvals(A).real) + 0.8) * np.eye(n)
    B = rng.normal(size=(n, m))
    C = rng.normal(size=(p, n))
    D = 0.5 * rng.normal(size=(n, q))
    E = np.array([[0.0, 1.0], [-1.0, 0.0]])
    F = 0.5 * rng.normal(size=(p, q))
    freqs = np.round(rng.uniform(0.3, 5.0, size=14), 3)
    amps = np.round(1.5 * rng.uniform(0.3, 0.9, size=(14, m)), 3)
    phases = np.round(rng.uniform(0.0, 2.0 * np.pi, size=14), 3)
    cfg = parse_config(
        {
            "plant": {
                "A": A.tolist(),
                "B": B.tolist(),
                "C": C.tolist(),
                "D": D.tolist(),
                "E": E.tolist(),
                "F": F.tolist(),
            },
            "weights": {"Q": np.eye(p).tolist(), "R": np.eye(m).tolist()},
            "init": {
                "x0": [0.5, -0.5, 0.5, -0.5],
                "v0": [1.0, 0.5],
                "K0": np.zeros((m, n)).tolist(),
            },
            "excitation": {
                "frequencies": freqs.tolist(),
                "amplitudes": amps.tolist(),
                "phases": phases.tolist(),
                "seed": seed,
            },
            "schedule": {
                "sample_count": 120,
                "sample_dt": 0.1,
                "integration_dt": 0.001,
            },
            "algorithm": "both",
        }
    )
    diag = check_assumptions(cfg.plant, cfg.exo, cfg.weights)
    if not diag.all_pass:
        raise RuntimeError("generated benchmark violates the standing assumptions")
    return cfg


ALL = {"b1": b1, "b2": b2, "b3": b3}


def write_benchmark_configs(directory):
    """Dump b1/b2/b3 as JSON config files into ``directory``."""
    import os

    from .config import save_config

    os.makedirs(directory, exist_ok=True)
    paths = {}
    for name, builder in ALL.items():
        path = os.path.join(directory, f"{name}.json")
        save_config(builder(), path)
        paths[name] = path
    return paths
