"""Experiment configuration: parsing, validation and serialization.

Configs are JSON with nested arrays for matrices.  Validation failures raise
:class:`ConfigError` naming the offending field with its dotted path, e.g.
``weights.R``.  Non-fatal issues (excitation below the recommended richness,
zero exosystem start on the refined path) are collected as warnings so the
run can proceed and report the resulting rank failures itself.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError
from .excitation import (
    ExcitationSpec,
    SampleSchedule,
    recommended_frequency_count,
    required_sample_count,
)
from .learner import LearnerConfig
from .oracle import CostWeights, Exosystem, Plant

ALGORITHMS = ("original", "refined", "both")


@dataclass
class EvalSettings:
    """Closed-loop evaluation horizon and pass thresholds."""

    horizon: float = 20.0
    settle_time: float = 15.0
    tracking_tol: float = 1e-2
    gain_rtol: float = 1e-2
    regulator_rtol: float = 1e-2
    residual_tol: float = 1e-6

    def __post_init__(self):
        if self.horizon <= self.settle_time:
            raise ConfigError("evaluation.horizon must exceed evaluation.settle_time")


@dataclass
class ExperimentConfig:
    """Everything a run needs; ground truth included for the oracle only."""

    plant: Plant
    exo: Exosystem
    weights: CostWeights
    x0: np.ndarray
    v0: np.ndarray
    excitation: ExcitationSpec
    schedule: SampleSchedule
    learner: LearnerConfig
    algorithm: str = "both"
    evaluation: EvalSettings = field(default_factory=EvalSettings)
    warnings: list = field(default_factory=list)

    @property
    def h(self):
        return (self.plant.n - self.plant.p) * self.plant.q

    @property
    def K0(self):
        return self.excitation.K0


def _require(mapping, key, path):
    if key not in mapping:
        raise ConfigError(f"missing required field {path}.{key}" if path else
                          f"missing required field {key}")
    return mapping[key]


def _matrix(mapping, key, path):
    value = _require(mapping, key, path)
    try:
        arr = np.atleast_2d(np.asarray(value, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.{key} is not a numeric matrix: {exc}") from None
    return arr


def _vector(mapping, key, path):
    value = _require(mapping, key, path)
    try:
        return np.asarray(value, dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.{key} is not a numeric vector: {exc}") from None


def parse_config(raw, default_seed=0):
    """Build a validated ExperimentConfig from a plain dict.

    ``default_seed`` fills the excitation seed when the config omits it, so
    a run-level seed governs any generated amplitudes/phases.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")

    plant_raw = _require(raw, "plant", "")
    weights_raw = _require(raw, "weights", "")
    init_raw = _require(raw, "init", "")
    exc_raw = _require(raw, "excitation", "")
    sched_raw = _require(raw, "schedule", "")

    E = _matrix(plant_raw, "E", "plant")
    if E.shape[0] != E.shape[1]:
        raise ConfigError(f"plant.E must be square, got {E.shape[0]}x{E.shape[1]}")
    try:
        plant = Plant(
            _matrix(plant_raw, "A", "plant"),
            _matrix(plant_raw, "B", "plant"),
            _matrix(plant_raw, "C", "plant"),
            _matrix(plant_raw, "D", "plant"),
            _matrix(plant_raw, "F", "plant"),
        )
        exo = Exosystem(E)
    except DimensionError as exc:
        raise ConfigError(f"plant: {exc}") from None
    if exo.q != plant.q:
        raise ConfigError("plant.E dimension disagrees with plant.D/plant.F")

    try:
        weights = CostWeights(
            _matrix(weights_raw, "Q", "weights"), _matrix(weights_raw, "R", "weights")
        )
    except DimensionError as exc:
        raise ConfigError(f"weights: {exc}") from None
    if weights.Q.shape[0] != plant.p:
        raise ConfigError(f"weights.Q must be {plant.p}x{plant.p}")
    if weights.R.shape[0] != plant.m:
        raise ConfigError(f"weights.R must be {plant.m}x{plant.m}")

    x0 = _vector(init_raw, "x0", "init")
    v0 = _vector(init_raw, "v0", "init")
    K0 = _matrix(init_raw, "K0", "init")
    if x0.size != plant.n:
        raise ConfigError(f"init.x0 must have length {plant.n}")
    if v0.size != plant.q:
        raise ConfigError(f"init.v0 must have length {plant.q}")
    if K0.shape != (plant.m, plant.n):
        raise ConfigError(f"init.K0 must be {plant.m}x{plant.n}")

    frequencies = _vector(exc_raw, "frequencies", "excitation")
    seed = int(exc_raw.get("seed", default_seed))
    rng = np.random.default_rng(seed)
    L = frequencies.size
    if exc_raw.get("amplitudes") is not None:
        amplitudes = np.asarray(exc_raw["amplitudes"], dtype=float).reshape(L, plant.m)
    else:
        amplitudes = rng.uniform(0.2, 1.0, size=(L, plant.m))
    if exc_raw.get("phases") is not None:
        phases = np.asarray(exc_raw["phases"], dtype=float).ravel()
    else:
        phases = rng.uniform(0.0, 2.0 * math.pi, size=L)
    try:
        excitation = ExcitationSpec(K0, amplitudes, frequencies, phases, seed)
    except DimensionError as exc:
        raise ConfigError(f"excitation: {exc}") from None

    sample_dt = float(_require(sched_raw, "sample_dt", "schedule"))
    try:
        schedule = SampleSchedule(
            int(_require(sched_raw, "sample_count", "schedule")),
            sample_dt,
            float(sched_raw.get("integration_dt", sample_dt / 20.0)),
            float(sched_raw.get("t0", 0.0)),
        )
    except (ConfigError, ValueError) as exc:
        raise ConfigError(f"schedule: {exc}") from None

    learner_raw = raw.get("learner", {})
    try:
        learner = LearnerConfig(
            eps=float(learner_raw.get("eps", 1e-6)),
            max_iter=int(learner_raw.get("max_iter", 50)),
            rank_tol=float(learner_raw.get("rank_tol", 1e-8)),
            tol_mono=(
                None if learner_raw.get("tol_mono") is None
                else float(learner_raw["tol_mono"])
            ),
        )
    except DimensionError as exc:
        raise ConfigError(f"learner: {exc}") from None

    algorithm = raw.get("algorithm", "both")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")

    eval_raw = raw.get("evaluation", {})
    try:
        evaluation = EvalSettings(
            horizon=float(eval_raw.get("horizon", 20.0)),
            settle_time=float(eval_raw.get("settle_time", 15.0)),
            tracking_tol=float(eval_raw.get("tracking_tol", 1e-2)),
            gain_rtol=float(eval_raw.get("gain_rtol", 1e-2)),
            regulator_rtol=float(eval_raw.get("regulator_rtol", 1e-2)),
            residual_tol=float(eval_raw.get("residual_tol", 1e-6)),
        )
    except ConfigError:
        raise

    warnings = []
    needed = required_sample_count(plant.n, plant.m, plant.q)
    if schedule.sample_count < needed:
        raise ConfigError(
            f"schedule.sample_count must be >= {needed} "
            f"(the full-size solve has that many unknowns)"
        )
    rec = recommended_frequency_count(plant.n, plant.m, plant.q)
    if frequencies.size < rec:
        warnings.append(
            f"excitation.frequencies: {frequencies.size} distinct frequencies, "
            f"{rec} recommended; rank conditions may fail"
        )
    if algorithm in ("refined", "both") and plant.q > 0 and np.allclose(v0, 0.0):
        warnings.append(
            "init.v0 is zero with the refined path selected; the exosystem "
            "coupling cannot be identified and its rank conditions will fail"
        )

    return ExperimentConfig(
        plant, exo, weights, x0, v0, excitation, schedule, learner,
        algorithm, evaluation, warnings,
    )


def load_config(path, default_seed=0):
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(raw, default_seed)


def config_to_dict(cfg):
    """Serialize a config back to the JSON structure (inverse of parse_config)."""
    return {
        "plant": {
            "A": cfg.plant.A.tolist(),
            "B": cfg.plant.B.tolist(),
            "C": cfg.plant.C.tolist(),
            "D": cfg.plant.D.tolist(),
            "E": cfg.exo.E.tolist(),
            "F": cfg.plant.F.tolist(),
        },
        "weights": {"Q": cfg.weights.Q.tolist(), "R": cfg.weights.R.tolist()},
        "init": {
            "x0": cfg.x0.tolist(),
            "v0": cfg.v0.tolist(),
            "K0": cfg.excitation.K0.tolist(),
        },
        "excitation": {
            "frequencies": cfg.excitation.frequencies.tolist(),
            "amplitudes": cfg.excitation.amplitudes.tolist(),
            "phases": cfg.excitation.phases.tolist(),
            "seed": cfg.excitation.seed,
        },
        "schedule": {
            "sample_count": cfg.schedule.sample_count,
            "sample_dt": cfg.schedule.sample_dt,
            "integration_dt": cfg.schedule.integration_dt,
            "t0": cfg.schedule.t0,
        },
        "learner": {
            "eps": cfg.learner.eps,
            "max_iter": cfg.learner.max_iter,
            "rank_tol": cfg.learner.rank_tol,
            "tol_mono": cfg.learner.tol_mono,
        },
        "algorithm": cfg.algorithm,
        "evaluation": {
            "horizon": cfg.evaluation.horizon,
            "settle_time": cfg.evaluation.settle_time,
            "tracking_tol": cfg.evaluation.tracking_tol,
            "gain_rtol": cfg.evaluation.gain_rtol,
            "regulator_rtol": cfg.evaluation.regulator_rtol,
            "residual_tol": cfg.evaluation.residual_tol,
        },
    }


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
