"""Ground-truth plant model, regulator-equation solver and Kleinman iteration.

Everything in this module sees the true system matrices.  It exists so that
every data-driven result produced by :mod:`aoreg.learner` can be checked
against a model-based answer; the learner itself never imports ground truth.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AssumptionError,
    ConvergenceError,
    DataQualityError,
    DimensionError,
    StabilityError,
)
from .tensorops import kron, lsq_solve, numerical_rank, unvec, vec

HURWITZ_MARGIN = 1e-10
REGULATOR_RTOL = 1e-8


def _mat(value, name):
    a = np.atleast_2d(np.asarray(value, dtype=float))
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a matrix")
    return a


@dataclass
class Plant:
    """Continuous-time linear plant x' = Ax + Bu + Dv, e = Cx + Fv."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.A = _mat(self.A, "A")
        self.B = _mat(self.B, "B")
        self.C = _mat(self.C, "C")
        self.D = _mat(self.D, "D")
        self.F = _mat(self.F, "F")
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError("A must be square")
        if self.B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows")
        if self.C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns")
        if self.D.shape[0] != n:
            raise DimensionError(f"D must have {n} rows")
        if self.F.shape != (self.p, self.q):
            raise DimensionError(f"F must be {self.p}x{self.q}")
        if numerical_rank(self.C) != self.p:
            raise DimensionError("C must have full row rank")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def q(self):
        return self.D.shape[1]


@dataclass
class Exosystem:
    """Autonomous reference/disturbance generator v' = Ev."""

    E: np.ndarray

    def __post_init__(self):
        self.E = _mat(self.E, "E")
        if self.E.shape[0] != self.E.shape[1]:
            raise DimensionError("E must be square")

    @property
    def q(self):
        return self.E.shape[0]


@dataclass
class CostWeights:
    """LQR weights: Q symmetric PSD on the tracking error, R symmetric PD."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.Q = _mat(self.Q, "Q")
        self.R = _mat(self.R, "R")
        for name, M in (("Q", self.Q), ("R", self.R)):
            if M.shape[0] != M.shape[1]:
                raise DimensionError(f"{name} must be square")
            if np.linalg.norm(M - M.T) > 1e-10 * max(1.0, np.linalg.norm(M)):
                raise DimensionError(f"{name} must be symmetric")
        if np.linalg.eigvalsh(self.Q).min() < -1e-12:
            raise DimensionError("Q must be positive semidefinite")
        if np.linalg.eigvalsh(self.R).min() <= 0.0:
            raise DimensionError("R must be positive definite")

    def state_cost(self, C):
        """The error weight pulled back to the state: C'QC."""
        return C.T @ self.Q @ C


@dataclass
class PolicyIterate:
    """One policy-iteration step: the gain K evaluated and its value matrix P."""

    j: int
    P: np.ndarray
    K: np.ndarray


@dataclass
class OracleSolution:
    """Stabilizing Riccati solution and optimal gain from policy iteration."""

    P_star: np.ndarray
    K_star: np.ndarray
    iterations_used: int


@dataclass
class RegulatorSolution:
    """Feedforward geometry (X, U) with optional basis coordinates alpha."""

    X: np.ndarray
    U: np.ndarray
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class Controller:
    """State-feedback/feedforward pair for u = -Kx + Lv."""

    K: np.ndarray
    L: np.ndarray


def is_hurwitz(A, margin=HURWITZ_MARGIN):
    """True iff every eigenvalue has real part < -margin."""
    A = _mat(A, "A")
    return bool(np.max(np.linalg.eigvals(A).real) < -margin)


def lyapunov_solve(A_cl, W):
    """Unique symmetric P with A_cl' P + P A_cl + W = 0, A_cl Hurwitz.

    Solved through the Kronecker linearization
    (I (x) A_cl' + A_cl' (x) I) vec(P) = -vec(W).
    """
    A_cl = _mat(A_cl, "A_cl")
    W = _mat(W, "W")
    n = A_cl.shape[0]
    if W.shape != (n, n):
        raise DimensionError("W must match A_cl")
    if not is_hurwitz(A_cl):
        raise StabilityError("A_cl is not Hurwitz; Lyapunov solution not guaranteed")
    lhs = kron(np.eye(n), A_cl.T) + kron(A_cl.T, np.eye(n))
    p = np.linalg.solve(lhs, -vec(W))
    P = unvec(p, (n, n))
    return 0.5 * (P + P.T)


def solve_are_kleinman(plant, weights, K0, eps=1e-10, max_iter=100):
    """Riccati solution by policy iteration on Lyapunov equations.

    Starting from a stabilizing gain K0, repeatedly solves
    (A - B Kj)' Pj + Pj (A - B Kj) + C'QC + Kj' R Kj = 0 and updates
    K_{j+1} = R^{-1} B' Pj until ||Pj - P_{j-1}|| < eps.  Returns the
    converged solution together with the full iterate history, which the
    tests use for the monotonicity properties.
    """
    A, B, C = plant.A, plant.B, plant.C
    R = weights.R
    K = _mat(K0, "K0")
    if K.shape != (plant.m, plant.n):
        raise DimensionError(f"K0 must be {plant.m}x{plant.n}")
    if not is_hurwitz(A - B @ K):
        raise StabilityError("K0 is not stabilizing")
    CQC = weights.state_cost(C)
    history = []
    P_prev = None
    for j in range(max_iter):
        P = lyapunov_solve(A - B @ K, CQC + K.T @ R @ K)
        history.append(PolicyIterate(j, P, K))
        K_next = np.linalg.solve(R, B.T @ P)
        if P_prev is not None and np.linalg.norm(P - P_prev) < eps:
            sol = OracleSolution(P, K_next, j + 1)
            resid = np.linalg.norm(
                A.T @ P + P @ A + CQC - P @ B @ np.linalg.solve(R, B.T @ P)
            )
            if resid > 1e-8 * max(1.0, np.linalg.norm(P)):
                raise DataQualityError(
                    f"Riccati residual {resid:.2e} too large after convergence"
                )
            return sol, history
        P_prev = P
        K = K_next
    raise ConvergenceError(f"policy iteration did not converge in {max_iter} steps")


def solve_regulator(plant, exo):
    """Minimum-norm solution (X, U) of the regulator equations.

    Stacks XE = AX + BU + D and 0 = CX + F into one Kronecker system in
    (vec(X), vec(U)) and solves it by minimum-norm least squares; an
    inconsistent system means the solvability assumption fails.
    """
    A, B, C, D, F = plant.A, plant.B, plant.C, plant.D, plant.F
    E = exo.E
    n, m, p, q = plant.n, plant.m, plant.p, plant.q
    if exo.q != q:
        raise DimensionError("exosystem dimension disagrees with D/F")
    Iq = np.eye(q)
    top = np.hstack([kron(E.T, np.eye(n)) - kron(Iq, A), -kron(Iq, B)])
    bot = np.hstack([kron(Iq, C), np.zeros((p * q, m * q))])
    lhs = np.vstack([top, bot])
    rhs = np.concatenate([vec(D), -vec(F)])
    res = lsq_solve(lhs, rhs)
    if res.residual_norm > REGULATOR_RTOL * max(1.0, np.linalg.norm(rhs)):
        raise AssumptionError(
            "regulator equations are inconsistent "
            f"(residual {res.residual_norm:.2e}); solvability assumption violated"
        )
    X = unvec(res.solution[: n * q], (n, q))
    U = unvec(res.solution[n * q :], (m, q))
    return RegulatorSolution(X, U)


def initial_gain_for_stable_plant(plant, weights):
    """Deterministic nonzero starting gain when A itself is already Hurwitz.

    Solves A'P + PA + (C'QC + I) = 0 and returns K0 = R^{-1} B'P; that P is
    then a Lyapunov function for A - B K0, so the loop stays stable.  This
    cannot stabilize an unstable plant (pole placement is out of scope);
    unknown-plant runs must bring their own verified K0 in the config.
    """
    if not is_hurwitz(plant.A):
        raise StabilityError("A is not Hurwitz; supply a stabilizing K0 explicitly")
    P = lyapunov_solve(plant.A, weights.state_cost(plant.C) + np.eye(plant.n))
    K0 = np.linalg.solve(weights.R, plant.B.T @ P)
    if not is_hurwitz(plant.A - plant.B @ K0):
        raise StabilityError("derived gain failed the stability check")
    return K0


def synthesize_controller(K, reg):
    """Combine a feedback gain with a regulator solution: L = U + K X."""
    K = _mat(K, "K")
    if K.shape[1] != reg.X.shape[0] or reg.U.shape[0] != K.shape[0]:
        raise DimensionError("gain/regulator dimensions disagree")
    return Controller(K, reg.U + K @ reg.X)


def _psd_sqrt(Q):
    w, V = np.linalg.eigh(Q)
    return V @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ V.T


@dataclass
class AssumptionDiagnostics:
    """Hautus-test and solvability diagnostics; informative, never raising."""

    stabilizable: bool
    stabilizability: list
    observable: bool
    observability: list
    regulator_solvable: bool
    regulator: dict

    @property
    def all_pass(self):
        return self.stabilizable and self.observable and self.regulator_solvable


def check_assumptions(plant, exo, weights):
    """Diagnose stabilizability, observability and regulator solvability.

    (a) Hautus test rank([A - lam I, B]) = n on eigenvalues with
    nonnegative real part; (b) Hautus observability of (A, sqrt(Q) C) on all
    eigenvalues; (c) consistency of the stacked regulator system.
    """
    A, B, C = plant.A, plant.B, plant.C
    n = plant.n
    eigs = np.linalg.eigvals(A)

    stab_rows = []
    stabilizable = True
    for lam in eigs:
        if lam.real < -HURWITZ_MARGIN:
            continue
        r = numerical_rank(np.hstack([A - lam * np.eye(n), B]))
        ok = r == n
        stabilizable &= ok
        stab_rows.append({"eig": [lam.real, lam.imag], "rank": r, "required": n, "pass": ok})

    Cq = _psd_sqrt(weights.Q) @ C
    obs_rows = []
    observable = True
    for lam in eigs:
        r = numerical_rank(np.vstack([A - lam * np.eye(n), Cq]))
        ok = r == n
        observable &= ok
        obs_rows.append({"eig": [lam.real, lam.imag], "rank": r, "required": n, "pass": ok})

    try:
        solve_regulator(plant, exo)
        reg_ok = True
        reg_detail = {"consistent": True}
    except AssumptionError as exc:
        reg_ok = False
        reg_detail = {"consistent": False, "message": str(exc)}

    return AssumptionDiagnostics(
        stabilizable, stab_rows, observable, obs_rows, reg_ok, reg_detail
    )
