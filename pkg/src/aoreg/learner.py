"""Data-driven policy iteration and regulator-equation recovery.

This module only ever consumes :class:`aoreg.excitation.DataMatrices`, the
known output matrix C, the cost weights and an initial stabilizing gain.  The
true A, B and D never enter.

Two routes are implemented over the same integral identity

    delta_i . vecs(P) = Gxx_i . vec(A'P + PA) + 2 Gxu_i . vec(B'P)
                        + 2 Gxv_i . vec((D - S(X_i))' P)

evaluated per sample interval:

* the original algorithm solves, per policy-iteration step, one linear
  system in all n(n+1)/2 + (m+q)n unknowns (value matrix, next gain and the
  coupling term vec(D'P));
* the refined algorithm performs that full solve once (j = 0), extracts the
  disturbance map D from it, then iterates on a reduced system with only
  n(n+1)/2 + mn unknowns, and recovers each Sylvester image S(X_i) from a
  separate qn-unknown solve.
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import DataQualityError, DimensionError, RankConditionError
from .oracle import Controller, PolicyIterate, RegulatorSolution
from .tensorops import (
    duplication_matrix,
    kron,
    lsq_solve,
    sym_from_vecs,
    sym_vec_len,
    unvec,
    vec,
    vecs,
)


@dataclass
class LearnerConfig:
    """Stopping rule and numerical guards for the data-driven iteration."""

    eps: float = 1e-6
    max_iter: int = 50
    rank_tol: float = 1e-8
    tol_mono: float | None = None

    def __post_init__(self):
        if self.eps <= 0:
            raise DimensionError("learner.eps must be positive")
        if self.max_iter < 1:
            raise DimensionError("learner.max_iter must be >= 1")


@dataclass
class LearnedModelData:
    """Quantities identified from data: disturbance map and Sylvester images."""

    D_hat: np.ndarray
    S_hat: list  # images of X_1 .. X_{h+1}, i.e. S_hat[i-1] pairs with X_i
    M_D: np.ndarray


@dataclass
class RegulatorAssembly:
    """The stacked linear system recovering (alpha, X, U) from learned data."""

    A_mat: np.ndarray
    b_vec: np.ndarray
    chi: np.ndarray
    residual_norm: float
    numerical_rank: int
    residual_ok: bool


@dataclass
class LearnResult:
    """Output of one data-driven learning run."""

    algorithm: str
    history: list  # PolicyIterate, j = 0 .. j_star
    j_star: int
    P: np.ndarray  # value matrix at convergence
    K: np.ndarray  # gain computed from it (the controller gain)
    model: LearnedModelData
    solve_cols: list  # unknown count of each policy-iteration solve
    sylvester_cols: list  # unknown counts of the per-basis-image solves
    iter_seconds: list


def assemble_regression(data, i, K, C, weights):
    """LHS/RHS of the integral policy-evaluation identity for basis index i.

    The unknown layout is [vecs(P); vec(K_next); vec((D - S(X_i))'P)] with
    n(n+1)/2 + mn + qn columns.  K is the gain whose value is being
    evaluated.
    """
    n, m, q = data.n, data.m, data.q
    R = weights.R
    if K.shape != (m, n):
        raise DimensionError(f"gain must be {m}x{n}")
    gxx = data.gamma_xx[i]
    gxu = data.gamma_xu[i]
    gxv = data.gamma_xv[i]
    lhs = np.hstack(
        [
            data.delta[i],
            -2.0 * gxx @ kron(np.eye(n), K.T @ R) - 2.0 * gxu @ kron(np.eye(n), R),
            -2.0 * gxv,
        ]
    )
    rhs = -gxx @ vec(weights.state_cost(C) + K.T @ R @ K)
    assert lhs.shape[1] == sym_vec_len(n) + (m + q) * n
    return lhs, rhs


def split_blocks(lhs, n, m, q):
    """Split a full regression LHS into its three unknown blocks."""
    nv = sym_vec_len(n)
    return lhs[:, :nv], lhs[:, nv : nv + m * n], lhs[:, nv + m * n :]


def _solve_full_rank(lhs, rhs, rank_tol, context):
    res = lsq_solve(lhs, rhs, rank_tol)
    if res.numerical_rank != lhs.shape[1]:
        raise RankConditionError(
            f"{context}: regression matrix rank {res.numerical_rank} "
            f"< {lhs.shape[1]} unknowns (insufficient excitation)"
        )
    return res


def _assert_pd(P, context):
    try:
        np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise DataQualityError(
            f"{context}: learned value matrix is not positive definite; "
            "data too noisy"
        ) from None
    return P


def _unpack_full(theta, n, m, q):
    nv = sym_vec_len(n)
    P = sym_from_vecs(theta[:nv], n)
    K_next = unvec(theta[nv : nv + m * n], (m, n))
    W = unvec(theta[nv + m * n :], (q, n))
    return P, K_next, W


def _converged(P, P_prev, eps):
    return np.linalg.norm(P - P_prev) < eps * (1.0 + np.linalg.norm(P))


def learn_original(data, C, weights, K0, cfg=None):
    """Full-size policy iteration, then per-basis-image full solves.

    Every iteration solves the complete identity at i = 0 for
    (vecs(P_j), vec(K_{j+1}), vec(D'P_j)) and re-extracts D from the third
    block.  After convergence at j*, the same full-size system is solved at
    every i = 1..h+1 to recover the Sylvester images.
    """
    cfg = cfg or LearnerConfig()
    n, m, q = data.n, data.m, data.q
    K = np.atleast_2d(np.asarray(K0, dtype=float))
    history = []
    solve_cols = []
    iter_seconds = []
    P_prev = None
    D_hat = None
    j_star = None
    P = K_next = None
    for j in range(cfg.max_iter):
        tic = time.perf_counter()
        lhs, rhs = assemble_regression(data, 0, K, C, weights)
        res = _solve_full_rank(lhs, rhs, cfg.rank_tol, f"original[j={j}]")
        P, K_next, W = _unpack_full(res.solution, n, m, q)
        _assert_pd(P, f"original[j={j}]")
        D_hat = np.linalg.solve(P, W.T)  # W = D'P  ->  D = (W P^-1)'
        iter_seconds.append(time.perf_counter() - tic)
        history.append(PolicyIterate(j, P, K))
        solve_cols.append(lhs.shape[1])
        if P_prev is not None and _converged(P, P_prev, cfg.eps):
            j_star = j
            break
        P_prev = P
        K = K_next
    if j_star is None:
        raise DataQualityError(
            f"original algorithm did not converge in {cfg.max_iter} iterations"
        )

    K_star_gain = history[-1].K  # gain inside the regression at j*
    S_hat = []
    sylvester_cols = []
    for i in range(1, data.h + 2):
        lhs, rhs = assemble_regression(data, i, K_star_gain, C, weights)
        res = _solve_full_rank(lhs, rhs, cfg.rank_tol, f"original[i={i}]")
        _, _, W_i = _unpack_full(res.solution, n, m, q)
        S_hat.append(D_hat - np.linalg.solve(P, W_i.T))
        sylvester_cols.append(lhs.shape[1])

    model = LearnedModelData(D_hat, S_hat, kron(np.eye(n), D_hat.T) @ duplication_matrix(n))
    return LearnResult(
        "original", history, j_star, P, K_next, model, solve_cols,
        sylvester_cols, iter_seconds,
    )


def refined_identify(data, C, weights, K0, cfg=None):
    """Step one of the decoupled route: single full solve at i = 0, j = 0.

    Returns (P_0, K_1, D_hat, cols); D_hat is fixed here once and for all.
    """
    cfg = cfg or LearnerConfig()
    K0 = np.atleast_2d(np.asarray(K0, dtype=float))
    lhs, rhs = assemble_regression(data, 0, K0, C, weights)
    res = _solve_full_rank(lhs, rhs, cfg.rank_tol, "refined step 1")
    P0, K1, W = _unpack_full(res.solution, data.n, data.m, data.q)
    _assert_pd(P0, "refined step 1")
    D_hat = np.linalg.solve(P0, W.T)
    return P0, K1, D_hat, lhs.shape[1]


def refined_sylvester(data, C, weights, K0, P0, K1, D_hat, cfg=None):
    """Step two: recover each Sylvester image from a qn-unknown solve.

    With (P_0, K_1) known, the exosystem block of the identity at (i, j=0)
    isolates vec((D - S(X_i))'P_0):

        Gxv_i . w_i = (lhs_1 . vecs(P_0) + lhs_2 . vec(K_1) - rhs) / 2

    which needs only rank(Gxv_i) = qn.  Failures name the basis direction
    that lacks excitation.
    """
    cfg = cfg or LearnerConfig()
    n, m, q = data.n, data.m, data.q
    K0 = np.atleast_2d(np.asarray(K0, dtype=float))
    p0 = vecs(P0)
    k1 = vec(K1)
    S_hat = []
    cols = []
    for i in range(1, data.h + 2):
        lhs, rhs = assemble_regression(data, i, K0, C, weights)
        l1, l2, _ = split_blocks(lhs, n, m, q)
        target = 0.5 * (l1 @ p0 + l2 @ k1 - rhs)
        gxv = data.gamma_xv[i]
        assert gxv.shape[1] == q * n
        res = lsq_solve(gxv, target, cfg.rank_tol)
        if res.numerical_rank != q * n:
            raise RankConditionError(
                f"refined step 2 [i={i}]: rank(Gxv) = {res.numerical_rank} < {q * n}; "
                "exosystem coupling for this basis direction is unexcited"
            )
        W_i = unvec(res.solution, (q, n))
        S_hat.append(D_hat - np.linalg.solve(P0, W_i.T))
        cols.append(q * n)
    return S_hat, cols


def refined_iterate(data, C, weights, P0, K1, D_hat, cfg=None):
    """Step three: policy iteration on the reduced identity.

    vec(D'P_j) = M_D vecs(P_j) with M_D = (I (x) D_hat') M folds the coupling
    block into the value block, leaving n(n+1)/2 + mn unknowns per solve.
    Returns (history tail for j >= 1, final gain, M_D, cols, seconds).
    """
    cfg = cfg or LearnerConfig()
    n, m, q = data.n, data.m, data.q
    nv = sym_vec_len(n)
    M_D = kron(np.eye(n), D_hat.T) @ duplication_matrix(n)
    history = []
    cols = []
    seconds = []
    K = K1
    P_prev = P0
    K_next = None
    for j in range(1, cfg.max_iter + 1):
        tic = time.perf_counter()
        lhs, rhs = assemble_regression(data, 0, K, C, weights)
        l1, l2, l3 = split_blocks(lhs, n, m, q)
        reduced = np.hstack([l1 + l3 @ M_D, l2])
        assert reduced.shape[1] == nv + m * n
        res = _solve_full_rank(reduced, rhs, cfg.rank_tol, f"refined step 3 [j={j}]")
        P = sym_from_vecs(res.solution[:nv], n)
        K_next = unvec(res.solution[nv:], (m, n))
        _assert_pd(P, f"refined step 3 [j={j}]")
        seconds.append(time.perf_counter() - tic)
        history.append(PolicyIterate(j, P, K))
        cols.append(reduced.shape[1])
        if _converged(P, P_prev, cfg.eps):
            return history, K_next, M_D, cols, seconds
        P_prev = P
        K = K_next
    raise DataQualityError(
        f"refined algorithm did not converge in {cfg.max_iter} iterations"
    )


def learn_refined(data, C, weights, K0, cfg=None):
    """Run the three decoupled steps and package the result like the original."""
    cfg = cfg or LearnerConfig()
    tic = time.perf_counter()
    P0, K1, D_hat, full_cols = refined_identify(data, C, weights, K0, cfg)
    t_step1 = time.perf_counter() - tic
    S_hat, step2_cols = refined_sylvester(data, C, weights, K0, P0, K1, D_hat, cfg)
    tail, K_final, M_D, step3_cols, step3_seconds = refined_iterate(
        data, C, weights, P0, K1, D_hat, cfg
    )
    K0 = np.atleast_2d(np.asarray(K0, dtype=float))
    history = [PolicyIterate(0, P0, K0)] + tail
    model = LearnedModelData(D_hat, S_hat, M_D)
    return LearnResult(
        "refined", history, history[-1].j, history[-1].P, K_final, model,
        [full_cols] + step3_cols, step2_cols, [t_step1] + step3_seconds,
    )


def assemble_regulator_lsq(basis, model, P, K, R, rank_tol=1e-8, residual_tol=1e-6):
    """Recover (alpha, X, U) from learned quantities only.

    Builds the stacked system whose unknowns are the kernel coordinates
    alpha_2..alpha_{h+1}, vec(X) and vec(U).  The input-map factor B is never
    needed because P^{-1} K' R equals B whenever K = R^{-1} B' P.
    """
    n, q = basis.X[1].shape
    m = K.shape[0]
    h = basis.h
    nq = n * q
    if len(model.S_hat) != h + 1:
        raise DimensionError("model does not carry one Sylvester image per basis slot")

    cols = [
        np.concatenate([vec(model.S_hat[i - 1]), vec(basis.X[i])])
        for i in range(2, h + 2)
    ]
    A1 = np.column_stack(cols) if cols else np.zeros((2 * nq, 0))
    PinvKR = np.linalg.solve(P, K.T @ R)  # equals B for an exact gain/value pair
    A2 = np.block(
        [
            [np.zeros((nq, nq)), -kron(np.eye(q), PinvKR)],
            [-np.eye(nq), np.zeros((nq, m * q))],
        ]
    )
    A_mat = np.hstack([A1, A2])
    b_vec = np.concatenate([vec(model.D_hat - model.S_hat[0]), -vec(basis.X[1])])
    assert A_mat.shape == (2 * nq, h + nq + m * q)

    res = lsq_solve(A_mat, b_vec, rank_tol)
    ok = res.residual_norm <= residual_tol * (1.0 + np.linalg.norm(b_vec))
    assembly = RegulatorAssembly(
        A_mat, b_vec, res.solution, res.residual_norm, res.numerical_rank, ok
    )
    alpha = res.solution[:h]
    X = unvec(res.solution[h : h + nq], (n, q))
    U = unvec(res.solution[h + nq :], (m, q))
    return assembly, RegulatorSolution(X, U, alpha)


def learned_controller(K, reg):
    """L = U + K X from learned quantities; mirror of the oracle synthesis."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape[1] != reg.X.shape[0] or reg.U.shape[0] != K.shape[0]:
        raise DimensionError("gain/regulator dimensions disagree")
    return Controller(K, reg.U + K @ reg.X)


def monotonicity_margin(history, P_star=None):
    """Smallest eigenvalue of P_j - P_{j+1} over the run (and vs a limit).

    Policy iteration is monotonically decreasing toward the Riccati solution,
    so both margins should only dip below zero by numerical noise.
    """
    step_margin = np.inf
    for a, b in zip(history[:-1], history[1:]):
        step_margin = min(step_margin, np.linalg.eigvalsh(a.P - b.P).min())
    limit_margin = np.inf
    if P_star is not None:
        for it in history:
            limit_margin = min(limit_margin, np.linalg.eigvalsh(it.P - P_star).min())
    return step_margin, limit_margin
