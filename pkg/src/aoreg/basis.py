"""Basis matrices parametrizing all solutions of C X + F = 0.

The general solution is X = X_1 + sum_i alpha_i X_i where X_1 is a particular
solution and the X_i (stored at slots 2 .. h+1, h = (n-p)q) vectorize to a
basis of ker(I_q (x) C).  Slot 0 always holds the zero matrix, whose error
state x - X_0 v is the raw plant state.

Indexing note: the kernel construction naturally numbers its h matrices
1 .. h, while the solution representation consumes them as X_2 .. X_{h+1}
after the particular solution.  This module stores them at the shifted slots,
which is the indexing every downstream consumer uses.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AssumptionError, DimensionError
from .tensorops import RANK_RTOL, numerical_rank

KERNEL_RESIDUAL_TOL = 1e-12
PARTICULAR_RESIDUAL_TOL = 1e-10


@dataclass
class BasisSet:
    """Matrices X_0 .. X_{h+1} (each n x q) and the kernel vectors of C."""

    X: list
    null_vectors: np.ndarray  # shape (n, n-p), orthonormal columns
    h: int

    def __len__(self):
        return len(self.X)

    def homogeneous(self):
        """The kernel-slot matrices X_2 .. X_{h+1}."""
        return self.X[2:]


@dataclass
class SylvesterImages:
    """Oracle-side images S(X_i) = X_i E - A X_i for i = 1 .. h+1."""

    S: list


def null_basis(C, rank_tol=RANK_RTOL):
    """Orthonormal basis of ker(C) for a full-row-rank C, as (n, n-p) columns.

    Signs are normalized (largest-magnitude entry positive) so repeated runs
    produce identical bases.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    p, n = C.shape
    if numerical_rank(C, rank_tol) != p:
        raise DimensionError("C is rank deficient; full row rank required")
    _, _, Vt = np.linalg.svd(C)
    Y = Vt[p:].T.copy()
    for k in range(Y.shape[1]):
        col = Y[:, k]
        lead = np.nonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))[0]
        if lead.size and col[lead[0]] < 0:
            Y[:, k] = -col
    return Y


def build_basis(C, F, q, rank_tol=RANK_RTOL):
    """Construct the full basis set for C X + F = 0 with exosystem width q.

    X_1 is the minimum-norm solution of C X = -F; the kernel matrices place
    each null vector y_i in column k, slot 2 + (n-p)*k + (i-1).
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    p, n = C.shape
    if F.shape != (p, q):
        raise DimensionError(f"F must be {p}x{q}")
    Y = null_basis(C, rank_tol)
    h = (n - p) * q

    X1 = -np.linalg.pinv(C) @ F
    if np.linalg.norm(C @ X1 + F) > PARTICULAR_RESIDUAL_TOL * max(1.0, np.linalg.norm(F)):
        raise AssumptionError("C X = -F has no solution; solvability assumption violated")

    X = [np.zeros((n, q)), X1]
    X.extend(np.zeros((n, q)) for _ in range(h))
    for k in range(q):
        for i in range(n - p):
            slot = 2 + (n - p) * k + i
            Xi = np.zeros((n, q))
            Xi[:, k] = Y[:, i]
            X[slot] = Xi
    return BasisSet(X, Y, h)


def sylvester_map(A, E, X):
    """Evaluate S(X) = X E - A X (model-based, used for oracle checks)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    E = np.atleast_2d(np.asarray(E, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape != (A.shape[0], E.shape[0]):
        raise DimensionError("X must be n x q for the given A and E")
    return X @ E - A @ X


def sylvester_images(A, E, basis):
    """S(X_i) for i = 1 .. h+1 in basis order."""
    return SylvesterImages([sylvester_map(A, E, Xi) for Xi in basis.X[1:]])
