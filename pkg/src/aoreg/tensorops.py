"""Vectorization algebra and dense linear-algebra primitives.

Conventions used everywhere in this package: ``vecv``/``vecs`` enumerate the
upper triangle row-major; ``vec`` and all matrix reshapes are column-major.
Mixing conventions is the classic source of silent transposition bugs in
Kronecker-structured systems, so there is exactly one of each here.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

SYMMETRY_RTOL = 1e-8
RANK_RTOL = 1e-8


@dataclass
class LsqResult:
    """Minimum-norm least-squares solution with rank bookkeeping."""

    solution: np.ndarray
    residual_norm: float
    numerical_rank: int
    smallest_kept_singular_value: float


def sym_vec_len(n):
    """Length of the half-vectorization of an n x n symmetric matrix."""
    return n * (n + 1) // 2


def vecv(b, n=None):
    """Quadratic monomials of a vector, upper triangle row-major.

    vecv(b) = [b1^2, b1*b2, ..., b1*bn, b2^2, ..., b_{n-1}*bn, bn^2].
    """
    b = np.asarray(b, dtype=float).ravel()
    if b.size < 1:
        raise DimensionError("vecv needs a vector of length >= 1")
    if n is not None and b.size != n:
        raise DimensionError(f"vecv expected length {n}, got {b.size}")
    iu, ju = np.triu_indices(b.size)
    return b[iu] * b[ju]


def vecv_rows(X):
    """Row-wise vecv of a (N, n) signal array, shape (N, n(n+1)/2)."""
    X = np.asarray(X, dtype=float)
    iu, ju = np.triu_indices(X.shape[1])
    return X[:, iu] * X[:, ju]


def vecs(P, rtol=SYMMETRY_RTOL):
    """Half-vectorization with doubled off-diagonal entries.

    vecs(P) = [p11, 2*p12, ..., 2*p1n, p22, 2*p23, ..., pnn].  The input is
    symmetrized as (P + P.T)/2 after the (relative) asymmetry check, so that
    downstream reassembly is robust to round-off.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[0]
    if P.shape != (n, n):
        raise DimensionError("vecs needs a square matrix")
    scale = np.linalg.norm(P)
    asym = np.linalg.norm(P - P.T)
    if scale > 0 and asym / scale > rtol:
        raise DimensionError(
            f"matrix is asymmetric beyond tolerance ({asym / scale:.2e} > {rtol:.2e})"
        )
    P = 0.5 * (P + P.T)
    iu, ju = np.triu_indices(n)
    weights = np.where(iu == ju, 1.0, 2.0)
    return weights * P[iu, ju]


def sym_from_vecs(svec, n=None):
    """Rebuild the symmetric matrix whose vecs image is ``svec``."""
    svec = np.asarray(svec, dtype=float).ravel()
    if n is None:
        n = int(round((np.sqrt(8 * svec.size + 1) - 1) / 2))
    if svec.size != sym_vec_len(n):
        raise DimensionError(f"expected length {sym_vec_len(n)} for n={n}, got {svec.size}")
    iu, ju = np.triu_indices(n)
    weights = np.where(iu == ju, 1.0, 0.5)
    P = np.zeros((n, n))
    P[iu, ju] = weights * svec
    P[ju, iu] = P[iu, ju]
    return P


def vec(A):
    """Column-stacking vectorization of a matrix."""
    return np.asarray(A, dtype=float).reshape(-1, order="F")


def unvec(a, shape):
    """Inverse of ``vec`` for a target (rows, cols) shape."""
    a = np.asarray(a, dtype=float)
    if a.size != shape[0] * shape[1]:
        raise DimensionError(f"cannot unvec length {a.size} into shape {shape}")
    return a.reshape(shape, order="F")


def quad_form_identity_check(P, v):
    """Return (v'Pv, vecs(P).vecv(v)); the two must agree to round-off."""
    v = np.asarray(v, dtype=float).ravel()
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] != v.size:
        raise DimensionError("P and v dimensions disagree")
    direct = float(v @ P @ v)
    via_vecs = float(vecs(P) @ vecv(v))
    return direct, via_vecs


def duplication_matrix(n):
    """Constant M with M @ vecs(P) = vec(P) for every symmetric P.

    Entries are 1 on diagonal positions, 1/2 on the two copies of each
    off-diagonal entry, 0 elsewhere.
    """
    if n < 1:
        raise DimensionError("duplication_matrix needs n >= 1")
    M = np.zeros((n * n, sym_vec_len(n)))
    col = 0
    for i in range(n):
        for j in range(i, n):
            if i == j:
                M[i * n + i, col] = 1.0
            else:
                M[j * n + i, col] = 0.5
                M[i * n + j, col] = 0.5
            col += 1
    return M


def kron(A, B):
    """Kronecker product (thin wrapper, kept for a single call convention)."""
    return np.kron(np.atleast_2d(np.asarray(A)), np.atleast_2d(np.asarray(B)))


def lsq_solve(A, b, rank_tol=RANK_RTOL):
    """Minimum-norm least squares via SVD with relative rank truncation.

    Singular values below ``rank_tol * sigma_max`` are dropped; the returned
    rank is the number kept.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.size == 0:
        raise DimensionError("lsq_solve on an empty matrix")
    if A.shape[0] != b.size:
        raise DimensionError(f"A has {A.shape[0]} rows but b has length {b.size}")
    U, sing, Vt = np.linalg.svd(A, full_matrices=False)
    if sing.size == 0 or sing[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(sing >= rank_tol * sing[0]))
    if rank == 0:
        x = np.zeros(A.shape[1])
        smallest = 0.0
    else:
        coeff = (U[:, :rank].T @ b) / sing[:rank]
        x = Vt[:rank].T @ coeff
        smallest = float(sing[rank - 1])
    residual = float(np.linalg.norm(A @ x - b))
    return LsqResult(x, residual, rank, smallest)


def numerical_rank(A, rank_tol=RANK_RTOL):
    """Count of singular values >= rank_tol * sigma_max (0 for a zero matrix)."""
    A = np.atleast_2d(np.asarray(A))
    if A.size == 0:
        return 0
    sing = np.linalg.svd(A, compute_uv=False)
    if sing.size == 0 or sing[0] == 0.0:
        return 0
    return int(np.count_nonzero(sing >= rank_tol * sing[0]))
