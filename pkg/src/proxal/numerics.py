"""Dense linear-algebra helpers: Lyapunov solves, nullspaces, eigenvalues."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NotHurwitz, NotSymmetric

__all__ = [
    "is_hurwitz",
    "solve_lyapunov",
    "nullspace_basis",
    "ones_complement",
    "symmetric_eigs",
    "read_matrix",
    "write_matrix",
]

# Kronecker solves cost O(n^6); above this size use Bartels-Stewart.
KRON_MAX_N = 12


def is_hurwitz(A) -> bool:
    return bool(np.all(np.linalg.eigvals(A).real < 0))


def solve_lyapunov(A, Q, method="auto", check=True):
    """Solve ``A X + X A^T + Q = 0`` for symmetric ``X``.

    ``method`` is ``"kron"`` (vectorized linear system), ``"schur"``
    (Bartels-Stewart) or ``"auto"`` (Kronecker for small ``n``).
    Raises :class:`NotHurwitz` when ``A`` has an eigenvalue with Re >= 0.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = A.shape[0]
    if check and not is_hurwitz(A):
        raise NotHurwitz("A is not Hurwitz")
    if method == "auto":
        method = "kron" if n <= KRON_MAX_N else "schur"
    if method == "kron":
        I = np.eye(n)
        K = np.kron(I, A) + np.kron(A, I)
        # row-major vec: vec(A X) = (A kron I) vec(X), vec(X A^T) = (I kron A) vec(X)
        X = np.linalg.solve(K, -Q.reshape(-1)).reshape(n, n)
    elif method == "schur":
        X = scipy.linalg.solve_continuous_lyapunov(A, -Q)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (X + X.T) / 2.0


def nullspace_basis(M, rtol=None):
    """Orthonormal basis (as columns) of the nullspace of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rows, cols = M.shape
    if cols == 0:
        return np.zeros((0, 0))
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    if rtol is None:
        rtol = max(rows, cols) * np.finfo(float).eps
    tol = rtol * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return vt[rank:].T.copy()


def ones_complement(N: int, method="helmert"):
    """``N x (N-1)`` matrix ``V`` with ``V^T 1 = 0`` and ``V^T V = I``.

    ``"helmert"`` uses the Helmert contrasts; ``"svd"`` takes the nullspace
    of ``1^T``. Both are valid; the H2 objective does not depend on the choice.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if method == "helmert":
        V = np.zeros((N, N - 1))
        for k in range(1, N):
            V[:k, k - 1] = 1.0
            V[k, k - 1] = -float(k)
            V[:, k - 1] /= np.sqrt(k * (k + 1.0))
        return V
    if method == "svd":
        return nullspace_basis(np.ones((1, N)))
    raise ValueError(f"unknown method {method!r}")


def symmetric_eigs(S, vectors=False, tol=1e-10):
    """Ascending eigenvalues of a symmetric matrix (and eigenvectors if asked)."""
    S = np.asarray(S, dtype=float)
    if S.shape[0] != S.shape[1] or np.max(np.abs(S - S.T), initial=0.0) > tol * max(
        1.0, np.max(np.abs(S), initial=0.0)
    ):
        raise NotSymmetric("matrix is not symmetric")
    Ssym = (S + S.T) / 2.0
    if vectors:
        return np.linalg.eigh(Ssym)
    return np.linalg.eigvalsh(Ssym)


def read_matrix(path):
    """Read the text format: ``rows cols`` then row-major entries."""
    with open(path) as fh:
        tokens = fh.read().split()
    rows, cols = int(tokens[0]), int(tokens[1])
    data = np.array([float(t) for t in tokens[2:]])
    if data.size != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, found {data.size}")
    return data.reshape(rows, cols)


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
