"""Vectorization operators, quadratic-form regressors, and least squares.

These are the small linear-algebra kernels every learning equation is
assembled from:

* ``vech``/``unvech`` -- half-vectorization of symmetric matrices using
  row-major upper-triangle ordering (1,1),(1,2),...,(1,n),(2,2),...,(n,n).
* ``vec``/``unvec`` -- column-stacking vectorization.
* ``delta_v``/``delta_vw`` -- regressor rows satisfying
  ``delta_v(v) @ vech(P) == v.T @ P @ v`` and
  ``delta_vw(v, w) @ vec(X) == v.T @ X @ w``.
* ``lstsq`` -- tall least-squares solve with an explicit numerical-rank
  gate and optional column equilibration.

All functions are pure and operate on plain numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import AsymmetricInputError, RankDeficiencyError

#: Default relative tolerance used to decide numerical rank from
#: singular values: rank = #{sigma_i > tol_rank * sigma_max}.
DEFAULT_TOL_RANK = 1e-9

#: Default relative symmetry tolerance for vech input checking.
DEFAULT_TOL_SYM = 1e-10


@dataclass(frozen=True)
class RegressorLayout:
    """Segment lengths of a stacked regressor row.

    A learning-equation row is the concatenation of a quadratic-in-eta
    segment, a bilinear eta/u segment, and a quadratic-in-u segment.
    """

    n_quad_eta: int
    n_bilinear: int
    n_quad_u: int

    @property
    def total(self) -> int:
        return self.n_quad_eta + self.n_bilinear + self.n_quad_u

    @classmethod
    def for_dims(cls, n_z: int, m: int) -> "RegressorLayout":
        return cls(n_z * (n_z + 1) // 2, n_z * m, m * (m + 1) // 2)


def vech(C, tol_sym=DEFAULT_TOL_SYM):
    """Half-vectorize a symmetric matrix.

    Returns the upper triangle in row-major order, length n(n+1)/2.
    Raises :class:`AsymmetricInputError` if ``C`` is not square or not
    symmetric within relative tolerance ``tol_sym``.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise AsymmetricInputError(f"vech expects a square matrix, got shape {C.shape}")
    scale = max(np.max(np.abs(C)), 1.0)
    if np.max(np.abs(C - C.T)) > tol_sym * scale:
        raise AsymmetricInputError("vech input is asymmetric beyond tolerance")
    return C[np.triu_indices(C.shape[0])]


def unvech(v, n):
    """Inverse of :func:`vech`: rebuild the symmetric n-by-n matrix."""
    v = np.asarray(v, dtype=float)
    if v.size != n * (n + 1) // 2:
        raise ValueError(f"unvech: expected length {n * (n + 1) // 2}, got {v.size}")
    M = np.zeros((n, n))
    M[np.triu_indices(n)] = v
    return M + M.T - np.diag(np.diag(M))


def vec(B):
    """Column-stacking vectorization: columns of ``B`` stacked top to bottom."""
    return np.asarray(B, dtype=float).flatten(order="F")


def unvec(v, m, n):
    """Inverse of :func:`vec` for an m-by-n matrix."""
    return np.asarray(v, dtype=float).reshape(m, n, order="F")


def delta_v(v):
    """Quadratic regressor row: ``vech(2 v v.T - diag(v)^2)``.

    Satisfies ``delta_v(v) @ vech(P) == v.T @ P @ v`` for symmetric P:
    diagonal slots carry v_i^2, off-diagonal slots carry 2 v_i v_j.
    """
    v = np.asarray(v, dtype=float)
    V = 2.0 * np.outer(v, v) - np.diag(v) ** 2
    return V[np.triu_indices(v.size)]


def delta_vw(v, w):
    """Bilinear regressor row: ``(w kron v).T``.

    Satisfies ``delta_vw(v, w) @ vec(X) == v.T @ X @ w``.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return np.kron(w, v)


def numerical_rank(Amat, tol_rank=DEFAULT_TOL_RANK):
    """Numerical rank: count of singular values above tol_rank * sigma_max."""
    s = np.linalg.svd(np.asarray(Amat), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol_rank * s[0]))


def lstsq(Amat, rhs, tol_rank=DEFAULT_TOL_RANK, check_rank=True, equilibrate=False):
    """Least-squares minimizer of ``||Amat @ theta - rhs||_2``.

    Solved via numpy's SVD-based routine (backward-stable orthogonal
    decomposition).  When ``check_rank`` is set and the numerical rank of
    ``Amat`` (at relative tolerance ``tol_rank``) is below its column
    count, a :class:`RankDeficiencyError` carrying the detected rank is
    raised instead of returning an ambiguous minimizer.

    ``equilibrate`` scales columns to unit 2-norm before the solve and
    unscales the result.  That leaves the exact-arithmetic minimizer of a
    full-column-rank problem unchanged while greatly improving accuracy
    on badly row/column-scaled regressor stacks.
    """
    Amat = np.atleast_2d(np.asarray(Amat, dtype=float))
    rhs = np.asarray(rhs, dtype=float)
    N, q = Amat.shape
    if N < q:
        raise RankDeficiencyError(
            f"lstsq: underdetermined system ({N} rows < {q} columns)",
            rank=min(N, q), ncols=q,
        )
    if check_rank:
        r = numerical_rank(Amat, tol_rank)
        if r < q:
            raise RankDeficiencyError(
                f"lstsq: numerical rank {r} < {q} columns at tol {tol_rank:g}",
                rank=r, ncols=q,
            )
    if equilibrate:
        col_norms = np.linalg.norm(Amat, axis=0)
        col_norms[col_norms == 0.0] = 1.0
        theta, *_ = np.linalg.lstsq(Amat / col_norms, rhs, rcond=None)
        return theta / col_norms
    theta, *_ = np.linalg.lstsq(Amat, rhs, rcond=None)
    return theta
