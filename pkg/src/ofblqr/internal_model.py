"""Dynamic output-feedback internal model and its parameterization.

The controller state η is the stacked state of m + p companion-form
filters driven by the plant inputs and outputs, plus an autonomous
observer-error channel η_ε.  Along any joint plant/internal-model run
the plant state satisfies x(k) = M η(k) exactly, where M is built here
from the adjugate-coefficient recursion.  The learner never consumes M;
it exists as a model-based oracle and for ground-truth gain composition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import BadInitializerError, InsufficientExcitationError, InstabilityError
from .lti import LtiSystem
from .matops import DEFAULT_TOL_RANK, numerical_rank


@dataclass(frozen=True)
class CharPoly:
    """Monic characteristic polynomial z^n + a_{n-1} z^{n-1} + ... + a_0.

    ``coefficients`` stores (a_0, ..., a_{n-1}).  All roots must lie
    strictly inside the unit circle: the polynomial doubles as the
    observer-error characteristic polynomial, so its stability is what
    makes the η_ε channel (and the reconstruction error) decay.
    """

    coefficients: tuple
    roots: tuple | None = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        r = np.roots(self.monic) if self.roots is None else np.asarray(self.roots)
        if np.max(np.abs(r)) >= 1.0:
            raise InstabilityError("CharPoly has a root on or outside the unit circle")
        if self.roots is not None:
            rebuilt = np.poly(np.asarray(self.roots))[:0:-1].real
            if np.max(np.abs(rebuilt - np.asarray(coeffs))) > 1e-10:
                raise ValueError("CharPoly roots do not reproduce coefficients")

    @classmethod
    def from_roots(cls, roots) -> "CharPoly":
        roots = np.asarray(roots)
        coeffs = np.poly(roots)[:0:-1].real  # a_0 first
        return cls(tuple(coeffs), tuple(roots.tolist()))

    @classmethod
    def of_matrix(cls, F) -> "CharPoly":
        return cls.from_roots(np.linalg.eigvals(np.atleast_2d(F)))

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    @property
    def monic(self) -> np.ndarray:
        """Coefficients in numpy convention: [1, a_{n-1}, ..., a_0]."""
        return np.concatenate([[1.0], np.asarray(self.coefficients)[::-1]])


def companion_from_poly(cp: CharPoly) -> np.ndarray:
    """Bottom-row companion matrix of a monic polynomial.

    Superdiagonal of ones, last row (-a_0, -a_1, ..., -a_{n-1}).
    """
    n = cp.degree
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -np.asarray(cp.coefficients)
    return A


def adjugate_coefficients(F) -> list:
    """Matrix coefficients of adj(zI - F) = sum_i Upsilon_i z^{n-i}.

    Computed by the recursion Upsilon_1 = I,
    Upsilon_{i+1} = Upsilon_i F + c_i I, where
    det(zI - F) = z^n + c_1 z^{n-1} + ... + c_n.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n = F.shape[0]
    c = np.poly(F)
    U = [np.eye(n)]
    for i in range(1, n):
        U.append(U[-1] @ F + c[i] * np.eye(n))
    return U


def _numerator_block(F, v) -> np.ndarray:
    """Columns [Upsilon_n v, ..., Upsilon_1 v] for the adjugate of F."""
    U = adjugate_coefficients(F)
    n = F.shape[0]
    v = np.asarray(v, dtype=float).reshape(n)
    return np.column_stack([U[n - 1 - j] @ v for j in range(n)])


def _default_eta_eps0(n: int, amplitude: float = 1.0) -> np.ndarray:
    return amplitude * np.array([(-1.0) ** i for i in range(n)])


@dataclass
class InternalModel:
    """Internal-model pair (G1, G2) with its state η.

    G1 = blockdiag(A_comp x (m+p), A_eps) and G2 routes u_i / y_j into
    the last slot of the corresponding companion block; the η_ε channel
    is autonomous.  η is laid out col(η_u^1..η_u^m, η_y^1..η_y^p, η_ε).
    """

    charpoly: CharPoly
    m: int
    p: int
    A_eps: np.ndarray = None
    eta_eps0: np.ndarray = None
    eta: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.charpoly.degree
        self.A_comp = companion_from_poly(self.charpoly)
        if self.A_eps is None:
            self.A_eps = self.A_comp.copy()
        else:
            self.A_eps = np.atleast_2d(np.asarray(self.A_eps, dtype=float))
            got = np.poly(self.A_eps)
            want = self.charpoly.monic
            if np.max(np.abs(got - want)) > 1e-8 * max(np.max(np.abs(want)), 1.0):
                raise ValueError("A_eps characteristic polynomial does not match CharPoly")
        if self.eta_eps0 is None:
            self.eta_eps0 = _default_eta_eps0(n)
        else:
            self.eta_eps0 = np.asarray(self.eta_eps0, dtype=float).reshape(n)
        if np.abs(np.linalg.det(_numerator_block(self.A_eps, self.eta_eps0))) < 1e-12:
            raise BadInitializerError(
                "eta_eps0 makes the eta_eps numerator block singular"
            )
        if self.eta is None:
            self.eta = np.zeros(self.n_z)
            self.eta[-n:] = self.eta_eps0
        else:
            self.eta = np.asarray(self.eta, dtype=float).reshape(self.n_z)

    @property
    def n(self) -> int:
        return self.charpoly.degree

    @property
    def n_z(self) -> int:
        return self.n * (self.m + self.p + 1)

    @property
    def b(self) -> np.ndarray:
        e = np.zeros((self.n, 1))
        e[-1, 0] = 1.0
        return e

    @property
    def G1(self) -> np.ndarray:
        n, nz = self.n, self.n_z
        G = np.zeros((nz, nz))
        for i in range(self.m + self.p):
            G[i * n:(i + 1) * n, i * n:(i + 1) * n] = self.A_comp
        G[-n:, -n:] = self.A_eps
        return G

    @property
    def G2(self) -> np.ndarray:
        """Input map for col(u, y): b into the matching companion block."""
        n = self.n
        G = np.zeros((self.n_z, self.m + self.p))
        for i in range(self.m + self.p):
            G[i * n:(i + 1) * n, i:i + 1] = self.b
        return G

    def reset(self, eta0=None):
        """Reset η (defaults to zeros with the η_ε channel at eta_eps0)."""
        if eta0 is None:
            self.eta = np.zeros(self.n_z)
            self.eta[-self.n:] = self.eta_eps0
        else:
            self.eta = np.asarray(eta0, dtype=float).reshape(self.n_z)
        return self.eta


def step_internal(model: InternalModel, u, y) -> np.ndarray:
    """Advance η by one step: η⁺ = G1 η + G2 col(u, y).

    Mutates ``model.eta`` and returns the new value.
    """
    u = np.asarray(u, dtype=float).reshape(model.m)
    y = np.asarray(y, dtype=float).reshape(model.p)
    model.eta = model.G1 @ model.eta + model.G2 @ np.concatenate([u, y])
    return model.eta


@dataclass(frozen=True)
class ParameterizationMap:
    """The matrix M with x(k) = M η(k), partitioned by η channel."""

    M: np.ndarray
    M_u: tuple  # m blocks, each n x n
    M_y: tuple  # p blocks, each n x n
    M_eps: np.ndarray  # n x n observer-error block
    rank: int


def build_parameterization(sys: LtiSystem, L, model: InternalModel,
                           eps0) -> ParameterizationMap:
    """Model-based construction of M from the adjugate recursion.

    ``eps0`` is the initial observer error; with x̂(0) = 0 it equals
    x(0).  The per-channel blocks are the numerator matrices of the
    transfer functions from u_i, y_j, and the autonomous error channel
    to the reconstructed state, all sharing denominator det(zI - A_L).
    """
    L = np.asarray(L, dtype=float).reshape(sys.n, sys.p)
    eps0 = np.asarray(eps0, dtype=float).reshape(sys.n)
    AL = sys.A - L @ sys.C
    got = np.poly(AL)
    want = model.charpoly.monic
    if np.max(np.abs(got - want)) > 1e-6 * max(np.max(np.abs(want)), 1.0):
        raise ValueError("A - LC characteristic polynomial does not match the model's")
    M_u = tuple(_numerator_block(AL, sys.B[:, i]) for i in range(sys.m))
    M_y = tuple(_numerator_block(AL, L[:, j]) for j in range(sys.p))
    M_ex = _numerator_block(AL, eps0)
    M_ez = _numerator_block(model.A_eps, model.eta_eps0)
    if np.abs(np.linalg.det(M_ez)) < 1e-12:
        raise BadInitializerError("eta_eps0 makes M_eta_eps singular")
    M_eps = M_ex @ np.linalg.inv(M_ez)
    M = np.hstack(list(M_u) + list(M_y) + [M_eps])
    return ParameterizationMap(M, M_u, M_y, M_eps, numerical_rank(M))


def identify_parameterization(xs, etas) -> ParameterizationMap:
    """Least-squares estimate of M from samples of x(k) and η(k).

    Test oracle for the exactness property; requires the η sample matrix
    to have full row rank (persistently exciting data).
    """
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    E = np.atleast_2d(np.asarray(etas, dtype=float))
    if X.shape[0] != E.shape[0]:
        raise ValueError("sample counts differ")
    n_z = E.shape[1]
    if X.shape[0] < n_z or numerical_rank(E) < n_z:
        raise InsufficientExcitationError(
            f"eta samples have rank {numerical_rank(E)} < {n_z}"
        )
    Mhat, *_ = np.linalg.lstsq(E, X, rcond=None)
    Mhat = Mhat.T
    return ParameterizationMap(Mhat, (), (), None, numerical_rank(Mhat))


def check_rank_M(pmap: ParameterizationMap, tol_rank=DEFAULT_TOL_RANK):
    """Return (rank(M) == n, numerical rank)."""
    n = pmap.M.shape[0]
    r = numerical_rank(pmap.M, tol_rank)
    return r == n, r
