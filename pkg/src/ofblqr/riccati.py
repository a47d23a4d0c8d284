"""Model-based ground truth: Riccati and Lyapunov solvers.

Value iteration and Hewer policy iteration for the discrete-time ARE,
a Kronecker-vectorization discrete Lyapunov solver, and the closed-form
state-feedback vs. observer-feedback value comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InadmissiblePolicyError, InstabilityError, NonConvergenceError
from .lti import LtiSystem

DEFAULT_MAX_ITERS = 10**5


@dataclass(frozen=True)
class AreSolution:
    """ARE solution bundle: P, the induced gain K, and diagnostics."""

    P: np.ndarray
    K: np.ndarray
    iterations: int
    residual: float  # spectral norm of the ARE residual


def _are_residual(sys: LtiSystem, P) -> float:
    A, B, R = sys.A, sys.B, sys.R
    res = A.T @ P @ A + sys.Qx - P \
        - A.T @ P @ B @ np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    return float(np.linalg.norm(res, 2))


def _gain(sys: LtiSystem, P) -> np.ndarray:
    return np.linalg.solve(sys.R + sys.B.T @ P @ sys.B, sys.B.T @ P @ sys.A)


def are_vi(sys: LtiSystem, P0=None, eps: float = 1e-12,
           max_iters: int = DEFAULT_MAX_ITERS) -> AreSolution:
    """Value iteration on the Riccati recursion from any PSD start.

    Iterates P <- A.T P A + Qx - A.T P B (R + B.T P B)^{-1} B.T P A until
    the spectral norm of the update falls below ``eps``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    A, B, R = sys.A, sys.B, sys.R
    Qx = sys.Qx
    P = np.zeros((sys.n, sys.n)) if P0 is None else np.asarray(P0, dtype=float)
    for j in range(max_iters):
        Pn = A.T @ P @ A + Qx \
            - A.T @ P @ B @ np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        Pn = (Pn + Pn.T) / 2
        if np.linalg.norm(Pn - P, 2) < eps:
            return AreSolution(Pn, _gain(sys, Pn), j + 1, _are_residual(sys, Pn))
        P = Pn
    raise NonConvergenceError(f"are_vi: no convergence within {max_iters} iterations")


def dlyap(F, Qrhs) -> np.ndarray:
    """Solve the discrete Lyapunov equation F.T P F - P + Qrhs = 0.

    Uses the Kronecker vectorization (F.T kron F.T - I) linear solve,
    adequate at the problem sizes handled here.  Requires the spectral
    radius of F to be strictly below 1.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    Qrhs = np.atleast_2d(np.asarray(Qrhs, dtype=float))
    n = F.shape[0]
    rho = np.max(np.abs(np.linalg.eigvals(F)))
    if rho >= 1.0:
        raise InstabilityError(f"dlyap: spectral radius {rho:.6g} >= 1")
    lhs = np.kron(F.T, F.T) - np.eye(n * n)
    P = np.linalg.solve(lhs, -Qrhs.flatten(order="F")).reshape(n, n, order="F")
    return (P + P.T) / 2


def are_pi(sys: LtiSystem, K0, eps: float = 1e-12,
           max_iters: int = DEFAULT_MAX_ITERS) -> AreSolution:
    """Hewer policy iteration from a stabilizing initial gain.

    Alternates the Lyapunov policy evaluation
    (A - B K).T P (A - B K) - P + Qx + K.T R K = 0 with the greedy
    improvement K <- (R + B.T P B)^{-1} B.T P A.  Every iterate is
    stabilizing (Hewer property); a non-stabilizing start raises
    :class:`InadmissiblePolicyError`.
    """
    A, B, R = sys.A, sys.B, sys.R
    K = np.asarray(K0, dtype=float).reshape(sys.m, sys.n)
    rho = np.max(np.abs(np.linalg.eigvals(A - B @ K)))
    if rho >= 1.0:
        raise InadmissiblePolicyError(
            f"are_pi: initial gain not stabilizing (spectral radius {rho:.6g})"
        )
    Pprev = None
    for j in range(max_iters):
        F = A - B @ K
        P = dlyap(F, sys.Qx + K.T @ R @ K)
        if Pprev is not None and np.linalg.norm(P - Pprev, 2) < eps:
            return AreSolution(P, K, j + 1, _are_residual(sys, P))
        K = _gain(sys, P)
        Pprev = P
    raise NonConvergenceError(f"are_pi: no convergence within {max_iters} iterations")


def compare_value_functions(sys: LtiSystem, L, x0, eps0):
    """Proposition-style comparison of state vs. observer feedback cost.

    Under the optimal state feedback u = -K* x the cost from x0 is
    ``V_state = x0.T P* x0``.  Feeding back the observer estimate
    u = -K* x̂ instead incurs the additional observer-error cost
    ``eps0.T P22 eps0`` where P22 solves the Lyapunov equation driven by
    K*.T (R + B.T P* B) K* along the error dynamics A - L C.  Returns
    ``(V_state, V_observer)`` with V_observer >= V_state always.
    """
    L = np.asarray(L, dtype=float).reshape(sys.n, sys.p)
    x0 = np.asarray(x0, dtype=float).reshape(sys.n)
    eps0 = np.asarray(eps0, dtype=float).reshape(sys.n)
    AL = sys.A - L @ sys.C
    rho = np.max(np.abs(np.linalg.eigvals(AL)))
    if rho >= 1.0:
        raise InstabilityError(f"observer error dynamics unstable (radius {rho:.6g})")
    opt = are_vi(sys)
    P11 = opt.P
    W = opt.K.T @ (sys.R + sys.B.T @ P11 @ sys.B) @ opt.K
    P22 = dlyap(AL, W)
    V_state = float(x0 @ P11 @ x0)
    V_observer = V_state + float(eps0 @ P22 @ eps0)
    return V_state, V_observer
