"""Discrete-time LTI plant simulation and observer baselines.

Provides the plant container with its stabilizability/observability
checks, open/closed-loop simulation, the Luenberger observer update,
observer pole placement, the window-based state reconstructor, and the
sum-of-sinusoids exploration signal used during data collection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .exceptions import (
    DivergenceError,
    InstabilityError,
    ObservabilityError,
    StabilizabilityError,
    WindowTooShortError,
)
from .matops import numerical_rank

#: State-norm guard for open-loop simulation of unstable plants.
DEFAULT_OVERFLOW_GUARD = 1e12


def _check_weight(W, name, positive_definite):
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if np.max(np.abs(W - W.T)) > 1e-10 * max(np.max(np.abs(W)), 1.0):
        raise ValueError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(W)
    if positive_definite and np.min(eigs) <= 0:
        raise ValueError(f"{name} must be positive definite")
    if not positive_definite and np.min(eigs) < -1e-10:
        raise ValueError(f"{name} must be positive semidefinite")
    return W


@dataclass(frozen=True)
class LtiSystem:
    """Plant x(k+1) = A x(k) + B u(k), y(k) = C x(k) with cost weights.

    Construction verifies the standing assumptions: (A, B) stabilizable
    and (A, C) observable via PBH rank tests, Qy symmetric PSD, R
    symmetric PD.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Qy: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        if B.shape[0] != n or C.shape[1] != n:
            raise ValueError("B/C dimensions inconsistent with A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Qy", _check_weight(self.Qy, "Qy", False))
        object.__setattr__(self, "R", _check_weight(self.R, "R", True))
        if self.Qy.shape[0] != C.shape[0] or self.R.shape[0] != B.shape[1]:
            raise ValueError("weight dimensions inconsistent with C/B")
        # PBH tests on the eigenvalues of A.
        for lam in np.linalg.eigvals(A):
            if abs(lam) >= 1.0 - 1e-12:
                M = np.hstack([A - lam * np.eye(n), B])
                if numerical_rank(M) < n:
                    raise StabilizabilityError(
                        f"(A, B) not stabilizable: PBH fails at eigenvalue {lam:.6g}"
                    )
            M = np.vstack([A - lam * np.eye(n), C])
            if numerical_rank(M) < n:
                raise ObservabilityError(
                    f"(A, C) not observable: PBH fails at eigenvalue {lam:.6g}"
                )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def Qx(self) -> np.ndarray:
        """Equivalent state weight C.T @ Qy @ C."""
        return self.C.T @ self.Qy @ self.C


@dataclass
class Trajectory:
    """Simulated run: states x(k), inputs u(k), outputs y(k) = C x(k)."""

    states: np.ndarray  # (steps+1, n) -- includes terminal state
    inputs: np.ndarray  # (steps, m)
    outputs: np.ndarray  # (steps, p)

    @property
    def length(self) -> int:
        return self.inputs.shape[0]

    def cost(self, Qy, R) -> float:
        """Accumulated quadratic cost sum_k y.T Qy y + u.T R u."""
        Qy = np.atleast_2d(Qy)
        R = np.atleast_2d(R)
        return float(
            np.einsum("ki,ij,kj->", self.outputs, Qy, self.outputs)
            + np.einsum("ki,ij,kj->", self.inputs, R, self.inputs)
        )


@dataclass(frozen=True)
class NoiseSpec:
    """Sum-of-sinusoids exploration signal specification.

    Each of the ``channels`` components is an independent sum of
    ``num_sinusoids`` sinusoids whose amplitudes, frequencies, and
    phases are drawn once (uniformly over the given ranges) from a
    generator seeded with ``seed``.
    """

    seed: int = 0
    channels: int = 1
    num_sinusoids: int = 100
    amp_range: tuple = (0.0, 0.2)
    freq_range: tuple = (0.0, np.pi)
    phase_range: tuple = (0.0, 2 * np.pi)

    def __post_init__(self):
        lo, hi = self.freq_range
        if lo < 0.0 or hi > np.pi + 1e-12:
            raise ValueError("freq_range must lie inside [0, pi]")
        if self.amp_range[0] < 0.0:
            raise ValueError("amp_range lower bound must be >= 0")


class SinusoidNoise:
    """Callable realization of a :class:`NoiseSpec`.

    Parameters are drawn once at construction; ``__call__(k)`` is then a
    deterministic function of the time index.
    """

    def __init__(self, spec: NoiseSpec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        shape = (spec.channels, spec.num_sinusoids)
        self.c = rng.uniform(*spec.amp_range, size=shape)
        self.w = rng.uniform(*spec.freq_range, size=shape)
        self.d = rng.uniform(*spec.phase_range, size=shape)

    def __call__(self, k: int) -> np.ndarray:
        return np.sum(self.c * np.sin(self.w * k + self.d), axis=1)


def exploration_noise(spec: NoiseSpec, k: int) -> np.ndarray:
    """Exploration signal value at time ``k`` (deterministic in spec.seed).

    Convenience wrapper over :class:`SinusoidNoise`; for long runs build
    the realization once and call it directly.
    """
    return SinusoidNoise(spec)(k)


def simulate(sys: LtiSystem, x0, policy, steps: int,
             overflow_guard: float = DEFAULT_OVERFLOW_GUARD) -> Trajectory:
    """Simulate the plant under a feedback/injection policy.

    ``policy(k, y)`` must return an m-vector for each step given the time
    index and current output.  Raises :class:`DivergenceError` with the
    first offending step if the state norm exceeds ``overflow_guard``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.asarray(x0, dtype=float).reshape(sys.n)
    xs = np.empty((steps + 1, sys.n))
    us = np.empty((steps, sys.m))
    ys = np.empty((steps, sys.p))
    xs[0] = x
    for k in range(steps):
        y = sys.C @ x
        u = np.asarray(policy(k, y), dtype=float).reshape(sys.m)
        x = sys.A @ x + sys.B @ u
        if np.linalg.norm(x) > overflow_guard:
            raise DivergenceError(
                f"state norm exceeded {overflow_guard:g} at step {k + 1}", step=k + 1
            )
        us[k], ys[k], xs[k + 1] = u, y, x
    return Trajectory(states=xs, inputs=us, outputs=ys)


def luenberger_step(sys: LtiSystem, L, xhat, u, y) -> np.ndarray:
    """One Luenberger observer update x̂⁺ = (A - LC) x̂ + B u + L y."""
    L = np.asarray(L, dtype=float).reshape(sys.n, sys.p)
    xhat = np.asarray(xhat, dtype=float).reshape(sys.n)
    u = np.asarray(u, dtype=float).reshape(sys.m)
    y = np.asarray(y, dtype=float).reshape(sys.p)
    return (sys.A - L @ sys.C) @ xhat + sys.B @ u + L @ y


def observability_matrix(A, C) -> np.ndarray:
    A = np.atleast_2d(A)
    C = np.atleast_2d(C)
    n = A.shape[0]
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def place_observer_poles(sys: LtiSystem, poles) -> np.ndarray:
    """Observer gain L placing the spectrum of (A - LC) at ``poles``.

    Single-output systems use Ackermann's formula; multi-output systems
    go through scipy's robust placement on the dual pair.  The requested
    multiset must be closed under conjugation.
    """
    poles = np.sort_complex(np.atleast_1d(np.asarray(poles, dtype=complex)))
    if poles.size != sys.n:
        raise ValueError(f"expected {sys.n} poles, got {poles.size}")
    if not np.allclose(np.sort_complex(poles.conj()), poles, atol=1e-12):
        raise ValueError("pole multiset must be closed under conjugation")
    if numerical_rank(observability_matrix(sys.A, sys.C)) < sys.n:
        raise ObservabilityError("cannot place observer poles: (A, C) unobservable")
    if sys.p == 1:
        # Ackermann on the dual system: L = q(A) O^{-1} e_n.
        coeffs = np.poly(poles).real
        qA = np.zeros_like(sys.A)
        for c in coeffs:
            qA = qA @ sys.A + c * np.eye(sys.n)
        O = observability_matrix(sys.A, sys.C)
        en = np.zeros(sys.n)
        en[-1] = 1.0
        L = (qA @ np.linalg.solve(O, en[:, None])).reshape(sys.n, 1)
    else:
        placed = scipy.signal.place_poles(sys.A.T, sys.C.T, poles)
        L = placed.gain_matrix.T
    # Verify through characteristic-polynomial coefficients: eigenvalues
    # of defective placements (e.g. deadbeat) are too perturbation-prone
    # for a direct spectrum comparison.
    want = np.poly(poles).real
    got = np.poly(sys.A - L @ sys.C)
    if np.max(np.abs(got - want)) > 1e-8 * max(np.max(np.abs(want)), 1.0):
        raise InstabilityError("pole placement failed to reach requested spectrum")
    return L


def build_reconstructor(sys: LtiSystem, N: int):
    """Window-based state reconstruction matrices (M_ybar, M_ubar).

    With the newest-first stacks ȳ = col(y(k-1), ..., y(k-N)) and
    ū = col(u(k-1), ..., u(k-N)),

        x(k) = M_ybar @ ȳ + M_ubar @ ū

    holds exactly along any trajectory once k >= N.  M_ybar is
    A^N (V_N.T V_N)^{-1} V_N.T with V_N the stacked observability rows,
    and M_ubar = U_N - M_ybar T_N corrects for input flow-through.
    """
    A, B, C = sys.A, sys.B, sys.C
    n, m, p = sys.n, sys.m, sys.p
    if N < 1:
        raise ValueError("window length must be >= 1")
    # Cached powers A^0 .. A^N.
    powers = [np.eye(n)]
    for _ in range(N):
        powers.append(powers[-1] @ A)
    # Row block j (j = 1..N, newest first) observes x(k-N) through C A^{N-j}.
    V = np.vstack([C @ powers[N - j] for j in range(1, N + 1)])
    if numerical_rank(V) < n:
        raise WindowTooShortError(
            f"window N={N} below the observability index: V_N rank {numerical_rank(V)} < {n}"
        )
    # x(k) = A^N x(k-N) + sum_j A^{j-1} B u(k-j).
    U = np.hstack([powers[j - 1] @ B for j in range(1, N + 1)])
    # y(k-j) picks up u(k-i) through C A^{i-j-1} B for i > j.
    T = np.zeros((N * p, N * m))
    for j in range(1, N + 1):
        for i in range(j + 1, N + 1):
            T[(j - 1) * p:j * p, (i - 1) * m:i * m] = C @ powers[i - j - 1] @ B
    M_ybar = powers[N] @ np.linalg.solve(V.T @ V, V.T)
    M_ubar = U - M_ybar @ T
    return M_ybar, M_ubar


def reconstruct_state(M_ybar, M_ubar, recent_outputs, recent_inputs) -> np.ndarray:
    """Apply the reconstructor to newest-first output/input windows."""
    ybar = np.concatenate([np.atleast_1d(y) for y in recent_outputs])
    ubar = np.concatenate([np.atleast_1d(u) for u in recent_inputs])
    return M_ybar @ ybar + M_ubar @ ubar
