"""Model-free ADP learning from input/output data.

Data collection under an exploratory behavior policy, regressor
assembly with rank-condition gating, value-iteration / policy-iteration
/ switched-iteration loops on the internal-model state η, and the
data-driven stability certificate used by the switched scheme.

The learner only ever sees (u, y, η) samples; the plant matrices and
the parameterization M never enter the learning equations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    CertificationTimeoutError,
    DivergenceError,
    InsufficientExcitationError,
    NonConvergenceError,
)
from .internal_model import InternalModel, step_internal
from .lti import LtiSystem, SinusoidNoise
from .matops import RegressorLayout, delta_v, delta_vw, lstsq, unvech, vech

#: Rank tolerance for the collection gate.  Tighter than the generic
#: least-squares default because the regressor stack legitimately carries
#: singular values many orders below sigma_max (products of decaying
#: observer-error modes), which the solve handles fine.
COLLECT_RANK_TOL = 1e-12

#: Stability-certificate threshold: max eigenvalue of the symmetrized
#: trailing block must be below -TOL_STAB.
TOL_STAB = 1e-9

#: Norm guard for PI divergence detection.
DIVERGENCE_GUARD = 1e12


@dataclass
class IterationTrace:
    """Per-iteration learning diagnostics, serializable to CSV."""

    rows: list = field(default_factory=list)

    HEADER = ("iteration", "mode", "dP_norm", "gain_err", "stab_max_eig", "wall_ms")

    def append(self, iteration, mode, dP_norm, gain_err=None,
               stab_max_eig=None, wall_ms=None):
        self.rows.append({
            "iteration": iteration,
            "mode": mode,
            "dP_norm": dP_norm,
            "gain_err": gain_err,
            "stab_max_eig": stab_max_eig,
            "wall_ms": wall_ms,
        })


@dataclass
class LearnerState:
    """Final learner output: value matrix, gain, and run metadata."""

    Pj: np.ndarray
    Kj: np.ndarray
    iteration: int
    mode: str
    history: IterationTrace
    converged: bool = True


@dataclass
class RegressorBatch:
    """Collected samples plus the assembled learning-equation stacks.

    Immutable after collection; VI reuses the fixed Π while PI rebuilds
    policy-dependent regressors from the raw samples each iteration
    (off-policy reuse).
    """

    etas: np.ndarray        # (N, n_z)
    etas_next: np.ndarray   # (N, n_z)
    us: np.ndarray          # (N, m)
    ys: np.ndarray          # (N, p)
    Qy: np.ndarray
    R: np.ndarray
    n: int                  # plant order (trailing η_ε block size)
    k_N: int                # samples collected when the gate fired
    rank: int               # achieved numerical rank of Π
    Pi: np.ndarray = None
    Psi: np.ndarray = None

    def __post_init__(self):
        if self.Pi is None:
            self.Pi = np.array([
                np.concatenate([delta_v(e), 2.0 * delta_vw(e, u), delta_v(u)])
                for e, u in zip(self.etas, self.us)
            ])
        if self.Psi is None:
            self.Psi = np.array([delta_v(e) for e in self.etas_next])

    @property
    def n_z(self) -> int:
        return self.etas.shape[1]

    @property
    def m(self) -> int:
        return self.us.shape[1]

    @property
    def layout(self) -> RegressorLayout:
        return RegressorLayout.for_dims(self.n_z, self.m)

    @property
    def util_y(self) -> np.ndarray:
        """Per-sample y.T Qy y + u.T R u."""
        return (np.einsum("ki,ij,kj->k", self.ys, self.Qy, self.ys)
                + np.einsum("ki,ij,kj->k", self.us, self.R, self.us))

    @property
    def util_u_only(self) -> np.ndarray:
        """Per-sample u.T R u (auxiliary stability-criterion utility)."""
        return np.einsum("ki,ij,kj->k", self.us, self.R, self.us)

    def util_eta(self, Qeps) -> np.ndarray:
        """Per-sample η.T Qeps η (modified-utility term for SI)."""
        Qeps = np.atleast_2d(Qeps)
        return np.einsum("ki,ij,kj->k", self.etas, Qeps, self.etas)


def collect(sys: LtiSystem, model: InternalModel, K0, noise, x0,
            max_steps: int, rank_tol: float = COLLECT_RANK_TOL,
            require_rank: bool = True) -> RegressorBatch:
    """Run the behavior policy u = -K0 η + ξ and collect (η, η⁺, u, y).

    Collection stops at the first k_N where the growing regressor stack
    Π reaches full column rank n_φ (monitored incrementally through its
    singular values), or at ``max_steps``.  If the gate never fires and
    ``require_rank`` is set, raises :class:`InsufficientExcitationError`
    carrying the rank profile.
    """
    if isinstance(noise, SinusoidNoise):
        xi = noise
    else:
        xi = SinusoidNoise(noise)
    K0 = np.asarray(K0, dtype=float).reshape(sys.m, model.n_z)
    layout = RegressorLayout.for_dims(model.n_z, sys.m)
    n_phi = layout.total
    if max_steps < n_phi:
        raise ValueError(f"max_steps must be >= n_phi = {n_phi}")
    x = np.asarray(x0, dtype=float).reshape(sys.n)
    etas, etas_next, us, ys, rows = [], [], [], [], []
    rank_profile = []
    rank = 0
    for k in range(max_steps):
        y = sys.C @ x
        eta = model.eta.copy()
        u = -K0 @ eta + xi(k)
        eta_next = step_internal(model, u, y)
        x = sys.A @ x + sys.B @ u
        etas.append(eta)
        etas_next.append(eta_next.copy())
        us.append(u)
        ys.append(y)
        rows.append(np.concatenate([delta_v(eta), 2.0 * delta_vw(eta, u), delta_v(u)]))
        if k + 1 >= n_phi:
            s = np.linalg.svd(np.array(rows), compute_uv=False)
            rank = int(np.sum(s > rank_tol * s[0])) if s[0] > 0 else 0
            rank_profile.append(rank)
            if rank == n_phi:
                break
    else:
        if require_rank:
            raise InsufficientExcitationError(
                f"rank condition unmet after {max_steps} samples "
                f"(rank {rank} < {n_phi})",
                rank_profile=rank_profile,
            )
    return RegressorBatch(
        etas=np.array(etas), etas_next=np.array(etas_next),
        us=np.array(us), ys=np.array(ys),
        Qy=sys.Qy, R=sys.R, n=model.n,
        k_N=len(etas), rank=rank, Pi=np.array(rows),
    )


def _solve(Amat, rhs):
    """Equilibrated full least squares, no rank gate.

    The rank condition is enforced once at collection; the per-iteration
    stacks may carry harmless tiny singular values, and truncating them
    (or failing) degrades the solution, so the solve runs untruncated on
    the column-equilibrated matrix.
    """
    return lstsq(Amat, rhs, check_rank=False, equilibrate=True)


def _unpack(theta, n_z, m):
    """Split a learning-equation solution into its symmetric blocks."""
    nvh = n_z * (n_z + 1) // 2
    P_ee = unvech(theta[:nvh], n_z)
    P_eu = theta[nvh:nvh + n_z * m].reshape(n_z, m, order="F")
    P_uu = unvech(theta[nvh + n_z * m:], m)
    return P_ee, P_eu, P_uu


@dataclass(frozen=True)
class VIStepResult:
    P_etaeta: np.ndarray
    P_etau: np.ndarray
    P_uu: np.ndarray
    P_next: np.ndarray
    K: np.ndarray


def vi_step(batch: RegressorBatch, Pj, Qeps=None) -> VIStepResult:
    """One value-iteration update from data.

    Solves Π θ = Ψ vech(P_j) + utility for the blocks of the one-step
    value, then forms the Schur complement P_next and the greedy gain.
    ``Qeps`` switches in the modified utility used by the SI scheme.
    """
    Pj = np.asarray(Pj, dtype=float)
    util = batch.util_y
    if Qeps is not None:
        util = util + batch.util_eta(Qeps)
    theta = _solve(batch.Pi, batch.Psi @ vech(Pj) + util)
    P_ee, P_eu, P_uu = _unpack(theta, batch.n_z, batch.m)
    K = np.linalg.solve(P_uu, P_eu.T)
    P_next = P_ee - P_eu @ K
    P_next = (P_next + P_next.T) / 2
    return VIStepResult(P_ee, P_eu, P_uu, P_next, K)


@dataclass(frozen=True)
class PIStepResult:
    P: np.ndarray
    P_AB: np.ndarray
    P_BB: np.ndarray
    K_next: np.ndarray


def pi_step(batch: RegressorBatch, Kj) -> PIStepResult:
    """One policy-iteration evaluation/improvement from stored samples.

    Rebuilds the policy-dependent regressors with û = u + K_j η (the
    off-policy correction), evaluates K_j by least squares, and returns
    the improved gain (R + P_BB)^{-1} (P_AB.T + P_BB K_j).
    """
    Kj = np.asarray(Kj, dtype=float).reshape(batch.m, batch.n_z)
    uhat = batch.us + batch.etas @ Kj.T
    d_eta = batch.Psi - np.array([delta_v(e) for e in batch.etas])
    rows = np.hstack([
        -d_eta,
        2.0 * np.array([delta_vw(e, u) for e, u in zip(batch.etas, uhat)]),
        np.array([delta_v(u) for u in uhat]),
    ])
    rhs = (np.einsum("ki,ij,kj->k", batch.ys, batch.Qy, batch.ys)
           + np.einsum("ki,ij,kj->k", batch.etas @ Kj.T, batch.R, batch.etas @ Kj.T))
    theta = _solve(rows, rhs)
    P, P_AB, P_BB = _unpack(theta, batch.n_z, batch.m)
    P = (P + P.T) / 2
    K_next = np.linalg.solve(batch.R + P_BB, P_AB.T + P_BB @ Kj)
    return PIStepResult(P, P_AB, P_BB, K_next)


@dataclass(frozen=True)
class StabilityCert:
    H_full: np.ndarray
    H_sub: np.ndarray
    max_eig: float
    certified: bool


def stability_matrix(P_ee_bar, P_etau, P_uu, Pj, Kj) -> np.ndarray:
    """Auxiliary matrix H from given blocks (model-based or learned).

    H = P̄_ηη - 2 P_ηu K + K.T P_uu K - P_j; its trailing n-by-n block is
    negative definite exactly when the policy is stabilizing (with a
    conservative extra K.T R K term baked into the blocks).
    """
    H = P_ee_bar - 2.0 * P_etau @ Kj + Kj.T @ P_uu @ Kj - Pj
    return (H + H.T) / 2


def stability_criterion(batch: RegressorBatch, Pj, Qeps=None,
                        tol_stab: float = TOL_STAB) -> StabilityCert:
    """Data-driven stability certificate for the current VI iterate.

    Solves the learning equation twice with the same Π — once with the
    running utility (to get the blocks and the greedy gain) and once
    with the input-only utility u.T R u (to get P̄_ηη) — and checks that
    the trailing n-by-n block of H is negative definite.
    """
    Pj = np.asarray(Pj, dtype=float)
    util = batch.util_y
    if Qeps is not None:
        util = util + batch.util_eta(Qeps)
    rhs_main = batch.Psi @ vech(Pj) + util
    rhs_aux = batch.Psi @ vech(Pj) + batch.util_u_only
    P_ee, P_eu, P_uu = _unpack(_solve(batch.Pi, rhs_main), batch.n_z, batch.m)
    P_ee_bar, _, _ = _unpack(_solve(batch.Pi, rhs_aux), batch.n_z, batch.m)
    K = np.linalg.solve(P_uu, P_eu.T)
    H = stability_matrix(P_ee_bar, P_eu, P_uu, Pj, K)
    H_sub = H[-batch.n:, -batch.n:]
    max_eig = float(np.max(np.linalg.eigvalsh((H_sub + H_sub.T) / 2)))
    return StabilityCert(H, H_sub, max_eig, max_eig < -tol_stab)


def run_vi(batch: RegressorBatch, P0, eps_stop: float,
           max_iters: int = 2000, K_ref=None) -> LearnerState:
    """Value iteration to convergence: ||P_{j+1} - P_j||_2 < eps_stop."""
    P = np.asarray(P0, dtype=float)
    trace = IterationTrace()
    for j in range(max_iters):
        t0 = time.perf_counter()
        step = vi_step(batch, P)
        dP = float(np.linalg.norm(step.P_next - P, 2))
        gain_err = None if K_ref is None else float(np.max(np.abs(step.K - K_ref)))
        trace.append(j + 1, "VI", dP, gain_err,
                     wall_ms=(time.perf_counter() - t0) * 1e3)
        if dP < eps_stop:
            return LearnerState(P, step.K, j + 1, "VI", trace)
        P = step.P_next
    raise NonConvergenceError(
        f"run_vi: no convergence within {max_iters} iterations", trace=trace
    )


def run_pi(batch: RegressorBatch, K0, eps_stop: float,
           max_iters: int = 100, K_ref=None) -> LearnerState:
    """Policy iteration to convergence: ||P_j - P_{j-1}||_2 < eps_stop."""
    K = np.asarray(K0, dtype=float).reshape(batch.m, batch.n_z)
    trace = IterationTrace()
    P_prev = None
    for j in range(max_iters):
        t0 = time.perf_counter()
        step = pi_step(batch, K)
        if np.linalg.norm(step.P, 2) > DIVERGENCE_GUARD:
            raise DivergenceError(
                f"run_pi: value norm exceeded {DIVERGENCE_GUARD:g} at iteration "
                f"{j + 1}; the policy is likely inadmissible", step=j + 1
            )
        dP = np.inf if P_prev is None else float(np.linalg.norm(step.P - P_prev, 2))
        gain_err = None if K_ref is None else float(np.max(np.abs(K - K_ref)))
        trace.append(j + 1, "PI", dP, gain_err,
                     wall_ms=(time.perf_counter() - t0) * 1e3)
        if P_prev is not None and dP < eps_stop:
            return LearnerState(step.P, K, j + 1, "PI", trace)
        K = step.K_next
        P_prev = step.P
    raise NonConvergenceError(
        f"run_pi: no convergence within {max_iters} iterations", trace=trace
    )


def run_si(batch: RegressorBatch, Qeps, eps_stop: float,
           max_iters: int = 2000, cert_cap: int = 1000,
           K_ref=None) -> LearnerState:
    """Switched iteration: modified-utility VI until certified, then PI.

    The VI phase runs with utility η.T Qeps η + y.T Qy y + u.T R u from
    an uninformative start and checks the stability certificate each
    iteration; once the trailing block of H is negative definite, the
    certified gain seeds a plain policy iteration with the original
    utility.  Works from any initial behavior gain, stabilizing or not.
    """
    Qeps = np.atleast_2d(np.asarray(Qeps, dtype=float))
    P = 1e5 * np.eye(batch.n_z)
    trace = IterationTrace()
    K_cert = None
    vi_iters = 0
    for j in range(cert_cap):
        t0 = time.perf_counter()
        step = vi_step(batch, P, Qeps=Qeps)
        cert = stability_criterion(batch, P, Qeps=Qeps)
        dP = float(np.linalg.norm(step.P_next - P, 2))
        gain_err = None if K_ref is None else float(np.max(np.abs(step.K - K_ref)))
        trace.append(j + 1, "VI", dP, gain_err, cert.max_eig,
                     (time.perf_counter() - t0) * 1e3)
        vi_iters = j + 1
        if cert.certified:
            K_cert = step.K
            break
        P = step.P_next
    if K_cert is None:
        raise CertificationTimeoutError(
            f"run_si: stability never certified within {cert_cap} VI iterations"
        )
    pi_state = run_pi(batch, K_cert, eps_stop,
                      max_iters=max_iters - vi_iters, K_ref=K_ref)
    for row in pi_state.history.rows:
        row["iteration"] += vi_iters
        trace.rows.append(row)
    return LearnerState(pi_state.Pj, pi_state.Kj, vi_iters + pi_state.iteration,
                        "SI", trace)
