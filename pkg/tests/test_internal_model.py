import numpy as np
import pytest

from ofblqr.exceptions import BadInitializerError, InsufficientExcitationError, InstabilityError
from ofblqr.internal_model import (
    CharPoly,
    InternalModel,
    adjugate_coefficients,
    build_parameterization,
    check_rank_M,
    companion_from_poly,
    identify_parameterization,
    step_internal,
)
from ofblqr.lti import LtiSystem, place_observer_poles


def sim1_system():
    return LtiSystem(A=[[1.0, 0.5], [0.0, 0.6]], B=[[1.0], [0.0]],
                     C=[[1.0, 1.0]], Qy=[[1.0]], R=[[1.0]])


class TestCharPoly:
    def test_from_roots(self):
        cp = CharPoly.from_roots([0.6, 0.95])
        # z^2 - 1.55 z + 0.57 => a_0 = 0.57, a_1 = -1.55
        assert np.allclose(cp.coefficients, [0.57, -1.55])

    def test_unstable_rejected(self):
        with pytest.raises(InstabilityError):
            CharPoly.from_roots([0.5, 1.01])

    def test_inconsistent_roots_rejected(self):
        with pytest.raises(ValueError):
            CharPoly(coefficients=(0.57, -1.55), roots=(0.5, 0.9))

    def test_of_matrix_round_trip(self):
        rng = np.random.default_rng(0)
        F = rng.normal(size=(3, 3))
        F *= 0.8 / np.max(np.abs(np.linalg.eigvals(F)))
        cp = CharPoly.of_matrix(F)
        assert np.allclose(np.poly(F), cp.monic, atol=1e-10)


class TestCompanion:
    def test_benchmark_second_order(self):
        A = companion_from_poly(CharPoly.from_roots([0.6, 0.95]))
        assert np.allclose(A, [[0.0, 1.0], [-0.57, 1.55]])

    def test_benchmark_third_order(self):
        A = companion_from_poly(CharPoly.from_roots([-0.91, -0.92, -0.93]))
        assert np.allclose(A[-1], [-0.778596, -2.5391, -2.76], atol=1e-6)

    def test_nilpotent(self):
        A = companion_from_poly(CharPoly(coefficients=(0.0, 0.0, 0.0)))
        assert np.allclose(np.linalg.matrix_power(A, 3), 0.0)

    def test_charpoly_round_trip(self):
        cp = CharPoly.from_roots([0.1, -0.4, 0.7, 0.3])
        A = companion_from_poly(cp)
        assert np.allclose(np.poly(A), cp.monic, atol=1e-10)


class TestAdjugate:
    def test_diagonal_2x2(self):
        U = adjugate_coefficients(np.diag([0.6, 0.95]))
        assert np.allclose(U[0], np.eye(2))
        assert np.allclose(U[1], np.diag([-0.95, -0.6]))

    def test_zero_matrix(self):
        U = adjugate_coefficients(np.zeros((3, 3)))
        assert np.allclose(U[0], np.eye(3))
        assert np.allclose(U[1], 0.0)
        assert np.allclose(U[2], 0.0)

    def test_polynomial_identity(self):
        # (zI - F) adj(zI - F) = det(zI - F) I at random z.
        rng = np.random.default_rng(1)
        F = rng.normal(size=(4, 4))
        U = adjugate_coefficients(F)
        for z in rng.normal(size=5) + 1j * rng.normal(size=5):
            adj = sum(U[i] * z ** (4 - 1 - i) for i in range(4))
            det = np.prod(z - np.linalg.eigvals(F))
            assert np.allclose((z * np.eye(4) - F) @ adj, det * np.eye(4),
                               atol=1e-8 * abs(det))


class TestInternalModel:
    def make_model(self):
        cp = CharPoly.from_roots([0.6, 0.95])
        return InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[5.0, -5.0])

    def test_structure(self):
        model = self.make_model()
        assert model.n_z == 6
        comp = companion_from_poly(model.charpoly)
        G1 = model.G1
        assert np.allclose(G1[:2, :2], comp)
        assert np.allclose(G1[2:4, 2:4], comp)
        assert np.allclose(G1[4:, 4:], comp)
        assert np.allclose(G1[:2, 2:], 0.0)
        G2 = model.G2
        assert np.allclose(G2[:2, 0], [0.0, 1.0])
        assert np.allclose(G2[2:4, 1], [0.0, 1.0])
        assert np.allclose(G2[4:], 0.0)

    def test_zero_inputs_zero_state(self):
        cp = CharPoly.from_roots([0.6, 0.95])
        model = InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[1.0, -1.0])
        model.reset(np.zeros(6))
        for _ in range(5):
            step_internal(model, [0.0], [0.0])
        assert np.allclose(model.eta, 0.0)

    def test_impulse_response(self):
        model = self.make_model()
        model.reset(np.zeros(6))
        comp = companion_from_poly(model.charpoly)
        b = np.array([0.0, 1.0])
        step_internal(model, [1.0], [0.0])
        ref = b.copy()
        assert np.allclose(model.eta[:2], ref)
        for _ in range(6):
            step_internal(model, [0.0], [0.0])
            ref = comp @ ref
            assert np.allclose(model.eta[:2], ref)

    def test_autonomous_error_channel(self):
        model = self.make_model()
        comp = companion_from_poly(model.charpoly)
        ref = np.array([5.0, -5.0])
        rng = np.random.default_rng(2)
        for _ in range(10):
            step_internal(model, rng.normal(size=1), rng.normal(size=1))
            ref = comp @ ref
            assert np.allclose(model.eta[4:], ref)

    def test_mismatched_A_eps_rejected(self):
        cp = CharPoly.from_roots([0.6, 0.95])
        with pytest.raises(ValueError):
            InternalModel(charpoly=cp, m=1, p=1, A_eps=np.diag([0.5, 0.5]))

    def test_triangular_A_eps_accepted(self):
        cp = CharPoly.from_roots([-0.91, -0.92, -0.93])
        A_eps = np.array([[-0.91, 1.1, -1.2], [0.0, -0.92, 1.3], [0.0, 0.0, -0.93]])
        model = InternalModel(charpoly=cp, m=1, p=1, A_eps=A_eps,
                              eta_eps0=[2.0, 1.0, 1.0])
        assert np.allclose(model.G1[-3:, -3:], A_eps)


class TestBuildParameterization:
    def test_benchmark_printed_blocks(self):
        sys = sim1_system()
        L = place_observer_poles(sys, [0.6, 0.95])
        cp = CharPoly.from_roots([0.6, 0.95])
        model = InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[5.0, -5.0])
        pmap = build_parameterization(sys, L, model, eps0=[0.0, 10.0])
        assert np.allclose(pmap.M_u[0], [[-0.6, 1.0], [0.0, 0.0]], atol=1e-3)
        assert np.allclose(pmap.M_y[0], [[-0.03, 0.05], [0.0, 0.0]], atol=1e-3)
        assert np.allclose(pmap.M_eps,
                           [[-0.2885, -0.2885], [0.9744, -1.0256]], atol=1e-3)

    def test_zero_eps0_gives_zero_error_block(self):
        sys = sim1_system()
        L = place_observer_poles(sys, [0.6, 0.95])
        cp = CharPoly.from_roots([0.6, 0.95])
        model = InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[5.0, -5.0])
        pmap = build_parameterization(sys, L, model, eps0=[0.0, 0.0])
        assert np.allclose(pmap.M_eps, 0.0)

    def test_exactness_random(self):
        rng = np.random.default_rng(3)
        sys = sim1_system()
        L = place_observer_poles(sys, [0.6, 0.95])
        cp = CharPoly.from_roots([0.6, 0.95])
        model = InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[5.0, -5.0])
        x0 = np.array([0.0, 10.0])
        pmap = build_parameterization(sys, L, model, eps0=x0)
        x = x0.copy()
        for k in range(200):
            assert np.allclose(x, pmap.M @ model.eta,
                               atol=1e-9 * max(np.linalg.norm(x), 1.0))
            u = rng.normal(size=1)
            step_internal(model, u, sys.C @ x)
            x = sys.A @ x + sys.B @ u

    def test_bad_initializer_rejected(self):
        cp = CharPoly.from_roots([0.6, 0.95])
        with pytest.raises(BadInitializerError):
            InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[0.0, 0.0])

    def test_mismatched_observer_rejected(self):
        sys = sim1_system()
        L = place_observer_poles(sys, [0.1, 0.2])
        cp = CharPoly.from_roots([0.6, 0.95])
        model = InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[5.0, -5.0])
        with pytest.raises(ValueError):
            build_parameterization(sys, L, model, eps0=[1.0, 0.0])


class TestIdentifyParameterization:
    def _samples(self):
        sys = sim1_system()
        L = place_observer_poles(sys, [0.6, 0.95])
        cp = CharPoly.from_roots([0.6, 0.95])
        model = InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[5.0, -5.0])
        x0 = np.array([0.0, 10.0])
        pmap = build_parameterization(sys, L, model, eps0=x0)
        rng = np.random.default_rng(4)
        xs, etas = [], []
        x = x0.copy()
        for k in range(60):
            xs.append(x.copy())
            etas.append(model.eta.copy())
            u = rng.normal(size=1)
            step_internal(model, u, sys.C @ x)
            x = sys.A @ x + sys.B @ u
        return pmap, np.array(xs), np.array(etas)

    def test_recovers_M(self):
        pmap, xs, etas = self._samples()
        est = identify_parameterization(xs, etas)
        assert np.allclose(est.M, pmap.M, atol=1e-8 * np.max(np.abs(pmap.M)))

    def test_constant_eta_rejected(self):
        with pytest.raises(InsufficientExcitationError):
            identify_parameterization(np.ones((10, 2)), np.ones((10, 6)))

    def test_scalar_exact(self):
        etas = np.arange(1.0, 6.0).reshape(-1, 1)
        xs = 3.0 * etas
        est = identify_parameterization(xs, etas)
        assert est.M[0, 0] == pytest.approx(3.0)


class TestCheckRankM:
    def test_benchmark_full_rank(self):
        sys = sim1_system()
        L = place_observer_poles(sys, [0.6, 0.95])
        cp = CharPoly.from_roots([0.6, 0.95])
        model = InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[5.0, -5.0])
        pmap = build_parameterization(sys, L, model, eps0=[0.0, 10.0])
        ok, rank = check_rank_M(pmap)
        assert ok and rank == 2

    def test_degenerate_detected(self):
        from ofblqr.internal_model import ParameterizationMap
        M = np.zeros((2, 6))
        M[0, 0] = 1.0
        pmap = ParameterizationMap(M, (), (), None, 1)
        ok, rank = check_rank_M(pmap)
        assert not ok and rank == 1

    def test_error_block_alone_full_rank(self):
        # With distinct poles and a generic eps0, the error block alone
        # is already nonsingular (Vandermonde argument).
        sys = sim1_system()
        L = place_observer_poles(sys, [0.6, 0.95])
        cp = CharPoly.from_roots([0.6, 0.95])
        model = InternalModel(charpoly=cp, m=1, p=1, eta_eps0=[5.0, -5.0])
        pmap = build_parameterization(sys, L, model, eps0=[1.0, 1.0])
        assert np.abs(np.linalg.det(pmap.M_eps)) > 1e-6
