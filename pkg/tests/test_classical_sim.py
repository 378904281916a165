import numpy as np
import pytest
from scipy.optimize import linprog as scipy_linprog

from pingpong_qkd.classical_sim import (
    IDENTITY_A, IDENTITY_B, StochasticMap, algebraic_witness, feasibility_search,
    local_postprocess, lp_residual_b_given_a)
from pingpong_qkd.protocol import ProtocolScenario, closed_form_joint, measure_joint
from pingpong_qkd.simplex import InfeasibleError, UnboundedError, linprog

NOISELESS = measure_joint(ProtocolScenario.noiseless())


def random_stochastic(rng, rows, cols):
    m = rng.random((rows, cols))
    return StochasticMap(m / m.sum(axis=1, keepdims=True))


class TestSimplex:
    def test_textbook(self):
        # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        res = linprog([-3, -5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
        assert res.objective == pytest.approx(-36)
        assert np.allclose(res.x, [2, 6])

    def test_equality_and_negative_rhs(self):
        # min x + y s.t. x + y >= 2, x - y = 0
        res = linprog([1, 1], [[-1, -1]], [-2], [[1, -1]], [0])
        assert res.objective == pytest.approx(2)
        assert np.allclose(res.x, [1, 1])

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            linprog([1], [[1]], [-1])

    def test_unbounded(self):
        with pytest.raises(UnboundedError):
            linprog([-1, 0], [[-1, 1]], [1])

    def test_redundant_equality(self):
        res = linprog([1, 2], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
        assert res.objective == pytest.approx(1)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            linprog([1, 2], [[1]], [1])

    def test_degenerate_cycling_example(self):
        # Beale's example cycles under the largest-coefficient rule
        c = [-0.75, 150, -0.02, 6]
        A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
        res = linprog(c, A, [0, 0, 1])
        assert res.objective == pytest.approx(-0.05)

    def test_against_highs(self, rng):
        for _ in range(30):
            n, m = rng.integers(2, 7), rng.integers(1, 6)
            A = rng.normal(size=(m, n))
            x0 = rng.random(n)
            b = A @ x0 + rng.random(m)
            c = rng.normal(size=n)
            A_eq = rng.normal(size=(1, n))
            b_eq = A_eq @ x0
            ref = scipy_linprog(c, A, b, A_eq, b_eq, bounds=(0, 10), method="highs")
            # same box through explicit rows
            A_box = np.vstack([A, np.eye(n)])
            b_box = np.concatenate([b, np.full(n, 10.0)])
            got = linprog(c, A_box, b_box, A_eq, b_eq)
            assert got.objective == pytest.approx(ref.fun, abs=1e-8)

    def test_warm_start_matches_cold(self, rng):
        cold = linprog([1, 1, 0], [[-1, -2, 1]], [-3], [[1, 1, 1]], [4])
        warm = linprog([1, 1, 0], [[-1, -2, 1]], [-3], [[1, 1, 1]], [4], warm_basis=cold.basis)
        assert warm.objective == pytest.approx(cold.objective)
        assert warm.iterations == 0


class TestPostprocess:
    def test_identity_maps(self):
        out = local_postprocess(NOISELESS, IDENTITY_A, IDENTITY_B)
        assert np.allclose(out.p, NOISELESS.p, atol=1e-15)

    def test_flip_alice(self):
        out = local_postprocess(NOISELESS, StochasticMap.alice(0, 1), IDENTITY_B)
        assert np.allclose(out.p[0], NOISELESS.p[1])
        assert np.allclose(out.p[1], NOISELESS.p[0])

    def test_bob_to_phi(self):
        b = StochasticMap(np.array([[0, 0, 1, 0], [0, 0, 0, 1]]))
        out = local_postprocess(NOISELESS, IDENTITY_A, b)
        assert out[0, 0, 2] == pytest.approx(0.5)
        assert out.p[:, :, :2].sum() == 0

    def test_rejects_bad_maps_and_sources(self):
        with pytest.raises(ValueError):
            StochasticMap(np.array([[0.5, 0.6], [1, 0]]))
        with pytest.raises(ValueError):
            local_postprocess(NOISELESS, IDENTITY_B, IDENTITY_B)
        with pytest.raises(ValueError):
            local_postprocess(closed_form_joint(ProtocolScenario("case2", 0.5)),
                              IDENTITY_A, IDENTITY_B)

    def test_lp_recovers_bob_map(self, rng):
        for _ in range(10):
            a, b = random_stochastic(rng, 2, 2), random_stochastic(rng, 2, 4)
            target = local_postprocess(NOISELESS, a, b)
            r, found = lp_residual_b_given_a(NOISELESS, target, a)
            assert r < 1e-9
            assert np.allclose(local_postprocess(NOISELESS, a, found).p, target.p, atol=1e-8)


class TestSearch:
    def test_noiseless_target_is_feasible(self):
        rep = feasibility_search(NOISELESS, NOISELESS, grid_step=0.1)
        assert rep.feasible
        assert rep.min_residual < 1e-9

    def test_planted_grid_maps_found(self, rng):
        a = StochasticMap.alice(0.3, 0.8)
        b = random_stochastic(rng, 2, 4)
        rep = feasibility_search(NOISELESS, local_postprocess(NOISELESS, a, b), grid_step=0.1)
        assert rep.min_residual < 1e-9

    def test_finer_grids_do_not_increase_residual(self):
        target = closed_form_joint(ProtocolScenario("case2", 0.5))
        res = [feasibility_search(NOISELESS, target, grid_step=s).min_residual
               for s in (0.2, 0.1, 0.05)]
        assert res[1] <= res[0] + 1e-12
        assert res[2] <= res[1] + 1e-12

    @pytest.mark.parametrize("lam", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_agrees_with_certificate(self, lam):
        target = closed_form_joint(ProtocolScenario("case2", lam))
        rep = feasibility_search(NOISELESS, target, grid_step=0.1)
        cert = algebraic_witness(lam)
        assert cert.infeasible and not rep.feasible

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            feasibility_search(NOISELESS, NOISELESS, grid_step=0)
        with pytest.raises(ValueError):
            feasibility_search(NOISELESS, NOISELESS, tol=0)


class TestCertificate:
    def test_zero_noise(self):
        cert = algebraic_witness(0.0)
        assert not cert.infeasible

    def test_steps(self):
        cert = algebraic_witness(0.5)
        assert cert.infeasible
        assert any("a00 b02 = lambda/2" in s for s in cert.steps)

    def test_range(self):
        with pytest.raises(ValueError):
            algebraic_witness(1.5)
