import math

import numpy as np
import pytest

from oracles import branch_joint
from pingpong_qkd.protocol import (
    LAYOUT, WOJCIK, JointDistribution, ProtocolError, ProtocolScenario, Variant,
    alice_encode, bell_projectors, closed_form_joint, eve_ensemble, final_state,
    initial_state, measure_joint, returned_state, vacuum_weight, wojcik_onward,
    wojcik_return)
from pingpong_qkd.quantum_core import basis_ket, hermitian_eigenvalues, partial_trace

R2 = 1 / math.sqrt(2)
LAMBDAS = [0.0, 0.1, 0.37, 0.5, 0.9, 1.0]


def k(h, t, x, y):
    return basis_ket(LAYOUT, h=h, t=t, x=x, y=y)


def support(state):
    return {tuple(int(i) for i in np.unravel_index(n, LAYOUT.dims))
            for n in np.flatnonzero(np.abs(state.amplitudes) > 1e-12)}


class TestAttack:
    def test_partial_isometry(self):
        f = WOJCIK.forward
        assert np.allclose(f.conj().T @ f, WOJCIK.domain @ WOJCIK.domain.conj().T, atol=1e-15)

    def test_initial_state(self):
        s = initial_state()
        assert support(s) == {(0, 1, 2, 0), (1, 0, 2, 0)}
        assert s.norm == pytest.approx(1.0, abs=1e-15)

    def test_onward(self):
        s = wojcik_onward(initial_state())
        expect = (k(0, 2, 1, 0) + k(0, 1, 1, 2) + k(1, 0, 0, 2) + k(1, 2, 0, 1)) / 2
        assert np.allclose(s.amplitudes, expect.amplitudes, atol=1e-15)

    def test_return_without_encoding_is_identity(self):
        s = returned_state(0)
        assert np.allclose(s.amplitudes, initial_state().amplitudes, atol=1e-15)

    def test_return_after_flip(self):
        s = returned_state(1)
        expect = (k(0, 1, 2, 1) + k(1, 0, 2, 0)) * R2
        assert np.allclose(s.amplitudes, expect.amplitudes, atol=1e-15)

    def test_onward_support_has_four_states(self):
        assert len(support(wojcik_onward(initial_state()))) == 4
        for j in (0, 1):
            assert len(support(alice_encode(wojcik_onward(initial_state()), j))) == 4

    def test_outside_domain_rejected(self):
        with pytest.raises(ProtocolError):
            wojcik_onward(k(0, 1, 0, 0))

    def test_outside_image_rejected(self):
        with pytest.raises(ProtocolError):
            wojcik_return(initial_state())

    def test_bad_bit(self):
        with pytest.raises(ValueError):
            alice_encode(initial_state(), 2)


class TestScenario:
    def test_variant_coercion(self):
        assert ProtocolScenario("case1", 0.2).variant is Variant.CASE1

    @pytest.mark.parametrize("kwargs", [dict(variant="case1", lam=1.2),
                                        dict(variant="gad", lam=0.1, p=0.7),
                                        dict(variant="case2", lam=0.1, p=0.1)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ProtocolScenario(**kwargs)

    def test_hashable_for_cache(self):
        assert final_state(ProtocolScenario("case1", 0.3), 1) is final_state(
            ProtocolScenario("case1", 0.3), 1)


class TestMeasurement:
    def test_bell_projectors_resolve_polarization_identity(self):
        total = sum(bell_projectors())
        pol = np.diag([1, 1, 0, 1, 1, 0])
        assert np.allclose(total, pol, atol=1e-15)

    @pytest.mark.parametrize("variant, lam", [("noiseless", 0.0)]
                             + [(v, lam) for v in ("case1", "case2") for lam in LAMBDAS])
    def test_matches_branch_oracle(self, variant, lam):
        got = measure_joint(ProtocolScenario(variant, lam)).p
        assert np.max(np.abs(got - branch_joint(variant, lam))) < 1e-12

    @pytest.mark.parametrize("scenario", [ProtocolScenario("case1", 0.4),
                                          ProtocolScenario("case2", 0.8),
                                          ProtocolScenario("gad", 0.5, 0.3)])
    def test_no_vacuum_at_bob(self, scenario):
        for j in (0, 1):
            assert vacuum_weight(final_state(scenario, j)) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("scenario", [ProtocolScenario.noiseless(),
                                          ProtocolScenario("case1", 0.6),
                                          ProtocolScenario("gad", 0.5, 0.2)])
    def test_x_returns_to_vacuum(self, scenario):
        for j in (0, 1):
            rx = partial_trace(final_state(scenario, j), ["x"]).matrix
            assert rx[2, 2].real == pytest.approx(1.0, abs=1e-12)

    def test_noiseless_matches_table(self):
        s = ProtocolScenario.noiseless()
        assert measure_joint(s).max_deviation(closed_form_joint(s)) < 1e-15

    @pytest.mark.parametrize("variant", ["case1", "case2"])
    @pytest.mark.parametrize("lam", LAMBDAS)
    def test_alice_bob_marginal_matches_table(self, variant, lam):
        s = ProtocolScenario(variant, lam)
        a = measure_joint(s).p.sum(axis=1)
        b = closed_form_joint(s).p.sum(axis=1)
        assert np.max(np.abs(a - b)) < 1e-12

    def test_eve_column_of_damped_branch(self):
        # damping of the returned |0>_h|1>_t|y=1> term keeps y = 1
        p = measure_joint(ProtocolScenario("case1", 0.4))
        assert p[1, 1, 2] == pytest.approx(0.4 / 8, abs=1e-15)
        assert p[1, 1, 3] == pytest.approx(0.4 / 8, abs=1e-15)
        assert p[1, 0, 2] == pytest.approx(0.0, abs=1e-15)

    def test_gad_normalised(self):
        p = measure_joint(ProtocolScenario("gad", 0.7, 0.4))
        assert p.p.sum() == pytest.approx(1.0, abs=1e-12)


class TestClosedForm:
    def test_case1_full_damping(self):
        p = closed_form_joint(ProtocolScenario("case1", 1.0))
        assert p[0, 0, 0] == pytest.approx(1 / 8)
        assert p[0, 0, 1] == pytest.approx(1 / 8)
        assert p[1, 1, 0] == 0.0

    def test_case2_half(self):
        p = closed_form_joint(ProtocolScenario("case2", 0.5))
        assert p[0, 0, 0] == pytest.approx(0.25)
        assert p[1, 0, 2] == pytest.approx(0.125)
        assert p[1, 1, 1] == pytest.approx(1 / 16)

    def test_noiseless(self):
        p = closed_form_joint(ProtocolScenario.noiseless())
        assert p[0, 0, 0] == 0.5
        assert np.count_nonzero(p.p) == 5

    def test_gad_has_no_table(self):
        with pytest.raises(ValueError):
            closed_form_joint(ProtocolScenario("gad", 0.3, 0.1))

    def test_joint_validation(self):
        with pytest.raises(ValueError):
            JointDistribution(np.zeros((2, 3, 4)))
        with pytest.raises(ValueError):
            JointDistribution(np.ones((2, 4)) / 8)


class TestEveStates:
    def test_noiseless_eigenvalues(self):
        (_, r0), (_, r1) = eve_ensemble(ProtocolScenario.noiseless())
        assert np.allclose(hermitian_eigenvalues(r0.matrix)[:2], [1, 0], atol=1e-12)
        assert np.allclose(hermitian_eigenvalues(r1.matrix)[:3], [0.5, 0.5, 0], atol=1e-12)

    @pytest.mark.parametrize("variant", ["case1", "case2"])
    def test_independent_of_bob_noise(self, variant):
        ref = eve_ensemble(ProtocolScenario.noiseless())
        for lam in (0.2, 0.8):
            got = eve_ensemble(ProtocolScenario(variant, lam))
            for (_, a), (_, b) in zip(ref, got):
                assert np.allclose(a.matrix, b.matrix, atol=1e-14)
