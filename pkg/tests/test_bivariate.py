import json

import numpy as np
import pytest

from frozen_rde._grid import default_K
from frozen_rde.bivariate import (BivariateGridMeasure, apply_F_operator, coarsen,
                                  diagonal_measure, from_signature, marginal_error,
                                  product_measure, rho_weights, scale_bivariate, signature_of)
from frozen_rde.errors import NotAdmissible, NotScalable, TailTooLoose
from frozen_rde.signature import Signature, compute_signature, constant_signature

import oracles

C_HAT_085 = 0.0176487689280056542


@pytest.fixture(scope="module")
def solution_085():
    th = 0.85
    K = default_K(th)
    sig = compute_signature(th, C_HAT_085, 2 * K + 20)
    return sig, from_signature(sig, K=K)


class TestFromSignature:
    @pytest.mark.parametrize("theta", [0.3, 0.6, 0.9])
    def test_constant_gives_diagonal(self, theta):
        K = 25
        m = from_signature(constant_signature(theta, K + 5), K=K)
        assert np.abs(m.table - diagonal_measure(theta, K).table).max() < 1e-15
        assert m.off_diagonal_mass() < 1e-13   # sum minus trace cancels at this level

    def test_nondiagonal_solution(self, solution_085):
        sig, m = solution_085
        assert m.off_diagonal_mass() > 0.1
        assert m.table.min() >= -1e-9
        assert abs(m.total() - 1) < 1e-10
        assert marginal_error(m) <= 1e-9 + m.trunc_mass
        assert m.m2_violation() <= 1e-12
        assert m.asymmetry() == 0.0

    def test_interior_matches_cumulative_differences(self):
        rng = np.random.default_rng(3)
        th, K = 0.7, 18
        sig = oracles.random_admissible_signature(rng, th)
        m = from_signature(sig, K=K)
        ref = oracles.bivariate_from_F(sig.values, th, K)
        assert np.abs(m.table[: K + 1, : K + 1] - ref).max() < 1e-14

    @pytest.mark.parametrize("seed", range(5))
    def test_signature_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        th = rng.uniform(0.2, 0.95)
        sig = oracles.random_admissible_signature(rng, th)
        K = min(sig.N - 1, 80)
        back = signature_of(from_signature(sig, K=K))
        assert np.abs(back - sig.values[: K + 1]).max() < 1e-10

    def test_inadmissible_rejected(self):
        th = 0.5
        v = np.array([0.9, 0.5, 0.8] + [2 / 3] * 10)
        with pytest.raises(NotAdmissible) as exc:
            from_signature(Signature(th, v, 2 / 3, 0.0), K=8)
        assert exc.value.details["mass"] < -1e-9

    def test_small_negatives_clipped(self):
        th, K = 0.5, 8
        v = np.full(K + 3, 2 / 3)
        v[5] -= 5e-13    # breaks condition (v) by a rounding-sized amount
        m = from_signature(Signature(th, v, 2 / 3, 0.0), K=K)
        assert m.table.min() >= 0.0

    def test_rejects_small_K(self):
        with pytest.raises(ValueError):
            from_signature(constant_signature(0.5, 5), K=1)


class TestSignatureOf:
    @pytest.mark.parametrize("theta", [0.2, 0.5, 0.8])
    def test_diagonal(self, theta):
        f = signature_of(diagonal_measure(theta, 30))
        assert np.allclose(f, 1 / (1 + theta), atol=1e-15, rtol=0)

    @pytest.mark.parametrize("theta", [0.2, 0.5, 0.8])
    def test_product(self, theta):
        K = 30
        f = signature_of(product_measure(theta, K))
        ref = [oracles.product_signature(theta, n) for n in range(K + 1)]
        assert np.abs(f - ref).max() < 1e-15


class TestMeasureBasics:
    def test_rho_weights_sum(self):
        assert rho_weights(0.6, 20).sum() == pytest.approx(1.0, abs=1e-15)

    def test_product_marginals(self):
        m = product_measure(0.6, 20)
        assert marginal_error(m) < 1e-15

    def test_json_round_trip(self, solution_085):
        _, m = solution_085
        small = coarsen(m, 12)
        back = BivariateGridMeasure.from_dict(json.loads(small.to_json()))
        assert np.abs(back.table - small.table).max() == 0.0

    def test_coarsen_keeps_total_and_marginals(self, solution_085):
        _, m = solution_085
        c = coarsen(m, 20)
        assert c.total() == pytest.approx(m.total(), abs=1e-14)
        assert marginal_error(c) < 1e-10

    def test_coarsen_matches_direct_reconstruction(self, solution_085):
        sig, m = solution_085
        direct = from_signature(sig, K=20)
        assert np.abs(coarsen(m, 20).table - direct.table).max() < 1e-13

    def test_table_shape_checked(self):
        with pytest.raises(ValueError):
            BivariateGridMeasure(0.5, 4, np.zeros((5, 5)))


class TestScaling:
    @pytest.mark.parametrize("theta", [0.4, 0.85])
    def test_diagonal_invariant(self, theta):
        K = 30
        s = scale_bivariate(diagonal_measure(theta, K), theta)
        assert s.K == K - 1
        assert np.abs(s.table - diagonal_measure(theta, K - 1).table).max() < 1e-14

    def test_identity(self, solution_085):
        _, m = solution_085
        assert scale_bivariate(m, 1.0) is m

    def test_solution_invariant(self, solution_085):
        sig, m = solution_085
        for l in (1, 3):
            s = scale_bivariate(m, 0.85 ** l)
            ref = from_signature(sig, K=m.K - l)
            assert np.abs(s.table - ref.table).max() < 1e-10

    def test_off_grid_factor(self):
        with pytest.raises(ValueError):
            scale_bivariate(diagonal_measure(0.5, 10), 0.3)

    def test_not_scalable(self):
        th, K = 0.5, 6
        t = np.zeros((K + 2, K + 2))
        t[K, K] = 1.0   # all mass at (x_{K-1}, x_{K-1}) breaks the joint cumulative bound
        with pytest.raises(NotScalable):
            scale_bivariate(BivariateGridMeasure(th, K, t), th)


class TestFOperator:
    @pytest.mark.parametrize("theta", [0.3, 0.7])
    def test_constant_fixed_point(self, theta):
        s = constant_signature(theta, 200)
        for n in range(30):
            assert apply_F_operator(s, None, n) == pytest.approx(1 / (1 + theta), abs=1e-13)

    def test_solution_fixed_point(self, solution_085):
        sig, _ = solution_085
        for n in range(31):
            assert abs(apply_F_operator(sig, None, n) - sig.values[n]) < 1e-8

    def test_tail_too_loose(self):
        s = compute_signature(0.9, 0.05, 12)
        with pytest.raises(TailTooLoose):
            apply_F_operator(s, None, 2)

    def test_matches_atom_route(self):
        rng = np.random.default_rng(11)
        th = 0.6
        K = default_K(th)
        sig = oracles.random_admissible_signature(rng, th, N=2 * K + 20)
        from frozen_rde.dynamics import apply_T2
        atom = signature_of(apply_T2(from_signature(sig, K=K)))
        for n in range(0, K, 5):
            assert apply_F_operator(sig, None, n) == pytest.approx(atom[n], abs=1e-12)
