from __future__ import annotations

import json

import numpy as np
import pytest

import setfix
from setfix import (
    ContractionCertificate,
    ContractionParams,
    IntervalUnion,
    ParameterRangeError,
    StrictFixedPointMismatchError,
    certify_contraction,
    corollary_k,
    dist_point_to_set,
    displacement_constant_L,
    hausdorff,
    retraction_displacement_check,
    sup_gap_ratio_l,
    sup_ratio_l,
)
from oracles import random_subunion


class TestCertifyContraction:
    def test_sqrt_infeasible_with_witness(self, sqrt_t):
        cert = certify_contraction(sqrt_t, "ciric", 501)
        assert not cert.feasible
        assert cert.params is None
        # the witness pair alone forces alpha + beta >= 4/3 over the simplex
        assert abs(cert.witness.x - 0.25) <= 1e-3
        assert abs(cert.witness.y - 1.0) <= 1e-3
        assert cert.witness.bound >= 4.0 / 3.0 - 1e-9

    def test_sqrt_perturbed_feasible_pinned(self, sqrt_tg_cert):
        # regression pin from the reference run at grid 501
        cert = sqrt_tg_cert
        assert cert.feasible
        assert cert.margin >= 0.0
        assert cert.params == ContractionParams(0.875, 0.0, 0.0, "ciric")
        assert abs(cert.margin - 1.7512514408069002e-06) <= 1e-12
        assert cert.witness is None

    def test_constant_operator_trivially_feasible(self, sqrt_t):
        c = setfix.constant_operator(sqrt_t.domain, 1.0)
        cert = certify_contraction(c, "ciric", 101)
        assert cert.feasible
        assert cert.params.total == 0.0
        assert cert.margin == 0.0

    def test_square_infeasible_jointly(self, square_t, square_tg):
        # no single pair forbids the simplex here (bound < 1): the mirrored
        # pair family does, so the search exhausts and reports the hardest pair
        for op in (square_t, square_tg):
            cert = certify_contraction(op, "ciric", 301)
            assert not cert.feasible
            assert cert.witness.bound < 1.0

    def test_linear_example_feasible(self, linear_tg_cert):
        cert = linear_tg_cert
        assert cert.feasible
        assert cert.margin >= 0.0
        k = corollary_k(cert.params)
        assert k.in_unit
        assert 0.75 - 1e-9 <= k.value <= 0.76

    def test_other_variants_smoke(self, linear_tg):
        for variant in ("ciric_reich_rus", "combined"):
            cert = certify_contraction(linear_tg, variant, 201)
            assert cert.feasible
            assert cert.params.variant == variant
            assert cert.params.alpha + 2 * cert.params.beta < 1.0

    def test_feasible_certificate_revalidates(self, sqrt_tg, sqrt_tg_cert):
        # fresh random pairs must satisfy the certified constraint
        p = sqrt_tg_cert.params
        rng = np.random.default_rng(42)
        b = sqrt_tg.domain.bounds
        xs = rng.uniform(b.lo, b.hi, size=10_000)
        ys = rng.uniform(b.lo, b.hi, size=10_000)
        for x, y in zip(xs, ys):
            tx, ty = sqrt_tg.eval(float(x)), sqrt_tg.eval(float(y))
            lhs = hausdorff(tx, ty)
            rhs = (p.alpha * abs(x - y)
                   + p.beta * dist_point_to_set(float(x), ty)
                   + p.gamma * dist_point_to_set(float(y), tx))
            assert lhs <= rhs + 1e-9

    def test_errors(self, sqrt_t):
        with pytest.raises(setfix.DegenerateDomainError):
            certify_contraction(sqrt_t, "ciric", 1)
        with pytest.raises(ParameterRangeError):
            certify_contraction(sqrt_t, "bogus", 101)
        with pytest.raises(ParameterRangeError):
            certify_contraction(sqrt_t, "ciric", 101, margin_req=-1.0)

    def test_margin_requirement_tightens_search(self, linear_tg):
        assert certify_contraction(linear_tg, "ciric", 101, margin_req=0.0).feasible
        strict = certify_contraction(linear_tg, "ciric", 101, margin_req=10.0)
        assert not strict.feasible  # nothing attains a 10x-scale slack

    def test_certificate_json_round_trip(self, sqrt_tg_cert, sqrt_t):
        for cert in (sqrt_tg_cert, certify_contraction(sqrt_t, "ciric", 101)):
            blob = json.loads(json.dumps(cert.to_json()))
            assert set(blob) == {"feasible", "alpha", "beta", "gamma", "margin",
                                 "witness", "grid_n", "skipped"}
            clone = ContractionCertificate.from_json(blob)
            assert clone.feasible == cert.feasible
            assert clone.params == cert.params
            assert clone.margin == cert.margin
            assert clone.witness == cert.witness


class TestContractionParams:
    def test_ciric_simplex(self):
        ContractionParams(0.5, 0.2, 0.2)
        with pytest.raises(ParameterRangeError):
            ContractionParams(0.5, 0.3, 0.3)
        with pytest.raises(ParameterRangeError):
            ContractionParams(-0.1, 0.0, 0.0)

    def test_crr_simplex(self):
        # alpha + 2*beta < 1; gamma free up to the search cap
        ContractionParams(0.5, 0.2, 0.9, "ciric_reich_rus")
        with pytest.raises(ParameterRangeError):
            ContractionParams(0.7, 0.2, 0.0, "ciric_reich_rus")


class TestCorollaryK:
    def test_values(self):
        assert abs(corollary_k(ContractionParams(0.5, 0.1, 0.2)).value - 0.75) <= 1e-12
        assert corollary_k(ContractionParams(0.0, 0.0, 0.0)).value == 0.0
        k = corollary_k(ContractionParams(0.3, 0.3, 0.3))
        assert abs(k.value - 6.0 / 7.0) <= 1e-12
        assert k.in_unit

    def test_gamma_range(self):
        # the crr simplex leaves gamma unconstrained, so this is constructible
        p = ContractionParams(0.1, 0.1, 1.0, "ciric_reich_rus")
        with pytest.raises(ParameterRangeError):
            corollary_k(p)

    def test_pointwise_bound_on_grid(self, sqrt_tg, sqrt_tg_cert):
        # H(T_G(x), {x*}) <= k |x - x*| realized on the grid
        k = corollary_k(sqrt_tg_cert.params).value
        point = IntervalUnion.singleton(1.0)
        for x in sqrt_tg.domain.grid(2001):
            x = float(x)
            assert hausdorff(sqrt_tg.eval(x), point) <= k * abs(x - 1.0) + 1e-9


class TestSupRatioL:
    def test_identity_perturbation_gives_one(self, sqrt_t):
        tg = setfix.perturb(sqrt_t, setfix.GeneralG(a=0.0, b=1.0))
        sup = sup_ratio_l(sqrt_t, tg, 1.0, 1001)
        assert sup.value == 1.0

    def test_square_value(self, square_t, square_tg):
        sup = sup_ratio_l(square_t, square_tg, 0.0, 10_001)
        assert abs(sup.value - 16.0 / 17.0) <= 1e-9
        assert abs(abs(sup.arg) - 8.0 / 9.0) <= 1e-9  # attained at the boundary

    def test_sqrt_value_exceeds_one(self, sqrt_t, sqrt_tg):
        sup = sup_ratio_l(sqrt_t, sqrt_tg, 1.0, 2001)
        assert abs(sup.value - 16.0 / 9.0) <= 1e-12
        assert sup.value > 1.0

    def test_mismatch_rejected(self, sqrt_t, sqrt_tg):
        with pytest.raises(StrictFixedPointMismatchError):
            sup_ratio_l(sqrt_t, sqrt_tg, 2.0, 101)

    def test_weak_variant_trivial_here(self, sqrt_t, sqrt_tg):
        # x* belongs to every value T(x), so the gap-based numerator vanishes
        sup = sup_gap_ratio_l(sqrt_t, sqrt_tg, 1.0, 1001)
        assert sup.value == 0.0
        assert sup.skipped == 1  # only x = x* itself


class TestDisplacementL:
    def test_takahashi_identity(self, sqrt_t, sqrt_tg, square_t, square_tg):
        assert abs(displacement_constant_L(sqrt_t, sqrt_tg, 2001).value - 0.25) <= 1e-12
        assert abs(displacement_constant_L(square_t, square_tg, 2001).value - 0.5) <= 1e-12

    def test_generic_lambda(self, sqrt_t):
        tw = setfix.perturb(sqrt_t, setfix.Takahashi(0.61))
        assert abs(displacement_constant_L(sqrt_t, tw, 2001).value - 0.39) <= 1e-12

    def test_identity_perturbation(self, sqrt_t):
        tg = setfix.perturb(sqrt_t, setfix.GeneralG(a=0.0, b=1.0))
        assert displacement_constant_L(sqrt_t, tg, 1001).value == 1.0


class TestRetractionDisplacement:
    def test_sqrt(self, sqrt_t, sqrt_tg_cert):
        res = retraction_displacement_check(sqrt_t, sqrt_tg_cert.params, 0.25,
                                            1.0, 2001)
        assert res.holds
        assert res.xi_max > 0.9

    def test_square_with_explicit_params(self, square_t):
        params = ContractionParams(0.9, 0.0, 0.0)
        res = retraction_displacement_check(square_t, params, 0.5, 0.0, 2001)
        assert res.holds
        assert res.xi_max > 1e-6

    def test_errors(self, sqrt_t, sqrt_tg_cert):
        with pytest.raises(ParameterRangeError):
            retraction_displacement_check(sqrt_t, sqrt_tg_cert.params, 0.0, 1.0, 101)


class TestGeometricDecay:
    def test_decay_bound_on_linear_example(self, linear_t, linear_tg,
                                           linear_tg_cert):
        # premise: l < 1 and a feasible perturbed certificate
        l = sup_ratio_l(linear_t, linear_tg, 0.0, 2001).value
        k = corollary_k(linear_tg_cert.params).value
        assert l < 1.0 and l * k < 1.0
        trace = setfix.picard_orbit(linear_t, 1.0, max_n=30, tol=1e-300, target=0.0)
        lk = l * k
        for step in trace.steps[1:]:
            assert step.h_to_target <= lk ** step.n * 1.0 + 1e-9

    def test_set_lifting_bounds(self, linear_t, linear_tg, square_t, square_tg):
        # whenever the pointwise ratios hold on a grid, the set-level bounds
        # follow for arbitrary compact arguments
        rng = np.random.default_rng(5)
        for t, tg, xstar in ((linear_t, linear_tg, 0.0), (square_t, square_tg, 0.0)):
            l = sup_ratio_l(t, tg, xstar, 2001).value
            point = IntervalUnion.singleton(xstar)
            k = max(
                hausdorff(tg.eval(float(x)), point) / abs(float(x) - xstar)
                for x in t.domain.grid(2001) if abs(float(x) - xstar) > 1e-9)
            for _ in range(100):
                y = random_subunion(rng, t.domain.bounds)
                h_ty = hausdorff(t.set_image(y), point)
                h_tgy = hausdorff(tg.set_image(y), point)
                assert h_ty <= l * h_tgy + 1e-9
                assert h_tgy <= k * hausdorff(y, point) + 1e-9


def test_thread_env_does_not_change_results(sqrt_tg, monkeypatch):
    baseline = certify_contraction(sqrt_tg, "ciric", 151).to_json()
    monkeypatch.setenv("SETFIX_THREADS", "4")
    threaded = certify_contraction(sqrt_tg, "ciric", 151).to_json()
    monkeypatch.setenv("SETFIX_THREADS", "1")
    serial = certify_contraction(sqrt_tg, "ciric", 151).to_json()
    assert baseline == threaded == serial
