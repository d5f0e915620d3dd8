import numpy as np
import pytest

from bubblelab import bubbles as bb
from bubblelab import interactions as ia
from bubblelab.bubbles import BubbleParams
from bubblelab.domain import unit_ball


class TestPairQuantities:
    def test_formula_examples(self):
        b_i = BubbleParams(3, 0.1)
        b_j = BubbleParams(3, 0.1, np.array([0.1, 0, 0]))
        pq = ia.pair_quantities(b_i, b_j)
        assert pq.q == pytest.approx(3.0 ** (-0.5), rel=1e-12)
        far = ia.pair_quantities(b_i, BubbleParams(3, 0.1, np.array([0.3, 0, 0])))
        assert far.regime == "distance-dominated"

    def test_coincident_equal(self):
        for n in (3, 5):
            b = BubbleParams(n, 0.2)
            pq = ia.pair_quantities(b, BubbleParams(n, 0.2))
            assert pq.q == pytest.approx(2.0 ** (-(n - 2) / 2.0), rel=1e-12)

    def test_scale_dominated(self):
        b_i = BubbleParams(5, 1e-2)
        b_j = BubbleParams(5, 1e-4)
        pq = ia.pair_quantities(b_i, b_j)
        assert pq.q == pytest.approx((1e-2 / 1e-4 + 1e-4 / 1e-2) ** (-1.5), rel=1e-12)
        assert pq.q == pytest.approx(1e-3, rel=0.01)
        assert pq.regime == "scale-dominated-i"

    def test_separation_vs_q(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.choice([3, 4, 5, 7]))
            b_i = BubbleParams(n, float(rng.uniform(0.01, 1.0)), rng.standard_normal(n) * 0.3)
            b_j = BubbleParams(n, float(rng.uniform(0.01, 1.0)), rng.standard_normal(n) * 0.3)
            pq = ia.pair_quantities(b_i, b_j)
            ratio = pq.separation / pq.q ** (-1.0 / (n - 2.0))
            assert 1.0 / np.sqrt(3.0) - 1e-9 <= ratio <= 1.0 + 1e-9


class TestLpNorms:
    def test_wholespace_divergence_guard(self):
        with pytest.raises(ValueError):
            ia.bubble_lp_norm(BubbleParams(3, 0.1), None, 1.0)

    def test_subcritical_exponent(self):
        fitted, expected, case = ia.fit_lp_scaling(
            BubbleParams(3, 1.0), unit_ball(3), 1.0, np.array([0.2, 0.1, 0.05, 0.025])
        )
        assert case == "subcritical" and expected == 0.5
        assert abs(fitted - expected) <= 0.05

    def test_log_case_exponent(self):
        fitted, expected, case = ia.fit_lp_scaling(
            BubbleParams(3, 1.0), unit_ball(3), 3.0, np.array([0.2, 0.1, 0.05, 0.025])
        )
        assert case == "log" and expected == 1.5
        assert abs(fitted - expected) <= 0.05

    def test_supercritical_plateau(self):
        n = 5
        p1 = bb.critical_exponent(n) + 1.0
        fitted, expected, case = ia.fit_lp_scaling(
            BubbleParams(n, 1.0), unit_ball(n), p1, np.array([0.2, 0.1, 0.05, 0.025])
        )
        assert case == "supercritical" and expected == 0.0
        assert abs(fitted) <= 0.05

    def test_critical_norm_matches_wholespace(self):
        n = 5
        p1 = bb.critical_exponent(n) + 1.0
        whole, _ = ia.bubble_lp_norm(BubbleParams(n, 0.01), None, p1)
        ball, _ = ia.bubble_lp_norm(BubbleParams(n, 0.01), unit_ball(n), p1)
        assert ball == pytest.approx(whole, rel=1e-3)


class TestCrossIntegrals:
    def test_reduction_to_lp(self):
        n = 4
        two_star = 2.0 * n / (n - 2.0)
        b = BubbleParams(n, 0.1)
        v1, _ = ia.cross_integral(b, BubbleParams(n, 0.3), two_star, 0.0, unit_ball(n))
        v2, _ = ia.bubble_lp_norm(b, unit_ball(n), two_star)
        assert v1 == pytest.approx(v2, rel=1e-9)

    def test_swap_symmetry(self):
        n = 3
        b_i = BubbleParams(n, 0.1, np.array([0.2, 0, 0]))
        b_j = BubbleParams(n, 0.05, np.array([-0.2, 0.1, 0]))
        s, t = 4.0, 2.0
        v1, e1 = ia.cross_integral(b_i, b_j, s, t, seed=3)
        v2, e2 = ia.cross_integral(b_j, b_i, t, s, seed=4)
        assert abs(v1 - v2) <= 4.0 * (e1 + e2)

    def test_coincident_qlog_growth(self):
        slope, expected = ia.coincident_qlog_fit(3, ratios=(0.02, 0.01, 0.005, 0.0025))
        assert abs(slope - expected) / expected <= 0.10

    def test_case1_distance_bound(self):
        # p against 1, n = 5, separated equal scales: value ~ delta^2 delta^{3/2} / d^2
        n = 5
        p = bb.critical_exponent(n)
        ratios = []
        for d, dl in ((0.5, 0.02), (0.5, 0.01), (0.8, 0.02), (0.8, 0.01)):
            xi_j = np.zeros(n)
            xi_j[0] = d
            v, err = ia.cross_integral(
                BubbleParams(n, dl), BubbleParams(n, dl, xi_j), p, 1.0, seed=11, n_samples=600_000
            )
            assert err <= 0.05 * abs(v)
            ratios.append(v / (dl**2 * dl**1.5 / d**2))
        ratios = np.array(ratios)
        assert np.max(ratios) / np.min(ratios) <= 3.0


class TestRieszPotential:
    def test_small_alpha_uniform_exponent(self):
        n, alpha = 3, 1.0
        deltas = np.array([0.05, 0.025, 0.0125, 0.00625])
        for r_x in (0.0, 0.3, 0.9):
            vals = [ia.riesz_potential_profile(n, alpha, d, r_x)[0] for d in deltas]
            slope = np.polyfit(np.log(deltas), np.log(vals), 1)[0]
            assert abs(slope - 0.5) <= 0.05

    def test_middle_alpha_ratio_bounded(self):
        n, alpha = 5, 4.0
        ratios = []
        for d in (0.1, 0.05, 0.025):
            for r_x in (0.0, 0.05, 0.2, 0.6):
                v, _ = ia.riesz_potential_profile(n, alpha, d, r_x)
                ratios.append(v / (d**2 / (d**2 + r_x**2)))
        ratios = np.array(ratios)
        assert np.max(ratios) / np.min(ratios) <= 50.0

    def test_log_alpha_case(self):
        n = alpha = 4
        deltas = np.array([0.1, 0.05, 0.025, 0.0125, 0.00625])
        # at x = xi: pure power delta^{(4-n)/2} = constant in n = 4
        vals = [ia.riesz_potential_profile(n, alpha, d, 0.0)[0] for d in deltas]
        slope = np.polyfit(np.log(deltas), np.log(vals), 1)[0]
        assert abs(slope - 0.0) <= 0.05
        # at fixed x: v = delta^{n/2} (a log(1/delta) + b); the rescaled values
        # must be linear in log(1/delta) with positive slope, which also drags
        # the raw log-log slope strictly below n/2
        r_x = 0.3
        vals = np.array([ia.riesz_potential_profile(n, alpha, d, r_x)[0] for d in deltas])
        y = vals / deltas ** (n / 2.0)
        a, b = np.polyfit(np.log(1.0 / deltas), y, 1)
        resid = np.max(np.abs(a * np.log(1.0 / deltas) + b - y)) / np.max(y)
        assert a > 0 and resid <= 0.02
        raw = np.polyfit(np.log(deltas), np.log(vals), 1)[0]
        assert n / 2.0 - 0.5 <= raw <= n / 2.0 - 0.02


class TestStructuralConstants:
    def test_positivity_with_margin(self):
        for n in (3, 4, 5, 6, 7):
            sc = ia.structural_constants(n)
            for name, _, value, stderr, _ in sc.as_rows():
                assert value > 0, name
                assert value > 3 * stderr, name

    def test_an_oracle_identity(self):
        # a_n = p int U^{p-1} Z^0 = (n-2)/2 int U^p by the dilation identity
        for n in (3, 4, 5, 7):
            sc = ia.structural_constants(n)
            b = BubbleParams(n, 1.0)
            p = b.p
            up, _ = bb.radial_integral(lambda r: bb.eval_bubble_radial(b, r) ** p, n)
            assert sc.a_n.value == pytest.approx((n - 2) / 2.0 * up, rel=1e-9)

    def test_bn_oracle_identity(self):
        # int U Z^0 = int U^2 for n >= 5 by the same dilation identity
        for n in (5, 6, 7):
            sc = ia.structural_constants(n)
            b = BubbleParams(n, 1.0)
            u2, _ = bb.radial_integral(lambda r: bb.eval_bubble_radial(b, r) ** 2, n)
            assert sc.b_n.value == pytest.approx(u2, rel=1e-9)

    def test_cn_consistency(self):
        for n in (3, 5):
            sc = ia.structural_constants(n)
            assert sc.c_n.value == pytest.approx(bb.dimensional_constant(n) * sc.a_n.value, rel=1e-8)

    def test_bn_rejects_n4(self):
        with pytest.raises(ValueError):
            ia.bn_or_b4(3)
        assert ia.bn_or_b4(4).value == pytest.approx(
            3 * np.sqrt(2) * ia.structural_constants(4).upz_margin.value, rel=1e-12
        )
        assert ia.bn_or_b4(5).value == ia.structural_constants(5).b_n.value

    def test_csv_rows(self):
        rows = ia.constants_csv_rows((3, 5))
        assert rows[0] == ("constant", "n", "value", "stderr", "method")
        names = {(r[0], r[1]) for r in rows[1:]}
        assert ("b3", 3) in names and ("bbar5", 5) in names


class TestDnEstimate:
    def test_dn_positive_and_matches_kernel_oracle(self):
        # d_n = (n-2)/2 * a_n int U^p |x|^{2-n} (far-field kernel of the bubble)
        for n in (3, 5):
            dn, resid = ia.estimate_dn(n, seed=5)
            assert dn > 0 and resid < 0.1
            b = BubbleParams(n, 1.0)
            kernel, _ = bb.radial_integral(
                lambda r: bb.eval_bubble_radial(b, r) ** b.p * r ** (2.0 - n), n
            )
            expected = (n - 2) / 2.0 * bb.dimensional_constant(n) * kernel
            assert dn == pytest.approx(expected, rel=0.08)


class TestProjectionPrediction:
    def test_n5_laplace_center(self):
        lam = 2.0
        sc = ia.structural_constants(5)
        pred = ia.projection_prediction(5, "pu1", lam, 0.05, 0.0, 1.0)
        expected = lam * sc.b_n.value * 0.05**2 - sc.c_n.value * 1.0 * 0.05**3
        assert pred.dilation == pytest.approx(expected, rel=1e-12)
        assert pred.phi_variant == "laplace"

    def test_n3_shifted(self):
        sc = ia.structural_constants(3)
        phi_lam = -0.8
        pred = ia.projection_prediction(3, "pu2", 3.0, 0.1, 0.0, phi_lam)
        assert pred.dilation == pytest.approx(-sc.c_n.value * phi_lam * 0.1, rel=1e-12)

    def test_refusals(self):
        with pytest.raises(ia.RegimeRefusal):
            ia.projection_prediction(3, "pu1", 1.0, 0.1, 0.0, 1.0)
        with pytest.raises(ia.RegimeRefusal):
            ia.projection_prediction(4, "pu1", 1.0, 0.1, 0.0, 1.0)
        with pytest.raises(ia.RegimeRefusal):
            ia.projection_prediction(6, "pu2", 1.0, 0.1, 0.0, 1.0)
        with pytest.raises(ia.RegimeRefusal):
            ia.projection_prediction(4, "pu2", 1.0, 0.1, 0.5, 1.0)

    def test_background_dominates(self):
        pred = ia.projection_prediction(3, "pu1", 1.0, 0.01, 2.0, 1.0)
        assert pred.dilation == pytest.approx(
            ia.structural_constants(3).a_n.value * 2.0 * 0.1 - ia.structural_constants(3).c_n.value * 0.01,
            rel=1e-9,
        )


class TestElementaryInequalities:
    def test_all_constants_modest(self):
        consts = ia.verify_elementary_inequalities(seed=7, trials=100_000)
        assert set(consts) == {
            "split_power_s_le_2",
            "split_power_s_gt_2",
            "increment",
            "first_order_remainder",
            "second_order_remainder",
            "signed_first_order",
        }
        for name, c in consts.items():
            assert np.isfinite(c) and c <= 1e3, (name, c)

    def test_seed_reproducibility(self):
        c1 = ia.verify_elementary_inequalities(seed=7, trials=20_000)
        c2 = ia.verify_elementary_inequalities(seed=7, trials=20_000)
        assert c1 == c2
