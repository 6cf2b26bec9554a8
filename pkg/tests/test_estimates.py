import math

import numpy as np
import pytest

from fraclab.estimates import (
    classify_regime,
    grzywny_integral,
    grzywny_scan,
    mvt_check,
    mvt_ratio,
    tobias_integral,
    tobias_scan,
)

ALPHA_BETA = [0.4, 0.7, 1.0, 1.3, 1.6]
LAM_A = [0.2, 0.35, 0.5, 0.65, 0.8]


def _expected(e):
    if abs(e) < 1e-12:
        return "logarithmic"
    return "bounded" if e > 0 else "power"


class TestClassifier:
    def test_synthetic(self):
        r = np.geomspace(1e-1, 1e-5, 12)
        assert classify_regime(r, 3 + r**0.5)["label"] == "bounded"
        assert classify_regime(r, 3 - 2 * np.log(r))["label"] == "logarithmic"
        cls = classify_regime(r, 1 + r**-0.4)
        assert cls["label"] == "power"
        assert cls["increment_slope"] == pytest.approx(-0.4, abs=1e-10)

    def test_order_independent(self):
        r = np.geomspace(1e-1, 1e-5, 12)
        v = 1 + r**-0.4
        assert classify_regime(r[::-1], v[::-1]) == classify_regime(r, v)


class TestGrzywny:
    def test_bounded_example(self):
        rep = grzywny_scan(0.5, 0.5)
        assert rep.regime_label == "bounded"
        assert rep.sample_meta["max_min_ratio"] <= 2

    def test_log_example(self):
        rep = grzywny_scan(1.5, 0.5)
        assert rep.regime_label == "logarithmic" and rep.fit_r2 >= 0.99

    def test_power_example(self):
        rep = grzywny_scan(1.5, 1.0)
        assert rep.regime_label == "power"
        assert rep.fitted_exponent == pytest.approx(-0.5, abs=0.05)

    def test_swap_invariance(self):
        x, y = np.array([0.3, -0.1]), np.array([-0.2, 0.25])
        a = grzywny_integral(1.2, 0.6, x, y)
        b = grzywny_integral(0.6, 1.2, y, x)
        assert abs(a.value - b.value) <= 2 * (a.err_est + b.err_est) + 1e-8 * abs(a.value)

    def test_far_apart_constant(self):
        # α = β = 0 gives the area of the ball
        assert grzywny_integral(0.0, 0.0, [0.5, 0.0], [-0.5, 0.0]).value == pytest.approx(math.pi, rel=1e-8)

    def test_three_dimensions(self):
        # α = 0: ∫_{B_1} |y - z|^{-β} dz at y = 0 equals 4π/(3 - β)
        val = grzywny_integral(0.0, 1.0, [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]).value
        assert val == pytest.approx(4 * math.pi / 2, rel=1e-6)

    def test_domain(self):
        with pytest.raises(ValueError):
            grzywny_scan(2.0, 0.5)
        with pytest.raises(ValueError):
            grzywny_integral(0.5, 0.5, [0.1, 0.0], [0.1, 0.0])

    @pytest.mark.parametrize("alpha", ALPHA_BETA)
    def test_regime_grid(self, alpha):
        for beta in ALPHA_BETA:
            rep = grzywny_scan(alpha, beta)
            e = 2 - alpha - beta
            assert rep.regime_label == _expected(e), (alpha, beta)
            if rep.regime_label == "power":
                assert rep.fitted_exponent == pytest.approx(e, abs=0.05)
            if rep.regime_label == "logarithmic":
                assert rep.fit_r2 >= 0.99


class TestTobias:
    def test_bounded_example(self):
        rep = tobias_scan(0.6, 0.3)
        assert rep.regime_label == "bounded"
        assert rep.sample_meta["max_min_ratio"] <= 2

    def test_log_example(self):
        rep = tobias_scan(0.4, 0.4)
        assert rep.regime_label == "logarithmic" and rep.fit_r2 >= 0.99

    def test_power_example(self):
        rep = tobias_scan(0.3, 0.6)
        assert rep.regime_label == "power"
        assert rep.fitted_exponent == pytest.approx(-0.3, abs=0.03)

    def test_center_closed_form(self):
        # x = 0: 2π ∫_0^1 r^{λ-1} (1-r)^{-a} dr = 2π B(λ, 1-a)
        lam, a = 0.5, 0.4
        ref = 2 * math.pi * math.gamma(lam) * math.gamma(1 - a) / math.gamma(lam + 1 - a)
        assert tobias_integral(lam, a, [0.0, 0.0]).value == pytest.approx(ref, rel=1e-8)

    def test_domain(self):
        with pytest.raises(ValueError):
            tobias_scan(1.2, 0.5)
        with pytest.raises(ValueError):
            tobias_integral(0.5, 0.5, [1.0, 0.0])

    @pytest.mark.parametrize("lam", LAM_A)
    def test_regime_grid(self, lam):
        for a in LAM_A:
            rep = tobias_scan(lam, a)
            assert rep.sample_meta["converged"]
            assert rep.regime_label == _expected(lam - a), (lam, a)
            if rep.regime_label == "power":
                assert rep.fitted_exponent == pytest.approx(lam - a, abs=0.05)
            if rep.regime_label == "logarithmic":
                assert rep.fit_r2 >= 0.99


class TestMVT:
    def test_equal_points(self):
        assert mvt_ratio([1.0, 2.0], [1.0, 2.0], 2.0)[0] == 0.0

    def test_w_zero(self):
        r = mvt_ratio([[3.0, 4.0]], [[0.0, 0.0]], 1.5)[0]
        # |u|^λ / (λ · 2|u|^λ)
        assert r == pytest.approx(1 / 3, rel=1e-14)

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_random_draws(self, dim):
        passed, worst = mvt_check(100_000, dim=dim, lambda_range=(1.0, 3.0))
        assert passed and worst <= 1 + 1e-12

    def test_seeded(self):
        assert mvt_check(1000, seed=5) == mvt_check(1000, seed=5)

    def test_domain(self):
        with pytest.raises(ValueError):
            mvt_check(10, lambda_range=(0.5, 2.0))
