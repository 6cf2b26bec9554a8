import math

import numpy as np
import pytest

from fraclab.green import make_green
from fraclab.poisson import (
    NormScan,
    exponents,
    f_beta,
    flap_solution,
    g_functions,
    gagliardo_seminorm,
    hardy_norms,
    lp_norm,
    norm_scan,
    shell_table,
    smooth_bump,
    solve_green,
    threshold_detect,
    weak_lp,
    weighted_norms,
)
from fraclab.quadrature import ScalarField
from fraclab.specfun import FracParams, norm_const_laplacian
from fraclab.torsion import make_torsion, torsion_field, torsion_flap_closed, torsion_flap_field, torsion_u

ONE = ScalarField.constant(1.0)
ZERO = ScalarField.from_profile(lambda w: np.zeros_like(w), boundary_exponent=0.0, name="zero")


@pytest.fixture(scope="module")
def k06():
    return make_green(2, 0.6)


@pytest.fixture(scope="module")
def u_one(k06):
    return solve_green(ONE, k06)


class TestExponents:
    def test_example(self):
        ex = exponents(FracParams(N=2, s=0.5, t=0.7, m=1.5), 0.7)
        assert ex.p_star == pytest.approx(3 / 1.85, rel=1e-12)

    def test_equal_orders(self):
        ex = exponents(FracParams(N=2, s=0.5, t=0.5, m=1.5), 0.5)
        assert ex.p_star == pytest.approx(1.5 * 2 / (2 - 0.75), rel=1e-12)

    def test_bounded_data(self):
        ex = exponents(FracParams(N=2, s=0.5, t=0.7), 0.7)
        assert ex.p_star == pytest.approx(5.0)
        assert math.isinf(ex.r_of_m) and math.isinf(ex.q_of_m) and ex.high_integrability

    def test_m_one_open(self):
        ex = exponents(FracParams(N=2, s=0.6, t=0.8, m=1.0), 0.8)
        assert ex.r_open and ex.r_of_m == pytest.approx(2 / (2 - 1.2))
        assert ex.q_open and ex.q_of_m == pytest.approx(2 / (2 - 0.6))

    def test_critical_m(self):
        ex = exponents(FracParams(N=2, s=0.5, t=0.5, m=2.0), 0.5)
        assert math.isinf(ex.r_of_m) and ex.r_open

    def test_rejects_large_t(self):
        with pytest.raises(ValueError):
            exponents(FracParams(N=2, s=0.4, t=0.7), 0.8)

    def test_monotone_in_m(self):
        ps = [exponents(FracParams(N=2, s=0.6, t=0.8, m=m), 0.8).p_star for m in np.linspace(1, 10, 40)]
        assert np.all(np.diff(ps) >= -1e-12)


class TestSolveGreen:
    def test_zero(self, k06):
        u = solve_green(ZERO, k06)
        assert np.all(u(np.array([[0.0, 0.0], [0.5, 0.2]])) == 0.0)

    @pytest.mark.parametrize("r", [0.0, 0.5, 0.99, 1 - 1e-6])
    def test_constant_data_is_torsion(self, u_one, r):
        x = np.array([r, 0.0])
        cf = make_torsion(FracParams(2, 0.6))
        assert u_one(x[None, :])[0] == pytest.approx(torsion_u(cf, x), rel=1e-6)

    def test_positivity(self, k06):
        u = solve_green(smooth_bump(2), k06, per_decade=4, delta_min=1e-6)
        r = np.linspace(0, 0.999, 30)
        v = u(np.stack([r, np.zeros_like(r)], 1))
        assert np.all(v > 0)

    def test_scaling(self, k06):
        u1 = solve_green(ONE, k06, per_decade=4, delta_min=1e-6)
        u2 = solve_green(ONE.scaled(2.5), k06, per_decade=4, delta_min=1e-6)
        x = np.array([[0.3, 0.0], [0.8, 0.0]])
        assert np.allclose(u2(x), 2.5 * u1(x), rtol=1e-10)

    def test_dimension_mismatch(self, k06):
        with pytest.raises(ValueError):
            solve_green(ScalarField.constant(1.0, N=3), k06)


class TestFlapSolution:
    def test_operator_path(self, k06, u_one):
        x = np.array([0.3, 0.0])
        ref = torsion_flap_closed(make_torsion(FracParams(2, 0.6, 0.8)), 0.8, x)
        assert flap_solution(ONE, k06, 0.8, x).value == pytest.approx(ref, rel=1e-5)

    def test_kernel_path(self, k06):
        x = np.array([0.3, 0.0])
        ref = torsion_flap_closed(make_torsion(FracParams(2, 0.6, 0.8)), 0.8, x)
        res = flap_solution(ONE, k06, 0.8, x, path="kernel", n_theta=8, n_r=8)
        assert res.value == pytest.approx(ref, rel=1e-4)

    def test_bad_arguments(self, k06):
        with pytest.raises(ValueError):
            flap_solution(ONE, k06, 0.8, np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            flap_solution(ONE, k06, 0.8, np.array([0.2, 0.0]), path="other")


class TestNorms:
    def test_constant(self):
        assert lp_norm(ONE, 2).norm_estimate == pytest.approx(math.sqrt(math.pi), rel=1e-10)

    def test_boundary_power_finite(self):
        # ∫_{B_1} (1-|x|)^{-1/2} dx = 2π B(2, 1/2) = 8π/3
        e = lp_norm(f_beta(0.25), 2)
        assert e.converged
        assert e.norm_estimate == pytest.approx(math.sqrt(8 * math.pi / 3), rel=1e-8)

    def test_boundary_power_log_divergent(self):
        e = lp_norm(f_beta(0.25), 4)
        assert not e.converged
        assert abs(e.slope) <= 1e-6

    def test_sup_norm(self):
        assert lp_norm(ONE, math.inf).converged
        assert not lp_norm(f_beta(0.25), math.inf).converged

    def test_single_shell(self):
        e = lp_norm(ONE, 1, region=("shell", 3))
        assert e.norm_estimate == pytest.approx(math.pi * ((1 - 2**-4) ** 2 - (1 - 2**-3) ** 2), rel=1e-10)

    def test_exterior_region(self):
        f = ScalarField.from_function(lambda p: np.ones(p.shape[:-1]))
        e = lp_norm(f, 1, region="exterior", K=40)
        assert e.norm_estimate == pytest.approx(math.pi * (2.0**2 - 1.0), rel=1e-8)

    def test_bad_region(self):
        with pytest.raises(ValueError):
            lp_norm(ONE, 2, region="sphere")
        with pytest.raises(ValueError):
            lp_norm(ONE, 0.5)

    @pytest.mark.parametrize("a, p", [(0.5, 2), (0.25, 4)])
    def test_weak_at_endpoint(self, a, p):
        # |{δ^{-a} >= λ}| = π d (2 - d) with d = λ^{-1/a}, so [F]_{M^p} = 2π at p = 1/a;
        # level sets are resolved only to the node spacing inside a dyadic shell
        tab = shell_table(f_beta(a))
        w = weak_lp(tab, p)
        assert 2 * math.pi <= w <= 2 * 2 * math.pi
        assert not lp_norm(f_beta(a), p).converged


class TestThresholds:
    def test_detects_boundary_power(self):
        scan = norm_scan(f_beta(0.4), np.arange(1, 4.01, 0.25))
        assert scan.detected_threshold == pytest.approx(2.5)

    def test_all_converged(self):
        assert norm_scan(ONE, [1, 2, 4, 8]).detected_threshold is None

    def test_too_few_shells(self):
        scan = norm_scan(f_beta(0.4), [1, 2, 3], K=3)
        assert isinstance(scan, NormScan)
        with pytest.raises(ValueError):
            threshold_detect(scan)

    def test_rows_layout(self):
        scan = norm_scan(f_beta(0.4), [1, 2], K=10)
        rows = scan.rows()
        assert len(rows) == 2 * 10
        assert rows[0][:2] == (1.0, scan.entry(1.0).norm_estimate)

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            norm_scan(ONE, [])


class TestWeightedAndHardy:
    def test_weighted_bounded_data(self, k06):
        cf = make_torsion(FracParams(2, 0.6))
        sp, sq = weighted_norms(ONE, k06, 0.8, [1, 4, 16], [1, 4, 16], F_s=torsion_flap_field(cf, 0.6),
                                F_t=torsion_flap_field(cf, 0.8))
        assert all(e.converged for e in sp.norms + sq.norms)
        assert sp.detected_threshold is None and sq.detected_threshold is None

    def test_hardy_bounded_data(self, k06, u_one):
        su, sh = hardy_norms(ONE, k06, r_grid=[1, 4, 16], q_grid=[1, 4, 16], u=u_one)
        assert all(e.converged for e in su.norms + sh.norms)


class TestGFunctions:
    def test_zero(self):
        assert g_functions(ZERO, np.array([0.2, 0.1]), 0.8, s=0.6) == (0.0, 0.0, 0.0)

    def test_center_constant_data(self):
        g1, g2, g3 = g_functions(ONE, np.zeros(2), 0.7, s=0.6)
        a = 1.2 - 0.7
        assert g3 == pytest.approx(2 * math.pi / 0.6, rel=1e-8)
        assert g2 == pytest.approx(2 * math.pi / a, rel=1e-8)
        # ∫_0^1 |log r| r^{a-1} dr = 1/a^2
        assert g1 == pytest.approx(2 * math.pi / a**2, rel=1e-8)


class TestGagliardo:
    def test_zero(self):
        assert gagliardo_seminorm(ZERO, 0.5, 2) == 0.0

    def test_torsion_energy(self):
        # [u]^2_{H^s} = (2/C_{N,s}) ∫ u (-Δ)^s u = (2/C_{N,s}) ∫ u
        cf = make_torsion(FracParams(2, 0.5))
        val, (inner, se, cross) = gagliardo_seminorm(torsion_field(cf), 0.5, 2, return_parts=True)
        ref = 2 / norm_const_laplacian(2, 0.5) * cf.prefactor * math.pi / 1.5
        assert abs(val**2 - ref) <= 3 * se

    def test_domain(self):
        with pytest.raises(ValueError):
            gagliardo_seminorm(ONE, 1.0, 2)
        with pytest.raises(ValueError):
            gagliardo_seminorm(ONE, 0.5, 0.5)

    def test_nonvanishing_trace_is_infinite(self):
        # a constant has no W^{γ,p}(R^N) seminorm once γ p >= 1
        assert math.isinf(gagliardo_seminorm(ONE, 0.5, 2))
        assert math.isfinite(gagliardo_seminorm(ONE, 0.3, 2))
