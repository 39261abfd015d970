import numpy as np
import pytest

from hodse.errors import ContractError, InputError
from hodse.functional import (
    CovarianceModel,
    TableBase,
    contract,
    effective_rank,
    holder_norm_grid,
    make_custom,
    make_polynomial,
    make_separable,
    predicted_var_s_k,
    predicted_var_s_k_inid,
    tensor_spectral_norm,
    v_k,
    variance_table,
)
from hodse.rules import FunctionalKind, SeparableBase


def _squared_norm(d):
    """||theta||^2 / d 다항식"""
    coeffs = {}
    for a in range(d):
        exps = [0] * d
        exps[a] = 2
        coeffs[tuple(exps)] = 1.0 / d
    return make_polynomial(coeffs, d)


def _random_psd(rng, d):
    a = rng.normal(size=(d, d))
    return a @ a.T / d


class TestPolynomialModel:
    """다항식 범함수 테스트"""

    def test_square_derivatives(self):
        """f = theta^2 → f' = 2 theta, f'' = 2, f''' = 0"""
        f = make_polynomial({(2,): 1.0}, 1)
        assert f.value([1.5]) == pytest.approx(2.25)
        np.testing.assert_allclose(f.derivative([1.5], 1), [3.0])
        np.testing.assert_allclose(f.derivative([1.5], 2), [[2.0]])
        np.testing.assert_array_equal(f.derivative([1.5], 3), np.zeros((1, 1, 1)))

    def test_linear_has_no_second_derivative(self):
        """선형 범함수는 f'' = 0"""
        f = make_polynomial({(1, 0): 1.0}, 2)
        np.testing.assert_array_equal(f.derivative([0.3, 0.4], 2), np.zeros((2, 2)))
        assert f.kind is FunctionalKind.POLYNOMIAL

    def test_squared_norm_hessian(self):
        """||theta||^2/d 의 헤시안 = (2/d) I"""
        d = 4
        np.testing.assert_allclose(_squared_norm(d).derivative(np.ones(d), 2), 2.0 / d * np.eye(d))

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_finite_difference(self, cubic_2d, k):
        """미분 텐서가 중심 차분과 일치"""
        theta = np.array([0.7, -0.4])
        step = 1e-4
        D = cubic_2d.derivative(theta, k)
        for a in range(2):
            e = np.zeros(2)
            e[a] = step
            fd = (np.asarray(cubic_2d.derivative(theta + e, k - 1))
                  - np.asarray(cubic_2d.derivative(theta - e, k - 1))) / (2 * step)
            np.testing.assert_allclose(D[a], fd, rtol=1e-6, atol=1e-6)

    def test_tensor_symmetric(self, cubic_2d):
        """미분 텐서가 첨자 순열에 대칭"""
        D = cubic_2d.derivative([0.2, 0.9], 3)
        np.testing.assert_array_equal(D, np.transpose(D, (1, 0, 2)))
        np.testing.assert_array_equal(D, np.transpose(D, (2, 1, 0)))

    def test_degree_and_bad_exponents(self, cubic_2d):
        """차수 계산, 차원이 맞지 않는 지수는 입력 오류"""
        assert cubic_2d.degree == 3
        with pytest.raises(InputError):
            make_polynomial({(1,): 1.0}, 2)

    def test_theta_shape(self, cubic_2d):
        """theta 모양이 다르면 입력 오류"""
        with pytest.raises(InputError):
            cubic_2d.value([1.0, 2.0, 3.0])


class TestSeparableModel:
    """분리형 범함수 테스트"""

    def test_square_value(self):
        """f0 = 제곱, theta = (1, 2) → 2.5"""
        assert make_separable("square", 2).value([1.0, 2.0]) == pytest.approx(2.5)

    def test_unsmoothed_abs_has_no_derivatives(self):
        """평활화 없는 abs 의 미분 요청은 계약 오류"""
        model = make_separable(SeparableBase.ABS, 3)
        assert model.value([-1.0, 0.0, 2.0]) == pytest.approx(1.0)
        with pytest.raises(ContractError):
            model.derivative([0.0, 0.0, 0.0], 1)

    def test_smoothed_abs_at_zero(self, smoothed_abs_model, abs_smoothing):
        """theta = 0 에서 f_h(0) = h int |y| K"""
        assert smoothed_abs_model.value(np.zeros(4)) == pytest.approx(abs_smoothing.h * abs_smoothing.moment)
        assert smoothed_abs_model.target_value(np.zeros(4)) == 0.0

    def test_unsmoothed_copy(self, smoothed_abs_model):
        """unsmoothed() 는 평활화를 떼어낸 모델"""
        raw = smoothed_abs_model.unsmoothed()
        assert raw.smoothing is None
        assert raw.value([1.0, -1.0, 2.0, 0.0]) == pytest.approx(1.0)

    def test_dense_derivative_is_diagonal(self):
        """분리형 모델의 밀집 f'' 는 대각"""
        model = make_separable("sin", 3)
        theta = np.array([0.1, 0.5, -0.8])
        D = model.derivative(theta, 2)
        np.testing.assert_allclose(D, np.diag(-np.sin(theta) / 3))

    def test_pow_needs_exponent(self):
        """pow 는 (0, 1) 지수가 필요"""
        with pytest.raises(InputError):
            make_separable("pow", 2)
        with pytest.raises(InputError):
            make_separable("cube", 2)

    def test_table_spline(self):
        """표 기저는 3차 스플라인, 2차 초과 미분 거부"""
        xs = np.linspace(-2.0, 2.0, 9)
        model = make_separable("table", 2, table=TableBase(tuple(xs), tuple(xs**2)))
        assert model.value([1.0, 0.5]) == pytest.approx(0.625, abs=1e-2)
        assert model.derivative([0.0, 0.0], 2).shape == (2, 2)
        with pytest.raises(ContractError):
            model.derivative([0.0, 0.0], 3)

    def test_smoothing_on_smooth_base_rejected(self, abs_smoothing):
        """매끄러운 기저에 평활화를 붙이면 입력 오류"""
        with pytest.raises(InputError):
            make_separable("square", 2, abs_smoothing)


class TestCustomModel:
    """1차원 내장 범함수 테스트"""

    def test_exp(self):
        """exp 의 모든 도함수는 exp"""
        f = make_custom("exp")
        assert f.derivative([0.3], 4)[(0,) * 4] == pytest.approx(np.exp(0.3))

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_xatan_finite_difference(self, k):
        """x atan(x) 도함수가 차분과 일치"""
        f = make_custom("xatan")
        step = 1e-4
        x = 0.6
        fd = (f.scalar_derivative(x + step, k - 1) - f.scalar_derivative(x - step, k - 1)) / (2 * step)
        assert f.scalar_derivative(x, k) == pytest.approx(fd, rel=1e-6, abs=1e-6)

    def test_unknown(self):
        """알 수 없는 이름은 입력 오류"""
        with pytest.raises(InputError):
            make_custom("cosh")


class TestContract:
    """<f^(k), T> 축약 테스트"""

    def test_linear_second_order(self):
        """선형 f, k=2 → 0"""
        f = make_polynomial({(1, 1): 0.0, (1, 0): 2.0}, 2)
        assert contract(f, [0.1, 0.2], 2, np.ones((2, 2))) == 0.0

    def test_square_with_pair_ustat(self):
        """theta^2, T = -1 → -2"""
        f = make_polynomial({(2,): 1.0}, 1)
        assert contract(f, [2.0], 2, [[-1.0]]) == pytest.approx(-2.0)

    def test_separable_matches_dense(self, rng):
        """분리형 경로와 밀집 경로가 일치"""
        for d in (1, 2, 3, 4):
            model = make_separable("sin", d)
            theta = rng.normal(size=d)
            T = rng.normal(size=(d, d, d))
            dense = float(np.sum(model.derivative(theta, 3) * T))
            assert contract(model, theta, 3, T) == pytest.approx(dense, abs=1e-12)

    def test_shape_mismatch(self, cubic_2d):
        """텐서 모양이 맞지 않으면 입력 오류"""
        with pytest.raises(InputError):
            contract(cubic_2d, [0.0, 0.0], 2, np.zeros((3, 3)))


class TestVariance:
    """V_k, Var(S_k), 유효 계수 테스트"""

    def test_squared_norm_v2(self):
        """||theta||^2/d, Sigma = sigma^2 I → V_2 = 4 sigma^4 / d"""
        d, sigma = 3, 0.7
        cov = CovarianceModel.isotropic(d, sigma**2)
        assert v_k(_squared_norm(d), np.ones(d), cov, 2) == pytest.approx(4 * sigma**4 / d)

    def test_zero_derivative(self, cubic_2d):
        """f^(k) = 0 이면 V_k = 0"""
        cov = CovarianceModel(np.eye(2))
        assert v_k(cubic_2d, [0.1, 0.2], cov, 4) == 0.0

    def test_zero_covariance(self, cubic_2d):
        """Sigma = 0 → V_k = 0"""
        assert v_k(cubic_2d, [0.1, 0.2], CovarianceModel(np.zeros((2, 2))), 2) == 0.0

    def test_homogeneity(self, cubic_2d, rng):
        """Sigma 를 lambda 배 하면 V_k 는 lambda^k 배"""
        cov = CovarianceModel(_random_psd(rng, 2))
        theta = [0.3, -0.6]
        for k in (1, 2, 3):
            base = v_k(cubic_2d, theta, cov, k)
            assert v_k(cubic_2d, theta, cov.scaled(2.5), k) == pytest.approx(2.5**k * base, rel=1e-10)

    def test_separable_closed_form_matches_dense(self, rng):
        """대각 공분산에서 분리형 닫힌 꼴 = 밀집 계산"""
        model = make_separable("sin", 3)
        theta = rng.normal(size=3)
        cov = CovarianceModel.from_diagonal([0.5, 1.0, 2.0])
        dense = float(np.sum(model.derivative(theta, 2) ** 2 * np.outer(cov.variances, cov.variances)))
        assert v_k(model, theta, cov, 2) == pytest.approx(dense, rel=1e-12)

    def test_predicted_variance(self):
        """k=1 → V/n, n=4, k=2, V=1 → 1/6"""
        assert predicted_var_s_k(10, 1, 3.0) == pytest.approx(0.3)
        assert predicted_var_s_k(4, 2, 1.0) == pytest.approx(1.0 / 6.0)
        assert predicted_var_s_k_inid(4, 2, 1.0) == pytest.approx(4.0 / 3.0 / 6.0)

    def test_effective_rank(self):
        """I_d → (1, d), diag(1, 0.5) → (1, 1.5)"""
        assert effective_rank(CovarianceModel(np.eye(5))) == pytest.approx((1.0, 5.0))
        assert effective_rank(CovarianceModel.from_diagonal([1.0, 0.5])) == pytest.approx((1.0, 1.5))
        with pytest.raises(ContractError):
            effective_rank(CovarianceModel(np.zeros((2, 2))))

    def test_effective_rank_range(self, rng):
        """1 <= r <= d"""
        for d in (2, 3, 6):
            _, r = effective_rank(CovarianceModel(_random_psd(rng, d)))
            assert 1.0 - 1e-12 <= r <= d + 1e-12

    def test_invalid_covariance(self):
        """비대칭, 비양정치 공분산은 입력 오류"""
        with pytest.raises(InputError):
            CovarianceModel(np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(InputError):
            CovarianceModel(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_variance_table_bound(self, cubic_2d, rng):
        """V_k <= ||f^(k)||^2 sigma^(2k) r^(k-1), k <= 2"""
        cov = CovarianceModel(_random_psd(rng, 2))
        table = variance_table(cubic_2d, [0.4, 0.1], cov, 2, 50)
        for v, bound in zip(table.v_k, table.v_k_bound):
            assert v <= bound * (1 + 1e-10)
        assert table.predicted_var_s_k[0] == pytest.approx(table.v_k[0] / 50)


class TestNorms:
    """텐서 스펙트럼 노름과 횔더 노름 테스트"""

    def test_rank_one_tensor(self):
        """e1 의 3중 외적은 노름 1"""
        T = np.zeros((2, 2, 2))
        T[0, 0, 0] = 1.0
        assert tensor_spectral_norm(T) == pytest.approx(1.0, abs=1e-8)
        assert tensor_spectral_norm(T, method="grid") == pytest.approx(1.0, abs=1e-6)

    def test_matrix_case(self):
        """2차 텐서는 최대 고유값 절댓값"""
        assert tensor_spectral_norm(np.diag([1.0, -3.0])) == pytest.approx(3.0)

    def test_grid_limited_to_small_d(self):
        """격자 방식은 d <= 3 만"""
        with pytest.raises(InputError):
            tensor_spectral_norm(np.zeros((4, 4, 4)), method="grid")

    def test_holder_sin(self):
        """sin 의 립시츠 상수는 1 에 가까움"""
        val = holder_norm_grid(np.sin, 1.0, np.linspace(-0.1, 0.1, 201))
        assert 0.99 <= val <= 1.0
