import textwrap

import numpy as np
import pytest

from hodse.functional import make_polynomial, make_separable
from hodse.rules import SeparableBase
from hodse.smoothing import SmoothedFunctional
from hodse.ustat import SampleMatrix, center


@pytest.fixture
def rng():
    """테스트마다 같은 값을 내는 난수 생성기"""
    return np.random.default_rng(12345)


@pytest.fixture
def small_sample(rng):
    """평균이 0이 아닌 6 x 2 관측 행렬"""
    return SampleMatrix(1.5 + rng.normal(size=(6, 2)))


@pytest.fixture
def centered_small(small_sample):
    """small_sample을 중심화한 결과"""
    return center(small_sample)


@pytest.fixture
def cubic_2d():
    """2차원 3차 다항식 f(x1, x2) = x1^3 - 0.5 x1^2 x2 + 2 x2^2 + x1"""
    return make_polynomial({(3, 0): 1.0, (2, 1): -0.5, (0, 2): 2.0, (1, 0): 1.0}, 2)


@pytest.fixture
def abs_smoothing():
    """h = 0.3 으로 평활화한 절댓값 함수"""
    return SmoothedFunctional(SeparableBase.ABS, 0.3)


@pytest.fixture
def smoothed_abs_model(abs_smoothing):
    """d = 4 분리형 절댓값 범함수 (평활화 포함)"""
    return make_separable(SeparableBase.ABS, 4, abs_smoothing)


@pytest.fixture
def two_point_csv(tmp_path):
    """관측값 1, 3 으로 이루어진 2 x 1 CSV 파일"""
    path = tmp_path / "two.csv"
    path.write_text("1\n3\n", encoding="utf-8")
    return path


@pytest.fixture
def smoke_config(tmp_path):
    """단일 반복으로 빠르게 끝나는 실험 설정 파일"""
    path = tmp_path / "smoke.cfg"
    path.write_text(textwrap.dedent(f"""
        # quick run
        schema_version = 1
        functional = poly:x1^2 + x2*x3
        sample.n = 12
        sample.d = 3
        noise.family = gaussian
        noise.sigma_n = 0.2
        theta.kind = constant
        theta.value = 0.5
        estimators = plugin, hodse
        estimator.order = 2
        run.replications = 3
        run.seed = 11
        output.json = {tmp_path / 'report.json'}
        output.csv = {tmp_path / 'report.csv'}
    """).strip() + "\n", encoding="utf-8")
    return path
