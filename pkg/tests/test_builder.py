import numpy as np
import pytest

from hodse.builder import ModelBuilder
from hodse.errors import InputError
from hodse.functional import CustomModel, PolynomialModel, SeparableModel
from hodse.parser import parse_functional
from hodse.rules import SeparableBase
from hodse.smoothing import default_profile, flat_profile


class TestModelBuilder:
    """ModelBuilder 클래스 테스트"""

    def test_init(self):
        """초기화 시 명세를 파싱하고 모델은 비어 있음"""
        builder = ModelBuilder("poly:x^2", 1)
        assert builder.spec.family == "poly"
        assert builder.d == 1
        assert builder.model is None

    def test_build_polynomial(self):
        """poly 명세로 다항식 모델 생성"""
        model = ModelBuilder("poly:x1*x2 + 1", 2).build()
        assert isinstance(model, PolynomialModel)
        assert model.value([2.0, 3.0]) == pytest.approx(7.0)

    def test_build_custom(self):
        """fn 명세는 1차원에서만"""
        assert isinstance(ModelBuilder("fn:exp", 1).build(), CustomModel)
        with pytest.raises(InputError):
            ModelBuilder("fn:exp", 2).build()

    def test_accepts_parsed_spec(self):
        """이미 파싱된 명세도 받음"""
        model = ModelBuilder(parse_functional("sep:square"), 3).build()
        assert isinstance(model, SeparableModel)
        assert model.value([1.0, 2.0, 3.0]) == pytest.approx(14.0 / 3.0)

    def test_build_stores_model(self):
        """build 결과가 builder 에 저장"""
        builder = ModelBuilder("sep:sin", 2)
        model = builder.build()
        assert builder.model is model

    def test_bandwidth_precedence(self):
        """:h= 접미사가 인자보다 우선"""
        model = ModelBuilder("sep:abs:h=0.2", 4, bandwidth=0.7, sigma_n=1.0).build()
        assert model.smoothing.h == 0.2
        model = ModelBuilder("sep:abs", 4, bandwidth=0.7, sigma_n=1.0).build()
        assert model.smoothing.h == 0.7

    def test_bandwidth_from_tuning(self):
        """대역폭이 없으면 sigma_n 의 조율 규칙 사용"""
        model = ModelBuilder("sep:abs", 1024, sigma_n=1.0).build()
        assert model.smoothing.h == pytest.approx(0.4474, abs=1e-4)

    def test_unsmoothed_without_bandwidth(self):
        """대역폭 정보가 없으면 평활화하지 않음"""
        model = ModelBuilder("sep:abs", 4).build()
        assert model.smoothing is None
        assert model.derivative_order_max == 0

    def test_profile(self):
        """기본 프로파일은 flat, 인자로 바꿀 수 있음"""
        model = ModelBuilder("sep:abs:h=0.3", 2).build()
        assert model.smoothing.profile is flat_profile()
        model = ModelBuilder("sep:abs:h=0.3", 2, profile=default_profile()).build()
        assert model.smoothing.profile is default_profile()

    def test_pow(self):
        """sep:pow 는 지수를 평활화에 전달"""
        model = ModelBuilder("sep:pow:0.5:h=0.3", 3).build()
        assert model.smoothing.base is SeparableBase.POW
        assert model.smoothing.p == 0.5
        with pytest.raises(InputError):
            ModelBuilder("sep:pow:1.5:h=0.3", 3).build()

    def test_table(self, tmp_path):
        """sep:table 은 파일에서 스플라인 생성"""
        path = tmp_path / "knots.csv"
        xs = np.linspace(-1.0, 1.0, 5)
        path.write_text("".join(f"{x},{x * x}\n" for x in xs), encoding="utf-8")
        model = ModelBuilder(f"sep:table:{path}", 2).build()
        assert model.value([0.5, -0.5]) == pytest.approx(0.25)

    def test_dimension_checked(self):
        """다항식 변수가 d 를 넘으면 입력 오류"""
        with pytest.raises(InputError):
            ModelBuilder("poly:x3", 2).build()
