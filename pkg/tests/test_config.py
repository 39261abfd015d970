import pytest

from hodse.config import BUNDLED_DIR, load_config, load_config_text, parse_config_text
from hodse.errors import ConfigError, InputError
from hodse.rules import EstimatorName, NoiseFamily, ThetaKind

BASE = """\
schema_version = 1
functional = sep:abs   # 절댓값
sample.n = 16
sample.d = 8
noise.family = gaussian
noise.sigma_n = 0.5
"""


class TestParseConfigText:
    """key = value 파싱 테스트"""

    def test_minimal(self):
        """필수 키만으로 파싱, 주석 제거"""
        values = parse_config_text(BASE)
        assert values["functional"] == "sep:abs"
        assert values["sample.n"] == 16
        assert values["noise.family"] is NoiseFamily.GAUSSIAN

    def test_auto_and_flags(self):
        """auto 는 None, 불리언 표기"""
        values = parse_config_text(BASE + "estimator.order = auto\nrun.decompose = off\n")
        assert values["estimator.order"] is None
        assert values["run.decompose"] is False

    def test_estimator_list(self):
        """쉼표 구분 추정량 목록"""
        values = parse_config_text(BASE + "estimators = hodse, bootstrap\n")
        assert values["estimators"] == (EstimatorName.HODSE, EstimatorName.BOOTSTRAP)

    def test_unknown_key(self):
        """알 수 없는 키는 이름과 함께 오류"""
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text(BASE + "sample.m = 3\n")
        assert exc_info.value.keys == ["sample.m"]

    def test_duplicate_key(self):
        """중복 키"""
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text(BASE + "sample.n = 17\n")
        assert exc_info.value.keys == ["sample.n"]

    def test_missing_keys(self):
        """필수 키 누락"""
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text("schema_version = 1\nfunctional = sep:abs\n")
        assert exc_info.value.keys == ["noise.family", "noise.sigma_n", "sample.d", "sample.n"]

    @pytest.mark.parametrize("line, key", [
        ("sample.n = 0", "sample.n"),
        ("noise.sigma_n = -1", "noise.sigma_n"),
        ("noise.family = cauchy", "noise.family"),
        ("run.decompose = maybe", "run.decompose"),
        ("estimator.bandwidth = wide", "estimator.bandwidth"),
    ])
    def test_malformed_values(self, line, key):
        """값 변환 실패는 해당 키로 보고"""
        text = "\n".join(
            l for l in BASE.splitlines() if not l.startswith(key + " ")
        ) + f"\n{line}\n"
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text(text)
        assert exc_info.value.keys == [key]

    def test_line_without_equals(self):
        """= 이 없는 줄은 줄 번호로 보고"""
        with pytest.raises(ConfigError, match="line 7"):
            parse_config_text(BASE + "garbage\n")

    def test_schema_version(self):
        """지원하지 않는 schema_version"""
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text(BASE.replace("schema_version = 1", "schema_version = 2"))
        assert exc_info.value.keys == ["schema_version"]


class TestLoadConfigText:
    """ExperimentConfig 생성 테스트"""

    def test_defaults(self):
        """선택 키가 없으면 기본값"""
        config = load_config_text(BASE)
        assert (config.n, config.d) == (16, 8)
        assert config.estimators == (EstimatorName.PLUGIN, EstimatorName.HODSE)
        assert config.replications == 100
        assert config.theta.kind is ThetaKind.ZEROS
        assert config.order is None
        assert config.decompose is True

    def test_theta_and_noise(self):
        """theta.* 와 noise.* 설정 전달"""
        config = load_config_text(BASE + "theta.kind = constant\ntheta.value = 0.25\n"
                                  "noise.scale = 0.5, 1, 1, 1, 1, 1, 1, 2\n")
        assert config.theta.kind is ThetaKind.CONSTANT
        assert config.theta.value == 0.25
        assert config.noise.scales == (0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0)

    def test_scales_must_match_d(self):
        """noise.scale 개수가 d 와 다르면 noise.* 키로 보고"""
        with pytest.raises(ConfigError) as exc_info:
            load_config_text(BASE + "noise.scale = 0.5, 1\n")
        assert "noise.scale" in exc_info.value.keys

    def test_correlation(self):
        """noise.correlation 은 ; 로 행 구분"""
        text = BASE.replace("sample.d = 8", "sample.d = 2") + "noise.correlation = 1, 0.5; 0.5, 1\n"
        config = load_config_text(text)
        assert config.noise.correlation == ((1.0, 0.5), (0.5, 1.0))

    def test_correlation_wrong_size(self):
        """d x d 가 아니면 noise.correlation 키로 보고"""
        with pytest.raises(ConfigError) as exc_info:
            load_config_text(BASE + "noise.correlation = 1, 0.5; 0.5, 1\n")
        assert "noise.correlation" in exc_info.value.keys

    @pytest.mark.parametrize("matrix", [
        "1, 2; 2, 1",              # 양의 정부호 아님
        "2, 0; 0, 1",              # 대각 성분이 1 아님
    ])
    def test_correlation_invalid(self, matrix):
        """양의 정부호, 단위 대각 조건 위반"""
        text = BASE.replace("sample.d = 8", "sample.d = 2") + f"noise.correlation = {matrix}\n"
        with pytest.raises(ConfigError) as exc_info:
            load_config_text(text)
        assert "noise.correlation" in exc_info.value.keys

    def test_correlation_not_square(self):
        """행 길이가 다르면 파싱 단계에서 오류"""
        with pytest.raises(ConfigError) as exc_info:
            parse_config_text(BASE + "noise.correlation = 1, 0.5; 0.5\n")
        assert exc_info.value.keys == ["noise.correlation"]

    def test_profile(self):
        """estimator.profile 기본값은 flat"""
        assert load_config_text(BASE).profile == "flat"
        assert load_config_text(BASE + "estimator.profile = default\n").profile == "default"
        with pytest.raises(ConfigError) as exc_info:
            load_config_text(BASE + "estimator.profile = boxcar\n")
        assert exc_info.value.keys == ["estimator.profile"]

    def test_bad_functional(self):
        """잘못된 범함수 명세는 functional 키로 보고"""
        with pytest.raises(ConfigError) as exc_info:
            load_config_text(BASE.replace("sep:abs", "sep:cube"))
        assert exc_info.value.keys == ["functional"]

    def test_bad_noise(self):
        """NoiseModel 검증 실패는 noise.* 키로 보고"""
        text = BASE.replace("gaussian", "student-t") + "noise.df = 3\n"
        with pytest.raises(ConfigError) as exc_info:
            load_config_text(text)
        assert "noise.df" in exc_info.value.keys
        assert all(key.startswith("noise.") for key in exc_info.value.keys)


class TestLoadConfig:
    """파일과 내장 설정 읽기 테스트"""

    def test_file(self, tmp_path):
        """파일에서 읽기"""
        path = tmp_path / "exp.cfg"
        path.write_text(BASE + "run.seed = 5\n", encoding="utf-8")
        assert load_config(path).seed == 5

    @pytest.mark.parametrize("name", ["smoke.cfg", "abs_d1024.cfg", "square_clt.cfg"])
    def test_bundled(self, name, tmp_path, monkeypatch):
        """작업 디렉터리에 없으면 내장 설정 사용"""
        monkeypatch.chdir(tmp_path)
        assert (BUNDLED_DIR / name).exists()
        config = load_config(name)
        assert config.replications >= 1
        assert config.out_json == name.replace(".cfg", ".json")

    def test_abs_d1024(self, tmp_path, monkeypatch):
        """고차원 절댓값 설정 내용"""
        monkeypatch.chdir(tmp_path)
        config = load_config("abs_d1024.cfg")
        assert config.functional == "sep:abs"
        assert (config.n, config.d) == (32, 1024)
        assert config.order is None
        assert config.order_cap == 16
        assert config.profile == "flat"

    def test_missing_file(self, tmp_path):
        """읽을 수 없는 파일은 입력 오류"""
        with pytest.raises(InputError, match="cannot read config"):
            load_config(tmp_path / "nope.cfg")
