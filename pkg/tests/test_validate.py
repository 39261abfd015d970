import pytest

from hodse import validate
from hodse.errors import InputError
from hodse.validate import SUITES, SuiteResult, run_suite, run_suites

FAST = [name for name, (_, is_fast) in SUITES.items() if is_fast]
SLOW = [name for name, (_, is_fast) in SUITES.items() if not is_fast]


class TestSuites:
    """자체 검증 묶음 테스트"""

    @pytest.mark.parametrize("name", FAST)
    def test_fast_suite_passes(self, name):
        """빠른 묶음 통과"""
        result = run_suite(name)
        assert result.passed, result.detail

    @pytest.mark.slow
    @pytest.mark.parametrize("name", SLOW)
    def test_slow_suite_passes(self, name):
        """느린 묶음 통과"""
        result = run_suite(name)
        assert result.passed, result.detail

    def test_crash_is_failure(self, mocker):
        """예외를 던지는 묶음은 실패로 기록"""
        mocker.patch.dict(validate.SUITES, {"kernel": (mocker.Mock(side_effect=RuntimeError("boom")), True)})
        result = run_suite("kernel")
        assert not result.passed
        assert result.detail == "RuntimeError: boom"

    def test_as_dict(self):
        """결과 사전은 초를 반올림"""
        assert SuiteResult("x", True, "ok", 1.23456).as_dict() == {
            "name": "x", "passed": True, "detail": "ok", "seconds": 1.235}


class TestRunSuites:
    """묶음 선택 테스트"""

    def test_fast_selection(self, mocker):
        """--fast 는 느린 묶음을 제외"""
        fake = mocker.patch("hodse.validate.run_suite", side_effect=lambda n: SuiteResult(n, True, "", 0.0))
        names = [r.name for r in run_suites(fast=True)]
        assert names == FAST
        assert fake.call_count == len(FAST)

    def test_scope_with_fast(self, mocker):
        """범위와 --fast 를 함께 쓰면 빠른 묶음만"""
        mocker.patch("hodse.validate.run_suite", side_effect=lambda n: SuiteResult(n, True, "", 0.0))
        assert [r.name for r in run_suites(fast=True, scope=["clt", "identity"])] == ["identity"]

    def test_unknown(self):
        """알 수 없는 묶음 이름"""
        with pytest.raises(InputError, match="unknown suites: bogus"):
            run_suites(scope=["bogus"])
