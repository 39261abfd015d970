import io
import json

import numpy as np
import pandas as pd
import pytest

from hodse import __version__
from hodse.cli import build_parser, kernel_table, run
from hodse.rules import ExitCode
from hodse.ustat import CenteredSample


def _value(out: str) -> float:
    line = next(l for l in out.splitlines() if l.startswith("value = "))
    return float(line.split("=", 1)[1])


class TestParser:
    """명령행 파서 테스트"""

    def test_version(self, capsys):
        """--version 출력"""
        with pytest.raises(SystemExit) as exc_info:
            build_parser().parse_args(["--version"])
        assert exc_info.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_command_required(self):
        """하위 명령이 없으면 사용법 오류"""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_short_h_is_bandwidth(self):
        """하위 명령에서 -h 는 대역폭"""
        args = build_parser().parse_args(["estimate", "x.csv", "sep:abs", "-h", "0.45"])
        assert args.bandwidth == 0.45

    def test_kernel_grid(self):
        """lo:hi:count 격자"""
        args = build_parser().parse_args(["kernel", "--grid=-1:1:5", "--orders", "3,1"])
        assert args.grid.tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]
        assert args.orders == [1, 3]

    @pytest.mark.parametrize("argv", [
        ["kernel", "--grid=1:-1:5"],
        ["kernel", "--orders", "0"],
        ["estimate", "x.csv", "sep:abs", "-h", "-1"],
    ])
    def test_bad_arguments(self, argv):
        """잘못된 인자는 argparse 오류"""
        with pytest.raises(SystemExit):
            build_parser().parse_args(argv)


class TestEstimateCommand:
    """estimate 명령 테스트"""

    def test_two_point_square(self, two_point_csv, capsys):
        """x = (1, 3), poly:x^2, m = 2 → 3"""
        code = run(["estimate", str(two_point_csv), "poly:x^2", "-m", "2"])
        out = capsys.readouterr().out
        assert code == ExitCode.OK
        assert _value(out) == pytest.approx(3.0)
        assert "path = dense" in out
        assert "term[2] = " in out

    def test_order_too_large(self, two_point_csv, capsys):
        """m > n 은 계약 위반 종료 코드와 n >= m+1 안내"""
        code = run(["estimate", str(two_point_csv), "poly:x^2", "-m", "3"])
        assert code == ExitCode.CONTRACT
        assert "n >= m+1" in capsys.readouterr().err

    def test_bad_csv(self, tmp_path, capsys):
        """파싱할 수 없는 데이터는 입력 오류"""
        path = tmp_path / "bad.csv"
        path.write_text("1\nx\n", encoding="utf-8")
        assert run(["estimate", str(path), "poly:x^2"]) == ExitCode.INPUT
        assert "line 2" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        """없는 파일은 입력 오류"""
        assert run(["estimate", str(tmp_path / "none.csv"), "poly:x^2"]) == ExitCode.INPUT

    def test_linear_any_order(self, tmp_path, capsys):
        """선형 범함수는 차수와 무관"""
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3,-1\n0.5,4\n2,2\n", encoding="utf-8")
        values = []
        for m in ("2", "3", "4"):
            assert run(["estimate", str(path), "poly:2*x1 - x2", "-m", m]) == ExitCode.OK
            values.append(_value(capsys.readouterr().out))
        assert values == pytest.approx([2 * 1.625 - 1.75] * 3)

    def test_order_one_is_input_error(self, tmp_path, capsys):
        """-m 1 은 입력 오류"""
        path = tmp_path / "x.csv"
        path.write_text("1,2\n3,-1\n0.5,4\n", encoding="utf-8")
        assert run(["estimate", str(path), "poly:2*x1 - x2", "-m", "1"]) == ExitCode.INPUT
        assert "plug-in" in capsys.readouterr().err

    def test_out_json(self, two_point_csv, tmp_path, capsys):
        """--out 으로 추정 기록 저장"""
        out = tmp_path / "est.json"
        assert run(["estimate", str(two_point_csv), "poly:x^2", "-m", "2", "--out", str(out)]) == ExitCode.OK
        record = json.loads(out.read_text(encoding="utf-8"))
        assert record["value"] == pytest.approx(3.0)
        assert record["functional"] == "poly:x^2"
        assert (record["n"], record["d"]) == (2, 1)


class TestKernelCommand:
    """kernel 명령 테스트"""

    def test_stdout(self, capsys):
        """표준 출력으로 CSV"""
        assert run(["kernel", "-h", "0.5", "--grid=-1:1:3", "--orders", "1"]) == ExitCode.OK
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert list(frame.columns) == ["x", "K", "f0", "f_h", "f_h^(1)"]
        assert frame["f0"].tolist() == [1.0, 0.0, 1.0]
        assert frame["f_h^(1)"].iloc[1] == pytest.approx(0.0, abs=1e-12)

    def test_file(self, tmp_path, capsys):
        """--out 으로 파일 저장"""
        out = tmp_path / "kernel.csv"
        assert run(["kernel", "--grid=0:1:3", "--orders", "2", "--out", str(out)]) == ExitCode.OK
        assert "saved" in capsys.readouterr().out
        assert pd.read_csv(out).shape == (3, 5)

    @pytest.mark.slow
    def test_converges_to_abs(self):
        """h 가 줄면 f_h 가 |x| 에 수렴"""
        xs = np.linspace(-1.0, 1.0, 5)
        errors = []
        for h in (0.5, 0.1, 0.02):
            frame, failed = kernel_table(h, 1.0, xs, [1])
            assert failed == 0
            errors.append(float(np.max(np.abs(frame["f_h"] - frame["f0"]))))
        assert errors[0] > errors[1] > errors[2]


@pytest.mark.integration
class TestSimulateCommand:
    """simulate 명령 테스트"""

    def test_deterministic_report(self, smoke_config, tmp_path, capsys):
        """같은 설정은 바이트 단위로 같은 JSON"""
        assert run(["simulate", str(smoke_config)]) == ExitCode.OK
        first = (tmp_path / "report.json").read_bytes()
        assert run(["simulate", str(smoke_config), "--threads", "2"]) == ExitCode.OK
        assert (tmp_path / "report.json").read_bytes() == first
        out = capsys.readouterr().out
        assert "hodse:" in out
        assert (tmp_path / "report.csv").exists()

    def test_out_override(self, smoke_config, tmp_path, capsys):
        """--out 은 JSON 경로, CSV 는 옆에"""
        out = tmp_path / "alt" / "run.json"
        assert run(["simulate", str(smoke_config), "--out", str(out), "--replications", "2"]) == ExitCode.OK
        assert out.exists()
        assert out.with_suffix(".csv").exists()
        assert json.loads(out.read_text(encoding="utf-8"))["config"]["replications"] == 2

    def test_bad_threads_env(self, smoke_config, monkeypatch, capsys):
        """HODSE_THREADS 가 정수가 아니면 입력 오류"""
        monkeypatch.setenv("HODSE_THREADS", "many")
        assert run(["simulate", str(smoke_config)]) == ExitCode.INPUT
        assert "HODSE_THREADS" in capsys.readouterr().err

    def test_bad_config(self, tmp_path, capsys):
        """알 수 없는 키는 입력 오류"""
        path = tmp_path / "bad.cfg"
        path.write_text("schema_version = 1\ncolor = red\n", encoding="utf-8")
        assert run(["simulate", str(path)]) == ExitCode.INPUT
        assert "color" in capsys.readouterr().err


class TestValidateCommand:
    """validate 명령 테스트"""

    def test_scope(self, tmp_path, capsys):
        """지정한 묶음만 실행"""
        out = tmp_path / "val.json"
        assert run(["validate", "--scope", "counting_bound,kernel", "--out", str(out)]) == ExitCode.OK
        assert "all 2 suites passed" in capsys.readouterr().out
        assert [r["name"] for r in json.loads(out.read_text(encoding="utf-8"))] == ["counting_bound", "kernel"]

    def test_unknown_scope(self, capsys):
        """알 수 없는 묶음은 입력 오류"""
        assert run(["validate", "--scope", "nonsense"]) == ExitCode.INPUT

    def test_fault_injection(self, mocker, capsys):
        """중심화를 건너뛰면 degeneracy 묶음 실패"""
        mocker.patch("hodse.ustat.center",
                     side_effect=lambda s: CenteredSample(centered=s.values, mean=np.zeros(s.d)))
        assert run(["validate", "--scope", "degeneracy"]) == ExitCode.VALIDATION_FAILED
        assert "❌ degeneracy" in capsys.readouterr().out
