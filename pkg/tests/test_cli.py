"""
命令列介面測試

範圍：
- list：列出內建 scenario
- validate：成功 / 格式錯誤 / 檔案不存在 的結束碼
- run：--check 選取、失敗 check 的結束碼、--out 輸出檔案
"""

from __future__ import annotations

GOOD = """
[scenario]
name = cli-tiny
description = "CLI smoke scenario"
seed = 0

[chart]
coord = x -1 1
coord = y -1 1
coord = z -1 1

[poisson]
entry = x y "1"

[check jacobi]
op = jacobi
count = 10

[check broken]
op = jacobi
count = 10
entry = x y "1"
entry = y z "y"
"""


def _write(tmp_path, text=GOOD):
    path = tmp_path / "cli-tiny.scn"
    path.write_text(text, encoding="utf-8")
    return path


class TestList:
    """list 子命令"""

    def test_lists_builtin_scenarios(self, capsys):
        from poissonlab.cli import EXIT_OK, main

        assert main(["list"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "cubic-graph" in out
        assert len(out.strip().splitlines()) == 8


class TestValidate:
    """validate 子命令"""

    def test_valid_file(self, tmp_path, capsys):
        from poissonlab.cli import EXIT_OK, main

        assert main(["validate", str(_write(tmp_path))]) == EXIT_OK
        assert "cli-tiny" in capsys.readouterr().out

    def test_parse_error(self, tmp_path, capsys):
        from poissonlab.cli import EXIT_ERROR, main

        path = _write(tmp_path, "[scenario]\nname = bad\n[chart\n")
        assert main(["validate", str(path)]) == EXIT_ERROR
        assert str(path) in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        from poissonlab.cli import EXIT_ERROR, main

        assert main(["validate", str(tmp_path / "missing.scn")]) == EXIT_ERROR


class TestRun:
    """run 子命令"""

    def test_selected_passing_check(self, tmp_path, capsys):
        from poissonlab.cli import EXIT_OK, main

        assert main(["run", str(_write(tmp_path)), "--check", "jacobi"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "jacobi" in out
        assert "broken" not in out

    def test_failing_check_exits_with_one(self, tmp_path):
        from poissonlab.cli import EXIT_FAIL, main

        assert main(["run", str(_write(tmp_path)), "--check", "broken"]) == EXIT_FAIL

    def test_unknown_check_is_an_error(self, tmp_path):
        from poissonlab.cli import EXIT_ERROR, main

        assert main(["run", str(_write(tmp_path)), "--check", "nope"]) == EXIT_ERROR

    def test_unknown_scenario_is_an_error(self):
        from poissonlab.cli import EXIT_ERROR, main

        assert main(["run", "no-such-scenario"]) == EXIT_ERROR

    def test_out_writes_reports(self, tmp_path):
        from poissonlab.cli import main

        out_dir = tmp_path / "out"
        main(["run", str(_write(tmp_path)), "--out", str(out_dir), "--formats", "json,csv"])
        names = {p.name for p in out_dir.iterdir()}
        assert names == {"cli-tiny.json", "cli-tiny-checks.csv"}
