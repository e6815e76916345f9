import io
import json
import shutil

import pytest

from racefix.cli import run
from racefix.corpus import CORPUS_DIR
from racefix.lang import parse_file, render_program

from fixtures import RACE_FREE


def call(*argv, stdin=""):
    out = io.StringIO()
    code = run(list(map(str, argv)), stdin=io.StringIO(stdin), stdout=out)
    return code, out.getvalue()


@pytest.fixture
def datarace_file(tmp_path):
    dst = tmp_path / "datarace.mjcc"
    shutil.copy(CORPUS_DIR / "datarace.mjcc", dst)
    return dst


def test_analyze_reports_races(datarace_file):
    code, out = call("analyze", datarace_file)
    assert code == 1
    assert "4 races, 2 unprotected writes, 1 clusters" in out


def test_analyze_json(datarace_file):
    code, out = call("analyze", "--report", "json", datarace_file)
    doc = json.loads(out)
    assert code == 1 and doc["races"] == 4 and len(doc["bugs"]) == 6


def test_analyze_race_free(tmp_path):
    f = tmp_path / "safe.mjcc"
    f.write_text(RACE_FREE)
    code, out = call("analyze", f)
    assert code == 0 and "0 races" in out


def test_validate(datarace_file, tmp_path):
    code, out = call("validate", "--out", tmp_path / "o", datarace_file)
    assert code == 1 and "6 bugs, 0 lock-order cycles" in out
    doc = json.loads((tmp_path / "o" / "datarace.validate.json").read_text())
    assert doc["cycles"] == []


def test_fix_writes_outputs(datarace_file, tmp_path):
    out_dir = tmp_path / "out"
    code, out = call("fix", "--out", out_dir, "--figures", datarace_file)
    assert code == 0
    assert "Fixed after 1 iteration(s)" in out
    names = sorted(p.name for p in out_dir.iterdir())
    assert "datarace.report.json" in names and "datarace.fixed.mjcc" in names
    assert "datarace.bugs.png" in names and "datarace.locks.png" in names
    assert any(n.endswith(".diff") for n in names)
    report = json.loads((out_dir / "datarace.report.json").read_text())
    assert report["status"] == "Fixed" and report["patches"][0]["cost"] == 3
    fixed = parse_file(out_dir / "datarace.fixed.mjcc")
    code, _ = call("analyze", out_dir / "datarace.fixed.mjcc")
    assert code == 0 and fixed.classes
    # input untouched without --write
    assert datarace_file.read_text() == (CORPUS_DIR / "datarace.mjcc").read_text()


def test_fix_write_in_place(datarace_file):
    code, _ = call("fix", "--write", datarace_file)
    assert code == 0
    assert "synchronized" in datarace_file.read_text()
    assert call("analyze", datarace_file)[0] == 0


def test_fix_json_report(datarace_file):
    code, out = call("fix", "--report", "json", datarace_file)
    doc = json.loads(out)
    assert code == 0 and doc["bugHistory"] == [6, 0]


def test_export_import_round_trip(datarace_file, tmp_path):
    code, _ = call("export-summaries", "--out", tmp_path / "s", datarace_file)
    assert code == 0
    sums = tmp_path / "s" / "summaries.json"
    assert all(i["file"] == str(datarace_file) for i in json.loads(sums.read_text())["summaries"])
    _, direct = call("fix", "--report", "json", datarace_file)
    code, imported = call("import-summaries", "--report", "json", sums, "fix", datarace_file)
    assert code == 0
    a, b = json.loads(direct), json.loads(imported)
    assert a["patches"] == b["patches"] and a["status"] == b["status"]


def test_export_to_stdout(datarace_file):
    code, out = call("export-summaries", datarace_file)
    assert code == 0 and json.loads(out)["summaries"]


def test_interactive_choose_sync(datarace_file, tmp_path):
    code, out = call("fix", "--mode", "interactive", "--out", tmp_path / "o", datarace_file,
                     stdin="1\n")
    assert code == 0
    menu = [line for line in out.splitlines() if line.startswith("[")]
    assert len(menu) == 2
    assert "SYNC(" in menu[0] and menu[0].endswith("(cost 3)")
    assert menu[1].startswith("[2] VOLATILE")
    assert "synchronized" in (tmp_path / "o" / "datarace.fixed.mjcc").read_text()


def test_interactive_choose_volatile(datarace_file, tmp_path):
    code, _ = call("fix", "--mode", "interactive", "--out", tmp_path / "o", datarace_file,
                   stdin="2\n")
    assert code == 0
    assert "volatile" in (tmp_path / "o" / "datarace.fixed.mjcc").read_text()


@pytest.mark.parametrize("answers", ["9\nx\n0\n", ""], ids=["bad-input", "eof"])
def test_interactive_abort_writes_nothing(datarace_file, tmp_path, answers):
    before = datarace_file.read_text()
    code, out = call("fix", "--mode", "interactive", "--write", "--out", tmp_path / "o",
                     datarace_file, stdin=answers)
    assert code == 1
    assert "aborted by user" in out
    assert datarace_file.read_text() == before
    assert not (tmp_path / "o" / "datarace.fixed.mjcc").exists()
    if answers:
        assert out.count("invalid choice") == 3


def test_parse_error_exit_code(tmp_path, capsys):
    f = tmp_path / "bad.mjcc"
    f.write_text("class {")
    assert call("analyze", f)[0] == 2
    assert "bad.mjcc" in capsys.readouterr().err


def test_missing_file_and_bad_json(tmp_path, datarace_file):
    assert call("fix", tmp_path / "nope.mjcc")[0] == 2
    bad = tmp_path / "s.json"
    bad.write_text("{oops")
    assert call("import-summaries", bad, "fix", datarace_file)[0] == 2
    bad.write_text('{"summaries": [{"class": 1}]}')
    assert call("import-summaries", bad, "fix", datarace_file)[0] == 2


def test_usage_errors():
    assert call()[0] == 2
    assert call("fix", "--max-iterations", "0", "x.mjcc")[0] == 2
    assert call("fix", "--mode", "sometimes", "x.mjcc")[0] == 2


def test_corpus_csv(tmp_path):
    code, out = call("corpus", "--out", tmp_path, "--figures")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0].startswith("program,bugs,races,clusters,status,iterations")
    assert len(lines) == 1 + len(list(CORPUS_DIR.glob("*.mjcc")))
    assert all(",Fixed," in line for line in lines[1:])
    assert (tmp_path / "corpus.png").exists() and (tmp_path / "corpus.json").exists()


def test_corpus_json_and_custom_dir(tmp_path):
    (tmp_path / "a.mjcc").write_text(RACE_FREE)
    code, out = call("corpus", "--report", "json", tmp_path)
    (row,) = json.loads(out)["programs"]
    assert code == 0 and row["program"] == "a" and row["bugs"] == 0
    assert call("corpus", tmp_path / "empty")[0] == 2


def test_fixed_output_matches_library(datarace_file, tmp_path):
    from racefix import repair
    call("fix", "--out", tmp_path, datarace_file)
    expected = render_program(repair(parse_file(datarace_file)).program)
    assert (tmp_path / "datarace.fixed.mjcc").read_text() == expected
