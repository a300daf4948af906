import json
import subprocess
import sys

import pytest

from contqg import cli
from contqg.errors import ConfigError
from contqg.intervals import uniform_grid


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_jacobi_line(capsys):
    code, out, _ = run(["run", "--space", "line", "--grid", "uniform:3", "--suite", "jacobi"], capsys)
    assert code == 0 and "[PASS] jacobi" in out


def test_run_circle_heis(capsys):
    code, out, _ = run(["run", "--space", "circle", "--grid", "arcs:4", "--suite", "circle-heis"], capsys)
    assert code == 0 and "circle-heis" in out


def test_coeff_table_rows(capsys):
    code, out, _ = run(["run", "--suite", "coeff-table", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)[0]
    table = doc["reports"][0]
    assert table["cases_total"] == 77 and table["extra"]["rows"] == 11


def test_failing_suite_exits_one(capsys):
    code, out, _ = run(["run", "--space", "circle", "--grid", "arcs:2", "--suite", "jacobi"], capsys)
    assert code == 1 and "[FAIL]" in out


@pytest.mark.parametrize("argv", [
    ["run", "--suite", "nope"],
    ["run"],
    ["run", "--space", "plane", "--suite", "jacobi"],
    ["run", "--space", "circle", "--suite", "ybe"],
    ["run", "--space", "line", "--suite", "circle-heis"],
    ["run", "--grid", "(0,1] circ(0,1/2]", "--suite", "jacobi"],
    ["run", "--grid", "uniform:x", "--suite", "jacobi"],
    ["run", "--space", "circle", "--grid", "uniform:2", "--suite", "jacobi"],
    ["run", "--grid", "(0,2] (1,3]", "--suite", "rep-sweep"],
    ["export-quiver", "--grid", "(0,2] (1,3]"],
    ["export-quiver"],
    ["normal-form", "(* (E (1,2]"],
])
def test_config_errors_exit_two(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and err.startswith("error:")


def test_resource_limit_exits_three(capsys):
    grid = " ".join(f"({i},{i + 1}]" for i in range(30))
    code, _, err = run(["run", "--grid", grid, "--suite", "jacobi"], capsys)
    assert code == 3 and "256" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# a comment\nspace = circle\ngrid = arcs:4\nsuite = circle-heis\nformat = json\n")
    code, out, _ = run(["run", "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(out)[0]["suite"] == "circle-heis"
    code, out, _ = run(["run", "--config", str(cfg), "--format", "text"], capsys)
    assert code == 0 and out.startswith("== circle-heis")


def test_bad_config_file(tmp_path):
    bad = tmp_path / "b.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        cli.read_config(str(bad))
    bad.write_text("seed = many\n")
    with pytest.raises(ConfigError):
        cli.read_config(str(bad))


def test_reports_byte_stable(tmp_path, capsys):
    argv = ["run", "--suite", "cartan", "--suite", "colimit,q-relations", "--seed", "4"]
    run(argv + ["--out", str(tmp_path / "a")], capsys)
    run(argv + ["--out", str(tmp_path / "b"), "--jobs", "2"], capsys)
    for name in ("cartan", "colimit", "q-relations"):
        a = (tmp_path / "a" / f"{name}.json").read_bytes()
        b = (tmp_path / "b" / f"{name}.json").read_bytes()
        assert a == b
        assert json.loads(a)["schema"] == 1


def test_export_quiver_a3(capsys):
    code, out, _ = run(["export-quiver", "--grid", "(0,1] (1,2] (2,3]"], capsys)
    assert code == 0
    assert out.startswith("graph quiver {") and out.count("--") == 2


def test_export_quiver_loop(tmp_path, capsys):
    path = tmp_path / "q.dot"
    code, _, _ = run(["export-quiver", "--grid", "circ(0,1/2] circle", "--out", str(path)], capsys)
    text = path.read_text()
    assert code == 0 and "v1 -- v1;" in text and text.count("--") == 1


def test_normal_form_command(capsys):
    code, out, _ = run(["normal-form", "(* (E (1,2]) (E (0,1]))"], capsys)
    assert code == 0
    assert out.strip() == "(+ (* q (E (0,1]) (E (1,2])) (* -q (E (0,2])))"


def test_parse_grid_forms():
    assert cli.parse_grid("uniform:2") == uniform_grid(2)
    assert cli.parse_grid("(0,1]; (1,2]") == uniform_grid(2)
    with pytest.raises(ConfigError):
        cli.parse_grid("(0,1] junk")


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "contqg.cli", "run", "--suite", "coeff-table"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "77/77" in r.stdout
