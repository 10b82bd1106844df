import io
import json
from pathlib import Path

import pytest

from tatess.cli import EXIT_HYPOTHESIS, EXIT_OK, EXIT_USAGE, main

GOLDEN = Path(__file__).parent / "golden"


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def rows(text):
    return [line for line in text.splitlines() if line and not line.startswith("#") and line != "index\tmonomial"]


@pytest.mark.parametrize(
    "argv,count",
    [
        (("--prime", "5", "--level", "n", "--s", "9", "--t", "8"), 4),
        (("--prime", "11", "--level", "n", "--s", "21", "--t", "20"), 56),
    ],
)
def test_ring_basis_counts(argv, count):
    code, text = run("ring-basis", *argv, "--inverted")
    assert code == EXIT_OK
    assert len(rows(text)) == count
    assert text.rstrip().endswith(f"# dimension {count}")


def test_ring_basis_unit():
    code, text = run("ring-basis", "--prime", "3", "--level", "f", "--s", "0", "--t", "0")
    assert code == EXIT_OK and rows(text) == ["0\t1"]


def test_ring_basis_needs_bidegree(capsys):
    assert run("ring-basis", "--prime", "3", "--level", "f")[0] == EXIT_USAGE
    assert "--s" in capsys.readouterr().err


@pytest.mark.parametrize("level", ["f", "n"])
def test_ss_run_collapses(level):
    code, text = run("ss-run", "--prime", "3", "--level", level, "--inverted")
    assert code == EXIT_OK
    assert "# E_10 interior: zero" in text


def test_ss_run_page_table():
    code, text = run("ss-run", "--prime", "3", "--level", "f", "--inverted", "--page", "6")
    assert code == EXIT_OK
    table = text.split("s\tt\tdim\n", 1)[1].strip().splitlines()
    assert table and all(line.split("\t")[2] == "1" for line in table)


def test_ss_run_empty_window():
    assert run("ss-run", "--prime", "3", "--level", "f", "--inverted", "--window", "0,10,0,10")[0] == EXIT_USAGE


@pytest.mark.parametrize(
    "prime,group,line",
    [("3", "g", "page 10, s = 13"), ("5", "n", "page 34, s = 37"), ("5", "f", "page 34, s = 33")],
)
def test_vanishing_line(prime, group, line):
    code, text = run("vanishing-line", "--prime", prime, "--group", group)
    assert code == EXIT_OK and text.splitlines()[0] == line


def test_picard_bound_p5_n():
    code, text = run("picard-bound", "--prime", "5", "--group", "n")
    assert code == EXIT_OK
    assert "degrees: [9]" in text and "dim <= 4" in text and "= 625" in text


def test_picard_bound_p3(capsys):
    assert run("picard-bound", "--prime", "3", "--group", "n")[0] == EXIT_HYPOTHESIS
    assert "p >= 5" in capsys.readouterr().err


def test_even_prime_is_hypothesis_error():
    assert run("vanishing-line", "--prime", "4", "--group", "n")[0] == EXIT_HYPOTHESIS


def test_dims_reports_necklaces():
    code, text = run("dims", "--prime", "5", "--level", "n", "--inverted", "--s", "9", "--t", "8")
    assert code == EXIT_OK
    assert "9\t8\t4" in text and "necklaces(n=4) = 4" in text


def test_unknown_command_and_flag():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["dims", "--format", "pdf"])
    assert exc.value.code == EXIT_USAGE


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"prime": 5, "group": "f"}))
    assert run("vanishing-line", "--config", str(cfg))[1].splitlines()[0] == "page 34, s = 33"
    assert run("vanishing-line", "--config", str(cfg), "--group", "n")[1].splitlines()[0] == "page 34, s = 37"


@pytest.mark.parametrize("content", ["{not json", "[1, 2]", '{"prime": 5, "colour": "red"}'])
def test_malformed_config(tmp_path, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    assert run("vanishing-line", "--config", str(cfg), "--group", "n")[0] == EXIT_USAGE


def test_custom_definition(tmp_path):
    from tatess.stabilizer_presets import preset_spectral_sequence

    ss = preset_spectral_sequence(3, "f", True)
    doc = ss.to_dict()
    doc.pop("window", None)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"definition": doc, "window": [0, 24, -72, 72, 9]}))
    code, text = run("ss-run", "--config", str(cfg))
    assert code == EXIT_OK and text.startswith("# ss-run custom p=3")
    assert "# E_10 interior: zero" in text


def test_png_output(tmp_path):
    png = tmp_path / "chart.png"
    code, text = run("ss-run", "--prime", "3", "--level", "f", "--inverted", "--png", str(png))
    assert code == EXIT_OK and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


# -- golden files ---------------------------------------------------------------------


@pytest.mark.parametrize("workers", ["1", "2"])
def test_golden_svg(tmp_path, monkeypatch, workers):
    monkeypatch.chdir(tmp_path)
    argv = ["ss-run", "--prime", "3", "--level", "n", "--inverted", "--format", "svg", "--out", "chart.svg"]
    code, text = run(*argv, "--workers", workers)
    assert code == EXIT_OK
    assert text == (GOLDEN / "ss_run_n3.txt").read_text()
    assert (tmp_path / "chart.svg").read_bytes() == (GOLDEN / "ss_run_n3.svg").read_bytes()


@pytest.mark.parametrize("workers", ["1", "2"])
def test_golden_ascii(workers):
    argv = ["ss-run", "--prime", "5", "--level", "f", "--inverted", "--format", "ascii-chart", "--page", "9"]
    code, text = run(*argv, "--window", "0,72,-120,120", "--workers", workers)
    assert code == EXIT_OK
    assert text == (GOLDEN / "ss_run_f5_ascii.txt").read_text()
