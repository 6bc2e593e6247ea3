import subprocess
import sys

import pytest

from mmscheme import catalog
from mmscheme.cli import main
from mmscheme.formats import parse_scheme, parse_slp
from mmscheme.verify import verify_slp


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_builtins(capsys):
    assert run(capsys, "verify", "stapleton59-file") == (0, "Valid (729/729 equations)\n", "")
    assert run(capsys, "verify", "strassen")[1] == "Valid (64/64 equations)\n"
    assert run(capsys, "verify", "stapleton59-slp")[0] == 0


def test_verify_invalid_file(capsys, tmp_path):
    text = catalog.STAPLETON59_FILE.replace("0 1 0 0 0 0 1", "0 -1 0 0 0 0 1", 1)
    path = tmp_path / "bad.txt"
    path.write_text(text)
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 1
    assert out.startswith("Invalid (")
    assert "A0*B" in out


def test_verify_modular(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "stapleton59-slp", "--mod", "101", "--trials", "5")
    assert (code, out) == (0, "Pass (5 trials mod 101)\n")
    path = tmp_path / "bad.slp"
    path.write_text(catalog.STAPLETON59_SLP.replace("v5 = M2 + v4", "v5 = M2 - v4"))
    code, out, _ = run(capsys, "verify", str(path), "--mod", "1000003")
    assert code == 1 and out.startswith("Fail") and "A = [" in out


def test_count_outputs(capsys):
    assert run(capsys, "count", "stapleton59-naive")[1] == (
        "additions: 110 (A:31 B:33 C:46), multiplications: 23\n"
    )
    assert run(capsys, "count", "stapleton59-slp")[1] == (
        "additions: 59, multiplications: 23\nby side: A:15 B:15 C:29\n"
    )
    assert "scalar multiplications: 11" in run(capsys, "count", "stapleton59-file")[1]
    assert run(capsys, "count", "strassen")[1].startswith("additions: 18 ")


def test_reduce_and_emit(capsys, tmp_path):
    target = tmp_path / "reduced.slp"
    code, out, _ = run(capsys, "reduce", "stapleton59-naive", "--emit-slp", str(target))
    assert code == 0
    assert "naive additions: 110" in out and "reduced additions: 59" in out
    assert "temporaries: A:7 B:6 C:9" in out
    slp = parse_slp(target.read_text())
    assert verify_slp(slp).valid
    code, out, _ = run(capsys, "count", str(target))
    assert out.startswith("additions: 59,")


def test_reduce_seeded(capsys):
    code, out, _ = run(capsys, "reduce", "strassen", "--restarts", "3", "--seed", "5")
    assert code == 0
    assert "best seed: " in out and "(seeded-random)" in out


def test_emit_formats(capsys, tmp_path):
    code, out, _ = run(capsys, "emit", "stapleton59-naive", "--format", "scheme-file")
    assert code == 0
    assert parse_scheme(out) == catalog.builtin("stapleton59-naive")
    code, out, _ = run(capsys, "emit", "stapleton59-slp")
    assert out.startswith("# dims: 3,3,3\nt0 = A3 + A6\n")
    assert "\nM0 = A1 * B4\n" in out and out.endswith("C8 = v5 - M7\n")
    target = tmp_path / "s.txt"
    run(capsys, "emit", "stapleton59-file", "--format", "scheme-file", "-o", str(target))
    assert parse_scheme(target.read_text()) == catalog.builtin("stapleton59-file")


def test_multiply(capsys):
    code, out, _ = run(capsys, "multiply", "--size", "10", "--threshold", "1")
    assert code == 0
    assert "padded 27" in out and "agrees with naive multiplication: yes" in out
    assert "scalar additions: 48203, multiplications: 12167" in out
    code, out, _ = run(capsys, "multiply", "--size", "6", "--ring", "rational", "--scheme", "strassen", "--threshold", "1")
    assert code == 0 and "yes" in out


def test_bench(capsys):
    code, out, _ = run(capsys, "bench", "--sizes", "3,9", "--repetitions", "1", "--delimiter", "\t")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "size\tadds\tmuls\ttime_ns\tbaseline_ns"
    assert lines[1].startswith("3\t59\t23\t") and lines[2].startswith("9\t1888\t529\t")


def test_builtins_listing(capsys):
    code, out, _ = run(capsys, "builtins")
    assert code == 0
    assert [line.split()[0] for line in out.splitlines()] == list(catalog.NAMES)


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "no-such-scheme"],
        ["verify", "strassen", "--mod", "100"],
        ["count", "strassen", "--dims", "2,2"],
        ["multiply", "--size", "4", "--ring", "quaternion"],
        ["bench", "--sizes", "3,x"],
    ],
)
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error: ")


def test_malformed_file(capsys, tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("1 2\n#\n1\n#\n1 1\n")
    code, _, err = run(capsys, "verify", str(path))
    assert code == 2 and "column" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "mmscheme", "count", "strassen"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("additions: 18 (A:5 B:5 C:8)")
