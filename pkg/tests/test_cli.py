import csv
import io
import json

import numpy as np
import pytest

from opmps.cli import BENCH_COLUMNS, digest, main, parse_pattern
from opmps.errors import ParseError, PatternMismatch
from opmps.linalg import matrix_to_json, parse_matrix, submatrix, validate_unitary, OccupationPattern
from opmps.oracles import ryser_permanent


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def identity_file(tmp_path):
    path = tmp_path / "eye.json"
    path.write_text(matrix_to_json(np.eye(4)))
    return path


@pytest.fixture
def haar8(tmp_path, capsys):
    path = tmp_path / "u8.json"
    assert run(capsys, "gen-unitary", "--m", 8, "--seed", 42, "--out", path)[0] == 0
    return path


def test_parse_pattern_forms():
    a = parse_pattern("1,2,3,4", "1:1,3:1,7:1,8:1", None, 8)
    b = parse_pattern("1,2,3,4", None, "1,0,1,0,0,0,1,1", 8)
    assert a == b == OccupationPattern((0, 1, 2, 3), (1, 0, 1, 0, 0, 0, 1, 1))


def test_parse_pattern_errors():
    with pytest.raises(ParseError):
        parse_pattern("1,x", "1:1", None, 2)
    with pytest.raises(ParseError):
        parse_pattern("1", "1-1", None, 2)
    with pytest.raises(PatternMismatch):
        parse_pattern("3", "1:1", None, 2)


def test_amplitude_identity(capsys, identity_file):
    code, out, _ = run(capsys, "amplitude", "--matrix", identity_file, "--in", "1,2", "--out", "1:1,2:1")
    assert code == 0
    assert json.loads(out)["amplitude"] == [1.0, 0.0]


def test_amplitude_matches_ryser(capsys, haar8):
    code, out, _ = run(capsys, "amplitude", "--matrix", haar8, "--in", "1,2,3,4", "--out", "1:1,3:1,7:1,8:1")
    assert code == 0
    report = json.loads(out)
    sub = submatrix(parse_matrix(haar8.read_text()), OccupationPattern((0, 1, 2, 3), (1, 0, 1, 0, 0, 0, 1, 1)))
    subfile = haar8.parent / "sub.json"
    subfile.write_text(json.dumps({"m": 4, "rows": [[[z.real, z.imag] for z in row] for row in sub]}))
    code, out, _ = run(capsys, "permanent", "--matrix", subfile, "--algo", "ryser")
    ryser = json.loads(out)["permanent"]
    assert abs(complex(*report["amplitude"]) - complex(*ryser)) <= 1e-12
    assert report["stats"]["pair_combinations"] == 28
    assert report["stats"]["predicted_c"] == 112


def test_amplitude_oracle_flag(capsys, haar8):
    code, out, _ = run(capsys, "amplitude", "--matrix", haar8, "--in", "1,2,2", "--out-occ", "0,1,0,0,2,0,0,0", "--oracle")
    report = json.loads(out)
    assert abs(complex(*report["amplitude"]) - complex(*report["oracle"]["dense_amplitude"])) <= 1e-12


def test_probability(capsys, identity_file):
    code, out, _ = run(capsys, "probability", "--matrix", identity_file, "--in", "1,2", "--out", "1:1,2:1")
    assert json.loads(out)["probability"] == 1.0


def test_malformed_json(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "amplitude", "--matrix", bad, "--in", "1", "--out", "1:1")
    assert code == 2
    assert "bad matrix JSON" in err


def test_pattern_mismatch_exit(capsys, identity_file):
    code, _, _ = run(capsys, "amplitude", "--matrix", identity_file, "--in", "1,2", "--out", "1:1")
    assert code == 3


def test_missing_file_exit(capsys, tmp_path):
    code, _, _ = run(capsys, "amplitude", "--matrix", tmp_path / "nope.json", "--in", "1", "--out", "1:1")
    assert code == 5


def test_not_unitary_exit(capsys, tmp_path):
    path = tmp_path / "ones.json"
    path.write_text(matrix_to_json(np.ones((2, 2))))
    code, _, _ = run(capsys, "amplitude", "--matrix", path, "--in", "1", "--out", "1:1")
    assert code == 3


@pytest.mark.parametrize("algo", ["naive", "ryser", "lines"])
def test_permanent_ones(capsys, tmp_path, algo):
    path = tmp_path / "ones.json"
    path.write_text(matrix_to_json(np.ones((3, 3))))
    code, out, _ = run(capsys, "permanent", "--matrix", path, "--algo", algo)
    assert code == 0
    assert json.loads(out)["permanent"] == [6.0, 0.0]


def test_permanent_lines_vs_ryser_n10(capsys, tmp_path):
    rng = np.random.default_rng(10)
    path = tmp_path / "g10.json"
    path.write_text(matrix_to_json(rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))))
    code, out, _ = run(capsys, "permanent", "--matrix", path, "--algo", "lines", "--compare")
    report = json.loads(out)
    assert report["rel_diff"] <= 1e-9
    assert report["stats"]["pair_combinations"] == report["stats"]["predicted_pairs"] == 10 * 511
    assert report["stats"]["predicted_c"] == 51100


def test_permanent_naive_guard(capsys, tmp_path):
    path = tmp_path / "g12.json"
    path.write_text(matrix_to_json(np.eye(12)))
    assert run(capsys, "permanent", "--matrix", path, "--algo", "naive")[0] == 4


def test_bench_columns(capsys):
    code, out, _ = run(capsys, "bench", "--n-min", 2, "--n-max", 12)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == BENCH_COLUMNS
    assert rows[0]["measured_pairs"] == "2"
    n4 = rows[2]
    assert (n4["n"], n4["measured_pairs"], n4["c"]) == ("4", "28", "112")
    for row in rows:
        assert row["measured_pairs"] == row["pair_formula"]
    for col in ("measured_pairs", "pair_formula", "c"):
        values = [int(r[col]) for r in rows]
        assert values == sorted(values)


def test_bench_guard(capsys):
    assert run(capsys, "bench", "--n-max", 25)[0] == 4


def test_gen_unitary_roundtrip_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "gen-unitary", "--m", 2, "--seed", 1, "--out", a)[0] == 0
    assert run(capsys, "gen-unitary", "--m", 2, "--seed", 1, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    validate_unitary(parse_matrix(a.read_text()))


def test_gen_unitary_bad_size(capsys, tmp_path):
    assert run(capsys, "gen-unitary", "--m", 0, "--seed", 1, "--out", tmp_path / "x.json")[0] == 3


def test_gen_unitary_io_failure(capsys, tmp_path):
    assert run(capsys, "gen-unitary", "--m", 2, "--seed", 1, "--out", tmp_path / "missing" / "x.json")[0] == 5


def test_lossy_command(capsys, identity_file):
    code, out, _ = run(capsys, "lossy", "--matrix", identity_file, "--lambda", "0.9", "--in", "1,2", "--out", "1:1,2:1", "--lost", 0)
    report = json.loads(out)
    assert report["probability"] == pytest.approx(0.9**4)
    assert report["stats"]["predicted_c_L"] == 4 * 1


def test_lossy_weight_file(capsys, tmp_path, identity_file):
    wfile = tmp_path / "w.json"
    wfile.write_text(matrix_to_json(np.full((4, 4), 0.5)))
    code, out, _ = run(capsys, "lossy", "--matrix", identity_file, "--lambda", wfile, "--in", "1", "--out-occ", "0,0,0,0", "--lost", 1)
    assert json.loads(out)["probability"] == pytest.approx(0.75)


def test_distinguish_command(capsys, tmp_path):
    path = tmp_path / "bs.json"
    path.write_text(matrix_to_json(np.array([[1, 1], [1, -1]]) / np.sqrt(2)))
    code, out, _ = run(capsys, "distinguish", "--matrix", path, "--in", "1,2", "--out", "1:1,2:1", "--eta", "1,0.5")
    assert json.loads(out)["probability"] == pytest.approx(0.25, abs=1e-12)


def test_dephase_command_deterministic(capsys, haar8):
    argv = ["dephase", "--matrix", haar8, "--in", "1,2", "--out", "1:1,2:1", "--sigma", "0.5", "--samples", "300", "--seed", "4"]
    first = json.loads(run(capsys, *argv)[1])
    second = json.loads(run(capsys, *argv, "--threads", "2")[1])
    assert first["probability"] == second["probability"]
    assert first["digest"] == second["digest"]


def test_loss_curve_csv(capsys):
    code, out, _ = run(capsys, "loss-curve", "--n", 30)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["fraction_lost", "ratio"]
    assert len(rows) == 31
    ratios = [float(r["ratio"]) for r in rows]
    assert ratios == sorted(ratios, reverse=True)


def test_export_mpo(capsys, haar8):
    code, out, _ = run(capsys, "export-mpo", "--matrix", haar8, "--in", "1,2,3", "--mode", 2, "--cutoff", 4)
    doc = json.loads(out)
    assert doc["mode"] == 2 and doc["cutoff"] == 4
    assert len(doc["blocks"]) == 27
    code, out, _ = run(capsys, "export-mpo", "--matrix", haar8, "--in", "1,2,3", "--mode", 2, "--cutoff", 4, "--power", 2)
    assert {b["power"] for b in json.loads(out)["blocks"]} == {2}


def test_export_mpo_cutoff_guard(capsys, haar8):
    assert run(capsys, "export-mpo", "--matrix", haar8, "--in", "1,2,3", "--mode", 1, "--cutoff", 3)[0] == 4


def test_digest_stable():
    u = np.eye(3)
    assert digest(u, "1,2", None) == digest(u.copy(), "1,2", None)
    assert digest(u, "1,2", None) != digest(u, "1,3", None)


def test_report_schema(capsys, identity_file):
    _, out, _ = run(capsys, "amplitude", "--matrix", identity_file, "--in", "1,2", "--out", "1:1,2:1")
    report = json.loads(out)
    assert {"command", "algorithm", "amplitude", "stats", "wall_time_s", "digest"} <= set(report)
    assert {"pair_combinations", "scalar_multiplications", "predicted_pairs", "predicted_c"} <= set(report["stats"])
