import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nftiles import cli, config, energy
from nftiles.errors import ConvergenceError
from nftiles.geom_core import cell_constants


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# -- classify ----------------------------------------------------------------


def test_classify_text(capsys):
    code, out, _ = run(capsys, "classify")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 34
    assert lines[-1] == "# classes A=8 D=4 E=2 I=8 J=8 Z=2"
    counts = {}
    for line in lines[1:-1]:
        cls = line.split("\t")[1]
        counts[cls] = counts.get(cls, 0) + 1
    assert counts == {"A": 8, "I": 8, "J": 8, "Z": 2, "E": 2, "D": 4}


def test_classify_json_boundaries(capsys):
    code, out, _ = run(capsys, "classify", "--format", "json", "--theta", "1.40", "--boundaries")
    assert code == 0
    data = json.loads(out)
    assert data["matches_table"] is True
    assert data["classes"] == {"A": 8, "D": 4, "E": 2, "I": 8, "J": 8, "Z": 2}
    dt = cell_constants(1.40).delta_theta
    for row in data["types"]:
        assert row["delta_theta"] == pytest.approx(dt, abs=1e-15)
        if row["e_angle"] is not None:
            assert row["e_angle"] < dt
    assert sum(row["e_angle"] is not None for row in data["types"]) > 0


def test_classify_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(capsys, "classify", "--format", "json", "--boundaries", "--theta", "1.3", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_seventeen_digit_floats():
    assert cli.fnum(0.1) == "0.10000000000000001"
    assert cli.to_json({"x": [1.0, 2], "y": None}) == '{\n  "x": [1, 2],\n  "y": null\n}'
    assert float(cli.fnum(math.pi)) == math.pi


def test_theta_range(capsys, caplog):
    assert run(capsys, "classify", "--theta", "0.5")[0] == 64
    assert run(capsys, "classify", "--theta", str(math.pi / 2))[0] == 64
    with caplog.at_level("WARNING"):
        assert run(capsys, "classify", "--theta", "1.2")[0] == 0
    assert "arccos(1/3)" in caplog.text


# -- attach-table ------------------------------------------------------------


def test_attach_table_csv(capsys):
    code, out, _ = run(capsys, "attach-table", "--theta", "1.40")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 392
    assert list(rows[0]) == ["left_type", "right_type", "direction", "ok", "reason", "middle_type"]
    assert {r["ok"] for r in rows} == {"true", "false"}


def test_attach_table_check_paper(capsys):
    code, _, err = run(capsys, "attach-table", "--check-paper")
    assert code == 0
    assert "reproduced" in err


def test_attach_table_json_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(capsys, "attach-table", "--format", "json", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    data = json.loads(a.read_text())
    assert data["theta"] == 1.4
    assert len(data["rows"]) == 392


def test_attach_table_check_fails_on_mismatch(capsys, monkeypatch):
    from nftiles import attach

    real = attach.check_case_tables

    def broken(consts=None):
        checks = list(real(consts))
        first = checks[0]
        checks[0] = attach.TableCheck(first.table, first.row, first.column, first.expected, "?")
        return checks

    monkeypatch.setattr(attach, "check_case_tables", broken)
    assert run(capsys, "attach-table", "--check-paper")[0] == 2


# -- realize -----------------------------------------------------------------


@pytest.mark.parametrize("section", ["F F F F", "U U U U U U", "F U F D F"])
def test_realize_writes_mesh_and_report(tmp_path, capsys, section):
    pat = write(tmp_path, "p.txt", f"theta = 1.40\nfamily = A\n{section}\n")
    out = tmp_path / "mesh.obj"
    code, stdout, _ = run(capsys, "realize", pat, "--out", str(out))
    assert code == 0
    summary = json.loads(stdout)
    assert summary["admissible"] is True
    assert summary["max_bond_residual"] < 1e-9
    assert json.loads((tmp_path / "mesh.json").read_text()) == summary
    inc = summary["incidence"]
    assert inc["gamma1_max_abs"] < 1e-9
    assert inc["gamma2_classes"]["other"] == 0
    if section == "F F F F":
        assert inc["gamma2_max_abs"] < 1e-9


def test_obj_round_trip(tmp_path, capsys):
    pat = write(tmp_path, "p.txt", "F U U D F\n")
    out = tmp_path / "m.obj"
    assert run(capsys, "realize", "--pattern", pat, "--theta", "1.45", "--out", str(out))[0] == 0
    verts, faces = cli.read_obj(out.read_text())
    c = cell_constants(1.45)
    y = config.realize(config.pattern_from_section(list("FUUDF")), c)
    sites = sorted(y.points, key=lambda s: (s[1], s[0]))
    assert_allclose(verts, np.array([y.points[s] for s in sites]), atol=1e-12, rtol=0)
    assert all(len(f) == 4 and max(f) < len(verts) for f in faces)
    # one face per cell of the window
    assert len(faces) == len(config.form_function(y))


def test_faces_counterclockwise(tmp_path):
    y = config.realize(config.pattern_from_section(list("FFF")), cell_constants(1.40))
    mesh = cli.mesh_from_deformation(y)
    for q in mesh.quads:
        a, b, c, d = (np.array(mesh.sites[i] + (0,)) for i in q)
        assert np.cross(b - a, c - b)[2] > 0


def test_ply_writer(tmp_path, capsys):
    pat = write(tmp_path, "p.txt", "family = B\nextent = 3x2\nD D F\n")
    out = tmp_path / "m.ply"
    assert run(capsys, "realize", pat, "--out", str(out))[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "ply"
    nv = int(next(l for l in lines if l.startswith("element vertex")).split()[-1])
    nf = int(next(l for l in lines if l.startswith("element face")).split()[-1])
    body = lines[lines.index("end_header") + 1:]
    assert len(body) == nv + nf
    assert all(l.startswith("4 ") for l in body[nv:])


def test_realize_deterministic(tmp_path, capsys):
    pat = write(tmp_path, "p.txt", "U U F D\n")
    outs = []
    for name in ("a.obj", "b.obj"):
        assert run(capsys, "realize", pat, "--out", str(tmp_path / name))[0] == 0
        outs.append((tmp_path / name).read_bytes() + (tmp_path / name).with_suffix(".json").read_bytes())
    assert outs[0] == outs[1]


def test_realize_tile_codes(tmp_path, capsys):
    text = "extent = 2x2\n[\\/ / /\\ ; s+1]\n[\\/ / /\\ ; s+1]\n[\\/ / /\\ ; s+1]\n"
    code, out, _ = run(capsys, "realize", write(tmp_path, "p.txt", text))
    assert code == 0
    assert json.loads(out)["incidence"]["gamma2_max_abs"] < 1e-9


def test_realize_invalid_pattern(tmp_path, capsys):
    text = "extent = 2x2\n[\\/ / /\\ ; s+1]\n[/\\ / \\/ ; s-1]\n[\\/ / /\\ ; s+1]\n"
    code, out, _ = run(capsys, "realize", write(tmp_path, "p.txt", text))
    assert code == 2
    data = json.loads(out)
    assert data["valid"] is False
    assert data["violations"]


def test_realize_parse_errors(tmp_path, capsys):
    for text in ("F X F\n", "colour = red\nF\n", "F F\n[\\/ / /\\ ; s+1]\n", ""):
        code, out, _ = run(capsys, "realize", write(tmp_path, "p.txt", text))
        assert code == 2
        assert json.loads(out)["violations"][0]["rule"] == "PARSE"


def test_realize_usage_errors(tmp_path, capsys):
    assert run(capsys, "realize")[0] == 64
    assert run(capsys, "realize", str(tmp_path / "missing.txt"))[0] == 64
    pat = write(tmp_path, "p.txt", "F F\n")
    assert run(capsys, "realize", pat, "--extent", "3by3")[0] == 64
    with pytest.raises(SystemExit) as exc:
        cli.main(["realize", pat, "--format", "stl"])
    assert exc.value.code == 64


def test_realize_below_orientation_crossover(tmp_path, capsys):
    # single rolls flip the flat parity; the orientations no longer allow that
    pat = write(tmp_path, "p.txt", "F U F D F\n")
    assert run(capsys, "realize", pat, "--theta", "1.2")[0] == 3
    assert run(capsys, "realize", pat, "--theta", "1.3")[0] == 0
    pat = write(tmp_path, "q.txt", "F U U F\n")
    assert run(capsys, "realize", pat, "--theta", "1.2")[0] == 0


# -- minimize ----------------------------------------------------------------


def test_minimize_defaults(capsys):
    code, out, _ = run(capsys, "minimize", "--starts", "3")
    assert code == 0
    data = json.loads(out)
    assert data["ell_bar"] <= 1 and data["theta_bar"] < math.pi / 2
    assert data["delta13"] == pytest.approx(data["delta_theta_bar"], abs=1e-6)
    assert data["delta24"] == pytest.approx(data["delta_theta_bar"], abs=1e-6)
    assert data["energy_spread"] < 1e-10
    assert data["assumptions_passed"] is False
    assert {k: v["passed"] for k, v in data["assumptions"].items()} == check_vector()


def check_vector():
    return energy.check_assumptions(energy.PotentialParams()).vector()


def test_minimize_potential_file_and_out(tmp_path, capsys):
    pot = write(tmp_path, "pot.txt", energy.format_potential(energy.PotentialParams(alpha=2.5, c=0.05)))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(capsys, "minimize", pot, "--seed", "7", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_minimize_parallel_matches_serial(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "minimize", "--starts", "4", "--out", str(a))[0] == 0
    assert run(capsys, "minimize", "--starts", "4", "--workers", "2", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_minimize_errors(tmp_path, capsys, monkeypatch):
    assert run(capsys, "minimize", str(tmp_path / "none.txt"))[0] == 64
    assert run(capsys, "minimize", write(tmp_path, "bad.txt", "alpha = -1\n"))[0] == 2
    assert run(capsys, "minimize", "--starts", "0")[0] == 64

    def stuck(p, seed=0, **kw):
        raise ConvergenceError("iteration cap", [1.0])

    monkeypatch.setattr(energy, "minimize_cell", stuck)
    assert run(capsys, "minimize")[0] == 3


def test_usage_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 64


def test_console_script(tmp_path):
    res = subprocess.run([sys.executable, "-m", "nftiles.cli", "classify", "--format", "json"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["matches_table"] is True
