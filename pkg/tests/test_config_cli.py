import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from zrpdirac import cli
from zrpdirac.config import ConfigError, load_config, parse_config
from zrpdirac.core import ConvergenceError
from zrpdirac.green import free_green, full_green
from zrpdirac.solver import find_bound_states
from zrpdirac.states import assemble_wavefunction

ONE = '{"centers": [{"position": [0, 0, 0], "varkappa": 1.0}]}'
PAIR_FAR = json.dumps({"centers": [{"position": [0, 0, -50], "varkappa": 1.0},
                                   {"position": [0, 0, 50], "varkappa": 1.0}]})
EMPTY = '{"centers": [{"position": [0, 0, 0], "varkappa": -2.0, "kappa": [0, 0, 1.0]}]}'
ASYM = json.dumps({"centers": [{"position": [0, 0, 0], "varkappa": 1.2, "kappa": [0, 0.3, 0.1]},
                               {"position": [0, 0, 1.5], "varkappa": 0.9, "kappa": [0.2, 0, 0]}]})
THREE = json.dumps({"centers": [{"position": [0.2, -0.4, 0.0], "varkappa": 1.4, "kappa": [0.1, 0.0, 0.3]},
                                {"position": [1.1, 0.3, -0.2], "varkappa": 0.8, "kappa": [0.0, -0.2, 0.1]},
                                {"position": [-0.5, 0.6, 0.9], "varkappa": 1.9, "kappa": [0.3, 0.3, 0.0]}]})


def write(tmp_path, text, name="cfg.json"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# config_sha256=")
    return lines[0].split("=", 1)[1], list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


# -- configuration ------------------------------------------------------------------


def test_minimal_config_defaults():
    cfg = parse_config(ONE)
    assert len(cfg.centers) == 1 and cfg.units == "natural" and cfg.output is None
    assert (cfg.solver.grid_points, cfg.solver.delta, cfg.solver.root_tol) == (2001, 1e-6, 1e-12)
    assert len(cfg.digest) == 64


def test_digest_is_insensitive_to_formatting():
    a = parse_config(ONE)
    b = parse_config('{\n  "centers": [ {"varkappa": 1.0, "position": [0,0,0]} ]\n}')
    assert a.digest == b.digest
    assert parse_config(ASYM).digest != a.digest


def test_full_config():
    text = json.dumps({"units": "natural", "centers": json.loads(ASYM)["centers"],
                       "solver": {"grid_points": 501, "delta": 1e-5, "root_tol": 1e-11}, "output": "s.csv"})
    cfg = parse_config(text)
    assert cfg.solver.grid_points == 501 and cfg.output == "s.csv"
    np.testing.assert_array_equal(cfg.centers[1].kappa_vec, [0.2, 0, 0])


@pytest.mark.parametrize(
    "text, needle",
    [
        ("{}", "centers"),
        ('{"centers": []}', "centers"),
        ('{"centers": [{"varkappa": 1}]}', "centers[0].position"),
        ('{"centers": [{"position": [0, 0], "varkappa": 1}]}', "centers[0].position"),
        ('{"centers": [{"position": [0, 0, 0]}]}', "centers[0].varkappa"),
        ('{"centers": [{"position": [0, 0, 0], "varkappa": true}]}', "centers[0].varkappa"),
        ('{"centers": [{"position": [0, 0, 0], "varkappa": 1, "spin": 2}]}', "centers[0].spin"),
        ('{"centers": [{"position": [0, 0, 0], "varkappa": 1}], "extra": 1}', "extra"),
        ('{"units": "SI", "centers": [{"position": [0, 0, 0], "varkappa": 1}]}', "units"),
        ('{"centers": [{"position": [0, 0, 0], "varkappa": 1}], "solver": {"delta": 0}}', "solver.delta"),
        ('{"centers": [{"position": [0, 0, 0], "varkappa": 1}], "solver": {"root_tol": -1}}', "solver.root_tol"),
        ('{"centers": [{"position": [0, 0, 0], "varkappa": 1}], "solver": {"grid_points": 2.5}}',
         "solver.grid_points"),
        ('{"centers": [{"position": [0, 0, 0], "varkappa": 1, "varkappa": 2}]}', "duplicate"),
        ('{"centers": [', "invalid JSON"),
    ],
)
def test_config_errors_name_the_field(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert needle in str(exc.value)


def test_coincident_centers_reported_with_line():
    text = '{\n "centers": [\n  {"position": [1, 2, 3], "varkappa": 1},\n  {"position": [1, 2, 3], "varkappa": 2}\n ]\n}'
    with pytest.raises(ConfigError, match=r"line 4: centers\[1\]\.position: coincides with centers\[0\]"):
        parse_config(text)


def test_error_line_numbers():
    text = '{\n "centers": [\n  {"position": [0, 0, 0],\n   "varkappa": "big"}\n ]\n}'
    with pytest.raises(ConfigError, match="line 4"):
        parse_config(text)


def test_load_config_reports_path(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    path = write(tmp_path, "{}")
    with pytest.raises(ConfigError, match="cfg.json"):
        load_config(path)


# -- spectrum ---------------------------------------------------------------------------


def test_spectrum_single_center(tmp_path, capsys):
    cfg = write(tmp_path, ONE)
    code, out, _ = run(["spectrum", "--config", cfg], capsys)
    assert code == 0
    digest, rows = read_csv(out)
    assert digest == load_config(cfg).digest
    assert list(rows[0]) == list(cli.SPECTRUM_COLUMNS)
    assert [float(r["E"]) for r in rows] == [0.6, 0.6]
    assert [r["signature"] for r in rows] == ["1", "1"]
    assert all(float(r["residual"]) <= 1e-14 for r in rows)


def test_spectrum_far_pair(tmp_path, capsys):
    code, out, _ = run(["spectrum", "--config", write(tmp_path, PAIR_FAR)], capsys)
    assert code == 0
    E = [float(r["E"]) for r in read_csv(out)[1]]
    assert sum(abs(e - 0.6) < 5e-6 for e in E) == 4


def test_spectrum_empty_exits_zero(tmp_path, capsys):
    code, out, _ = run(["spectrum", "--config", write(tmp_path, EMPTY)], capsys)
    assert code == 0
    assert read_csv(out)[1] == []


def test_spectrum_json(tmp_path, capsys):
    cfg = write(tmp_path, ONE)
    code, out, _ = run(["spectrum", "--config", cfg, "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["config_sha256"] == load_config(cfg).digest
    assert doc["columns"] == list(cli.SPECTRUM_COLUMNS)
    assert doc["rows"][0][2] == 0.6


def test_output_path_from_config_and_flag(tmp_path, capsys):
    target = tmp_path / "from_config.csv"
    cfg = write(tmp_path, json.dumps({**json.loads(ONE), "output": str(target)}))
    assert run(["spectrum", "--config", cfg], capsys)[0] == 0
    assert target.read_text().startswith("# config_sha256=")
    other = tmp_path / "flag.csv"
    assert run(["spectrum", "--config", cfg, "--out", str(other)], capsys)[0] == 0
    assert other.read_text() == target.read_text()


def test_output_is_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, ASYM)
    first = run(["spectrum", "--config", cfg], capsys)[1]
    assert run(["spectrum", "--config", cfg], capsys)[1] == first


def test_numbers_have_fifteen_digits():
    assert cli.fmt(1 / 3) == "0.333333333333333"
    assert cli.fmt(None) == "" and cli.fmt(3) == "3"


# -- exit codes ---------------------------------------------------------------------------


def test_config_error_exit_2(tmp_path, capsys):
    code, _, err = run(["spectrum", "--config", write(tmp_path, '{"centers": []}')], capsys)
    assert code == 2 and "centers" in err


def test_missing_config_exit_2(capsys):
    assert run(["spectrum"], capsys)[0] == 2


def test_bad_usage_values_exit_2(capsys):
    assert run(["twocenter", "--x", "0.5", "--y-range", "3:1:1"], capsys)[0] == 2
    assert run(["green", "--energy", "0.1", "--source", "0,0", "--grid", "2,2,2,1"], capsys)[0] == 2


def test_numerical_failure_exit_3(tmp_path, capsys, monkeypatch):
    def boom(*_a, **_k):
        raise ConvergenceError("branch tracking did not converge")

    monkeypatch.setattr(cli, "find_bound_states", boom)
    code, _, err = run(["spectrum", "--config", write(tmp_path, ONE)], capsys)
    assert code == 3 and "converge" in err


def test_pole_exit_4(tmp_path, capsys):
    cfg = write(tmp_path, ONE)
    code, _, err = run(["green", "--config", cfg, "--energy", "0.6", "--source", "0.5,0,0", "--grid", "2,2,2,1"],
                       capsys)
    assert code == 4 and "pole" in err


# -- twocenter and critical -----------------------------------------------------------


def test_twocenter_rows(capsys):
    code, out, _ = run(["twocenter", "--x", "1.5", "--y-range=-100:1:101"], capsys)
    assert code == 0
    _, rows = read_csv(out)
    assert [float(r["y"]) for r in rows] == [-100.0, 1.0]
    assert float(rows[0]["eps_g_minus"]) == pytest.approx(-0.98454, abs=5e-6)
    assert float(rows[1]["eps_u"]) == 1.0


def test_twocenter_blank_cells(capsys):
    code, out, _ = run(["twocenter", "--x", "0.5", "--y-range=-3:0:1"], capsys)
    _, rows = read_csv(out)
    assert rows[0]["eps_u"] == "" and rows[0]["eps_g_plus"] == ""
    assert rows[0]["eps_g_minus"] != ""
    assert rows[3]["eps_u"] == "" and rows[3]["eps_g_plus"] != ""


def test_twocenter_sweep_shape(capsys):
    code, out, _ = run(["twocenter", "--x", "0.5", "--y-range", "1:30:0.25"], capsys)
    _, rows = read_csv(out)
    y = np.array([float(r["y"]) for r in rows])
    gm = np.array([float(r["eps_g_minus"]) if r["eps_g_minus"] else np.nan for r in rows])
    gp = np.array([float(r["eps_g_plus"]) if r["eps_g_plus"] else np.nan for r in rows])
    u = np.array([float(r["eps_u"]) if r["eps_u"] else np.nan for r in rows])
    # the gerade pair exists only below the fold, where both branches meet
    yc = 9.436540350268
    assert np.all(np.isfinite(gm[y < yc])) and np.all(np.isnan(gm[y > yc]))
    assert np.all(np.isfinite(gp[y < yc]))
    assert np.all(np.diff(gp[y < yc]) < 0) and np.all(np.diff(gm[y < yc]) > 0)
    assert np.all(np.diff(u[np.isfinite(u)]) < 0)


def test_critical_commands(capsys):
    code, out, _ = run(["critical", "--x", "0.5"], capsys)
    _, rows = read_csv(out)
    assert float(rows[0]["y_c"]) == pytest.approx(9.436540350268, abs=1e-12)
    assert float(rows[0]["eps_gc"]) == pytest.approx(-0.86525, abs=5e-6)
    code, out, _ = run(["critical", "--find-xc", "--format", "json"], capsys)
    xc, egc = json.loads(out)["rows"][0]
    assert xc == pytest.approx(1.198076, abs=1e-6) and egc == pytest.approx(-0.379162, abs=1e-6)
    assert run(["critical"], capsys)[0] == 2


# -- wavefunction and green ---------------------------------------------------------------


def test_wavefunction_grid(tmp_path, capsys):
    cfg = write(tmp_path, ASYM)
    code, out, _ = run(["wavefunction", "--config", cfg, "--state", "1", "--grid", "5,5,5,1.5"], capsys)
    assert code == 0
    _, rows = read_csv(out)
    # the grid contains both centers, (0, 0, 0) and (0, 0, 1.5); both are skipped
    assert len(rows) == 123
    data = np.array([[float(v) for v in r.values()] for r in rows])
    assert np.all(np.isfinite(data))
    comps = data[:, 3:11]
    np.testing.assert_allclose(data[:, 11], np.sum(comps**2, axis=1), rtol=1e-14, atol=0)

    centers = load_config(cfg).centers
    state = find_bound_states(centers)[1]
    for row in data[::25][:5]:
        psi = assemble_wavefunction(state, row[:3], centers)
        np.testing.assert_allclose(row[3:11:2] + 1j * row[4:11:2], psi, rtol=1e-13, atol=1e-15)


def test_wavefunction_state_out_of_range(tmp_path, capsys):
    code, _, err = run(["wavefunction", "--config", write(tmp_path, ONE), "--state", "7", "--grid", "2,2,2,1"],
                       capsys)
    assert code == 2 and "bound state" in err


def test_green_file_symmetry(tmp_path, capsys):
    cfg = write(tmp_path, ASYM)
    centers = load_config(cfg).centers
    src = [0.7, 0.2, -0.4]
    code, out, _ = run(["green", "--config", cfg, "--energy", "0.05", "--source", "0.7,0.2,-0.4",
                        "--grid", "3,3,3,1.2"], capsys)
    assert code == 0
    _, rows = read_csv(out)
    # swap source and field point and compare against the file contents
    for r in rows[::5]:
        p = np.array([float(r[c]) for c in ("x", "y", "z")])
        G = np.array([float(r[f"G{i}{j}_re"]) + 1j * float(r[f"G{i}{j}_im"]) for i in range(4) for j in range(4)])
        back = full_green(0.05, src, p, centers)
        np.testing.assert_allclose(G.reshape(4, 4), back.conj().T, rtol=1e-12, atol=1e-14)


def test_green_free_mode(capsys):
    code, out, _ = run(["green", "--energy", "0.2", "--source", "0,0,0", "--grid", "3,1,1,1"], capsys)
    assert code == 0
    digest, rows = read_csv(out)
    assert len(rows) == 2 and len(digest) == 64  # the source point itself is skipped
    for r in rows:
        p = np.array([float(r[c]) for c in ("x", "y", "z")])
        G = np.array([float(r[f"G{i}{j}_re"]) + 1j * float(r[f"G{i}{j}_im"]) for i in range(4) for j in range(4)])
        np.testing.assert_allclose(G.reshape(4, 4), free_green(0.2, p, [0, 0, 0]), rtol=1e-14, atol=1e-16)


# -- verify ---------------------------------------------------------------------------------


@pytest.mark.parametrize("text", [ONE, THREE], ids=["one", "three"])
def test_verify_passes(tmp_path, capsys, text):
    code, out, _ = run(["verify", "--config", write(tmp_path, text), "--seed", "3"], capsys)
    assert code == 0
    _, rows = read_csv(out)
    assert len(rows) == 12
    assert all(r["status"] == "pass" for r in rows)


def test_verify_corrupted_fails_loudly(tmp_path, capsys):
    code, out, err = run(["verify", "--config", write(tmp_path, THREE), "--corrupt"], capsys)
    assert code == 3
    _, rows = read_csv(out)
    status = {r["check"]: r["status"] for r in rows}
    assert status["null_vector"] == "FAIL"
    assert "FAILED" in err and "null_vector" in err


def test_verify_json(tmp_path, capsys):
    code, out, _ = run(["verify", "--config", write(tmp_path, ONE), "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["seed"] == 0
    assert {c["status"] for c in doc["checks"]} == {"pass"}


# -- entry points ---------------------------------------------------------------------------


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "zrpdirac", "critical", "--x", "1.5"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "0.33389617926" in proc.stdout


def test_help_lists_commands():
    proc = subprocess.run([sys.executable, "-m", "zrpdirac", "--help"], capture_output=True, text=True)
    for name in cli.COMMANDS:
        assert name in proc.stdout
