import csv
import hashlib
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from magicsim import __version__
from magicsim.cli import (
    EXIT_CONFIG,
    EXIT_EQUIV,
    EXIT_OK,
    config_digest,
    fmt,
    main,
    preset_names,
)


def read_csv(path):
    rows = list(csv.reader(io.StringIO(path.read_text())))
    return rows[0], [[float(x) if x else None for x in r] for r in rows[1:]]


def write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


ONE_ION = {
    "species": {"name": "Be9"},
    "trap": {"n_ions": 1, "nu_axial_hz": 1e6},
    "field": {"kind": "static", "gradient_t_per_m": 20.0, "omega0_hz": 1e7},
}


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 6.02214076e23, -2.5e-300):
        assert float(fmt(x)) == x
    assert fmt(3) == "3"


def test_presets_listed():
    assert {"be_axial_200", "be_axial_35", "addressing_be", "yb_static_gate", "desk_equivalence"} <= set(
        preset_names()
    )


def test_modes_single_ion(tmp_path):
    cfg = write_cfg(tmp_path, ONE_ION)
    assert main(["modes", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    header, rows = read_csv(tmp_path / "o" / "modes.csv")
    assert header == ["mode_index", "freq_hz", "b_1"]
    assert rows == [[1.0, 1e6, 1.0]]
    _, pos = read_csv(tmp_path / "o" / "positions.csv")
    assert pos == [[1.0, 0.0]]


def test_modes_two_ions(tmp_path):
    cfg = dict(ONE_ION, trap={"n_ions": 2, "nu_axial_hz": 1e6})
    assert main(["modes", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "modes.csv")
    assert rows[1][1] / rows[0][1] == pytest.approx(math.sqrt(3), rel=1e-12)


def test_malformed_json_writes_nothing(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    out = tmp_path / "o"
    assert main(["modes", "--config", str(bad), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()
    assert main(["modes", "--config", str(tmp_path / "missing.json"), "--out", str(out)]) == EXIT_CONFIG
    cfg = dict(ONE_ION, trap={"n_ions": 1, "nu_axial_hz": 1e6, "typo": 1})
    assert main(["modes", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(out)]) == EXIT_CONFIG
    assert main(["modes", "--preset", "nope", "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_unstable_crystal_exit_3(tmp_path):
    cfg = dict(ONE_ION, trap={"n_ions": 4, "nu_axial_hz": 1e6, "nu_radial_hz": 1.1e6,
                              "active_axis": "radial"})
    assert main(["modes", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(tmp_path / "o")]) == 3


def test_couplings_preset(tmp_path):
    assert main(["couplings", "--preset", "be_axial_200", "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "couplings.csv")
    assert header == ["ion", "mode", "epsilon", "omega_grad_rabi_hz"]
    com = [r for r in rows if r[1] == 1]
    for r in com:
        assert abs(r[2]) == pytest.approx(0.03314435275352603 / math.sqrt(2), rel=1e-12)
    _, jrows = read_csv(tmp_path / "jmatrix.csv")
    jm = {(int(i), int(k)): v for i, k, v in jrows}
    assert jm[1, 2] == jm[2, 1]
    assert jm[1, 2] == pytest.approx(366.18, rel=1e-4)
    scalars = json.loads((tmp_path / "scalars.json").read_text())
    assert scalars["delta_omega_hz"][0] == pytest.approx(25.78e6, rel=1e-3)


def test_couplings_static_omits_rabi(tmp_path):
    assert main(["couplings", "--preset", "yb_static_gate", "--out", str(tmp_path)]) == 0
    header, _ = read_csv(tmp_path / "couplings.csv")
    assert header == ["ion", "mode", "epsilon"]


def test_manifest(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    assert main(["couplings", "--preset", "be_axial_200", "--out", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["tool_version"] == __version__
    assert man["subcommand"] == "couplings"
    assert man["timestamp"] == "1970-01-01T00:00:00Z"
    for name, digest in man["outputs"].items():
        assert hashlib.sha256((tmp_path / name).read_bytes()).hexdigest() == digest
    assert len(man["config_digest"]) == 64
    assert config_digest({"b": 1, "a": 2}) == config_digest({"a": 2, "b": 1})


def test_out_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("MAGICSIM_OUT", str(tmp_path / "env"))
    assert main(["modes", "--preset", "be_axial_200"]) == 0
    assert (tmp_path / "env" / "modes.csv").exists()


def evolve_cfg(tmp_path, b_offset, gradient, t_final=1e-5, steps=160):
    cfg = {
        "species": {"name": "Be9"},
        "trap": {"n_ions": 1, "nu_axial_hz": 1e6},
        "field": {"kind": "dynamic", "b_offset_tesla": b_offset, "gradient_t_per_m": gradient,
                  "omega_b_hz": 5e7, "omega0_hz": 5e7},
        "sim": {"fock_cutoff": 4, "t_final_s": t_final, "steps_per_drive_period": steps},
    }
    return write_cfg(tmp_path, cfg)


def test_evolve_zero_field_constant(tmp_path):
    cfg = evolve_cfg(tmp_path, 0.0, 0.0)
    for frame in ("lab", "rwa"):
        out = tmp_path / frame
        assert main(["evolve", "--config", str(cfg), "--frame", frame, "--samples", "10",
                     "--out", str(out)]) == 0
        header, rows = read_csv(out / f"trajectory_{frame}.csv")
        assert header == ["t_s", "p_up_1", "sigma_z_1", "n_1", "norm"]
        arr = np.array(rows)
        assert np.all(np.abs(arr[:, 1:] - arr[0, 1:]) < 1e-10)


def test_evolve_lab_rabi(tmp_path):
    # carrier Rabi frequency 2 Omega0: P_g = cos^2(Omega0 t)
    b = 7.14477350142657e-06  # Omega0 = 2pi x 50 kHz
    cfg = evolve_cfg(tmp_path, b, 0.0, t_final=1e-5, steps=160)
    assert main(["evolve", "--config", str(cfg), "--frame", "lab", "--samples", "50",
                 "--observable", "populations", "--observable", "norm", "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "trajectory_lab.csv")
    assert header == ["t_s", "p_up_1", "norm"]
    arr = np.array(rows)
    om0 = 2 * math.pi * 50e3
    pg = 1 - arr[:, 1]
    # RWA error ~ Omega0 / omega_B = 1e-3
    assert np.max(np.abs(pg - np.cos(om0 * arr[:, 0]) ** 2)) < 3e-3
    assert np.max(np.abs(arr[:, 2] - 1)) < 1e-8


def test_evolve_frame_requires_dynamic(tmp_path):
    assert main(["evolve", "--preset", "yb_static_gate", "--frame", "dressed",
                 "--out", str(tmp_path)]) == EXIT_CONFIG


def test_evolve_static_and_dressed(tmp_path):
    assert main(["evolve", "--preset", "yb_static_gate", "--samples", "5",
                 "--trajectory", "yb.csv", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "yb.csv").exists()
    cfg = evolve_cfg(tmp_path, 7.1e-6, 180.0)
    assert main(["evolve", "--config", str(cfg), "--frame", "dressed", "--samples", "5",
                 "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "trajectory_dressed.csv")
    assert len(rows) == 6


def test_equivalence_exit_codes(tmp_path):
    zero = evolve_cfg(tmp_path, 0.0, 0.0, t_final=1e-6, steps=64)
    assert main(["equivalence", "--config", str(zero), "--samples", "10", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "equivalence.json").read_text())
    assert body["passes"] and body["max_infidelity"] < 1e-10
    # Omega0 = omega_B / 5
    big = evolve_cfg(tmp_path, 2 * 1.054571817e-34 * 2 * math.pi * 1e7 / 9.2740100783e-24, 0.0)
    assert main(["equivalence", "--config", str(big), "--out", str(tmp_path / "b")]) == EXIT_CONFIG
    # a bound forced below the observed infidelity reports failure
    coarse = evolve_cfg(tmp_path, 7.14477350142657e-06, 181.0, t_final=2e-6, steps=8)
    assert main(["equivalence", "--config", str(coarse), "--samples", "10",
                 "--out", str(tmp_path / "c")]) == EXIT_EQUIV
    assert json.loads((tmp_path / "c" / "equivalence.json").read_text())["passes"] is False


def test_sweep(tmp_path):
    assert main(["sweep", "--preset", "be_axial_200", "--param", "gradient",
                 "--values", "300,35,200", "--workers", "2", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "sweep.csv").read_text().splitlines()
    assert [line.split(",")[1] for line in text[1:]] == ["300", "35", "200"]
    assert main(["sweep", "--preset", "be_axial_200", "--param", "gradient",
                 "--values", "abc", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["sweep", "--preset", "be_axial_200", "--param", "n_ions",
                 "--values", "", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_nu_sweep_slope_from_csv(tmp_path):
    vals = [3e5, 6e5, 1.2e6, 2.4e6]
    assert main(["sweep", "--preset", "be_axial_200", "--param", "nu_axial",
                 "--values", ",".join(map(str, vals)), "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "sweep.csv").read_text())))
    eps = [float(r["epsilon_single"]) for r in rows]
    slope = np.polyfit(np.log(vals), np.log(eps), 1)[0]
    assert slope == pytest.approx(-1.5, abs=1e-9)


def test_scenario_and_seedless(tmp_path):
    assert main(["scenario", "be_axial_200", "--seedless", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "scenario_be_axial_200.json").read_text())
    assert body["outputs"]["quoted_j_rad_s"] == pytest.approx(2 * math.pi * 1.5e3)
    assert body["notes"]


def test_requires_config_source(tmp_path):
    with pytest.raises(SystemExit):
        main(["modes", "--out", str(tmp_path)])


def test_console_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "magicsim.cli", "modes", "--preset", "be_axial_35", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "manifest.json").exists()
