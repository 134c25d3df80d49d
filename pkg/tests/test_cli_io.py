from __future__ import annotations

import csv
import json

import jsonschema
import numpy as np
import pytest

from confined_helfrich.cli_io import (SWEEP_HEADER, container_from_spec, main, mesh_from_spec,
                                      parse_config, read_obj, report_schema, run, sigma_summary,
                                      write_obj, write_report, write_sweep)
from confined_helfrich.container import Ball
from confined_helfrich.errors import IoError, NonTriangleFace, ParseError, UsageError
from confined_helfrich.functionals import EnergyParams
from confined_helfrich.mesh import icosphere, jittered
from confined_helfrich.optimizer import SolverConfig, minimize
from confined_helfrich.verification import inequality_audit, rigidity_sweep


def test_parse_minimize():
    cfg = parse_config("minimize --init icosphere:1:4 --h0 1 --container ball:1 "
                       "--target-area 12.566".split())
    assert cfg.command == "minimize"
    assert cfg.params.H0 == 1 and cfg.params.target_area == 12.566
    assert isinstance(container_from_spec(cfg.container), Ball)
    assert mesh_from_spec(cfg.mesh_source).n_faces == 5120


def test_missing_h0_names_field():
    with pytest.raises(UsageError) as e:
        parse_config(["minimize", "--init", "icosphere:1:4"])
    assert e.value.field == "h0" and "h0" in str(e.value)


def test_parse_catenoid():
    cfg = parse_config(["catenoid", "--eps", "1e-3"])
    assert cfg.command == "catenoid" and cfg.eps == 1e-3


@pytest.mark.parametrize("argv,field", [
    (["minimize", "--h0", "1"], "init"),
    (["minimize", "--init", "/no/such.obj", "--h0", "1"], "init"),
    (["minimize", "--init", "icosphere:1:2", "--h0", "1", "--container", "cone:1"], "container"),
    (["minimize", "--init", "icosphere:1:2", "--h0", "1", "--target-area", "-3"], "target_area"),
    (["catenoid", "--eps", "0.9"], "eps"),
    (["sweep", "--h0", "3"], "h0"),
    (["sweep", "--h0", "0", "--deltas", "0.9"], "deltas"),
    (["rigidity"], "h0"),
    (["frobnicate"], "arguments"),
])
def test_usage_errors_name_field(argv, field):
    with pytest.raises(UsageError) as e:
        parse_config(argv)
    assert e.value.field == field


def test_config_file_and_override(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps({"command": "rigidity", "h0": [0, 1, 2], "seed": 7,
                             "solver": {"max_iterations": 50, "normal_motion": True}}))
    cfg = parse_config(p)
    assert cfg.h0_values == (0, 1, 2) and cfg.seed == 7
    assert cfg.solver.max_iterations == 50 and cfg.solver.normal_motion
    cfg2 = parse_config(["--config", str(p), "rigidity", "--h0", "3", "--max-iterations", "9"])
    assert cfg2.h0_values == (3.0,) and cfg2.solver.max_iterations == 9


def test_bad_solver_option(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps({"command": "catenoid", "solver": {"warp": 9}}))
    with pytest.raises(UsageError):
        parse_config(p)


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("HELFRICH_THREADS", "3")
    assert parse_config(["catenoid"]).threads == 3


def test_obj_round_trip(tmp_path):
    m = jittered(icosphere(1, 2), 0.05, 3)
    path = tmp_path / "m.obj"
    write_obj(m, path)
    r = read_obj(path)
    assert np.array_equal(r.faces, m.faces)
    assert np.max(np.abs(r.vertices - m.vertices)) < 1e-15


def _write(tmp_path, text):
    p = tmp_path / "x.obj"
    p.write_text(text)
    return p


def test_obj_quad_face(tmp_path):
    with pytest.raises(NonTriangleFace):
        read_obj(_write(tmp_path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3 4\n"))


def test_obj_index_out_of_range(tmp_path):
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\n# comment\nf 1 2 9\n"
    with pytest.raises(ParseError) as e:
        read_obj(_write(tmp_path, text))
    assert e.value.line == 5


def test_obj_bad_vertex(tmp_path):
    with pytest.raises(ParseError) as e:
        read_obj(_write(tmp_path, "v 0 0\n"))
    assert e.value.line == 1


def test_write_to_missing_directory(tmp_path):
    with pytest.raises(IoError):
        write_obj(icosphere(1, 0), tmp_path / "no" / "m.obj")
    with pytest.raises(IoError):
        write_sweep([], tmp_path / "no" / "s.csv")


@pytest.fixture(scope="module")
def solved():
    return minimize(icosphere(0.9, 3), EnergyParams(H0=1.0), Ball(),
                    SolverConfig(max_iterations=100, normal_motion=True))


def test_report_validates(solved, tmp_path):
    rep = write_report(solved, tmp_path / "r.json", H0=1.0, wall_seconds=0.5)
    data = json.loads((tmp_path / "r.json").read_text())
    jsonschema.validate(data, report_schema())
    assert data["version"] == rep["version"]
    s = data["multipliers"]["sigma_summary"]
    assert set(s) == {"min", "max", "mass", "contact_fraction"}
    assert s["mass"] == pytest.approx(float(np.sum(solved.contact_measure)))


def test_audit_report_validates(tmp_path):
    a = inequality_audit(icosphere(1, 3), 0.0)
    write_report(a, tmp_path / "a.json")
    jsonschema.validate(json.loads((tmp_path / "a.json").read_text()), report_schema())


def test_schema_pins_version():
    schema = report_schema()
    assert "version" in schema["required"]
    bad = {"config": {}}
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, schema)


def test_sigma_summary_definition():
    s = sigma_summary(np.array([0.0, 2.0, 0.0, 1.0]))
    assert s == {"min": 0.0, "max": 2.0, "mass": 3.0, "contact_fraction": 0.5}


def test_sweep_csv(tmp_path):
    reps = rigidity_sweep([1.0, 3.0, 4.0], SolverConfig(max_iterations=20, normal_motion=True),
                          subdivisions=2)
    n = write_sweep(reps, tmp_path / "s.csv")
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert n == 3 and len(rows) == 4
    assert tuple(rows[0]) == SWEEP_HEADER


def test_sweep_csv_deterministic(tmp_path):
    cfg = SolverConfig(max_iterations=15, normal_motion=True)
    for name in ("a.csv", "b.csv"):
        write_sweep(rigidity_sweep([0.5, 3.0], cfg, subdivisions=2, seed=4), tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_cli_minimize_and_analyze(tmp_path, capsys):
    out, obj = tmp_path / "r.json", tmp_path / "m.obj"
    assert main(["minimize", "--init", "icosphere:0.8:2", "--h0", "3", "--max-iterations", "40",
                 "-o", str(out), "--mesh-output", str(obj)]) == 0
    assert "status=" in capsys.readouterr().out
    jsonschema.validate(json.loads(out.read_text()), report_schema())
    assert main(["analyze", "--init", str(obj), "--h0", "3", "-o", str(tmp_path / "a.json")]) == 0
    data = json.loads((tmp_path / "a.json").read_text())
    assert data["config"]["params"]["H0"] == 3.0


def test_cli_usage_error_exit_code(capsys):
    assert main(["minimize", "--init", "icosphere:1:2"]) == 2
    assert "h0" in capsys.readouterr().err


def test_cli_catenoid(tmp_path):
    out = tmp_path / "c.json"
    rep = run(parse_config(["catenoid", "--eps", "1e-2", "-o", str(out)]))
    assert abs(rep["diagnostics"]["g_limit"] + 8) < 0.08
    assert json.loads(out.read_text())["diagnostics"]["eps"] == 1e-2


def test_command_solver_defaults():
    assert parse_config(["rigidity", "--h0", "1"]).solver.normal_motion
    assert not parse_config(["rigidity", "--h0", "1", "--no-normal-motion"]).solver.normal_motion
    assert parse_config(["sweep", "--h0", "0"]).solver.area_penalty_schedule == (1e3, 1e4)
    cfg = parse_config(["minimize", "--init", "icosphere:1:2", "--h0", "1", "--normal-motion"])
    assert cfg.solver.normal_motion
