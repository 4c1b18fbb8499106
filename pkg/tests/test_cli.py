import csv
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from shockpolar.cli import main

SCHEMAS = {
    "mach.json": "mach.schema.json",
    "duct_summary.json": "duct_summary.schema.json",
    "polar_points.json": "polar_points.schema.json",
    "manifest.json": "manifest.schema.json",
}

COMMANDS = [
    ["polar", "--gamma", "1.4", "--mach0", "2"],
    ["normal", "--gamma", "1.4", "--mach0", "2"],
    ["oblique", "--gamma", "1.4", "--mach0", "2", "--theta-deg", "10"],
    ["mach", "--gamma", "1.4", "--mach0", "2", "--p1", "1.5"],
    ["coeffs", "--gamma", "1.4", "--mach0", "2", "--samples", "11"],
    ["duct", "--p-exit", "4.5", "--gamma", "1.4", "--mach0", "2", "--anchor", "0", "--nx", "16", "--ny", "16",
     "--perturb", "0.05"],
]


def schema(name):
    return json.loads(resources.files("shockpolar").joinpath("schemas", name).read_text())


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def last_stderr_json(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return json.loads(err[0])


def test_polar_endpoints_in_csv(tmp_path):
    assert main(["polar", "--gamma", "1.4", "--mach0", "2", "--samples", "21", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "polar.csv")
    assert list(rows[0]) == ["branch", "p", "w", "u", "rho", "M", "alpha"]
    for branch in ("plus", "minus"):
        part = [r for r in rows if r["branch"] == branch]
        assert len(part) == 21
        assert float(part[0]["w"]) == 0.0 and float(part[-1]["w"]) == 0.0
    svg = (tmp_path / "polar.svg").read_text()
    for label in (">A<", ">B<", ">B'<", ">S<", ">S'<"):
        assert label in svg.replace("&apos;", "'")


def test_oblique_detachment_exit_code(tmp_path, capsys):
    code = main(["oblique", "--gamma", "1.4", "--mach0", "2", "--theta-deg", "30", "--out", str(tmp_path)])
    assert code == 3
    diag = last_stderr_json(capsys)
    assert diag["exit_code"] == 3 and diag["error"] == "DetachmentError"


def test_duct_converges_from_cli(tmp_path):
    code = main(["duct", "--p-exit", "4.5", "--gamma", "1.4", "--mach0", "2", "--anchor", "0", "--nx", "16",
                 "--ny", "16", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "duct_summary.json").read_text())
    assert summary["status"] == "converged"
    jsonschema.validate(summary, schema("duct_summary.schema.json"))


def test_duct_mismatch_exit_code(tmp_path, capsys):
    code = main(["duct", "--p-exit", "4.545", "--nx", "16", "--ny", "16", "--out", str(tmp_path)])
    assert code == 4
    assert last_stderr_json(capsys)["exit_code"] == 4
    summary = json.loads((tmp_path / "duct_summary.json").read_text())
    assert summary["status"] == "front-exited-domain"
    jsonschema.validate(summary, schema("duct_summary.schema.json"))
    assert len(read_csv(tmp_path / "duct_history.csv")) == summary["iterations"]


@pytest.mark.parametrize(
    "argv",
    [["polar", "--gamma", "0.9"], ["polar", "--mach0", "0.5"], ["duct", "--anchor", "1.5"], ["bogus"],
     ["oblique", "--theta-deg", "abc"], ["polar", "--formats", "png"], []],
)
def test_invalid_configuration_exit_code(tmp_path, capsys, argv):
    assert main(argv + ["--out", str(tmp_path)] if argv else argv) == 2
    assert last_stderr_json(capsys)["exit_code"] == 2


def test_mach_physical_errors(tmp_path, capsys):
    assert main(["mach", "--p1", "3.44", "--out", str(tmp_path)]) == 3
    assert last_stderr_json(capsys)["error"] == "NotSupersonicShockError"
    assert main(["mach", "--p1", "3.3", "--out", str(tmp_path)]) == 3
    assert last_stderr_json(capsys)["error"] == "NoIntersectionError"


def test_outputs_validate_against_schemas(tmp_path):
    for argv in COMMANDS:
        out = tmp_path / argv[0]
        assert main(argv + ["--out", str(out)]) == 0
        for path in out.iterdir():
            if path.name in SCHEMAS:
                jsonschema.validate(json.loads(path.read_text()), schema(SCHEMAS[path.name]))
    report = json.loads((tmp_path / "mach" / "mach.json").read_text())
    assert report["validation"]["passed"]


def test_every_csv_has_one_header_line(tmp_path):
    for argv in COMMANDS:
        out = tmp_path / argv[0]
        main(argv + ["--out", str(out)])
        for path in out.glob("*.csv"):
            lines = path.read_text().splitlines()
            assert lines[0].split(",")[0].isidentifier()
            assert all(not line[:1].isalpha() or line.split(",")[0] in ("plus", "minus", "weak", "strong")
                       for line in lines[1:])


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "oblique", "gamma": 1.4, "mach0": 2.0, "theta_deg": 30.0,
                               "output": {"dir": str(tmp_path / "a"), "formats": ["csv"]}}))
    assert main(["--config", str(cfg)]) == 3
    assert main(["oblique", "--config", str(cfg), "--theta-deg", "10"]) == 0
    assert (tmp_path / "a" / "oblique.csv").exists()
    jsonschema.validate(json.loads(cfg.read_text()), schema("config.schema.json"))


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "polar", "mach": 2.0}))
    assert main(["--config", str(cfg)]) == 2
    assert "unknown config keys" in last_stderr_json(capsys)["message"]


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SHOCKPOLAR_OUT_DIR", str(tmp_path / "env"))
    assert main(["normal"]) == 0
    assert (tmp_path / "env" / "normal.csv").exists()


def test_format_filter(tmp_path):
    assert main(["polar", "--formats", "svg", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["manifest.json", "polar.svg"]


def test_manifest_lists_data_files(tmp_path):
    main(["normal", "--out", str(tmp_path)])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    jsonschema.validate(manifest, schema("manifest.schema.json"))
    assert [f["name"] for f in manifest["files"]] == ["normal.csv"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "shockpolar", "normal", "--out", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["status"] == "ok"
