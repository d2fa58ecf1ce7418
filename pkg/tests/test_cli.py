import csv
import json

import jsonschema
import pytest

from quarticlab.cli import EXIT_OK, EXIT_USAGE, RunConfig, main
from quarticlab.errors import InvalidArgument
from quarticlab.schemas import CSV_HEADERS, SCHEMAS


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main(["--out", str(out), *argv])
    return code, out


def validate_dir(out):
    for path in sorted(out.glob("*.json")):
        doc = json.loads(path.read_text())
        jsonschema.validate(doc, SCHEMAS[doc["schema"]])
    for path in sorted(out.glob("*.csv")):
        with path.open() as fh:
            assert next(csv.reader(fh)) == CSV_HEADERS[path.name]


def test_config_round_trip():
    cfg = RunConfig(seed=4, N=2, tol=1e-12, out="x")
    assert RunConfig.from_text(cfg.to_text()) == cfg


def test_config_rejects_bad_keys():
    with pytest.raises(InvalidArgument):
        RunConfig.from_text("[caps]\nbogus = 1\n")
    with pytest.raises(InvalidArgument):
        RunConfig.from_text("[caps]\nseed = 1\n")
    with pytest.raises(InvalidArgument):
        RunConfig.from_text("[caps]\nN = 0\n")


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[caps]\nN = 2\n\n[surface]\nseed = 1\n")
    code, out = run(tmp_path, "--config", str(cfg), "build-surface")
    assert code == EXIT_OK
    manifest = json.loads((out / "run.json").read_text())
    assert RunConfig.from_text(manifest["config"]).N == 2
    validate_dir(out)


@pytest.mark.parametrize("argv", [
    ["fibration-info"],
    ["torsion-values", "--m", "3"],
    ["betti-scan", "--qmax", "2", "--cells", "4"],
    ["orbit", "--point", "2,1,2,1", "--r1max", "2", "--r2max", "2"],
    ["bounds", "--g", "1", "--d", "1", "--h", "0"],
    ["conjugate-control", "--m", "3"],
    ["bezout-check", "--s=-3/2", "--s", "1/2"],
])
def test_commands_write_valid_outputs(tmp_path, argv):
    code, out = run(tmp_path, *argv)
    assert code == EXIT_OK
    assert (out / "run.json").exists()
    validate_dir(out)


def test_schema_command(capsys):
    assert main(["schema", "quarticlab.orbit/1"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["$id"] == "quarticlab.orbit/1"
    assert main(["schema", "nope"]) == EXIT_USAGE


def test_bad_point_is_usage_error(tmp_path):
    code, _ = run(tmp_path, "orbit", "--point", "1,2,3")
    assert code == EXIT_USAGE


def test_search_is_deterministic(tmp_path):
    a = main(["--out", str(tmp_path / "a"), "finite-orbit-search", "--N", "2"])
    b = main(["--out", str(tmp_path / "b"), "finite-orbit-search", "--N", "2"])
    assert a == b == EXIT_OK
    assert (tmp_path / "a" / "catalog.json").read_bytes() == (tmp_path / "b" / "catalog.json").read_bytes()
    validate_dir(tmp_path / "a")
