import csv
import io
import json

import numpy as np
import pytest

from hopfstraight import cli, constants
from hopfstraight.errors import PoleError
from tests.helpers import write_json


HOPF = {"schema_version": 1, "n": 1, "kind": "hopf", "J": None}


@pytest.fixture
def hopf_spec(tmp_path):
    return write_json(tmp_path / "hopf.json", HOPF)


@pytest.fixture
def hopf_s5_spec(tmp_path):
    return write_json(tmp_path / "hopf5.json", {**HOPF, "n": 2})


def read_csv(text: str) -> list[list[str]]:
    return list(csv.reader(io.StringIO(text)))


class TestParser:
    def test_defaults(self, hopf_spec):
        args = cli.build_parser().parse_args(["validate", "--spec", str(hopf_spec)])
        config = cli.RunConfig.from_args(args)
        assert config.command == "validate"
        assert config.samples == 50 and config.seed == 0
        assert config.format == "json" and config.out is None
        assert config.tolerances == {}

    def test_tolerance_overrides(self, hopf_spec):
        argv = ["validate", "--spec", str(hopf_spec), "--tol", "analytic=1e-8", "--tol", "Sato=0.01"]
        config = cli.RunConfig.from_args(cli.build_parser().parse_args(argv))
        assert config.tolerances == {"analytic": 1e-8, "sato": 0.01}

    @pytest.mark.parametrize(
        "extra",
        [
            ["--tol", "nonsense=1"],
            ["--tol", "analytic"],
            ["--tol", "analytic=-1"],
            ["--tol", "analytic=x"],
            ["--seed", "-1"],
            ["--seed", str(2 ** 64)],
            ["--samples", "0"],
            ["--format", "xml"],
        ],
    )
    def test_rejected_arguments(self, hopf_spec, extra):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["validate", "--spec", str(hopf_spec), *extra])
        assert excinfo.value.code == cli.EXIT_USAGE

    def test_command_is_required(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args([])


class TestValidate:
    def test_hopf_passes(self, hopf_spec, capsys):
        assert cli.main(["validate", "--spec", str(hopf_spec), "--samples", "5"]) == cli.EXIT_OK
        document = json.loads(capsys.readouterr().out)
        assert document["validation"]["passed"] is True
        assert document["spec"]["kind"] == "hopf"

    def test_csv(self, hopf_spec, capsys):
        assert cli.main(["validate", "--spec", str(hopf_spec), "--samples", "3", "--format", "csv"]) == 0
        rows = read_csv(capsys.readouterr().out)
        assert rows[0] == ["residual", "value", "threshold"]
        assert rows[-1][:2] == ["passed", "true"]

    def test_malformed_spec(self, tmp_path):
        path = write_json(tmp_path / "bad.json", {"n": 1, "kind": "torus"})
        assert cli.main(["validate", "--spec", str(path)]) == cli.EXIT_USAGE

    def test_missing_spec(self, tmp_path):
        assert cli.main(["validate", "--spec", str(tmp_path / "absent.json")]) == cli.EXIT_USAGE

    def test_large_perturbation_fails(self, tmp_path):
        spec = {"n": 1, "kind": "perturbed", "coeffs": [[2, 1.0, 0.0]], "epsilon": 5.0}
        path = write_json(tmp_path / "wild.json", spec)
        assert cli.main(["--threads", "1", "validate", "--spec", str(path), "--samples", "5"]) == cli.EXIT_NUMERIC

    def test_tolerances_are_restored(self, hopf_spec, capsys):
        cli.main(["validate", "--spec", str(hopf_spec), "--samples", "2", "--tol", "analytic=1e-3"])
        assert constants.tolerances().analytic == constants.Tolerances().analytic


class TestInvariants:
    def test_deterministic_output_file(self, hopf_spec, tmp_path):
        outputs = []
        for name in ("first.json", "second.json"):
            out = tmp_path / name
            assert cli.main(["invariants", "--spec", str(hopf_spec), "--samples", "2", "--out", str(out)]) == 0
            outputs.append(out.read_text(encoding="utf-8"))
        assert outputs[0] == outputs[1]
        records = json.loads(outputs[0])["invariants"]
        assert [record["level"] for record in records] == ["B", "B"]
        assert all(record["error"] is None for record in records)

    def test_csv_header(self, hopf_spec, capsys):
        assert cli.main(["invariants", "--spec", str(hopf_spec), "--samples", "1", "--format", "csv"]) == 0
        rows = read_csv(capsys.readouterr().out)
        assert rows[0] == ["index", "v0", "v1", "v2", "v3", "margin", "s_norm", "s0qbar_norm", "level", "error"]
        assert len(rows) == 2


class TestStraighten:
    def test_hopf(self, hopf_spec, capsys):
        argv = ["straighten", "--spec", str(hopf_spec), "--samples", "4", "--circles", "2", "--points", "4"]
        assert cli.main(argv) == cli.EXIT_OK
        document = json.loads(capsys.readouterr().out)
        assert document["certification"]["verdict"] == "pass"
        assert set(document["hinge"]["margins"]) == {"parallel", "target", "disjoint"}
        assert len(document["map_samples"]) == 2

    def test_no_hinge(self, hopf_spec):
        assert cli.main(["straighten", "--spec", str(hopf_spec), "--budget", "0"]) == cli.EXIT_NO_HINGE

    def test_target_must_match(self, hopf_spec, hopf_s5_spec):
        argv = ["straighten", "--spec", str(hopf_spec), "--target", str(hopf_s5_spec)]
        assert cli.main(argv) == cli.EXIT_USAGE


class TestPointcloud:
    def test_stereographic_csv(self, hopf_spec, capsys):
        argv = ["pointcloud", "--spec", str(hopf_spec), "--format", "csv"]
        assert cli.main(argv) == cli.EXIT_OK
        rows = read_csv(capsys.readouterr().out)
        assert rows[0] == ["circle", "x0", "x1", "x2"]
        assert len(rows) == 1 + 3 * 64

    def test_unprojected(self, hopf_s5_spec, capsys):
        argv = ["pointcloud", "--spec", str(hopf_s5_spec), "--projection", "none", "--circles", "2", "--points", "5"]
        assert cli.main(argv) == cli.EXIT_OK
        document = json.loads(capsys.readouterr().out)
        points = np.array([point for circle in document["circles"] for point in circle["points"]])
        assert points.shape == (10, 6)
        np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-12)

    def test_stereographic_needs_s3(self, hopf_s5_spec):
        assert cli.main(["pointcloud", "--spec", str(hopf_s5_spec)]) == cli.EXIT_USAGE

    def test_bad_pole(self, hopf_spec):
        assert cli.main(["pointcloud", "--spec", str(hopf_spec), "--pole", "1,0"]) == cli.EXIT_USAGE

    def test_projection_through_the_pole(self):
        pole = np.eye(4)[0]
        points = np.array([[0.0, 1.0, 0.0, 0.0], pole])
        with pytest.raises(PoleError):
            cli._stereographic(points, pole)

    def test_projection_of_antipode_and_equator(self):
        pole = np.eye(4)[0]
        projected = cli._stereographic(np.array([[-1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]), pole)
        np.testing.assert_allclose(np.linalg.norm(projected, axis=1), [0.0, 1.0], atol=1e-12)
