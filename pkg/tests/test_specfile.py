import json

import numpy as np
import pytest

from hopfstraight.errors import SpecFileError
from hopfstraight.fibration import FibrationSpec, build_fibration, dump_spec, load_spec, parse_spec, plane_at
from tests.helpers import unimodular, write_json


PERTURBED = {"schema_version": 1, "n": 1, "kind": "perturbed", "J": None, "coeffs": [[2, 1.0, 0.0]], "epsilon": 0.05}


class TestParse:
    def test_minimal_hopf(self):
        spec = parse_spec({"n": 2, "kind": "hopf"})
        assert spec == FibrationSpec(2, "hopf")
        assert spec.dimension == 6
        np.testing.assert_array_equal(spec.structure().matrix, build_fibration(spec).linear_structure.matrix)

    def test_perturbed(self):
        spec = parse_spec(PERTURBED)
        assert spec.coeffs == ((2, 1.0, 0.0),)
        assert spec.epsilon == 0.05
        F = build_fibration(spec)
        assert F.kind == "perturbed" and F.params["coeffs"] == ((2, 1 + 0j),)

    def test_conjugated(self):
        g = unimodular(np.random.default_rng(2), 4)
        spec = parse_spec({"n": 1, "kind": "conjugated", "g": g.ravel().tolist(), "inner": {"n": 1, "kind": "hopf"}})
        F = build_fibration(spec)
        v = np.array([1.0, 0.0, 0.0, 0.0])
        assert plane_at(F, v).membership_residual(v) < 1e-12

    def test_sum(self):
        spec = parse_spec({"n": 3, "kind": "sum", "summands": [{"n": 1, "kind": "hopf"}, PERTURBED]})
        F = build_fibration(spec)
        assert F.dimension == 8 and not F.analytic

    def test_unknown_keys_are_kept(self):
        spec = parse_spec({"n": 1, "kind": "hopf", "comment": "round"})
        assert spec.to_dict()["comment"] == "round"

    def test_to_dict_parses_back(self):
        spec = parse_spec(PERTURBED)
        assert parse_spec(json.loads(dump_spec(spec))) == spec

    @pytest.mark.parametrize(
        "data",
        [
            [],
            {"n": 1},
            {"n": 1, "kind": "torus"},
            {"n": -1, "kind": "hopf"},
            {"n": "1", "kind": "hopf"},
            {"n": True, "kind": "hopf"},
            {"n": 1, "kind": "hopf", "schema_version": 2},
            {"n": 1, "kind": "hopf", "rng_seed": -4},
            {"n": 1, "kind": "hopf", "J": [0.0, 1.0]},
            {"n": 1, "kind": "hopf", "J": ["a"] * 16},
            {"n": 1, "kind": "perturbed", "coeffs": [[2, 1.0]]},
            {"n": 1, "kind": "perturbed", "coeffs": [[-2, 1.0, 0.0]]},
            {"n": 1, "kind": "perturbed", "coeffs": {"2": 1.0}},
            {"n": 1, "kind": "perturbed", "epsilon": "small"},
            {"n": 1, "kind": "conjugated", "g": [1.0] * 16},
            {"n": 1, "kind": "conjugated", "g": [1.0] * 16, "inner": {"n": 2, "kind": "hopf"}},
            {"n": 2, "kind": "sum", "summands": [{"n": 1, "kind": "hopf"}]},
            {"n": 2, "kind": "sum", "summands": [{"n": 1, "kind": "hopf"}, {"n": 1, "kind": "hopf"}]},
        ],
    )
    def test_malformed(self, data):
        with pytest.raises(SpecFileError):
            parse_spec(data)


class TestBuild:
    def test_invalid_structure(self):
        spec = parse_spec({"n": 1, "kind": "hopf", "J": np.eye(4).ravel().tolist()})
        with pytest.raises(SpecFileError):
            build_fibration(spec)

    def test_non_unimodular_conjugation(self):
        g = (2 * np.eye(4)).ravel().tolist()
        spec = parse_spec({"n": 1, "kind": "conjugated", "g": g, "inner": {"n": 1, "kind": "hopf"}})
        with pytest.raises(SpecFileError):
            build_fibration(spec)

    def test_coefficient_outside_family(self):
        spec = parse_spec({"n": 1, "kind": "perturbed", "coeffs": [[16, 1.0, 0.0]], "epsilon": 0.1})
        with pytest.raises(SpecFileError):
            build_fibration(spec)


class TestFiles:
    def test_load(self, tmp_path):
        spec = load_spec(write_json(tmp_path / "spec.json", PERTURBED))
        assert spec.kind == "perturbed"

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{\"n\": 1,", encoding="utf-8")
        with pytest.raises(SpecFileError, match="invalid JSON"):
            load_spec(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecFileError):
            load_spec(tmp_path / "absent.json")

    def test_dump_is_canonical(self, tmp_path):
        spec = parse_spec(PERTURBED)
        path = tmp_path / "out" / "spec.json"
        text = dump_spec(spec, path)
        assert path.read_text(encoding="utf-8") == text
        assert load_spec(path) == spec
        assert list(json.loads(text)) == sorted(json.loads(text))
