"""Catalog and file loading."""

import json

import numpy as np
import pytest

import helpers
from poispath.errors import ValidationError
from poispath.monodromy import FoliatedSphereProduct, RadialSphereFamily
from poispath.registry import available, load


def random_points(dim, m=12, seed=7):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.5, 1.5, (m, dim))


def assert_same_structure(got, expected, m=12):
    assert got.dim == expected.dim
    xs = random_points(got.dim, m)
    np.testing.assert_allclose(got.pi_many(xs), expected.pi_many(xs),
                               rtol=0, atol=1e-12)


class TestBuiltins:
    def test_catalog_listing(self):
        names = set(available())
        assert names == {"zero", "symplectic", "linear", "su2_scaled",
                         "foliated_spheres"}
        assert all(isinstance(doc, str) and doc for doc in available().values())

    def test_zero_default_and_sized(self):
        rec = load("builtin:zero")
        assert rec.structure.dim == 3
        assert rec.structure.upper_entries() == []
        rec5 = load("builtin:zero?n=5")
        assert rec5.structure.dim == 5
        assert rec5.label == "zero[5]"

    def test_symplectic_blocks(self):
        rec = load("builtin:symplectic?n=4")
        xs = random_points(4)
        pi = rec.structure.pi_many(xs)
        expected = np.zeros((len(xs), 4, 4))
        expected[:, 0, 1] = expected[:, 2, 3] = 1.0
        expected[:, 1, 0] = expected[:, 3, 2] = -1.0
        np.testing.assert_array_equal(pi, expected)

    def test_symplectic_rejects_odd(self):
        with pytest.raises(ValidationError, match="even"):
            load("builtin:symplectic?n=3")

    def test_linear_su2_matches_reference(self):
        rec = load("builtin:linear?preset=su2")
        assert_same_structure(rec.structure, helpers.su2())
        assert rec.splitting is not None

    def test_linear_su3_matches_reference(self):
        # independent transcription of the same coupling table
        rec = load("builtin:linear?preset=su3")
        assert_same_structure(rec.structure, helpers.su3())

    def test_linear_unknown_preset(self):
        with pytest.raises(ValidationError, match="preset"):
            load("builtin:linear?preset=so5")

    def test_su2_scaled_default_is_linear(self):
        rec = load("builtin:su2_scaled")
        assert_same_structure(rec.structure, helpers.su2())

    def test_su2_scaled_expression(self):
        rec = load("builtin:su2_scaled?a=1+R^2")
        assert_same_structure(rec.structure, helpers.su2_scaled("1 + R^2"))
        assert rec.family is not None
        assert rec.splitting is not None

    def test_su2_scaled_numeric_parameter(self):
        rec = load("builtin:su2_scaled?a=c*(1+R^2)&c=0.5")
        reference = helpers.su2_scaled("0.5*(1 + R^2)")
        assert_same_structure(rec.structure, reference)

    def test_su2_scaled_non_numeric_extra_rejected(self):
        with pytest.raises(ValidationError, match="parameter"):
            load("builtin:su2_scaled?a=c*R&c=abc")

    def test_foliated_spheres_single(self):
        rec = load("builtin:foliated_spheres?f1=1/tau")
        assert rec.structure is None
        assert isinstance(rec.family, FoliatedSphereProduct)
        area, deriv, gens = rec.family.row_data(0.5)
        assert area == pytest.approx(8 * np.pi)
        assert deriv == pytest.approx(-16 * np.pi)
        assert gens == (pytest.approx(16 * np.pi),)

    def test_foliated_spheres_pair_with_count(self):
        rec = load("builtin:foliated_spheres?k=2&f1=tau&f2=sqrt(2)*tau")
        _, _, gens = rec.family.row_data(1.0)
        assert len(gens) == 2

    def test_foliated_spheres_count_mismatch(self):
        with pytest.raises(ValidationError, match="k=3"):
            load("builtin:foliated_spheres?k=3&f1=tau")

    def test_foliated_spheres_requires_invariants(self):
        with pytest.raises(ValidationError, match="f1"):
            load("builtin:foliated_spheres")

    def test_unknown_builtin(self):
        with pytest.raises(ValidationError, match="available"):
            load("builtin:so3")

    def test_unknown_option_rejected(self):
        with pytest.raises(ValidationError):
            load("builtin:zero?m=3")

    def test_duplicate_option_rejected(self):
        with pytest.raises(ValidationError, match="duplicate"):
            load("builtin:zero?n=3&n=4")

    def test_dim3_records_carry_radius_family(self):
        rec = load("builtin:su2_scaled?a=1")
        assert isinstance(rec.family, RadialSphereFamily)
        rec8 = load("builtin:linear?preset=su3")
        assert rec8.family is None


class TestFileLoading:
    def test_json_roundtrip(self, tmp_path):
        path = tmp_path / "structure.json"
        path.write_text(json.dumps({
            "dim": 3,
            "pi": {"1,2": "x3", "1,3": "-x2", "2,3": "x1"},
            "label": "file-su2",
        }))
        rec = load(str(path))
        assert rec.label == "file-su2"
        assert_same_structure(rec.structure, helpers.su2())
        assert isinstance(rec.family, RadialSphereFamily)

    def test_json_with_splitting_and_params(self, tmp_path):
        path = tmp_path / "scaled.json"
        path.write_text(json.dumps({
            "dim": 3,
            "pi": {"1,2": "c*x3", "1,3": "-c*x2", "2,3": "c*x1"},
            "params": {"c": 2.0},
            "splitting": [["0", "x3/d", "-x2/d"],
                          ["-x3/d", "0", "x1/d"],
                          ["x2/d", "0", "0"]],
        }))
        rec = load(str(path))
        assert rec.splitting is not None and len(rec.splitting) == 3
        xs = random_points(3, 6)
        np.testing.assert_allclose(
            rec.structure.pi_many(xs), 2.0 * helpers.su2().pi_many(xs),
            rtol=0, atol=1e-12)

    def test_missing_file(self):
        with pytest.raises(ValidationError, match="cannot read"):
            load("/no/such/file.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError, match="bad JSON"):
            load(str(path))

    def test_non_poisson_file_gated(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "dim": 3,
            "pi": {"1,2": "x1 + x2", "2,3": "x1"},
        }))
        with pytest.raises(ValidationError, match="[Jj]acobi"):
            load(str(path))
        # loading with the gate off must succeed (inspection still works)
        rec = load(str(path), validate=False)
        assert rec.structure.dim == 3


class TestGate:
    def test_builtins_pass_gate(self):
        for source in ("builtin:zero", "builtin:symplectic?n=6",
                       "builtin:linear?preset=su2", "builtin:linear?preset=su3",
                       "builtin:su2_scaled?a=exp(R^2/5)"):
            load(source)
