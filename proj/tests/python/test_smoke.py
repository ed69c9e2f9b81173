"""Smoke tests of the oslab extension module."""

import json
import math
import pathlib

import numpy as np
import pytest

import oslab

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_version():
    assert oslab.__version__


def test_singular_values_and_exterior_power():
    g = np.diag([3.0, 2.0, 0.5])
    assert np.allclose(oslab.singular_values(g), [3.0, 2.0, 0.5])
    w = oslab.exterior_power(g, 2)
    assert w.shape == (3, 3)
    assert np.allclose(sorted(np.abs(np.diag(w))), [1.0, 1.5, 6.0])
    assert oslab.gap_ratio(g, 1) == pytest.approx(1.5)


def test_most_expanding_and_distance():
    g = np.diag([5.0, 1.0])
    e = oslab.most_expanding(g, 1)
    assert oslab.subspace_distance(e, np.array([[1.0], [0.0]])) < 1e-14


def test_constant_spectrum():
    base = oslab.BaseSystem.golden()
    a = oslab.Cocycle.constant(np.diag([4.0, 2.0, 1.0]))
    est = oslab.estimate_spectrum(a, base, n=64, samples=4, seed=1)
    assert np.allclose(est["values"], [math.log(4), math.log(2), 0.0], atol=1e-12)
    assert est["tau"] == [1, 2]


def test_schrodinger_phase_iteration():
    base = oslab.BaseSystem.golden()
    a = oslab.Cocycle.schrodinger(energy=0.5, coupling=2.0)
    x = base.sample_phases(3, 7)[0]
    p = a.iterate(base, x, 10)
    assert abs(np.linalg.det(p) - 1.0) < 1e-8


def test_ap_check():
    g = np.diag([1e3, 1e-3])
    report = oslab.ap_check([g, g, g], 1e-5, 0.1)
    assert report["holds"]
    assert report["distance_forward"] <= report["bound"]
    with pytest.raises(oslab.HypothesisFailure):
        oslab.ap_check([g, g, g], 0.01, 0.1)


def test_describe_and_catalog():
    assert "schrodinger" in oslab.catalog_names()
    assert "spectrum" in oslab.describe("pipelines")
    with pytest.raises(oslab.OslabError):
        oslab.describe("no_such_thing")


def test_config_error():
    doc = json.loads((ROOT / "configs" / "minimal_spectrum.json").read_text())
    doc["bogus"] = 1
    with pytest.raises(oslab.ConfigError):
        oslab.validate_config(doc)


def test_run_minimal_config(tmp_path):
    doc = oslab.load_config_file(str(ROOT / "configs" / "minimal_spectrum.json"))
    assert oslab.validate_config(doc) == []
    code, _ = oslab.run_config(doc, out_dir=str(tmp_path), threads=1)
    assert code == 0
    lines = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert len(lines) >= 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_hash"].startswith("fnv1a64:")
