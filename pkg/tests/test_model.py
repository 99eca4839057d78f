import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoflow.model import (CANONICAL_PRESETS, CoefficientPath, GeodesicSystem, InvalidSystem,
                           SignatureMetric, load_system, preset, random_system, to_document,
                           validate_system)


def test_flat_l_document():
    sys = load_system({"preset": "flat-L"})
    assert sys.n == 2
    assert np.array_equal(sys.G, np.diag([1.0, -1.0]))
    t = np.linspace(0, 1, 7)
    assert np.all(sys.gamma(t) == 0)
    assert np.all(sys.curvature(t) == 0)
    assert sys.n_minus_g == 1


def test_preset_coefficients():
    assert preset("hyp-L(4)").curvature(0.3)[0, 0] == 4.0
    assert preset("hyp-L(4)").G[0, 0] == -1.0
    assert np.isclose(preset("ell-R(0.3)").curvature(0.7)[0, 0], -(0.6 * np.pi) ** 2)
    assert np.isclose(preset("dirichlet-R").curvature(0.1)[0, 0], -(2 * np.pi) ** 2)
    assert preset("flat-R").G[0, 0] == 1.0


@pytest.mark.parametrize("name", ["bogus", "hyp-L(-1)", "ell-R(0.5)", "ell-R(0)", "flat-R(2)"])
def test_bad_presets(name):
    with pytest.raises(ValueError):
        preset(name)


def _antisym_document(m=64, bump=0.0):
    G = np.diag([1.0, -1.0])
    A = G @ np.array([[0.0, 0.7], [-0.7, 0.0]])
    t = np.arange(m) / m
    grid = np.sin(2 * np.pi * t)[:, None, None] * A
    grid[3, 0, 1] += bump
    return {"n": 2, "epsilon": [1, -1], "gamma": {"grid": grid.tolist()},
            "curvature": {"grid": np.zeros((m, 2, 2)).tolist()}, "label": "sine"}, A


def test_sampled_document_interpolates():
    doc, A = _antisym_document()
    sys = load_system(json.dumps(doc))
    assert np.abs(sys.gamma(0.25) - A).max() < 1e-8
    assert np.abs(sys.gamma(1.25) - sys.gamma(0.25)).max() < 1e-12


def test_antisymmetry_violation_rejected():
    doc, _ = _antisym_document(bump=1e-3)
    with pytest.raises(InvalidSystem, match="gamma not G-antisymmetric"):
        load_system(doc)


def test_perturbed_grid_point_tolerance():
    doc, _ = _antisym_document(bump=1e-6)
    sys = load_system(doc, tol=1e-5)
    assert validate_system(sys, tol=1e-5).passed
    report = validate_system(sys, tol=1e-8)
    assert not report.passed
    assert "gamma not G-antisymmetric" in report.failures


def test_curvature_not_symmetric_reported():
    metric = SignatureMetric((1, 1))
    bad = CoefficientPath.constant(np.array([[0.0, 1.0], [0.0, 0.0]]))
    sys = GeodesicSystem(metric, CoefficientPath.constant(np.zeros((2, 2))), bad)
    assert validate_system(sys).failures == ["curvature not G-symmetric"]


def test_flat_l_validates_with_zero_violation():
    report = validate_system(preset("flat-L"))
    assert report.passed
    assert all(c.violation == 0 for c in report.checks)


@pytest.mark.parametrize("doc", [
    "not json", "[1, 2]", {"n": 1}, {"preset": 3},
    {"n": 1, "epsilon": [2], "gamma": {"grid": [[[0.0]]]}, "curvature": {"grid": [[[0.0]]]}},
    {"n": 2, "epsilon": [1, 1], "gamma": {"grid": [[[0.0]]]}, "curvature": {"grid": [[[0.0]]]}},
    {"preset": "flat-L", "n": 2},
])
def test_schema_errors(doc):
    with pytest.raises(InvalidSystem):
        load_system(doc)


def test_metric_invariants():
    m = SignatureMetric((1, -1, -1))
    assert np.array_equal(m.G @ m.G, np.eye(3))
    assert m.n_minus_g == 2


@pytest.mark.parametrize("name", CANONICAL_PRESETS)
def test_preset_roundtrip(name):
    sys = preset(name)
    t = np.linspace(0, 1, 101)
    for doc in (to_document(sys), to_document(sys, m=32)):
        back = load_system(json.dumps(doc))
        assert np.abs(back.gamma(t) - sys.gamma(t)).max() < 1e-12
        assert np.abs(back.curvature(t) - sys.curvature(t)).max() < 1e-9


def test_sampled_roundtrip():
    sys = random_system(np.random.default_rng(3), 2)
    back = load_system(to_document(sys))
    t = np.linspace(0, 1, 101)
    assert np.abs(back.gamma(t) - sys.gamma(t)).max() < 1e-12
    assert np.abs(back.curvature(t) - sys.curvature(t)).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_random_systems_are_compatible(seed, n):
    sys = random_system(np.random.default_rng(seed), n)
    t = np.linspace(0, 1, 101)
    G = sys.G
    gam, curv = sys.gamma(t), sys.curvature(t)
    assert np.abs(G @ gam + np.swapaxes(gam, 1, 2) @ G).max() < 1e-10
    assert np.abs(G @ curv - np.swapaxes(curv, 1, 2) @ G).max() < 1e-10
    assert np.abs(sys.gamma(1.0) - sys.gamma(0.0)).max() < 1e-10
    assert validate_system(sys).passed


def test_derivative_of_sampled_path():
    doc, A = _antisym_document()
    sys = load_system(doc)
    assert np.abs(sys.gamma_prime(0.0) - 2 * np.pi * A).max() < 1e-8
