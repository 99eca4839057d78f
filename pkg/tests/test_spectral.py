import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoflow.model import CANONICAL_PRESETS, preset, random_system
from geoflow.jacobi import fundamental_solution, j1_dim, nullities
from geoflow.spectral import (ProfileError, index_pack, lambda_galerkin, lambda_o,
                              lambda_profile, lambda_reduced, maslov_index, reduction_terms,
                              sf_iterate)
from geoflow import spectral
from geoflow.settings import DEFAULTS


@pytest.mark.parametrize("name,expected", [("flat-R", 0), ("dirichlet-R", -1), ("hyp-L(4)", 0)])
def test_lambda_o(name, expected):
    assert lambda_o(preset(name)) == expected


@pytest.mark.parametrize("name,expected", [("dirichlet-R", 2), ("flat-L", -1), ("hyp-L(4)", -1)])
def test_maslov(name, expected):
    assert maslov_index(preset(name)) == expected


def test_reduced_examples():
    t = reduction_terms(preset("flat-L"), 1j)
    assert (t["lambda_o"], t["n_minus_g"], t["n_0"], t["j1_dim"], t["n_minus_b"]) == (0, 1, 0, 0, 1)
    assert lambda_reduced(preset("flat-L"), 1j) == 0
    assert lambda_reduced(preset("flat-L"), 1.0) == 0
    hyp = preset("hyp-L(4)")
    assert lambda_reduced(hyp, -1.0) == lambda_galerkin(hyp, -1.0) == 0


def test_reduced_requires_unit_z():
    with pytest.raises(ValueError):
        lambda_reduced(preset("flat-R"), 0.5)


def test_galerkin_examples():
    assert lambda_galerkin(preset("flat-L"), 1j) == 0
    ell = preset("ell-R(0.3)")
    z = np.exp(0.2j * np.pi)
    assert lambda_galerkin(ell, z) == lambda_reduced(ell, z)


@pytest.mark.parametrize("name", CANONICAL_PRESETS)
def test_dual_method_agreement(name):
    sys = preset(name)
    mono = fundamental_solution(sys)
    cuts = [0.0] + [u.angle for u in mono.unit] + [2 * np.pi]
    mids = [(a + b) / 2 for a, b in zip(cuts[:-1], cuts[1:])]
    thetas = list(2 * np.pi * np.arange(24) / 24) + mids
    for th in thetas:
        z = np.exp(1j * th)
        assert lambda_reduced(sys, z) == lambda_galerkin(sys, z), th
        assert j1_dim(mono, z) <= nullities(mono)[0]


@pytest.mark.parametrize("name,expected", [
    ("hyp-L(4)", dict(lambda_o=0, maslov=-1, n_0=0, i_conc=1, n_minus_g=1, sf_gamma=-1)),
    ("flat-R", dict(lambda_o=0, maslov=0, n_0=0, n_per=1, dim_Jper_cap_J0=0, i_conc=0,
                    n_minus_g=0, sf_gamma=0)),
    ("dirichlet-R", dict(lambda_o=-1, maslov=2, n_0=1)),
])
def test_index_pack(name, expected):
    pack = index_pack(preset(name))
    for k, v in expected.items():
        assert getattr(pack, k) == v, k
    assert pack.identity_holds


def test_profile_hyp():
    prof = lambda_profile(preset("hyp-L(4)"))
    assert len(prof.arcs) == 1 and prof.arcs[0].value == 0
    assert prof.value_at_1 == -1 and prof.z1_jump_checked
    assert not prof.violations


def test_profile_ell():
    prof = lambda_profile(preset("ell-R(0.3)"))
    assert np.allclose([j.theta for j in prof.jumps], [0, 0.6 * np.pi, 1.4 * np.pi], atol=1e-8)
    assert [a.value for a in prof.arcs] == [-1, 0, -1]
    assert [a.galerkin for a in prof.arcs] == [-1, 0, -1]
    assert all(abs(j.size) <= j.bound for j in prof.jumps if j.checked)
    assert not prof.violations
    assert prof.value(1.0) == -1 and prof.value(np.pi) == 0


def test_profile_flat_l():
    prof = lambda_profile(preset("flat-L"))
    assert len(prof.arcs) == 1 and prof.arcs[0].value == 0
    jump = prof.jumps[0]
    assert (jump.bound, jump.algebraic) == (2, 4)
    assert not prof.z1_jump_checked


def test_profile_detects_nonconstant(monkeypatch):
    calls = iter(range(1000))
    monkeypatch.setattr(spectral, "lambda_reduced", lambda *a, **k: next(calls))
    with pytest.raises(ProfileError):
        lambda_profile(preset("flat-R"), galerkin=False)


def test_profile_grid_check():
    with pytest.raises(ValueError):
        lambda_profile(preset("flat-R"), DEFAULTS.with_overrides(grid_per_arc=2))


@pytest.mark.parametrize("name,N,method,expected", [
    ("flat-L", 5, "fourier", 0), ("flat-L", 5, "direct", 0), ("flat-L", 5, "reduction", 0),
    ("hyp-L(4)", 3, "fourier", -1),
])
def test_sf_iterate_examples(name, N, method, expected):
    assert sf_iterate(preset(name), N, method) == expected


@pytest.mark.parametrize("name", CANONICAL_PRESETS)
def test_sf_iterate_first_is_sf(name):
    sys = preset(name)
    sf = index_pack(sys).sf_gamma
    assert all(sf_iterate(sys, 1, m) == sf for m in spectral.METHODS)


def test_sf_iterate_bad_method():
    with pytest.raises(ValueError):
        sf_iterate(preset("flat-R"), 2, "magic")
    with pytest.raises(ValueError):
        sf_iterate(preset("flat-R"), 0)


def test_degenerate_eigenvalue_at_root_of_unity():
    # eigenvalues +-i: the fourth iterate has a root of unity on the spectrum
    sys = preset("ell-R(0.25)")
    vals = {m: sf_iterate(sys, 4, m) for m in spectral.METHODS}
    assert set(vals.values()) == {-1}


@settings(max_examples=12, deadline=None)
@given(seed=st.integers(0, 10_000), theta=st.floats(0.0, 2 * np.pi))
def test_reduction_matches_galerkin_on_random_systems(seed, theta):
    sys = random_system(np.random.default_rng(seed), 2)
    z = np.exp(1j * theta)
    assert lambda_reduced(sys, z) == lambda_galerkin(sys, z)
