import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoflow.fourier import (SAMPLES, TwistViolation, TwistedField, fourier_merge,
                             fourier_split, index_form, random_field)
from geoflow.model import preset, random_system

T = np.arange(SAMPLES) / SAMPLES


def test_split_n1_identity():
    V = random_field(np.random.default_rng(0), 2)
    (only,) = fourier_split(V, 1)
    assert np.abs(only.values() - V.values()).max() < 1e-12


def test_single_frequency_lands_in_one_slot():
    v0 = np.array([1.0, -2.0])
    V = np.exp(2j * np.pi * T)[:, None] * v0
    parts = fourier_split(V, 2)
    assert np.abs(parts[0].u).max() < 1e-12
    assert np.abs(parts[1].values()[0] - v0).max() < 1e-12


def test_components_carry_twist():
    V = random_field(np.random.default_rng(1), 3)
    for k, part in enumerate(fourier_split(V, 4)):
        w = np.exp(2j * np.pi * k / 4)
        assert abs(part.twist - w) < 1e-14
        assert np.abs(part.at(1.0) - w * part.at(0.0)).max() < 1e-12


def test_split_matches_definition():
    V = random_field(np.random.default_rng(2), 1, modes=4)
    N = 3
    parts = fourier_split(V, N)
    t = np.array([0.0, 0.3, 0.71])
    w = np.exp(2j * np.pi / N)
    for k, part in enumerate(parts):
        direct = sum(w ** (-j * k) * V.at((t + j) / N) for j in range(N)) / N
        assert np.abs(part.at(t) - direct).max() < 1e-12


def test_merge_zero():
    fields = [TwistedField(2 * np.pi * k / 3, np.zeros((SAMPLES, 2), complex)) for k in range(3)]
    assert np.all(fourier_merge(fields, 3) == 0)


def test_merge_rejects_wrong_twist():
    fields = [TwistedField(0.1, np.zeros((SAMPLES, 1), complex)), TwistedField(np.pi, np.zeros(
        (SAMPLES, 1), complex))]
    with pytest.raises(TwistViolation):
        fourier_merge(fields, 2)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), N=st.integers(1, 6), n=st.integers(1, 3))
def test_roundtrips(seed, N, n):
    rng = np.random.default_rng(seed)
    V = random_field(rng, n)
    parts = fourier_split(V, N)
    assert np.abs(fourier_merge(parts, N) - V.values()).max() < 1e-12
    fields = [TwistedField(2 * np.pi * k / N, random_field(rng, n, modes=3).u) for k in range(N)]
    again = fourier_split(fourier_merge(fields, N), N)
    for a, b in zip(again, fields):
        assert np.abs(a.values() - b.values()).max() < 1e-12


@pytest.mark.parametrize("N", [2, 3, 4])
def test_form_splitting_identities(N):
    rng = np.random.default_rng(10 + N)
    sys = random_system(rng, 2)
    for _ in range(5):
        V, W = random_field(rng, 2), random_field(rng, 2)
        Vs, Ws = fourier_split(V, N), fourier_split(W, N)
        lhs = index_form(sys, V, W, N)
        rhs = N ** 2 * sum(index_form(sys, a, b, 1) for a, b in zip(Vs, Ws))
        assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs))
        lhs0 = index_form(sys, V, W, 0)
        rhs0 = N ** 2 * sum(index_form(sys, a, b, 0) for a, b in zip(Vs, Ws))
        assert abs(lhs0 - rhs0) <= 1e-8 * max(1.0, abs(lhs0))


def test_index_form_closed_form():
    # dirichlet-R: B_1(v, v) = int |v'|^2 - (2 pi)^2 |v|^2 vanishes on e^{2 pi i t}
    V = TwistedField(0.0, np.exp(2j * np.pi * T)[:, None] * np.ones((1, 1)))
    assert abs(index_form(preset("dirichlet-R"), V, V, 1)) < 1e-9
    assert abs(index_form(preset("flat-R"), V, V, 1) - (2 * np.pi) ** 2) < 1e-9
