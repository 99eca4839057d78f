"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest

from geoflow import galerkin
from geoflow.asymptotics import K_gamma, L_gamma, growth_report
from geoflow.fourier import fourier_merge, fourier_split, index_form, random_field
from geoflow.jacobi import fundamental_solution, nullities
from geoflow.model import CANONICAL_PRESETS, preset
from geoflow.spectral import (METHODS, index_pack, lambda_o, lambda_profile, maslov_index,
                              sf_iterate)

from conftest import random_systems

PRESETS = [preset(name) for name in CANONICAL_PRESETS]


@pytest.fixture
def report(request):
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    start = time.perf_counter()

    def emit(criterion, ok, detail):
        line = (f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail}; "
                f"{time.perf_counter() - start:.1f}s)")
        if tr is not None:
            tr.write_line(line)
        else:
            print(line)
        assert ok, line

    return emit


def test_criterion_1_three_way_iterates(report):
    bad = []
    for sys in PRESETS:
        for N in range(1, 9):
            vals = {m: sf_iterate(sys, N, m) for m in METHODS}
            if len(set(vals.values())) != 1:
                bad.append((sys.label, N, vals))
    report(1, not bad, f"{len(PRESETS) * 8} (preset, N) pairs, mismatches {bad}")


def test_criterion_2_index_identity(report):
    bad = []
    systems = PRESETS + random_systems()
    for sys in systems:
        p = index_pack(sys)
        rhs = p.dim_Jper_cap_J0 - p.maslov - p.i_conc - p.n_minus_g
        if p.sf_gamma != rhs:
            bad.append((sys.label, p.sf_gamma, rhs))
    report(2, not bad, f"{len(systems)} systems, violations {bad}")


def test_criterion_3_kernel_match(report):
    grid = np.exp(2j * np.pi * np.arange(24) / 24)
    bad = []
    for sys in PRESETS:
        mono = fundamental_solution(sys)
        for z in grid:
            basis = galerkin.TrialBasis.twisted(sys.n, z, 32)
            path = galerkin.assemble_path(sys, basis, 1.0, P=1, times=[0.0, 1.0])
            if path.kernel_dims()[1] != mono.kernel_dim(z):
                bad.append((sys.label, np.angle(z)))
    report(3, not bad, f"{len(PRESETS) * 24} grid points, mismatches {bad}")


def test_criterion_4_profile(report):
    problems = []
    for sys in PRESETS:
        prof = lambda_profile(sys)  # raises if an arc is not constant
        problems += [f"{sys.label}: {v}" for v in prof.violations]
        for j in prof.jumps:
            if j.checked and abs(j.size) > j.bound:
                problems.append(f"{sys.label}: jump {j.size} > {j.bound}")
        mono = fundamental_solution(sys)
        if mono.one is None:
            for side in (prof.arcs[0].value, prof.arcs[-1].value):
                if side - prof.value_at_1 != sys.n_minus_g:
                    problems.append(f"{sys.label}: z=1 jump {side - prof.value_at_1}")
    report(4, not problems, f"{len(PRESETS)} profiles, violations {problems}")


def test_criterion_5_split_merge(report):
    rng = np.random.default_rng(5)
    sys = random_systems(1, seed=55)[0]
    worst_rt, worst_form = 0.0, 0.0
    for N in (2, 3, 4):
        for _ in range(50):
            V, W = random_field(rng, sys.n, modes=4), random_field(rng, sys.n, modes=4)
            Vs, Ws = fourier_split(V, N), fourier_split(W, N)
            worst_rt = max(worst_rt, np.abs(fourier_merge(Vs, N) - V.values()).max())
            back = fourier_split(fourier_merge(Vs, N), N)
            worst_rt = max(worst_rt, max(np.abs(a.values() - b.values()).max()
                                         for a, b in zip(back, Vs)))
            for T in (N, 0):
                lhs = index_form(sys, V, W, T)
                rhs = N ** 2 * sum(index_form(sys, a, b, 1 if T else 0) for a, b in zip(Vs, Ws))
                worst_form = max(worst_form, abs(lhs - rhs) / max(1.0, abs(lhs)))
    ok = worst_rt <= 1e-12 and worst_form <= 1e-8
    report(5, ok, f"round trip {worst_rt:.1e} <= 1e-12, form identities {worst_form:.1e} <= 1e-8")


def test_criterion_6_hyperbolic_and_flat(report):
    hyp, flat = preset("hyp-L(4)"), preset("flat-L")
    bad = []
    for N in range(1, 17):
        for m in METHODS:
            if sf_iterate(hyp, N, m) != -1:
                bad.append(("hyp-L(4)", N, m))
            if sf_iterate(flat, N, m) != 0:
                bad.append(("flat-L", N, m))
    report(6, not bad, f"N = 1..16, all methods, deviations {bad}")


def test_criterion_7_growth_bounds(report):
    systems = PRESETS + random_systems()
    bad, checks = [], 0
    for sys in systems:
        rep = growth_report(sys, 16)
        checks += len(rep.bound_checks)
        bad += [(sys.label, c.name, c.N, c.P) for c in rep.violations]
    report(7, not bad, f"{len(systems)} systems, {checks} inequalities, violations {bad[:5]}")


def test_criterion_8_truncation_stability(report):
    bad = []
    for sys in PRESETS:
        spaces = [("twisted", 1.0), ("twisted", np.exp(0.5j)), ("dirichlet", 0)]
        for space, z in spaces:
            vals = [galerkin.endpoint_flow(sys, galerkin.make_basis(sys.n, space, K, z), 1.0).value
                    for K in (16, 32, 64)]
            if len(set(vals)) != 1:
                bad.append((sys.label, space, vals))
    report(8, not bad, f"K in 16, 32, 64 on {len(PRESETS) * 3} spaces, unstable {bad}")


def test_criterion_9_closed_forms(report):
    d, f = preset("dirichlet-R"), preset("flat-L")
    got = {
        "dirichlet lambda_o": lambda_o(d),
        "dirichlet maslov": maslov_index(d),
        "dirichlet n_0": nullities(fundamental_solution(d))[0],
        "flat-L maslov": maslov_index(f),
        "flat-L K": K_gamma(f),
        "flat-L L": L_gamma(f),
    }
    want = {"dirichlet lambda_o": -1, "dirichlet maslov": 2, "dirichlet n_0": 1,
            "flat-L maslov": -1, "flat-L K": 1, "flat-L L": 0}
    bad = {k: got[k] for k in want if got[k] != want[k]}
    report(9, not bad, f"{len(want)} closed-form values, mismatches {bad}")
