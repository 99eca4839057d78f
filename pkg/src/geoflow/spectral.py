"""Spectral-flow function on the unit circle, Maslov index and iterates.

``lambda(z)`` is the spectral flow of ``t -> B_t`` on fields twisted by ``z``.
It is evaluated two ways: by a stabilized Galerkin computation, and by a
finite-dimensional reduction that needs only the Poincare map,

    lambda(z) = lambda_o + (1 - delta_{z,1}) n_-(g) - n_0 + dim J1(z) - n_-(b_z),

where ``lambda_o`` is the flow on fields vanishing at both ends.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .galerkin import stabilized_spectral_flow
from .jacobi import (MonodromyData, boundary_form, concavity_index, fundamental_solution,
                     j1_dim, nullities)
from .model import GeodesicSystem
from .settings import DEFAULTS, Settings

METHODS = ("fourier", "direct", "reduction")


class ProfileError(ArithmeticError):
    """lambda was not constant on an arc free of spectrum."""


class MethodDisagreement(ArithmeticError):
    """Independent evaluations of the same quantity differ."""


def monodromy(sys: GeodesicSystem, settings: Settings = DEFAULTS) -> MonodromyData:
    return fundamental_solution(sys, None, settings)


def _unit(z) -> complex:
    z = complex(z)
    if abs(abs(z) - 1.0) > 1e-12:
        raise ValueError(f"z must lie on the unit circle, |z| = {abs(z)}")
    return z


def _is_one(z: complex, settings: Settings) -> bool:
    return abs(np.angle(z)) <= settings.tol_angle


@lru_cache(maxsize=256)
def lambda_o(sys: GeodesicSystem, settings: Settings = DEFAULTS) -> int:
    """Spectral flow of ``t -> B_t`` on fields vanishing at both endpoints."""
    return stabilized_spectral_flow(sys, "dirichlet", 1.0, settings=settings,
                                    diagnostics=False).value


def maslov_index(sys: GeodesicSystem, settings: Settings = DEFAULTS) -> int:
    """``n_0 - n_-(g) - lambda_o``."""
    n0 = nullities(monodromy(sys, settings))[0]
    return n0 - sys.n_minus_g - lambda_o(sys, settings)


def reduction_terms(sys: GeodesicSystem, z, settings: Settings = DEFAULTS) -> dict:
    """The ingredients of the reduction formula at ``z``."""
    z = _unit(z)
    mono = monodromy(sys, settings)
    n0 = nullities(mono)[0]
    b = boundary_form(mono, z)
    return {
        "lambda_o": lambda_o(sys, settings),
        "n_minus_g": 0 if _is_one(z, settings) else sys.n_minus_g,
        "n_0": n0,
        "j1_dim": j1_dim(mono, z),
        "n_minus_b": b.n_minus,
        "kernel_b": b.kernel_dim,
    }


def lambda_reduced(sys: GeodesicSystem, z, settings: Settings = DEFAULTS) -> int:
    """``lambda(z)`` from the finite-dimensional reduction."""
    t = reduction_terms(sys, z, settings)
    return t["lambda_o"] + t["n_minus_g"] - t["n_0"] + t["j1_dim"] - t["n_minus_b"]


def lambda_galerkin(sys: GeodesicSystem, z, settings: Settings = DEFAULTS) -> int:
    """``lambda(z)`` as a stabilized Galerkin spectral flow on fields twisted by ``z``."""
    z = _unit(z)
    return stabilized_spectral_flow(sys, "twisted", 1.0, z=z, settings=settings,
                                    diagnostics=False).value


@dataclass
class IndexPack:
    lambda_o: int
    maslov: int
    n_0: int
    n_per: int
    dim_Jper_cap_J0: int
    i_conc: int
    n_minus_g: int
    sf_gamma: int
    violations: list[str] = field(default_factory=list)

    @property
    def identity_holds(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        out = asdict(self)
        out["identity_holds"] = self.identity_holds
        return out


def index_pack(sys: GeodesicSystem, settings: Settings = DEFAULTS) -> IndexPack:
    """Collect the indices of the closed geodesic and check how they fit together."""
    mono = monodromy(sys, settings)
    n0, nper, both = nullities(mono)
    lo = lambda_o(sys, settings)
    ng = sys.n_minus_g
    maslov = n0 - ng - lo
    conc = concavity_index(mono)
    sf = lambda_galerkin(sys, 1.0, settings)
    pack = IndexPack(lo, maslov, n0, nper, both, conc, ng, sf)
    predicted = both - maslov - conc - ng
    if sf != predicted:
        pack.violations.append(
            f"sf(gamma) = {sf} but dim(Jper cap J0) - maslov - i_conc - n_-(g) = {predicted}")
    reduced = lambda_reduced(sys, 1.0, settings)
    if reduced != sf:
        pack.violations.append(f"reduction gives lambda(1) = {reduced}, Galerkin gives {sf}")
    return pack


def roots_of_unity(N: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(N) / N)


def sf_iterate(sys: GeodesicSystem, N: int, method: str = "fourier",
               settings: Settings = DEFAULTS) -> int:
    """Spectral flow of the ``N``-th iterate.

    ``fourier`` sums ``lambda_reduced`` over the ``N``-th roots of unity,
    ``direct`` runs the Galerkin flow of ``t -> B_t`` for ``t`` in ``[0, N]`` on
    periodic fields, and ``reduction`` uses the Maslov index with the boundary
    data at the roots of unity.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if method == "fourier":
        return sum(lambda_reduced(sys, w, settings) for w in roots_of_unity(N))
    if method == "direct":
        return stabilized_spectral_flow(sys, "twisted", float(N), z=1.0, settings=settings,
                                        diagnostics=False).value
    if method == "reduction":
        mono = monodromy(sys, settings)
        j1 = sum(j1_dim(mono, w) for w in roots_of_unity(N))
        b = sum(boundary_form(mono, w).n_minus for w in roots_of_unity(N))
        return -N * maslov_index(sys, settings) - sys.n_minus_g + j1 - b
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def sf_iterate_all(sys: GeodesicSystem, N: int, settings: Settings = DEFAULTS) -> dict:
    return {m: sf_iterate(sys, N, m, settings) for m in METHODS}


@dataclass
class Arc:
    theta_lo: float
    theta_hi: float
    value: int
    d: int
    kernel_dim: int
    galerkin: int | None = None


@dataclass
class Jump:
    theta: float
    left: int
    right: int
    point: int
    point_galerkin: int | None
    bound: int
    algebraic: int
    checked: bool

    @property
    def size(self) -> int:
        return self.right - self.left


@dataclass
class LambdaProfile:
    arcs: list[Arc]
    jumps: list[Jump]
    value_at_1: int
    z1_jump_checked: bool
    n_minus_g: int
    violations: list[str] = field(default_factory=list)

    def value(self, theta: float) -> int:
        """Arc value containing ``theta`` (taken modulo ``2 pi``)."""
        theta = theta % (2 * np.pi)
        for a in self.arcs:
            if a.theta_lo < theta < a.theta_hi:
                return a.value
        for j in self.jumps:
            if abs(j.theta - theta) < 1e-12 or abs(j.theta + 2 * np.pi - theta) < 1e-12:
                return j.point
        raise ValueError(f"theta={theta} not covered by the profile")

    def plot_points(self, per_arc: int = 16) -> list[tuple[float, int]]:
        """``(theta, lambda)`` samples: each distinguished angle and interior points of every arc."""
        pts = [(0.0, self.value_at_1)]
        for a, j_next in zip(self.arcs, self.jumps[1:] + [None]):
            for s in np.linspace(a.theta_lo, a.theta_hi, per_arc + 2)[1:-1]:
                pts.append((float(s), a.value))
            if j_next is not None:
                pts.append((j_next.theta, j_next.point))
        pts.append((2 * np.pi, self.value_at_1))
        return pts

    def to_dict(self) -> dict:
        return {
            "arcs": [asdict(a) for a in self.arcs],
            "jumps": [dict(asdict(j), size=j.size) for j in self.jumps],
            "value_at_1": self.value_at_1,
            "z1_jump_checked": self.z1_jump_checked,
            "n_minus_g": self.n_minus_g,
            "violations": list(self.violations),
        }


def lambda_profile(sys: GeodesicSystem, settings: Settings = DEFAULTS,
                   galerkin: bool = True) -> LambdaProfile:
    """Piecewise-constant profile of ``lambda`` on the unit circle.

    Arcs are cut at angle 0 and at the unimodular eigenvalues.  Each arc value
    comes from the reduction at the midpoint and is checked at
    ``grid_per_arc`` interior points; a change raises :class:`ProfileError`.
    With ``galerkin`` set, the midpoint and every distinguished angle are also
    evaluated by the Galerkin oracle and disagreements are recorded.
    """
    g = settings.grid_per_arc
    if g < 3:
        raise ValueError("grid_per_arc must be at least 3")
    mono = monodromy(sys, settings)
    cuts = [0.0] + [u.angle for u in mono.unit] + [2 * np.pi]
    violations: list[str] = []

    arcs = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = (lo + hi) / 2
        zm = np.exp(1j * mid)
        value = lambda_reduced(sys, zm, settings)
        b = boundary_form(mono, zm)
        for s in lo + (hi - lo) * np.arange(1, g + 1) / (g + 1):
            zs = np.exp(1j * s)
            other = lambda_reduced(sys, zs, settings)
            if other != value:
                raise ProfileError(
                    f"lambda changes inside arc ({lo:.6f}, {hi:.6f}): {value} at midpoint, "
                    f"{other} at {s:.6f}")
            if boundary_form(mono, zs).n_minus != b.n_minus:
                raise ProfileError(f"n_-(b_z) changes inside arc ({lo:.6f}, {hi:.6f})")
        arc = Arc(lo, hi, value, b.n_minus, b.kernel_dim)
        if galerkin:
            arc.galerkin = lambda_galerkin(sys, zm, settings)
            if arc.galerkin != value:
                violations.append(f"arc ({lo:.6f}, {hi:.6f}): reduction {value}, "
                                  f"Galerkin {arc.galerkin}")
        arcs.append(arc)

    value_at_1 = lambda_reduced(sys, 1.0, settings)
    one = mono.one
    jumps = []
    specs = [(0.0, one.geometric if one else 0, one.algebraic if one else 0)]
    specs += [(u.angle, u.geometric, u.algebraic) for u in mono.unit]
    for i, (theta, geo, alg) in enumerate(specs):
        left = arcs[i - 1].value
        right = arcs[i].value
        z = np.exp(1j * theta)
        point = value_at_1 if i == 0 else lambda_reduced(sys, z, settings)
        pg = lambda_galerkin(sys, z, settings) if galerkin else None
        if pg is not None and pg != point:
            violations.append(f"theta={theta:.6f}: reduction {point}, Galerkin {pg}")
        checked = i > 0
        if checked and abs(right - left) > geo:
            violations.append(f"jump {right - left} at theta={theta:.6f} exceeds bound {geo}")
        jumps.append(Jump(theta, left, right, point, pg, geo, alg, checked))

    z1_checked = one is None
    if z1_checked:
        target = value_at_1 + sys.n_minus_g
        if arcs[0].value != target or arcs[-1].value != target:
            violations.append(
                f"arcs next to theta=0 give {arcs[-1].value}, {arcs[0].value}; expected {target}")
    return LambdaProfile(arcs, jumps, value_at_1, z1_checked, sys.n_minus_g, violations)
