"""Growth of the spectral flow along iterates and the constants that control it.

``K`` averages ``n_-(b_z)`` over the unit circle, ``L = -K - maslov`` is the
mean growth rate of ``sf`` along iterates, and the report checks the explicit
two-sided bounds on ``sf`` and on the root-of-unity sums ``B_N``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .jacobi import boundary_form, j1_dim, nullities
from .model import GeodesicSystem
from .settings import DEFAULTS, Settings
from .spectral import (lambda_galerkin, maslov_index, monodromy,
                       roots_of_unity, sf_iterate)

K_CHECK_N = 64
L_CHECK_N = 32
MAX_DENOMINATOR = 64


class CrossCheckError(ArithmeticError):
    """A dual evaluation of an asymptotic constant fell outside its slack."""


def curly_B(sys: GeodesicSystem, N: int, settings: Settings = DEFAULTS) -> int:
    """``sum_k n_-(b_z)`` over the ``N``-th roots of unity ``z``."""
    if N < 1:
        raise ValueError("N must be positive")
    mono = monodromy(sys, settings)
    return sum(boundary_form(mono, w).n_minus for w in roots_of_unity(N))


@dataclass
class ArcData:
    theta_lo: float
    theta_hi: float
    d: int


def _rational_turn(theta: float, settings: Settings) -> Fraction | None:
    """``theta / 2 pi`` as a fraction with small denominator, if it is one."""
    turn = theta / (2 * np.pi)
    frac = Fraction(turn).limit_denominator(MAX_DENOMINATOR)
    if abs(float(frac) - turn) <= settings.tol_angle / (2 * np.pi):
        return frac
    return None


def arc_data(sys: GeodesicSystem, settings: Settings = DEFAULTS) -> list[ArcData]:
    """Arcs between consecutive unimodular eigenvalues with ``d = n_-(b_z)`` on each.

    ``d`` is read at the midpoint and confirmed at two more interior points.
    """
    mono = monodromy(sys, settings)
    cuts = [0.0] + [u.angle for u in mono.unit] + [2 * np.pi]
    arcs = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        vals = {boundary_form(mono, np.exp(1j * (lo + f * (hi - lo)))).n_minus
                for f in (0.25, 0.5, 0.75)}
        if len(vals) != 1:
            raise CrossCheckError(f"n_-(b_z) not constant on arc ({lo:.6f}, {hi:.6f})")
        arcs.append(ArcData(lo, hi, vals.pop()))
    return arcs


def _k_slack(sys, arcs, N, settings) -> float:
    n0 = nullities(monodromy(sys, settings))[0]
    k = len(arcs) - 1
    return (2 * sum(a.d for a in arcs) + (k + 1) * (2 * sys.n - n0)) / N


def K_gamma(sys: GeodesicSystem, settings: Settings = DEFAULTS, check: bool = True):
    """``(1 / 2 pi) sum_j d_j (theta_{j+1} - theta_j)``.

    Returned as a :class:`~fractions.Fraction` when every eigenvalue angle is a
    rational multiple of ``pi`` with denominator at most 64, else a float.
    With ``check`` the value is compared with ``B_64 / 64``.
    """
    arcs = arc_data(sys, settings)
    turns = [_rational_turn(a.theta_lo, settings) for a in arcs] + [Fraction(1)]
    if all(t is not None for t in turns):
        value = sum((a.d * (hi - lo) for a, lo, hi in zip(arcs, turns[:-1], turns[1:])),
                    Fraction(0))
    else:
        value = sum(a.d * (a.theta_hi - a.theta_lo) for a in arcs) / (2 * np.pi)
    if check:
        approx = curly_B(sys, K_CHECK_N, settings) / K_CHECK_N
        slack = _k_slack(sys, arcs, K_CHECK_N, settings)
        if abs(float(value) - approx) > slack + 1e-12:
            raise CrossCheckError(
                f"K = {float(value):.6f} but B_{K_CHECK_N}/{K_CHECK_N} = {approx:.6f} "
                f"(slack {slack:.4f})")
    return value


def C_gamma(sys: GeodesicSystem, settings: Settings = DEFAULTS) -> int:
    n = sys.n
    n0 = nullities(monodromy(sys, settings))[0]
    return 4 * n * n - 2 * n0 * n + sys.n_minus_g


def L_gamma(sys: GeodesicSystem, settings: Settings = DEFAULTS, check: bool = True):
    """``-K - maslov``; with ``check`` compared with ``sf(gamma^32) / 32`` from the Galerkin flow."""
    value = -K_gamma(sys, settings, check) - maslov_index(sys, settings)
    if check:
        sf = sf_iterate(sys, L_CHECK_N, "direct", settings)
        slack = 2 * (2 * sys.n + C_gamma(sys, settings)) / L_CHECK_N
        if abs(sf / L_CHECK_N - float(value)) > slack:
            raise CrossCheckError(
                f"L = {float(value):.6f} but sf(gamma^{L_CHECK_N})/{L_CHECK_N} = "
                f"{sf / L_CHECK_N:.6f} (slack {slack:.4f})")
    return value


def alpha_constant(sys: GeodesicSystem, settings: Settings = DEFAULTS) -> int:
    """``5 (k + 1)(2n - n_0)`` with ``k`` the number of unimodular eigenvalues other than 1."""
    mono = monodromy(sys, settings)
    n0 = nullities(mono)[0]
    return 5 * (len(mono.unit) + 1) * (2 * sys.n - n0)


def hyperbolic_sf(sys: GeodesicSystem, N: int, settings: Settings = DEFAULTS) -> int | None:
    """``N sf(gamma) + (N - 1) n_-(g)`` when the Poincare map has no unimodular spectrum, else None."""
    if N < 1:
        raise ValueError("N must be positive")
    if not monodromy(sys, settings).hyperbolic:
        return None
    return N * lambda_galerkin(sys, 1.0, settings) + (N - 1) * sys.n_minus_g


@dataclass
class BoundCheck:
    name: str
    N: int
    P: int | None
    value: float
    lo: float
    hi: float

    @property
    def margin(self) -> float:
        return min(self.value - self.lo, self.hi - self.value)

    @property
    def ok(self) -> bool:
        return self.margin >= -1e-9

    def to_dict(self) -> dict:
        return dict(asdict(self), margin=self.margin, ok=self.ok)


def _num(x):
    return {"value": float(x), "exact": str(x)} if isinstance(x, Fraction) else float(x)


@dataclass
class GrowthReport:
    K_gamma: Fraction | float
    L_gamma: Fraction | float
    C_gamma: int
    alpha: int
    maslov: int
    n: int
    n_0: int
    n_minus_g: int
    classification: str
    arc_data: list[ArcData]
    curlyB: list[int]
    sf_values: list[int]
    bound_checks: list[BoundCheck] = field(default_factory=list)
    max_deviation_B: float = 0.0
    max_deviation_sf: float = 0.0

    @property
    def violations(self) -> list[BoundCheck]:
        return [c for c in self.bound_checks if not c.ok]

    @property
    def passed(self) -> bool:
        return not self.violations

    def sf_bound_rows(self) -> list[tuple[int, int, float, float, float]]:
        rows = []
        for c in self.bound_checks:
            if c.name == "sf two-sided":
                rows.append((c.N, int(c.value), c.lo, c.hi, c.margin))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "sf", "bound_lo", "bound_hi", "margin"])
        for row in self.sf_bound_rows():
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "K_gamma": _num(self.K_gamma),
            "L_gamma": _num(self.L_gamma),
            "C_gamma": self.C_gamma,
            "alpha": self.alpha,
            "maslov": self.maslov,
            "n": self.n,
            "n_0": self.n_0,
            "n_minus_g": self.n_minus_g,
            "classification": self.classification,
            "arc_data": [asdict(a) for a in self.arc_data],
            "curlyB": self.curlyB,
            "sf_values": self.sf_values,
            "max_deviation_B": self.max_deviation_B,
            "max_deviation_sf": self.max_deviation_sf,
            "bound_checks": [c.to_dict() for c in self.bound_checks],
            "passed": self.passed,
        }


def growth_report(sys: GeodesicSystem, N_max: int | None = None,
                  settings: Settings = DEFAULTS, check: bool = True) -> GrowthReport:
    """Compute the growth constants and verify every bound for ``N, P <= N_max``.

    ``sf`` values come from the Fourier sum over roots of unity.  Checks:
    two-sided bounds on ``sf(gamma^N)``; ``0 <= sum_k dim J1 <= 2n``;
    ``0 <= B_N <= N (n - n_0) + 4n^2 - 2 n_0 n``; ``|B_{N+P} - B_N - K P| <= alpha``;
    ``|sf(N+P) - sf(N) - L P| <= 2n + alpha``; and that an iterate with
    ``|sf| > 2n + n_-(g)`` forces linear growth.
    """
    N_max = settings.N_max if N_max is None else N_max
    if N_max < 1:
        raise ValueError("N_max must be positive")
    mono = monodromy(sys, settings)
    n = sys.n
    n0 = nullities(mono)[0]
    ng = sys.n_minus_g
    maslov = maslov_index(sys, settings)
    K = K_gamma(sys, settings, check)
    L = L_gamma(sys, settings, check)
    C = C_gamma(sys, settings)
    alpha = alpha_constant(sys, settings)
    top = 2 * N_max
    B = [curly_B(sys, N, settings) for N in range(1, top + 1)]
    sf = [sf_iterate(sys, N, "fourier", settings) for N in range(1, top + 1)]
    bounded = (L == 0) if isinstance(L, Fraction) else abs(L) <= 1e-9
    classification = "bounded" if bounded else "uniform-linear"

    checks: list[BoundCheck] = []
    for N in range(1, N_max + 1):
        s = sf[N - 1]
        checks.append(BoundCheck("sf two-sided", N, None, s,
                                 -maslov * N + n0 * N - n * N - C, -maslov * N - ng + 2 * n))
        j1 = sum(j1_dim(mono, w) for w in roots_of_unity(N))
        checks.append(BoundCheck("J1 sum", N, None, j1, 0, 2 * n))
        checks.append(BoundCheck("B_N range", N, None, B[N - 1], 0,
                                 N * (n - n0) + 4 * n * n - 2 * n0 * n))
    dev_B = dev_sf = 0.0
    for N in range(1, N_max + 1):
        for P in range(1, N_max + 1):
            dB = B[N + P - 1] - B[N - 1] - float(K) * P
            ds = sf[N + P - 1] - sf[N - 1] - float(L) * P
            dev_B, dev_sf = max(dev_B, abs(dB)), max(dev_sf, abs(ds))
            checks.append(BoundCheck("B_N increments", N, P, dB, -alpha, alpha))
            checks.append(BoundCheck("sf increments", N, P, ds, -2 * n - alpha, 2 * n + alpha))
    trigger = max(abs(s) for s in sf[:N_max])
    if trigger > 2 * n + ng:
        checks.append(BoundCheck("superlinear trigger", N_max, None,
                                 0.0 if classification == "uniform-linear" else 1.0, 0.0, 0.0))
    return GrowthReport(K, L, C, alpha, maslov, n, n0, ng, classification,
                        arc_data(sys, settings), B[:N_max], sf[:N_max], checks, dev_B, dev_sf)

