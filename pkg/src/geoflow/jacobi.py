"""Jacobi fields along the closed geodesic and the linearized Poincare map.

Coordinates: a solution ``V`` of

    V'' + 2 Gamma_t V' + (Gamma_t' + Gamma_t^2 - Rbar_t) V = 0

is identified with its covariant initial data ``(v, v') = (V(0), V'(0) + Gamma_0 V(0))``.
The Poincare map sends that pair to ``(V(1), V'(1) + Gamma_0 V(1))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .model import GeodesicSystem
from .settings import DEFAULTS, Settings


class IntegrationError(RuntimeError):
    """The Jacobi ODE could not be integrated to the requested accuracy."""


def symplectic_form(G: np.ndarray) -> np.ndarray:
    n = G.shape[0]
    Z = np.zeros((n, n))
    return np.block([[Z, G], [-G, Z]])


@dataclass(frozen=True)
class UnitEigenvalue:
    angle: float
    algebraic: int
    geometric: int


@dataclass(frozen=True, eq=False)
class MonodromyData:
    """Fundamental solution, Poincare map and its spectrum."""

    sys: GeodesicSystem
    poincare: np.ndarray
    eigenvalues: np.ndarray
    unit: tuple[UnitEigenvalue, ...]
    one: UnitEigenvalue | None
    symplectic_defect: float
    settings: Settings = field(default=DEFAULTS)
    _dense: object = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.sys.n

    @property
    def G(self) -> np.ndarray:
        return self.sys.G

    @property
    def scale(self) -> float:
        """Reference norm for rank and inertia decisions."""
        return max(1.0, float(np.linalg.norm(self.poincare, 2)))

    @property
    def hyperbolic(self) -> bool:
        return not self.unit and self.one is None

    def fundamental(self, t):
        """``Psi(t)``: maps ``(V(0), V'(0))`` to ``(V(t), V'(t))`` (raw derivatives)."""
        n2 = 2 * self.n
        t = np.asarray(t, dtype=float)
        vals = self._dense(np.atleast_1d(t).ravel())
        out = vals.T.reshape(-1, n2, n2)
        return out.reshape(t.shape + (n2, n2)).astype(complex)

    def kernel_dim(self, z: complex) -> int:
        """``dim Ker(P - z Id)``."""
        return nullity(self.poincare - z * np.eye(2 * self.n), self.settings.tau_rank,
                       self.scale)

    def to_dict(self) -> dict:
        P = self.poincare
        return {
            "label": self.sys.label,
            "n": self.n,
            "poincare": _complex_matrix(P.astype(complex)),
            "eigenvalues": [[float(e.real), float(e.imag)] for e in self.eigenvalues],
            "unit_spectrum": [
                {"theta": u.angle, "algebraic": u.algebraic, "geometric": u.geometric}
                for u in self.unit
            ],
            "eigenvalue_one": None if self.one is None else {
                "algebraic": self.one.algebraic, "geometric": self.one.geometric},
            "symplectic_defect": self.symplectic_defect,
            "tol_circle": self.settings.tol_circle,
            "tol_angle": self.settings.tol_angle,
            "tol_cluster": self.settings.tol_cluster,
        }


def _complex_matrix(M: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in M]


def nullity(M: np.ndarray, tau: float, scale: float | None = None) -> int:
    """Number of singular values at or below ``tau * scale``.

    ``scale`` defaults to the largest singular value of ``M``; pass the norm of
    the underlying data when ``M`` may itself be numerically zero.  Missing
    singular values of a wide matrix count as zero.
    """
    if M.size == 0:
        return M.shape[1] if M.ndim == 2 else 0
    s = np.linalg.svd(M, compute_uv=False)
    ref = s[0] if scale is None else max(scale, s[0])
    if ref == 0.0:
        return M.shape[1]
    return M.shape[1] - int(np.sum(s > tau * ref))


def kernel_basis(M: np.ndarray, tau: float, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of ``M``."""
    if M.size == 0:
        return np.eye(M.shape[1], dtype=complex)
    u, s, vh = np.linalg.svd(M)
    ref = s[0] if scale is None else max(scale, s[0])
    rank = int(np.sum(s > tau * ref)) if ref > 0 else 0
    return vh[rank:].conj().T


def _rhs(sys: GeodesicSystem):
    n = sys.n

    def f(t, y):
        Y = y.reshape(2 * n, 2 * n)
        V, dV = Y[:n], Y[n:]
        gam = sys.gamma(t)
        coeff = sys.gamma_prime(t) + gam @ gam - sys.curvature(t)
        ddV = -2 * gam @ dV - coeff @ V
        return np.concatenate([dV, ddV]).ravel()

    return f


@lru_cache(maxsize=128)
def fundamental_solution(sys: GeodesicSystem, rtol: float | None = None,
                         settings: Settings = DEFAULTS) -> MonodromyData:
    """Integrate the Jacobi equation over one period and build the Poincare map."""
    rtol = settings.rtol if rtol is None else rtol
    if not 1e-13 <= rtol <= 1e-6:
        raise ValueError(f"rtol={rtol} outside [1e-13, 1e-6]")
    if rtol != settings.rtol:
        settings = settings.with_overrides(rtol=rtol)
    n = sys.n
    y0 = np.eye(2 * n).ravel()
    sol = solve_ivp(_rhs(sys), (0.0, 1.0), y0, method="DOP853", rtol=rtol,
                    atol=rtol * 1e-2, dense_output=True)
    if not sol.success:
        raise IntegrationError(f"Jacobi integration failed: {sol.message}")
    Psi1 = sol.y[:, -1].reshape(2 * n, 2 * n)
    if not np.all(np.isfinite(Psi1)) or abs(np.linalg.det(Psi1)) < 1e-300:
        raise IntegrationError("fundamental solution became singular")

    gam0 = sys.gamma(0.0)
    I = np.eye(n)
    Z = np.zeros((n, n))
    into_raw = np.block([[I, Z], [-gam0, I]])
    to_cov = np.block([[I, Z], [gam0, I]])
    P = to_cov @ Psi1 @ into_raw

    Omega = symplectic_form(sys.G)
    defect = float(np.abs(P.T @ Omega @ P - Omega).max())
    scale = max(1.0, float(np.abs(P).max()) ** 2)
    if defect > 1e-6 * scale:
        raise IntegrationError(
            f"Poincare map is not symplectic (defect {defect:.3e}); check the coefficients")

    eigs, unit, one = _classify_spectrum(P, settings, max(1.0, float(np.linalg.norm(P, 2))))
    return MonodromyData(sys, P, eigs, unit, one, defect, settings, sol.sol)


def _classify_spectrum(P: np.ndarray, settings: Settings, scale: float):
    eigs = np.linalg.eigvals(P)
    order = np.lexsort((eigs.imag, eigs.real))
    eigs = eigs[order]

    # group eigenvalues that a perturbed Jordan block has split apart
    clusters: list[list[complex]] = []
    for lam in eigs:
        for c in clusters:
            if abs(np.mean(c) - lam) <= settings.tol_cluster:
                c.append(lam)
                break
        else:
            clusters.append([lam])

    unit: list[UnitEigenvalue] = []
    one = None
    dim = P.shape[0]
    for c in clusters:
        lam = complex(np.mean(c))
        if abs(abs(lam) - 1.0) > settings.tol_circle:
            continue
        angle = float(np.angle(lam)) % (2 * np.pi)
        if angle > 2 * np.pi - settings.tol_angle:
            angle = 0.0
        z = np.exp(1j * angle)
        geo = nullity(P - z * np.eye(dim), settings.tau_rank, scale)
        if angle <= settings.tol_angle:
            one = UnitEigenvalue(0.0, len(c), geo) if one is None else UnitEigenvalue(
                0.0, one.algebraic + len(c), one.geometric)
            continue
        for i, u in enumerate(unit):
            if abs(u.angle - angle) <= settings.tol_angle:
                unit[i] = UnitEigenvalue(u.angle, u.algebraic + len(c), u.geometric)
                break
        else:
            unit.append(UnitEigenvalue(angle, len(c), geo))
    unit.sort(key=lambda u: u.angle)
    return eigs, tuple(unit), one


def unit_spectrum(mono: MonodromyData) -> list[UnitEigenvalue]:
    """Unimodular eigenvalues other than 1, sorted by angle in ``(0, 2 pi)``.

    Eigenvalue 1 is reported separately as ``mono.one``.
    """
    return list(mono.unit)


def nullities(mono: MonodromyData) -> tuple[int, int, int]:
    """``(n_0, n_per, dim(J_per cap J_0))``.

    ``n_0`` counts Jacobi fields vanishing at both ends, ``n_per`` the fixed
    vectors of the Poincare map and the last entry the fixed vectors of the form
    ``(0, v')``.
    """
    n = mono.n
    P = mono.poincare
    tau, scale = mono.settings.tau_rank, mono.scale
    n0 = nullity(P[:n, n:], tau, scale)
    nper = nullity(P - np.eye(2 * n), tau, scale)
    both = nullity(np.vstack([P[:n, n:], P[n:, n:] - np.eye(n)]), tau, scale)
    return n0, nper, both


def j1_dim(mono: MonodromyData, z: complex) -> int:
    """Dimension of the Jacobi fields with ``V(0) = V(1) = 0`` and ``V'(1) = z V'(0)``."""
    n = mono.n
    P = mono.poincare
    return nullity(np.vstack([P[:n, n:], P[n:, n:] - z * np.eye(n)]), mono.settings.tau_rank,
                   mono.scale)


def inertia(M: np.ndarray, tau: float, scale: float | None = None) -> tuple[int, int, int]:
    """``(n_-, n_0, n_+)`` of a Hermitian matrix with zero band ``tau * ||M||``.

    ``scale`` replaces ``||M||`` when larger, for matrices that may be pure noise.
    """
    if M.shape[0] == 0:
        return 0, 0, 0
    w = np.linalg.eigvalsh((M + M.conj().T) / 2)
    band = tau * max(np.abs(w).max(), scale or 0.0)
    neg = int(np.sum(w < -band))
    zero = int(np.sum(np.abs(w) <= band))
    return neg, zero, len(w) - neg - zero


@dataclass(frozen=True)
class BoundaryForm:
    z: complex
    basis: np.ndarray
    matrix: np.ndarray
    inertia: tuple[int, int, int]
    hermitian_defect: float

    @property
    def n_minus(self) -> int:
        return self.inertia[0]

    @property
    def kernel_dim(self) -> int:
        return self.inertia[1]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def boundary_form(mono: MonodromyData, z: complex) -> BoundaryForm:
    """The Hermitian form ``b_z(V, W) = G(conj(z) V'(1) - V'(0), W(0))`` on ``J2(z)``.

    ``J2(z)`` is the space of Jacobi fields with ``V(1) = z V(0)``.  The
    matrix is returned as computed; its Hermitian defect is reported rather
    than symmetrized away.
    """
    z = complex(z)
    if abs(abs(z) - 1.0) > 1e-12:
        raise ValueError(f"z must lie on the unit circle, |z| = {abs(z)}")
    n = mono.n
    P = mono.poincare.astype(complex)
    L = P[:n] - z * np.eye(n, 2 * n)
    X = kernel_basis(L, mono.settings.tau_rank, mono.scale)
    PX = P @ X
    # (P X)_2 - z X_2 is the covariant/raw derivative difference; Gamma terms cancel
    right = np.conj(z) * PX[n:] - X[n:]
    B = X[:n].conj().T @ mono.G @ right
    defect = float(np.abs(B - B.conj().T).max()) if B.size else 0.0
    if defect > 1e-8 * mono.scale:
        raise ArithmeticError(f"boundary form at z={z} is not Hermitian (defect {defect:.3e})")
    inert = inertia(B, mono.settings.tau_inertia, mono.scale) if B.size else (0, 0, 0)
    return BoundaryForm(z, X, B, inert, defect)


def concavity_index(mono: MonodromyData) -> int:
    """Index of the boundary form at ``z = 1``."""
    return boundary_form(mono, 1.0).n_minus
