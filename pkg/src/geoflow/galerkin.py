"""Galerkin discretization of the index-form path and finite-dimensional spectral flow.

The path ``t -> B_t`` is

    B_t(V, W) = int_0^1 G(V' + t Gamma_{tr} V, W' + t Gamma_{tr} W) + t^2 G(Rbar_{tr} V, W) dr,

restricted to twisted fields ``V(1) = z V(0)`` or to fields vanishing at both
ends.  Every trial function is a short sum of complex exponentials, so each
matrix entry is a combination of Fourier coefficients of the coefficient
paths; those coefficients are computed by composite Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.optimize import linear_sum_assignment

from .model import GeodesicSystem
from .settings import DEFAULTS, Settings


class QuadratureError(RuntimeError):
    """Matrix entries changed by more than 1e-9 when the quadrature order doubled."""


class GridTooCoarse(RuntimeError):
    """Eigenvalue branches could not be matched across adjacent time samples."""


class NotStabilized(RuntimeError):
    """Spectral flow did not settle before the largest truncation."""

    def __init__(self, message, values):
        super().__init__(message)
        self.values = values


@dataclass(frozen=True)
class TrialBasis:
    """Truncated basis of twisted or Dirichlet fields in ``C^n``.

    twisted(z = e^{i theta}): ``e^{i(theta + 2 pi k) t} e_j`` for ``k = -K..K``;
    dirichlet: ``sin(m pi t) e_j`` for ``m = 1..K``.  Index ``mode * n + j``.
    """

    space: str
    K: int
    n: int
    theta: float = 0.0

    @classmethod
    def twisted(cls, n: int, z: complex, K: int) -> "TrialBasis":
        theta = float(np.angle(complex(z)))
        if theta <= -np.pi:
            theta += 2 * np.pi
        return cls("twisted", K, n, theta)

    @classmethod
    def dirichlet(cls, n: int, K: int) -> "TrialBasis":
        return cls("dirichlet", K, n)

    @property
    def z(self) -> complex:
        return complex(np.exp(1j * self.theta)) if self.space == "twisted" else 0j

    @property
    def modes(self) -> int:
        return 2 * self.K + 1 if self.space == "twisted" else self.K

    @property
    def count(self) -> int:
        return self.n * self.modes

    def exponentials(self):
        """Amplitudes and angular frequencies, each of shape ``(modes, terms)``."""
        if self.space == "twisted":
            k = np.arange(-self.K, self.K + 1)
            omega = (self.theta + 2 * np.pi * k)[:, None].astype(float)
            amp = np.ones_like(omega, dtype=complex)
        else:
            m = np.arange(1, self.K + 1) * np.pi
            omega = np.stack([m, -m], axis=1)
            amp = np.tile(np.array([1 / 2j, -1 / 2j]), (self.K, 1))
        return amp, omega

    def values(self, r):
        """Scalar mode values and derivatives at points ``r``: two ``(len(r), modes)`` arrays."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        amp, omega = self.exponentials()
        ph = np.exp(1j * r[:, None, None] * omega[None])
        v = (ph * amp[None]).sum(axis=2)
        dv = (ph * (1j * omega * amp)[None]).sum(axis=2)
        return v, dv

    def describe(self) -> dict:
        out = {"space": self.space, "K": self.K, "n": self.n, "count": self.count}
        if self.space == "twisted":
            out["theta"] = self.theta
        return out


def gauss_panels(panels: int, Q: int):
    """Composite Gauss-Legendre nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(Q)
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + (x[None] + 1) / 2 * h[:, None]).ravel()
    weights = (w[None] / 2 * h[:, None]).ravel()
    return nodes, weights


def _coefficient_samples(sys: GeodesicSystem, t: float, r: np.ndarray):
    """``G A``, ``A^T G`` and ``A^T G A + S`` at nodes, with ``A = t Gamma(t r)``, ``S = t^2 G Rbar(t r)``."""
    G = sys.G
    A = t * sys.gamma(t * r)
    S = t * t * (G @ sys.curvature(t * r))
    GA = G @ A
    AtG = np.swapaxes(A, -1, -2) @ G
    return GA, AtG, AtG @ A + S


def _fourier_table(r: np.ndarray, w: np.ndarray, mmax: int) -> np.ndarray:
    """Rows ``w e^{-i pi m r}`` for ``m = 0..mmax``."""
    base = np.exp(-1j * np.pi * r)
    E = np.empty((mmax + 1, len(r)), dtype=complex)
    E[0] = w
    for m in range(1, mmax + 1):
        E[m] = E[m - 1] * base
    return E


def _fourier(E: np.ndarray, C: np.ndarray) -> np.ndarray:
    """``c[m] = int_0^1 C(r) e^{-i pi m r} dr`` for ``m = -mmax..mmax`` and real ``C``."""
    pos = (E @ C.reshape(C.shape[0], -1)).reshape((E.shape[0],) + C.shape[1:])
    return np.concatenate([np.conj(pos[:0:-1]), pos])


class _Assembler:
    def __init__(self, sys: GeodesicSystem, basis: TrialBasis, Q: int):
        self.sys = sys
        self.basis = basis
        self.Q = Q
        amp, omega = basis.exponentials()
        self.amp = amp
        self.damp = 1j * omega * amp
        diff = (omega[:, :, None, None] - omega[None, None]) / np.pi
        self.D = np.rint(diff).astype(int)
        self.mmax = int(np.abs(self.D).max())
        self._tables: dict = {}

    def _panels(self, t: float) -> int:
        cycles = self.mmax / 2 + 2 * abs(t) * self.sys.bandwidth + 1
        return int(math.ceil(cycles / 4)) + 1

    def _term(self, f, g, chat):
        # sum_{s,s'} conj(f[b,s]) g[a,s'] chat[D[b,s,a,s']] -> (b, a, n, n)
        coef = np.conj(f)[:, :, None, None] * g[None, None]
        gathered = chat[self.D + self.mmax]
        return np.einsum("bsau,bsaulj->balj", coef, gathered)

    def _table(self, panels: int, Q: int):
        key = (panels, Q)
        if key not in self._tables:
            r, w = gauss_panels(panels, Q)
            self._tables[key] = (r, _fourier_table(r, w, self.mmax))
        return self._tables[key]

    def coefficients(self, t: float, Q: int):
        r, E = self._table(self._panels(t), Q)
        n = self.sys.n
        G = np.broadcast_to(self.sys.G, (len(r), n, n))
        GA, AtG, C3 = _coefficient_samples(self.sys, t, r)
        stacked = _fourier(E, np.stack([G, GA, AtG, C3], axis=1))
        return [stacked[:, i] for i in range(4)]

    def matrix(self, t: float, check: bool = True) -> np.ndarray:
        chats = self.coefficients(t, self.Q)
        if check:
            fine = self.coefficients(t, 2 * self.Q)
            scale = max(1.0, max(float(np.abs(c).max()) for c in fine))
            change = max(float(np.abs(a - b).max()) for a, b in zip(chats, fine))
            if change > 1e-9 * scale:
                raise QuadratureError(
                    f"quadrature not converged at t={t}: entries moved by {change:.2e}")
        f_d, f_v = self.damp, self.amp
        blocks = (self._term(f_d, f_d, chats[0]) + self._term(f_d, f_v, chats[1])
                  + self._term(f_v, f_d, chats[2]) + self._term(f_v, f_v, chats[3]))
        m, n = self.basis.modes, self.sys.n
        return blocks.transpose(0, 2, 1, 3).reshape(m * n, m * n)

    def gram(self) -> np.ndarray:
        """Matrix of ``<V, W> = V(0).conj(W(0)) + int V'.conj(W') dr``."""
        r, E = self._table(int(math.ceil(self.mmax / 8)) + 1, self.Q)
        chat = _fourier(E, np.ones((len(r), 1, 1)))
        inner = self._term(self.damp, self.damp, chat)[:, :, 0, 0]
        v0, _ = self.basis.values([0.0])
        inner = inner + np.outer(np.conj(v0[0]), v0[0])
        return np.kron(inner, np.eye(self.sys.n))


@dataclass
class GalerkinPath:
    basis: TrialBasis
    times: np.ndarray
    matrices: np.ndarray
    gram: np.ndarray
    Q: int
    hermitian_defect: float
    sys: GeodesicSystem = field(repr=False, default=None)

    @property
    def T_end(self) -> float:
        return float(self.times[-1])

    def normalized(self, M: np.ndarray) -> np.ndarray:
        """``L^{-1} M L^{-H}`` for the Cholesky factor ``L`` of the Gram matrix."""
        L = self._chol()
        X = solve_triangular(L, M, lower=True)
        X = solve_triangular(L, X.conj().T, lower=True).conj().T
        return (X + X.conj().T) / 2

    def _chol(self):
        if not hasattr(self, "_L"):
            self._L = cholesky(self.gram, lower=True)
        return self._L

    def kernel_dims(self, tau: float = DEFAULTS.tau_inertia) -> tuple[int, int]:
        return (strict_negative_index(self.normalized(self.matrices[0]), tau)[1],
                strict_negative_index(self.normalized(self.matrices[-1]), tau)[1])


def assemble_path(sys: GeodesicSystem, basis: TrialBasis, T_end: float,
                  P: int = DEFAULTS.P, Q: int = DEFAULTS.Q, times=None,
                  check: bool = True) -> GalerkinPath:
    """Matrices of ``B_t`` on ``basis`` at ``t_p = p T_end / P``.

    ``T_end = N`` evaluates the path belonging to the ``N``-th iterate.  With
    ``check`` set, each sample is recomputed at quadrature order ``2 Q`` and a
    :class:`QuadratureError` is raised if any entry moves by more than 1e-9
    (relative to the largest coefficient, at least 1).
    """
    if not T_end > 0:
        raise ValueError("T_end must be positive")
    if P < 1 or Q < 16:
        raise ValueError("need P >= 1 and Q >= 16")
    if basis.n != sys.n:
        raise ValueError("basis dimension does not match the system")
    times = np.linspace(0.0, T_end, P + 1) if times is None else np.asarray(times, float)
    asm = _Assembler(sys, basis, Q)
    mats = np.stack([asm.matrix(float(t), check=check) for t in times])
    defect = float(np.abs(mats - np.conj(np.swapaxes(mats, 1, 2))).max())
    scale = max(1.0, float(np.abs(mats).max()))
    if defect > 1e-10 * scale:
        raise ArithmeticError(f"assembled matrices are not Hermitian (defect {defect:.2e})")
    return GalerkinPath(basis, times, mats, asm.gram(), Q, defect, sys)


def strict_negative_index(matrix: np.ndarray, tau: float = DEFAULTS.tau_inertia):
    """``(n_minus, n_zero)``: eigenvalues below ``-tau ||M||`` and within ``tau ||M||``."""
    if matrix.shape[0] == 0:
        return 0, 0
    w = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)
    band = tau * float(np.abs(w).max())
    return int(np.sum(w < -band)), int(np.sum(np.abs(w) <= band))


@dataclass
class Crossing:
    t_lo: float
    t_hi: float
    branch: int
    direction: int
    value_lo: float
    value_hi: float


@dataclass
class SpectralFlowResult:
    value: int
    n_minus_start: int
    n_minus_end: int
    kernel_start: int
    kernel_end: int
    crossings: list[Crossing]
    basis: TrialBasis
    times: np.ndarray | None = None
    branches: np.ndarray | None = None

    def branch_rows(self, window: float | None = None):
        """``(t, branch_id, eigenvalue)`` rows, optionally only branches that enter ``[-window, window]``."""
        if self.branches is None:
            return []
        keep = range(self.branches.shape[1])
        if window is not None:
            keep = [b for b in keep if np.abs(self.branches[:, b]).min() <= window]
        return [(float(t), int(b), float(self.branches[p, b]))
                for b in keep for p, t in enumerate(self.times)]

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "n_minus_start": self.n_minus_start,
            "n_minus_end": self.n_minus_end,
            "kernel_start": self.kernel_start,
            "kernel_end": self.kernel_end,
            "basis": self.basis.describe(),
            "crossings": [c.__dict__ for c in self.crossings],
        }


def _eigh_normalized(path: GalerkinPath, M: np.ndarray):
    return np.linalg.eigh(path.normalized(M))


def spectral_flow(path: GalerkinPath, tau: float = DEFAULTS.tau_inertia,
                  max_bisect: int = 6) -> SpectralFlowResult:
    """Strict ``n_-`` at the first sample minus strict ``n_-`` at the last.

    Zero eigenvalues at either endpoint count as nonnegative.  Eigenvalue
    branches are matched between samples by maximal eigenvector overlap to
    produce a crossing log; intervals where matching is ambiguous for a branch
    that changes sign are bisected up to ``max_bisect`` times before a
    :class:`GridTooCoarse` is raised.
    """
    start = strict_negative_index(path.normalized(path.matrices[0]), tau)
    end = strict_negative_index(path.normalized(path.matrices[-1]), tau)
    value = start[0] - end[0]
    crossings: list[Crossing] = []
    branches = None
    times = path.times
    if len(times) > 2:
        asm = _Assembler(path.sys, path.basis, path.Q) if path.sys is not None else None
        eig = [_eigh_normalized(path, M) for M in path.matrices]
        d = path.matrices.shape[1]
        # label[i] is the branch id carried by sorted eigenvalue i at the current sample
        label = np.arange(d)
        branches = np.empty((len(times), d))
        branches[0] = eig[0][0]
        for p in range(len(times) - 1):
            steps = _match_interval(path, asm, times[p], times[p + 1], eig[p], eig[p + 1],
                                    tau, max_bisect)
            for t0, t1, match, w0, w1 in steps:
                neg0 = w0 < -tau * np.abs(w0).max()
                neg1 = w1 < -tau * np.abs(w1).max()
                for i in np.flatnonzero(neg0 != neg1[match]):
                    j = match[i]
                    crossings.append(Crossing(float(t0), float(t1), int(label[i]),
                                              1 if neg0[i] else -1, float(w0[i]), float(w1[j])))
                nxt = np.empty(d, dtype=int)
                nxt[match] = label
                label = nxt
            branches[p + 1, label] = eig[p + 1][0]
        total = sum(c.direction for c in crossings)
        if total != value:
            raise GridTooCoarse(f"crossing log sums to {total}, endpoint difference is {value}")
    return SpectralFlowResult(value, start[0], end[0], start[1], end[1], crossings,
                              path.basis, times, branches)


def _match(e0, e1):
    w0, U0 = e0
    w1, U1 = e1
    O = np.abs(U0.conj().T @ U1) ** 2
    scale = max(float(np.abs(w0).max()), float(np.abs(w1).max()), 1e-300)
    cost = -O + 1e-3 * np.abs(w0[:, None] - w1[None]) / scale
    rows, cols = linear_sum_assignment(cost)
    match = np.empty(len(w0), dtype=int)
    match[rows] = cols
    return match, O[rows, cols][np.argsort(rows)]


def _match_interval(path, asm, t0, t1, e0, e1, tau, depth):
    match, overlap = _match(e0, e1)
    w0, w1 = e0[0], e1[0]
    neg0 = w0 < -tau * np.abs(w0).max()
    neg1 = w1[match] < -tau * np.abs(w1).max()
    suspicious = (neg0 != neg1) & (overlap < 0.5)
    if not suspicious.any():
        return [(t0, t1, match, w0, w1)]
    if depth == 0 or asm is None:
        raise GridTooCoarse(
            f"ambiguous branch matching for a crossing between t={t0} and t={t1}")
    tm = (t0 + t1) / 2
    em = _eigh_normalized(path, asm.matrix(tm, check=False))
    return (_match_interval(path, asm, t0, tm, e0, em, tau, depth - 1)
            + _match_interval(path, asm, tm, t1, em, e1, tau, depth - 1))


@dataclass
class StabilizedFlow:
    value: int
    K: int
    history: list[tuple[int, int]]
    result: SpectralFlowResult

    def to_dict(self) -> dict:
        out = self.result.to_dict()
        out.update(value=self.value, K=self.K, history=[list(h) for h in self.history])
        return out


def make_basis(n: int, space: str, K: int, z: complex = 1.0) -> TrialBasis:
    if space == "twisted":
        return TrialBasis.twisted(n, z, K)
    if space == "dirichlet":
        return TrialBasis.dirichlet(n, K)
    raise ValueError(f"unknown space {space!r}")


def endpoint_flow(sys: GeodesicSystem, basis: TrialBasis, T_end: float,
                  settings: Settings = DEFAULTS) -> SpectralFlowResult:
    """Spectral flow from the two endpoint matrices only (no crossing log)."""
    path = assemble_path(sys, basis, T_end, P=1, Q=settings.Q, times=[0.0, T_end])
    return spectral_flow(path, settings.tau_inertia)


def stabilized_spectral_flow(sys: GeodesicSystem, space: str = "twisted", T_end: float = 1.0,
                             z: complex = 1.0, settings: Settings = DEFAULTS,
                             diagnostics: bool = True) -> StabilizedFlow:
    """Spectral flow at truncations ``K, 2K, 4K, ...`` until two consecutive values agree.

    The accepted truncation is the smaller of the agreeing pair.  With
    ``diagnostics`` the full ``P``-sample path is then assembled at that
    truncation to produce the crossing log and eigenvalue branches.
    Raises :class:`NotStabilized` with the last three values if ``K_max`` is
    passed first.
    """
    history: list[tuple[int, int]] = []
    K = settings.K
    while K <= settings.K_max:
        res = endpoint_flow(sys, make_basis(sys.n, space, K, z), T_end, settings)
        history.append((K, res.value))
        if len(history) >= 2 and history[-1][1] == history[-2][1]:
            K_used, value = history[-2]
            if diagnostics:
                basis = make_basis(sys.n, space, K_used, z)
                res = spectral_flow(assemble_path(sys, basis, T_end, settings.P, settings.Q),
                                    settings.tau_inertia)
                if res.value != value:
                    raise GridTooCoarse(
                        f"sampled path gives {res.value}, endpoint computation gives {value}")
            else:
                res = endpoint_flow(sys, make_basis(sys.n, space, K_used, z), T_end, settings)
            return StabilizedFlow(value, K_used, history, res)
        K *= 2
    raise NotStabilized(
        f"spectral flow did not stabilize up to K={settings.K_max}: "
        f"{[v for _, v in history[-3:]]}", [v for _, v in history[-3:]])
