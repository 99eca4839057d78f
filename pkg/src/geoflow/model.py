"""Coordinate data of a closed geodesic: signature, Christoffel and curvature paths.

A geodesic system is the triple ``(G, Gamma_t, Rbar_t)`` obtained by reading a
closed geodesic in a periodic orthonormal frame.  ``G`` is a diagonal signature
matrix, ``Gamma_t`` is a 1-periodic path of G-antisymmetric matrices and
``Rbar_t`` a 1-periodic path of G-symmetric matrices.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

CLOSED_FORM_TOL = 1e-10
SAMPLED_TOL = 1e-8
LOAD_TOL = 1e-10

PRESET_NAMES = ("flat-R", "flat-L", "hyp-L(c)", "ell-R(a)", "dirichlet-R")
CANONICAL_PRESETS = ("flat-R", "flat-L", "hyp-L(4)", "ell-R(0.3)", "dirichlet-R")


class InvalidSystem(ValueError):
    """Raised when input data does not describe a valid geodesic system."""


@dataclass(frozen=True)
class SignatureMetric:
    epsilon: tuple[int, ...]

    def __post_init__(self):
        eps = tuple(int(e) for e in self.epsilon)
        if not eps:
            raise InvalidSystem("signature must have at least one entry")
        if any(e not in (-1, 1) for e in eps):
            raise InvalidSystem(f"signature entries must be +1 or -1, got {self.epsilon}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def n(self) -> int:
        return len(self.epsilon)

    @property
    def G(self) -> np.ndarray:
        return np.diag(np.asarray(self.epsilon, dtype=float))

    @property
    def n_minus_g(self) -> int:
        return sum(1 for e in self.epsilon if e == -1)


class CoefficientPath:
    """A smooth 1-periodic path of ``n x n`` real matrices.

    Two kinds exist.  ``closed-form`` paths wrap a value function and its exact
    derivative.  ``sampled`` paths hold ``m`` samples at ``t = j/m`` and are
    evaluated through their band-limited trigonometric interpolant.
    """

    def __init__(self, kind: str, n: int, *, grid=None, fn=None, dfn=None,
                 bandwidth: int = 0):
        if kind not in ("closed-form", "sampled"):
            raise ValueError(f"unknown path kind {kind!r}")
        self.kind = kind
        self.n = n
        self._fn = fn
        self._dfn = dfn
        self._grid = None
        if kind == "sampled":
            grid = np.array(grid, dtype=float)
            if grid.ndim != 3 or grid.shape[1:] != (n, n):
                raise InvalidSystem(f"grid must have shape (m, {n}, {n}), got {grid.shape}")
            if grid.shape[0] < 1:
                raise InvalidSystem("grid needs at least one sample")
            grid.setflags(write=False)
            self._grid = grid
            self._freqs, self._coeffs = _trig_coefficients(grid)
            mags = np.abs(self._coeffs).reshape(len(self._freqs), -1).max(axis=1)
            scale = mags.max() if mags.size else 0.0
            live = np.abs(self._freqs)[mags > 1e-14 * max(scale, 1e-300)]
            self.bandwidth = int(live.max()) if live.size else 0
        else:
            self.bandwidth = int(bandwidth)

    # constructors -----------------------------------------------------------

    @classmethod
    def constant(cls, matrix) -> "CoefficientPath":
        M = np.array(matrix, dtype=float)
        M.setflags(write=False)
        n = M.shape[0]
        zero = np.zeros((n, n))

        def fn(t):
            t = np.asarray(t, dtype=float)
            return np.broadcast_to(M, t.shape + (n, n)).copy()

        def dfn(t):
            t = np.asarray(t, dtype=float)
            return np.broadcast_to(zero, t.shape + (n, n)).copy()

        path = cls("closed-form", n, fn=fn, dfn=dfn, bandwidth=0)
        path.constant_value = M
        return path

    @classmethod
    def closed_form(cls, fn: Callable, dfn: Callable, n: int,
                    bandwidth: int) -> "CoefficientPath":
        """Wrap vectorized callables ``fn(t)`` and ``dfn(t)`` returning ``t.shape + (n, n)``.

        ``bandwidth`` is the highest integer frequency present; it sizes the
        quadrature used in Galerkin assembly.
        """
        return cls("closed-form", n, fn=fn, dfn=dfn, bandwidth=bandwidth)

    @classmethod
    def sampled(cls, grid) -> "CoefficientPath":
        grid = np.asarray(grid, dtype=float)
        return cls("sampled", grid.shape[1], grid=grid)

    # evaluation -------------------------------------------------------------

    @property
    def grid(self) -> np.ndarray | None:
        return self._grid

    def __call__(self, t):
        if self.kind == "closed-form":
            return np.asarray(self._fn(t), dtype=float)
        return self._eval(t, derivative=False)

    def derivative(self, t):
        if self.kind == "closed-form":
            return np.asarray(self._dfn(t), dtype=float)
        return self._eval(t, derivative=True)

    def _eval(self, t, derivative: bool):
        t = np.asarray(t, dtype=float)
        ts = np.atleast_1d(t).ravel()
        phase = np.exp(2j * np.pi * np.outer(ts, self._freqs))
        coeffs = self._coeffs
        if derivative:
            coeffs = coeffs * (2j * np.pi * self._freqs)[:, None, None]
        out = np.einsum("tq,qij->tij", phase, coeffs).real
        return out.reshape(t.shape + (self.n, self.n))

    def sample(self, m: int) -> np.ndarray:
        """Values at ``t = j/m`` for ``j = 0..m-1``."""
        return self(np.arange(m) / m)


def _trig_coefficients(grid: np.ndarray):
    """Frequencies and coefficients of the band-limited interpolant of uniform samples.

    For even ``m`` the Nyquist coefficient is split evenly between ``+m/2`` and
    ``-m/2`` so the interpolant of real data stays real.
    """
    m = grid.shape[0]
    c = np.fft.fft(grid, axis=0) / m
    q = np.fft.fftfreq(m, d=1.0 / m).round().astype(int)
    if m % 2 == 0:
        nyq = m // 2
        idx = int(np.where(q == -nyq)[0][0])
        half = c[idx] / 2
        c = np.concatenate([c, half[None]], axis=0)
        c[idx] = half
        q = np.concatenate([q, [nyq]])
    return q.astype(float), c


@dataclass(frozen=True, eq=False)
class GeodesicSystem:
    """Validated input data for every downstream computation.

    Instances hash by identity, which lets analysis results be cached per system.
    """

    metric: SignatureMetric
    gamma_path: CoefficientPath
    curvature_path: CoefficientPath
    label: str = ""
    preset_name: str | None = field(default=None)

    def __post_init__(self):
        n = self.metric.n
        if self.gamma_path.n != n or self.curvature_path.n != n:
            raise InvalidSystem(
                f"dimension mismatch: signature n={n}, gamma n={self.gamma_path.n}, "
                f"curvature n={self.curvature_path.n}")

    @property
    def n(self) -> int:
        return self.metric.n

    @property
    def G(self) -> np.ndarray:
        return self.metric.G

    @property
    def n_minus_g(self) -> int:
        return self.metric.n_minus_g

    @property
    def sampled(self) -> bool:
        return "sampled" in (self.gamma_path.kind, self.curvature_path.kind)

    @property
    def bandwidth(self) -> int:
        return max(self.gamma_path.bandwidth, self.curvature_path.bandwidth)

    def gamma(self, t):
        return self.gamma_path(t)

    def gamma_prime(self, t):
        return self.gamma_path.derivative(t)

    def curvature(self, t):
        return self.curvature_path(t)


# ---------------------------------------------------------------------------
# presets

_PRESET_RE = re.compile(r"^\s*([A-Za-z-]+?)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def preset(name: str) -> GeodesicSystem:
    """Build one of the closed-form systems.

    ``flat-R``, ``flat-L``, ``dirichlet-R``, ``hyp-L(c)`` with ``c > 0`` and
    ``ell-R(a)`` with ``0 < a < 1/2``.
    """
    match = _PRESET_RE.match(name)
    if not match:
        raise InvalidSystem(f"unknown preset {name!r}")
    base, arg = match.group(1), match.group(2)
    if arg is not None:
        try:
            value = float(arg)
        except ValueError:
            raise InvalidSystem(f"bad preset parameter in {name!r}") from None
    else:
        value = None

    def system(eps, curvature, label):
        n = len(eps)
        return GeodesicSystem(
            SignatureMetric(tuple(eps)),
            CoefficientPath.constant(np.zeros((n, n))),
            CoefficientPath.constant(np.atleast_2d(curvature)),
            label=label,
            preset_name=label,
        )

    if base == "flat-R" and value is None:
        return system([1], [[0.0]], "flat-R")
    if base == "flat-L" and value is None:
        return system([1, -1], np.zeros((2, 2)), "flat-L")
    if base == "dirichlet-R" and value is None:
        return system([1], [[-(2 * np.pi) ** 2]], "dirichlet-R")
    if base == "hyp-L":
        if value is None:
            raise InvalidSystem("hyp-L needs a parameter, e.g. hyp-L(4)")
        if not value > 0:
            raise InvalidSystem(f"hyp-L(c) needs c > 0, got {value}")
        return system([-1], [[value]], f"hyp-L({arg})")
    if base == "ell-R":
        if value is None:
            raise InvalidSystem("ell-R needs a parameter, e.g. ell-R(0.3)")
        if not 0 < value < 0.5:
            raise InvalidSystem(f"ell-R(a) needs 0 < a < 1/2, got {value}")
        return system([1], [[-(2 * np.pi * value) ** 2]], f"ell-R({arg})")
    raise InvalidSystem(f"unknown preset {name!r}")


# ---------------------------------------------------------------------------
# validation


@dataclass
class Check:
    name: str
    violation: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.violation <= self.tol)


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "max_violation": c.violation, "tol": c.tol,
                 "passed": c.passed}
                for c in self.checks
            ],
        }


def _check_times(path: CoefficientPath) -> np.ndarray:
    if path.kind == "sampled":
        m = path.grid.shape[0]
        return np.arange(m) / m
    return np.linspace(0.0, 1.0, 101)


def validate_system(sys: GeodesicSystem, tol: float | None = None) -> ValidationReport:
    """Measure every structural invariant of ``sys``.

    Symmetry checks run on the sample grid of sampled paths and on a 101-point
    grid for closed-form ones.  The default tolerance is 1e-10 for closed-form
    systems and 1e-8 when any path is sampled.
    """
    if tol is None:
        tol = SAMPLED_TOL if sys.sampled else CLOSED_FORM_TOL
    G = sys.G
    checks = []

    gam = sys.gamma(_check_times(sys.gamma_path))
    anti = G @ gam + np.swapaxes(gam, -1, -2) @ G
    checks.append(Check("gamma not G-antisymmetric", float(np.abs(anti).max()), tol))

    rb = sys.curvature(_check_times(sys.curvature_path))
    sym = G @ rb - np.swapaxes(rb, -1, -2) @ G
    checks.append(Check("curvature not G-symmetric", float(np.abs(sym).max()), tol))

    for label, path in (("gamma", sys.gamma_path), ("curvature", sys.curvature_path)):
        ends = path(np.array([0.0, 1.0]))
        checks.append(Check(f"{label} not 1-periodic",
                            float(np.abs(ends[1] - ends[0]).max()), tol))

    checks.append(Check("G squared is not identity",
                        float(np.abs(G @ G - np.eye(sys.n)).max()), tol))
    return ValidationReport(checks)


# ---------------------------------------------------------------------------
# documents


def load_system(source, tol: float = LOAD_TOL) -> GeodesicSystem:
    """Build a validated system from a config document.

    ``source`` is a JSON string or an already parsed mapping.  Accepted forms are
    ``{"preset": name}`` and ``{"n", "epsilon", "gamma": {"grid"},
    "curvature": {"grid"}, "label"}``.
    """
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise InvalidSystem(f"document is not valid JSON: {exc}") from None
    else:
        doc = source
    if not isinstance(doc, dict):
        raise InvalidSystem("document must be a JSON object")

    if "preset" in doc:
        extra = set(doc) - {"preset", "label"}
        if extra:
            raise InvalidSystem(f"unexpected keys next to preset: {sorted(extra)}")
        if not isinstance(doc["preset"], str):
            raise InvalidSystem("preset must be a string")
        return preset(doc["preset"])

    required = ("n", "epsilon", "gamma", "curvature")
    missing = [k for k in required if k not in doc]
    if missing:
        raise InvalidSystem(f"missing keys: {missing}")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InvalidSystem("n must be a positive integer")
    eps = doc["epsilon"]
    if not isinstance(eps, list) or len(eps) != n:
        raise InvalidSystem(f"epsilon must be a list of length n={n}")
    metric = SignatureMetric(tuple(eps))

    paths = []
    for key in ("gamma", "curvature"):
        entry = doc[key]
        if not isinstance(entry, dict) or "grid" not in entry:
            raise InvalidSystem(f"{key} must be an object with a 'grid' list")
        try:
            grid = np.array(entry["grid"], dtype=float)
        except (TypeError, ValueError):
            raise InvalidSystem(f"{key} grid is not a numeric array") from None
        if grid.ndim != 3 or grid.shape[1:] != (n, n) or grid.shape[0] < 1:
            raise InvalidSystem(f"{key} grid must have shape (m, {n}, {n}), got {grid.shape}")
        paths.append(CoefficientPath.sampled(grid))

    sys = GeodesicSystem(metric, paths[0], paths[1], label=str(doc.get("label", "")))
    report = validate_system(sys, tol=tol)
    if not report.passed:
        raise InvalidSystem("; ".join(report.failures))
    return sys


def to_document(sys: GeodesicSystem, m: int | None = None) -> dict:
    """Serialize ``sys``.

    Presets serialize by name unless ``m`` is given, in which case every path is
    sampled on ``m`` points (the form accepted for arbitrary systems).
    """
    if sys.preset_name is not None and m is None:
        return {"preset": sys.preset_name}
    grids = []
    for path in (sys.gamma_path, sys.curvature_path):
        if m is None and path.kind == "sampled":
            grids.append(path.grid)
        else:
            grids.append(path.sample(m or 64))
    return {
        "n": sys.n,
        "epsilon": list(sys.metric.epsilon),
        "gamma": {"grid": grids[0].tolist()},
        "curvature": {"grid": grids[1].tolist()},
        "label": sys.label,
    }


# ---------------------------------------------------------------------------
# random systems


def random_system(rng: np.random.Generator, n: int, *, epsilon: Sequence[int] | None = None,
                  m: int = 16, harmonics: int = 2, gamma_scale: float = 0.5,
                  curvature_scale: float = 6.0, label: str = "") -> GeodesicSystem:
    """Draw a sampled system with smooth band-limited coefficients.

    ``Gamma_t = G A(t)`` with ``A`` antisymmetric and ``Rbar_t = G S(t)`` with
    ``S`` symmetric, each a trigonometric polynomial of degree ``harmonics``.
    """
    if epsilon is None:
        epsilon = rng.choice([-1, 1], size=n)
        epsilon[0] = 1
    metric = SignatureMetric(tuple(int(e) for e in epsilon))
    G = metric.G
    t = np.arange(m) / m

    def trig_matrix(scale, symmetric):
        out = np.zeros((m, n, n))
        for h in range(harmonics + 1):
            for basis in ((np.cos, np.sin) if h else (np.cos,)):
                X = rng.normal(size=(n, n)) * scale / (1 + h) ** 2
                X = X + X.T if symmetric else X - X.T
                out += basis(2 * np.pi * h * t)[:, None, None] * X / 2
        return out

    gamma = G @ trig_matrix(gamma_scale, symmetric=False)
    curv = G @ trig_matrix(curvature_scale, symmetric=True)
    return GeodesicSystem(metric, CoefficientPath.sampled(gamma),
                          CoefficientPath.sampled(curv), label=label)
