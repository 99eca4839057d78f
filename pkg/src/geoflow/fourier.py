"""Decomposition of periodic fields along an N-fold cover into twisted components.

A field on ``[0, 1]`` is stored as ``V(t) = e^{i phi t} u(t)`` with ``u``
1-periodic and sampled at ``S`` equispaced points, so ``V(1) = e^{i phi} V(0)``.
Split sends a periodic field to ``N`` fields twisted by the powers of
``omega = e^{2 pi i / N}``; merge is its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GeodesicSystem

SAMPLES = 2048


class TwistViolation(ValueError):
    """A component handed to merge does not carry the expected boundary twist."""


@dataclass
class TwistedField:
    """``V(t) = e^{i phi t} u(t)``; ``u`` has shape ``(S, n)`` on the grid ``i / S``."""

    phi: float
    u: np.ndarray

    @property
    def S(self) -> int:
        return self.u.shape[0]

    @property
    def twist(self) -> complex:
        return complex(np.exp(1j * self.phi))

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.S) / self.S

    def values(self) -> np.ndarray:
        return np.exp(1j * self.phi * self.grid)[:, None] * self.u

    def derivative(self) -> np.ndarray:
        freq = np.fft.fftfreq(self.S, 1.0 / self.S) * 2j * np.pi
        du = np.fft.ifft(freq[:, None] * np.fft.fft(self.u, axis=0), axis=0)
        return np.exp(1j * self.phi * self.grid)[:, None] * (1j * self.phi * self.u + du)

    def at(self, t) -> np.ndarray:
        """Evaluate by trigonometric interpolation of ``u`` (band-limited fields)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        c = np.fft.fft(self.u, axis=0) / self.S
        k = np.fft.fftfreq(self.S, 1.0 / self.S)
        u = np.exp(2j * np.pi * np.outer(t, k)) @ c
        return np.exp(1j * self.phi * t)[:, None] * u


def random_field(rng: np.random.Generator, n: int, modes: int = 6, S: int = SAMPLES,
                 phi: float = 0.0) -> TwistedField:
    """Random trigonometric field with frequencies ``-modes..modes``."""
    k = np.arange(-modes, modes + 1)
    coef = (rng.standard_normal((len(k), n)) + 1j * rng.standard_normal((len(k), n)))
    coef /= (1.0 + np.abs(k))[:, None]
    t = np.arange(S) / S
    u = np.exp(2j * np.pi * np.outer(t, k)) @ coef
    return TwistedField(phi, u)


def _fine_values(u: np.ndarray, N: int) -> np.ndarray:
    """Values of the periodic band-limited ``u`` on the grid ``m / (N S)``."""
    S = u.shape[0]
    c = np.fft.fft(u, axis=0)
    padded = np.zeros((N * S,) + u.shape[1:], dtype=complex)
    half = S // 2
    padded[:half] = c[:half]
    padded[-half:] = c[-half:]
    return np.fft.ifft(padded, axis=0) * N


def fourier_split(V, N: int) -> list[TwistedField]:
    """Components ``V_k(t) = (1/N) sum_j omega^{-jk} V((t + j)/N)``, ``k = 0..N-1``.

    ``V`` is a periodic :class:`TwistedField` (twist 1) or an ``(S, n)``
    array of periodic samples.  Component ``k`` has twist ``omega^k``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if isinstance(V, TwistedField):
        if abs(V.twist - 1.0) > 1e-10:
            raise TwistViolation("split expects a periodic field")
        samples = V.values()
    else:
        samples = np.asarray(V, dtype=complex)
    S = samples.shape[0]
    fine = _fine_values(samples, N).reshape((N, S) + samples.shape[1:])
    t = np.arange(S) / S
    out = []
    for k in range(N):
        phase = np.exp(-2j * np.pi * np.arange(N) * k / N)
        Vk = np.tensordot(phase, fine, axes=(0, 0)) / N
        phi = 2 * np.pi * k / N
        out.append(TwistedField(phi, np.exp(-1j * phi * t)[:, None] * Vk))
    return out


def fourier_merge(fields: list[TwistedField], N: int) -> np.ndarray:
    """``V(t) = sum_k V_k(N t)``; returns periodic samples of shape ``(S, n)``."""
    if len(fields) != N:
        raise ValueError(f"expected {N} fields, got {len(fields)}")
    S = fields[0].S
    idx = (np.arange(S) * N) % S
    t = np.arange(S) / S
    out = np.zeros(fields[0].u.shape, dtype=complex)
    for k, f in enumerate(fields):
        if abs(f.twist - np.exp(2j * np.pi * k / N)) > 1e-10:
            raise TwistViolation(f"component {k} has twist {f.twist}, expected omega^{k}")
        out += np.exp(1j * f.phi * N * t)[:, None] * f.u[idx]
    return out


def index_form(sys: GeodesicSystem, V: TwistedField, W: TwistedField, T: float) -> complex:
    """``B_T(V, W)`` by the trapezoid rule on the sample grid.

    Requires equal twists and integer ``T`` so that the integrand is periodic,
    which makes the rule spectrally accurate.
    """
    if abs(V.twist - W.twist) > 1e-10:
        raise TwistViolation("fields carry different twists")
    r = V.grid
    G = sys.G
    A = T * sys.gamma(T * r)
    S = T * T * (G @ sys.curvature(T * r))
    v, w = V.values(), W.values()
    dv = V.derivative() + np.einsum("sij,sj->si", A, v)
    dw = W.derivative() + np.einsum("sij,sj->si", A, w)
    integrand = (np.einsum("si,ij,sj->s", dw.conj(), G, dv)
                 + np.einsum("si,sij,sj->s", w.conj(), S, v))
    return complex(integrand.mean())


def index_form_at_zero(sys: GeodesicSystem, V: TwistedField, W: TwistedField) -> complex:
    """``B_0(V, W) = int G(V', W')``."""
    return index_form(sys, V, W, 0.0)
