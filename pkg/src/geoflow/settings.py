"""Numeric defaults shared by every module.

All tolerances and truncation sizes live here so a run is reproducible from
this table alone.

==============  =======  =====================================================
name            default  meaning
==============  =======  =====================================================
rtol            1e-10    relative tolerance of the Jacobi ODE integrator
K               32       first Galerkin truncation (frequencies -K..K / modes)
K_max           128      largest truncation tried before giving up
P               64       time samples of a Galerkin path
Q               32       Gauss-Legendre nodes per quadrature panel
N_max           16       largest iterate in growth reports
grid_per_arc    5        interior check points per arc of the unit circle
tol_circle      1e-7     | |lambda| - 1 | below which an eigenvalue is unimodular
tol_angle       1e-6     angular resolution for deduplicating unit eigenvalues
tol_cluster     1e-4     eigenvalue clustering radius (split Jordan blocks)
tau_rank        1e-7     rank threshold, relative to the largest singular value
tau_inertia     1e-8     zero band for inertia, relative to the matrix norm
==============  =======  =====================================================
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Settings:
    rtol: float = 1e-10
    K: int = 32
    K_max: int = 128
    P: int = 64
    Q: int = 32
    N_max: int = 16
    grid_per_arc: int = 5
    tol_circle: float = 1e-7
    tol_angle: float = 1e-6
    tol_cluster: float = 1e-4
    tau_rank: float = 1e-7
    tau_inertia: float = 1e-8

    def with_overrides(self, **kwargs) -> "Settings":
        """Return a copy with the non-None keyword values replaced."""
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def check(self) -> None:
        if not 1e-13 <= self.rtol <= 1e-6:
            raise ValueError(f"rtol={self.rtol} outside [1e-13, 1e-6]")
        if self.K < 1 or self.K > self.K_max:
            raise ValueError(f"K={self.K} outside [1, K_max={self.K_max}]")
        if self.P < 8:
            raise ValueError("P must be at least 8")
        if self.Q < 16:
            raise ValueError("Q must be at least 16")
        if self.N_max < 1:
            raise ValueError("N_max must be positive")
        if self.grid_per_arc < 3:
            raise ValueError("grid_per_arc must be at least 3")


DEFAULTS = Settings()
