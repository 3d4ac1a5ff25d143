"""Numeric knobs shared by the whole package."""
from __future__ import annotations

from dataclasses import dataclass, replace as _replace


@dataclass(frozen=True)
class NumericOptions:
    # quadrature
    quad_order: int = 8
    quad_step: float = 0.5          # max h*|generator| per Gauss-Legendre piece
    # geometry / hypotheses
    position_tol: float = 1e-12     # relative to the period
    psd_rtol: float = 1e-12
    real_root_tol: float = 1e-9
    singular_rtol: float = 1e-13
    # propagation
    series_tol: float = 1e-8
    overflow_norm: float = 1e150
    # Floquet structure
    jordan_tol: float = 1e-8
    # bands
    grid_n: int = 2001
    band_tol: float = 1e-10
    constant_rtol: float = 1e-10
    edge_tol: float = 1e-8
    # non-definiteness
    l0_tol: float = 1e-12
    l0_probe: float = 0.0
    l0_retries: int = 5

    def replace(self, **changes) -> "NumericOptions":
        """Copy with ``changes`` applied; ``None`` values are ignored."""
        changes = {k: v for k, v in changes.items() if v is not None}
        return _replace(self, **changes)


DEFAULT_OPTIONS = NumericOptions()
