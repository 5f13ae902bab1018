"""Decomposed relaxed-ML objective and its optimality diagnostics.

The received vector is split into per-symbol contributions ``y = sum_i y_i``
(column ``i`` of ``Y``), giving the separable problem

    min  sum_i ||y_i - h_i x_i||^2   s.t.  sum_i y_i = y,  -l <= x_i <= l.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Constellation, RealSystemModel

__all__ = [
    "DetectorState",
    "KktResidual",
    "init_state",
    "objective_value",
    "primal_residual",
    "kkt_residual",
]


@dataclass
class DetectorState:
    """Iterate of the decomposed detector.

    Attributes
    ----------
    x : ndarray, shape (2Nt,)
        Soft symbol estimates.
    Y : ndarray, shape (2Nr, 2Nt)
        Column ``i`` is the contribution ``y_i`` of symbol ``i``.
    lam : ndarray, shape (2Nr,)
        Multipliers of the coupling constraint ``sum_i y_i = y``.
    t : int
        Completed iterations.
    trace : list of float
        Objective value after each iteration.
    """

    x: np.ndarray
    Y: np.ndarray
    lam: np.ndarray
    t: int = 0
    trace: list[float] = field(default_factory=list)

    def copy(self) -> DetectorState:
        return DetectorState(
            self.x.copy(), self.Y.copy(), self.lam.copy(), self.t, list(self.trace)
        )


@dataclass(frozen=True)
class KktResidual:
    """Violations of the optimality conditions in the interior regime (mu = 0)."""

    r_stationarity_y: float
    r_dual_consistency: float
    r_stationarity_x: float
    r_box: float
    mu1: np.ndarray
    mu2: np.ndarray

    def max(self) -> float:
        return max(
            self.r_stationarity_y,
            self.r_dual_consistency,
            self.r_stationarity_x,
            self.r_box,
        )


def init_state(m: RealSystemModel) -> DetectorState:
    """All-zero starting point."""
    return DetectorState(
        x=np.zeros(m.n_blocks),
        Y=np.zeros((m.n_rows, m.n_blocks)),
        lam=np.zeros(m.n_rows),
    )


def _check(s: DetectorState, m: RealSystemModel):
    if s.Y.shape != m.H.shape or s.x.shape != (m.n_blocks,) or s.lam.shape != (m.n_rows,):
        raise ValueError(
            f"state dimensions x{s.x.shape} Y{s.Y.shape} lam{s.lam.shape} "
            f"do not match channel {m.H.shape}"
        )


def objective_value(s: DetectorState, m: RealSystemModel) -> float:
    """``sum_i ||Y[:, i] - h_i x_i||^2``."""
    _check(s, m)
    return float(np.sum((s.Y - m.H * s.x) ** 2))


def primal_residual(s: DetectorState, m: RealSystemModel) -> float:
    """``||y - sum_i Y[:, i]||_2``."""
    _check(s, m)
    return float(np.linalg.norm(m.y - s.Y.sum(axis=1)))


def kkt_residual(s: DetectorState, m: RealSystemModel, c: Constellation) -> KktResidual:
    """Max-norm violations of the stationarity and dual-consistency conditions.

    Receive-dimension sums run over all ``2Nr`` rows. The box multipliers are
    taken as zero; an active box shows up only through ``r_box``.
    """
    _check(s, m)
    H, Y, x, lam = m.H, s.Y, s.x, s.lam
    Hx = H * x
    nt = m.n_blocks / 2.0
    r_y = np.max(np.abs(Y - Hx - lam[:, None] / 2.0), initial=0.0)
    r_lam = np.max(np.abs(lam - (m.y - Hx.sum(axis=1)) / nt), initial=0.0)
    grad_x = 2.0 * x * m.col_energy - 2.0 * np.einsum("ki,ki->i", Y, H)
    r_x = np.max(np.abs(grad_x), initial=0.0)
    r_box = np.max(np.maximum(0.0, np.abs(x) - c.bound), initial=0.0)
    zeros = np.zeros(m.n_blocks)
    return KktResidual(float(r_y), float(r_lam), float(r_x), float(r_box), zeros, zeros.copy())
