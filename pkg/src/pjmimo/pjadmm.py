"""Proximal Jacobian ADMM detector.

Every iteration updates all ``2Nt`` blocks ``(x_i, y_i)`` in parallel from the
previous iterate, then the multipliers. With ``D = 2 + rho + tau`` and
``C = lam + rho (y - sum_{j != i} y_j) + tau y_i`` (all from the previous
iterate), the joint minimizer of block ``i``'s proximal subproblem is

    x_i = [(2/D) h_i^T C + tau x_i_old] / [2 S_i (1 - 2/D) + tau]
    y_i = (2 h_i x_i + C) / D

where ``S_i = ||h_i||^2``. Because ``y_i`` is unconstrained, clamping ``x_i``
to ``[-l, l]`` gives the exact box-constrained block minimizer.

Block kernels only perform elementwise arithmetic on quantities derived once
per iteration from the snapshot (``_Snapshot``), so any partition of the
blocks across workers, in any order, produces bit-identical iterates.
"""

from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass, replace

import numpy as np

from .decomp import (
    DetectorState,
    KktResidual,
    init_state,
    kkt_residual,
    objective_value,
)
from .model import Constellation, RealSystemModel, quantize

__all__ = [
    "DegenerateColumnError",
    "PjadmmConfig",
    "DetectionResult",
    "default_penalties",
    "update_x_block",
    "update_y_block",
    "update_duals",
    "iterate",
    "detect",
    "subproblem_objective",
    "subproblem_oracle",
]

CLAMP_MODES = ("none", "box")

# default penalty rule, see default_penalties()
RHO_SCALE = 0.25
TAU_FRACTION = 0.1
TAU_FLOOR = 1.5


class DegenerateColumnError(ValueError):
    """A zero channel column with ``tau == 0`` leaves ``x_i`` undetermined."""


@dataclass(frozen=True)
class PjadmmConfig:
    """Solver parameters.

    Parameters
    ----------
    rho : float or None
        Penalty weight on the coupling constraint. ``None`` selects the
        channel-dependent default of :func:`default_penalties`.
    tau : float or None
        Proximal weight. ``None`` selects the default.
    delta : float
        Stop once ``|V(t) - V(t-1)| < delta``.
    max_iter : int
        Iteration budget T; the solver never runs more than T sweeps.
    clamp_mode : {"none", "box"}
        Whether to project each ``x_i`` onto ``[-l, l]`` every iteration.
    """

    rho: float | None = None
    tau: float | None = None
    delta: float = 1e-12
    max_iter: int = 100
    clamp_mode: str = "none"

    def __post_init__(self):
        if self.rho is not None and not self.rho > 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.tau is not None and not self.tau >= 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be an integer >= 1, got {self.max_iter}")
        if self.clamp_mode not in CLAMP_MODES:
            raise ValueError(f"clamp_mode must be one of {CLAMP_MODES}, got {self.clamp_mode!r}")

    def resolve(self, m: RealSystemModel) -> PjadmmConfig:
        """Return a copy with ``rho`` and ``tau`` filled in for model ``m``."""
        if self.rho is not None and self.tau is not None:
            return self
        rho, tau = default_penalties(m, self.rho)
        return replace(self, rho=rho, tau=tau if self.tau is None else self.tau)


def default_penalties(m: RealSystemModel, rho: float | None = None) -> tuple[float, float]:
    """Channel-dependent default ``(rho, tau)``.

    ``rho = 0.25 * mean(S_i) / n^2`` with ``n = 2Nt`` blocks, and
    ``tau = rho * max(0.1 (n - 1), 1.5 (1 + sqrt(n / 2Nr))^2)``. The second
    term keeps the iteration stable when there are few blocks; the first
    was tuned for fast BER convergence at Nr = 128.
    """
    n, rows = m.n_blocks, m.n_rows
    if rho is None:
        s_mean = float(np.mean(m.col_energy)) or 1.0
        rho = RHO_SCALE * s_mean / n**2
    ratio = max(TAU_FRACTION * (n - 1), TAU_FLOOR * (1.0 + math.sqrt(n / rows)) ** 2)
    return rho, rho * ratio


@dataclass
class DetectionResult:
    """Detector output.

    ``iterations_used`` is 0 for non-iterative detectors. ``final_kkt`` is
    ``None`` when the residual was not requested.
    """

    x_soft: np.ndarray
    x_hard: np.ndarray
    iterations_used: int
    converged: bool
    trace: list[float]
    final_kkt: KktResidual | None = None


@dataclass(frozen=True)
class _Snapshot:
    # quantities every block reads from the (t-1) iterate
    base: np.ndarray  # lam + rho * (y - sum_j y_j)
    h_base: np.ndarray  # h_i^T base for every i
    h_y: np.ndarray  # h_i^T y_i for every i


def _snapshot(s: DetectorState, m: RealSystemModel, cfg: PjadmmConfig) -> _Snapshot:
    base = s.lam + cfg.rho * (m.y - s.Y.sum(axis=1))
    return _Snapshot(base, m.H.T @ base, np.einsum("ki,ki->i", m.H, s.Y))


def _x_kernel(idx, s, m, cfg, snap, bound):
    rho, tau = cfg.rho, cfg.tau
    d = 2.0 + rho + tau
    denom = 2.0 * m.col_energy[idx] * (1.0 - 2.0 / d) + tau
    if np.any(denom <= 0):
        bad = np.atleast_1d(idx)[np.atleast_1d(denom <= 0)]
        raise DegenerateColumnError(
            f"zero channel column(s) {bad.tolist()} with tau=0; x is undetermined"
        )
    h_c = snap.h_base[idx] + (rho + tau) * snap.h_y[idx]
    x = ((2.0 / d) * h_c + tau * s.x[idx]) / denom
    if cfg.clamp_mode == "box":
        x = np.clip(x, -bound, bound)
    return x


def _y_kernel(idx, x_new, s, m, cfg, snap):
    rho, tau = cfg.rho, cfg.tau
    d = 2.0 + rho + tau
    return (2.0 * m.H[:, idx] * x_new + snap.base[:, None] + (rho + tau) * s.Y[:, idx]) / d


def _bound(m: RealSystemModel, c: Constellation | None) -> float:
    return (c or Constellation()).bound


def update_x_block(
    i: int,
    s: DetectorState,
    m: RealSystemModel,
    cfg: PjadmmConfig,
    c: Constellation | None = None,
) -> float:
    """Closed-form x-component of block ``i``'s subproblem minimizer."""
    cfg = cfg.resolve(m)
    snap = _snapshot(s, m, cfg)
    idx = np.array([i])
    return float(_x_kernel(idx, s, m, cfg, snap, _bound(m, c))[0])


def update_y_block(
    i: int,
    x_i_new: float,
    s: DetectorState,
    m: RealSystemModel,
    cfg: PjadmmConfig,
) -> np.ndarray:
    """Contribution ``y_i`` given this iteration's ``x_i`` and the snapshot."""
    cfg = cfg.resolve(m)
    snap = _snapshot(s, m, cfg)
    idx = np.array([i])
    return _y_kernel(idx, np.array([x_i_new]), s, m, cfg, snap)[:, 0]


def update_duals(s: DetectorState, m: RealSystemModel, cfg: PjadmmConfig) -> np.ndarray:
    """``lam + rho (y - sum_i y_i)`` using the columns currently in ``s.Y``."""
    cfg = cfg.resolve(m)
    return s.lam + cfg.rho * (m.y - s.Y.sum(axis=1))


def _sweep_blocks(idx, s, m, cfg, snap, bound):
    x = _x_kernel(idx, s, m, cfg, snap, bound)
    return idx, x, _y_kernel(idx, x, s, m, cfg, snap)


def iterate(
    s: DetectorState,
    m: RealSystemModel,
    cfg: PjadmmConfig,
    c: Constellation | None = None,
    executor: Executor | None = None,
    chunks: int = 1,
) -> DetectorState:
    """One Jacobian sweep; returns a new state and leaves ``s`` untouched.

    With an ``executor`` the blocks are split into ``chunks`` groups that are
    updated concurrently; the result does not depend on the split.
    """
    cfg = cfg.resolve(m)
    snap = _snapshot(s, m, cfg)
    bound = _bound(m, c)
    groups = np.array_split(np.arange(m.n_blocks), max(1, min(chunks, m.n_blocks)))
    if executor is None:
        parts = [_sweep_blocks(g, s, m, cfg, snap, bound) for g in groups]
    else:
        futures = [executor.submit(_sweep_blocks, g, s, m, cfg, snap, bound) for g in groups]
        parts = [f.result() for f in futures]

    x = np.empty(m.n_blocks)
    Y = np.empty_like(s.Y)
    for idx, xg, Yg in parts:
        x[idx] = xg
        Y[:, idx] = Yg
    new = DetectorState(x, Y, s.lam, s.t + 1, list(s.trace))
    new.lam = update_duals(new, m, cfg)
    new.trace.append(objective_value(new, m))
    return new


def detect(
    m: RealSystemModel,
    c: Constellation,
    cfg: PjadmmConfig | None = None,
    *,
    with_kkt: bool = True,
    executor: Executor | None = None,
    chunks: int = 1,
) -> DetectionResult:
    """Run sweeps from the zero state until the stopping rule fires.

    Stops when ``|V(t) - V(t-1)| < delta`` (``converged=True``) or after
    ``max_iter`` sweeps, then quantizes the soft estimate.
    """
    cfg = (cfg or PjadmmConfig()).resolve(m)
    s = init_state(m)
    prev = objective_value(s, m)
    converged = False
    while True:
        s = iterate(s, m, cfg, c, executor=executor, chunks=chunks)
        v = s.trace[-1]
        if abs(v - prev) < cfg.delta:
            converged = True
            break
        if s.t >= cfg.max_iter:
            break
        prev = v
    return DetectionResult(
        x_soft=s.x,
        x_hard=quantize(s.x, c),
        iterations_used=s.t,
        converged=converged,
        trace=s.trace,
        final_kkt=kkt_residual(s, m, c) if with_kkt else None,
    )


def run_state(
    m: RealSystemModel,
    cfg: PjadmmConfig,
    iterations: int,
    c: Constellation | None = None,
) -> list[DetectorState]:
    """States after each of ``iterations`` sweeps, ignoring the stopping rule."""
    cfg = cfg.resolve(m)
    s = init_state(m)
    out = []
    for _ in range(iterations):
        s = iterate(s, m, cfg, c)
        out.append(s)
    return out


def subproblem_objective(
    i: int,
    x_i: float,
    y_i: np.ndarray,
    s: DetectorState,
    m: RealSystemModel,
    cfg: PjadmmConfig,
) -> float:
    """Value of block ``i``'s proximal augmented-Lagrangian subproblem."""
    cfg = cfg.resolve(m)
    h = m.H[:, i]
    others = np.delete(s.Y, i, axis=1).sum(axis=1)
    return float(
        np.sum((y_i - h * x_i) ** 2)
        - s.lam @ y_i
        + 0.5 * cfg.rho * np.sum((m.y - y_i - others) ** 2)
        + 0.5 * cfg.tau * (x_i - s.x[i]) ** 2
        + 0.5 * cfg.tau * np.sum((y_i - s.Y[:, i]) ** 2)
    )


def subproblem_oracle(
    i: int,
    s: DetectorState,
    m: RealSystemModel,
    cfg: PjadmmConfig,
    c: Constellation | None = None,
) -> tuple[float, np.ndarray]:
    """Minimize block ``i``'s subproblem by a dense linear solve.

    Assembles the Hessian of the quadratic in ``z = (y_i, x_i)`` and solves
    its stationarity system. In box mode an out-of-range solution is
    re-solved with ``x_i`` pinned to the nearer bound through a bordered
    (equality-constrained) system. Intended for validation, not speed.
    """
    cfg = cfg.resolve(m)
    h = m.H[:, i]
    rows = m.n_rows
    rho, tau = cfg.rho, cfg.tau
    others = np.delete(s.Y, i, axis=1).sum(axis=1)

    Q = np.zeros((rows + 1, rows + 1))
    Q[:rows, :rows] = (2.0 + rho + tau) * np.eye(rows)
    Q[:rows, rows] = Q[rows, :rows] = -2.0 * h
    Q[rows, rows] = 2.0 * (h @ h) + tau
    b = np.empty(rows + 1)
    b[:rows] = s.lam + rho * (m.y - others) + tau * s.Y[:, i]
    b[rows] = tau * s.x[i]

    z = np.linalg.solve(Q, b)
    bound = _bound(m, c)
    if cfg.clamp_mode == "box" and abs(z[rows]) > bound:
        pin = math.copysign(bound, z[rows])
        K = np.zeros((rows + 2, rows + 2))
        K[: rows + 1, : rows + 1] = Q
        K[rows, rows + 1] = K[rows + 1, rows] = 1.0
        rhs = np.concatenate([b, [pin]])
        z = np.linalg.solve(K, rhs)[: rows + 1]
    return float(z[rows]), z[:rows]
