"""Exact linear MMSE detector used as the BER benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .model import Constellation, RealSystemModel, quantize
from .pjadmm import DetectionResult

__all__ = ["SingularSystemError", "MmseWorkspace", "mmse_workspace", "mmse_detect"]


class SingularSystemError(np.linalg.LinAlgError):
    """The regularized Gram matrix is not positive definite."""


@dataclass
class MmseWorkspace:
    gram: np.ndarray
    factor: tuple
    kind: str = "cholesky"


def mmse_workspace(H: np.ndarray, sigma2: float, dim_energy: float = 0.5) -> MmseWorkspace:
    """Cholesky-factor ``H^T H + (sigma2 / dim_energy) I``.

    ``sigma2`` is the noise variance per real dimension and ``dim_energy``
    the per-dimension symbol energy, so the regularizer equals the complex
    noise variance for unit-energy symbols.
    """
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be non-negative, got {sigma2}")
    n = H.shape[1]
    gram = H.T @ H + (sigma2 / dim_energy) * np.eye(n)
    if sigma2 == 0 and np.linalg.matrix_rank(H) < n:
        raise SingularSystemError("H is rank deficient and sigma2 = 0")
    try:
        factor = linalg.cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    return MmseWorkspace(gram, factor)


def mmse_detect(
    m: RealSystemModel, c: Constellation, sigma2: float | None = None
) -> DetectionResult:
    """``x = (H^T H + sigma2/E I)^{-1} H^T y`` followed by hard quantization.

    ``sigma2`` defaults to the model's per-dimension noise variance.
    """
    sigma2 = m.sigma2 if sigma2 is None else sigma2
    ws = mmse_workspace(m.H, sigma2, c.dim_energy)
    x = linalg.cho_solve(ws.factor, m.H.T @ m.y, check_finite=False)
    return DetectionResult(
        x_soft=x, x_hard=quantize(x, c), iterations_used=0, converged=True, trace=[]
    )
