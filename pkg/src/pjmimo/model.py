"""System model for uplink massive-MIMO detection.

Complex baseband model ``y~ = H~ x~ + v~`` with i.i.d. CN(0, 1) channel gains,
its real-valued equivalent, square M-QAM constellations with per-dimension
Gray mapping, noise injection and hard quantization.

SNR convention: ``SNR = Nt / sigma_v^2`` (total received signal power over
complex noise power, unit-energy symbols). The real-valued model carries
``sigma^2 = sigma_v^2 / 2`` per real dimension.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Constellation",
    "ComplexSystemModel",
    "RealSystemModel",
    "generate_channel",
    "modulate",
    "demodulate",
    "complex_to_real",
    "noise_variance_from_snr",
    "add_noise",
    "quantize",
    "real_to_bits",
]


@dataclass(frozen=True)
class Constellation:
    """Square M-QAM constellation normalized to unit average symbol energy.

    Parameters
    ----------
    order : int
        Constellation size M. Must be a perfect square that is a power of 4.
    """

    order: int = 4

    def __post_init__(self):
        side = math.isqrt(self.order)
        if self.order < 4 or side * side != self.order or side & (side - 1):
            raise ValueError(f"order must be a power of 4 (>= 4), got {self.order}")

    @property
    def side(self) -> int:
        """Number of levels per real dimension, sqrt(M)."""
        return math.isqrt(self.order)

    @property
    def bits_per_dim(self) -> int:
        return self.side.bit_length() - 1

    @property
    def bits_per_symbol(self) -> int:
        return 2 * self.bits_per_dim

    @property
    def gamma(self) -> float:
        """Normalization factor; gamma^2 = 2(M - 1)/3."""
        return math.sqrt(2.0 * (self.order - 1) / 3.0)

    @property
    def bound(self) -> float:
        """Box bound l = (sqrt(M) - 1) / gamma."""
        return (self.side - 1) / self.gamma

    @cached_property
    def alphabet(self) -> np.ndarray:
        """Ascending per-dimension real levels (odd multiples of 1/gamma)."""
        odd = np.arange(-(self.side - 1), self.side, 2, dtype=float)
        return odd / self.gamma

    @property
    def dim_energy(self) -> float:
        """Average energy of one real dimension (1/2 for unit symbol energy)."""
        return 0.5


@dataclass
class ComplexSystemModel:
    """Complex baseband instance ``y = H x + v``."""

    H: np.ndarray
    y: np.ndarray
    noise_var: float = 0.0
    x: np.ndarray | None = None

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=complex))
        self.y = np.asarray(self.y, dtype=complex).reshape(-1)
        if self.y.shape[0] != self.H.shape[0]:
            raise ValueError(
                f"received vector has length {self.y.shape[0]}, "
                f"channel has {self.H.shape[0]} rows"
            )
        if self.x is not None:
            self.x = np.asarray(self.x, dtype=complex).reshape(-1)
            if self.x.shape[0] != self.H.shape[1]:
                raise ValueError("symbol vector length does not match channel columns")

    @property
    def nr(self) -> int:
        return self.H.shape[0]

    @property
    def nt(self) -> int:
        return self.H.shape[1]


@dataclass
class RealSystemModel:
    """Real-valued equivalent ``y = H x + v`` with ``H`` of shape (2Nr, 2Nt).

    ``sigma2`` is the noise variance per real dimension.
    """

    H: np.ndarray
    y: np.ndarray
    sigma2: float = 0.0

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        if self.y.shape[0] != self.H.shape[0]:
            raise ValueError(
                f"received vector has length {self.y.shape[0]}, "
                f"channel has {self.H.shape[0]} rows"
            )
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")

    @property
    def n_rows(self) -> int:
        """Number of real receive dimensions, 2Nr."""
        return self.H.shape[0]

    @property
    def n_blocks(self) -> int:
        """Number of real symbol dimensions (ADMM blocks), 2Nt."""
        return self.H.shape[1]

    @cached_property
    def col_energy(self) -> np.ndarray:
        """Squared column norms ``S_i = sum_k (h_i^(k))^2``."""
        return np.einsum("ki,ki->i", self.H, self.H)


def _check_dims(nr, nt):
    if nr < 1 or nt < 1:
        raise ValueError(f"antenna counts must be >= 1, got nr={nr}, nt={nt}")
    if nt > nr:
        warnings.warn(
            f"nt={nt} exceeds nr={nr}; detection is outside the Nt <= Nr regime",
            stacklevel=3,
        )


def generate_channel(nr: int, nt: int, seed=None) -> np.ndarray:
    """Draw an ``nr x nt`` matrix of i.i.d. CN(0, 1) flat-fading gains.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    _check_dims(nr, nt)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((2, nr, nt))
    return (g[0] + 1j * g[1]) * math.sqrt(0.5)


def _gray_table(bits_per_dim: int) -> np.ndarray:
    # row j holds the Gray bits (MSB first) of the j-th level counted from +l
    j = np.arange(1 << bits_per_dim)
    g = j ^ (j >> 1)
    shifts = np.arange(bits_per_dim - 1, -1, -1)
    return ((g[:, None] >> shifts) & 1).astype(np.uint8)


def _bits_to_levels(bits: np.ndarray, c: Constellation) -> np.ndarray:
    # bits shaped (..., bits_per_dim) -> real levels
    k = c.bits_per_dim
    weights = 1 << np.arange(k - 1, -1, -1)
    g = bits @ weights
    # inverse Gray: j = g ^ (g >> 1) ^ (g >> 2) ...
    j = g.copy()
    shift = g >> 1
    while np.any(shift):
        j ^= shift
        shift >>= 1
    return ((c.side - 1) - 2 * j) / c.gamma


def modulate(bits, c: Constellation) -> np.ndarray:
    """Map a bit vector onto Gray-coded M-QAM symbols.

    Each symbol consumes ``log2(M)`` bits: the first half select the in-phase
    level, the second half the quadrature level. Bit pattern 0...0 maps to
    the level +l.
    """
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    if bits.size % c.bits_per_symbol:
        raise ValueError(
            f"bit count {bits.size} is not a multiple of {c.bits_per_symbol}"
        )
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    k = c.bits_per_dim
    per_sym = bits.reshape(-1, 2, k)
    levels = _bits_to_levels(per_sym, c)
    return levels[:, 0] + 1j * levels[:, 1]


def real_to_bits(x_real, c: Constellation) -> np.ndarray:
    """Gray-demap real levels (quantized first) to bits, ``bits_per_dim`` each."""
    x_real = np.asarray(x_real, dtype=float)
    j = (c.side - 1) - _level_index(x_real, c)
    return _gray_table(c.bits_per_dim)[j].reshape(*x_real.shape, c.bits_per_dim)


def demodulate(symbols, c: Constellation) -> np.ndarray:
    """Hard-decision inverse of :func:`modulate` for complex symbols."""
    s = np.asarray(symbols, dtype=complex).reshape(-1)
    re = real_to_bits(s.real, c)
    im = real_to_bits(s.imag, c)
    return np.concatenate([re, im], axis=1).reshape(-1)


def stack_real(v) -> np.ndarray:
    """Stack a complex vector as ``[Re(v); Im(v)]``."""
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag]).astype(float)


def unstack_real(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    half = v.shape[0] // 2
    return v[:half] + 1j * v[half:]


def complex_to_real(m: ComplexSystemModel) -> RealSystemModel:
    """Real-valued equivalent of a complex model.

    ``H = [[Re H~, -Im H~], [Im H~, Re H~]]`` and ``y = [Re y~; Im y~]``; the
    per-real-dimension noise variance is half the complex one.
    """
    Hr, Hi = m.H.real, m.H.imag
    H = np.block([[Hr, -Hi], [Hi, Hr]])
    return RealSystemModel(H=H, y=stack_real(m.y), sigma2=m.noise_var / 2.0)


def noise_variance_from_snr(snr_db: float, nt: int) -> float:
    """Complex noise variance ``sigma_v^2 = Nt / 10^(snr_db/10)``."""
    if nt < 1:
        raise ValueError("nt must be >= 1")
    return nt / 10.0 ** (snr_db / 10.0)


def add_noise(clean, sigma2: float, seed=None) -> np.ndarray:
    """Add i.i.d. N(0, sigma2) noise to every entry of a real vector."""
    if sigma2 < 0:
        raise ValueError(f"noise variance must be non-negative, got {sigma2}")
    clean = np.asarray(clean, dtype=float)
    rng = np.random.default_rng(seed)
    return clean + math.sqrt(sigma2) * rng.standard_normal(clean.shape)


def _level_index(x, c: Constellation) -> np.ndarray:
    # index into the ascending alphabet; exact midpoints go to the upper level
    idx = np.floor((np.asarray(x) * c.gamma + (c.side - 1)) / 2.0 + 0.5)
    return np.clip(idx, 0, c.side - 1).astype(np.int64)


def quantize(x, c: Constellation) -> np.ndarray:
    """Map each real entry to the nearest constellation level."""
    return c.alphabet[_level_index(x, c)]
