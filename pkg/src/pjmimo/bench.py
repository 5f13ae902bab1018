"""Monte Carlo BER experiments and time-unit accounting.

Every trial draws a fresh channel, bit vector and unit noise vector from
``SeedSequence(seed, spawn_key=(trial,))``. The draws are independent of
SNR, detector and iteration budget, so all points in one run are paired:
both detectors see the same channels, bits and noise, and the noise
realization is merely rescaled across SNR values. Trials are aggregated by
integer error counts, so reports are identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import NormalDist

import numpy as np

from .baseline import mmse_detect
from .decomp import init_state, objective_value
from .model import (
    ComplexSystemModel,
    Constellation,
    RealSystemModel,
    add_noise,
    complex_to_real,
    demodulate,
    generate_channel,
    modulate,
    noise_variance_from_snr,
    quantize,
    unstack_real,
)
from .pjadmm import PjadmmConfig, iterate

__all__ = [
    "DETECTORS",
    "REF_NR",
    "REF_ITERS",
    "REF_MMSE",
    "REF_ALTMIN",
    "SimConfig",
    "BerPoint",
    "BerReport",
    "TimeUnitRow",
    "TimeUnitReport",
    "wilson_interval",
    "run_ber",
    "sweep_iterations",
    "sweep_snr",
    "full_snr_sweep",
    "time_units",
    "reference_report",
]

DETECTORS = ("pjadmm", "mmse")

# Reference setting: Nr = 128, SNR = 12 dB. Iteration budgets for Nt = 32 and
# 128 are obtained by inverting the time-unit formula against the reference costs.
REF_NR = 128
REF_ITERS = {16: 12, 32: 18, 64: 40, 128: 50}
# cited reference costs in time units
REF_MMSE = {16: 57_000, 32: 311_000, 64: 2_195_000, 128: 16_970_000}
REF_ALTMIN = {16: 200_000, 32: 409_000, 64: 1_409_000, 128: 2_818_000}

_Z95 = NormalDist().inv_cdf(0.975)


def wilson_interval(errors: int, n: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo experiment description.

    ``t_iters`` lists the PJADMM iteration budgets evaluated per SNR; the
    PJADMM fields left as ``None`` use the solver defaults.
    """

    nr: int
    nt: int
    order: int = 4
    snr_db: tuple[float, ...] = (12.0,)
    detectors: tuple[str, ...] = DETECTORS
    t_iters: tuple[int, ...] = (12,)
    trials: int = 1000
    seed: int = 0
    rho: float | None = None
    tau: float | None = None
    delta: float = 1e-12
    clamp_mode: str = "none"
    workers: int = 1

    def __post_init__(self):
        if self.nr < 1 or self.nt < 1:
            raise ValueError(f"nr and nt must be >= 1, got nr={self.nr}, nt={self.nt}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        unknown = set(self.detectors) - set(DETECTORS)
        if unknown:
            raise ValueError(f"unknown detector(s) {sorted(unknown)}")
        if "pjadmm" in self.detectors and not self.t_iters:
            raise ValueError("t_iters must not be empty when running pjadmm")
        Constellation(self.order)
        for t in self.t_iters:
            self.pjadmm_config(t)

    def pjadmm_config(self, t_iters: int) -> PjadmmConfig:
        return PjadmmConfig(
            rho=self.rho,
            tau=self.tau,
            delta=self.delta,
            max_iter=t_iters,
            clamp_mode=self.clamp_mode,
        )

    @property
    def bits_per_trial(self) -> int:
        return self.nt * Constellation(self.order).bits_per_symbol


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    nt: int
    nr: int
    detector: str
    t_iters: int
    trials: int
    bits: int
    bit_errors: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.bit_errors, self.bits)

    @property
    def ci_half_width(self) -> float:
        lo, hi = self.ci
        return (hi - lo) / 2.0

    def overlaps(self, other: BerPoint) -> bool:
        lo, hi = self.ci
        olo, ohi = other.ci
        return lo <= ohi and olo <= hi

    def as_row(self) -> dict:
        return {
            "snr_db": float(self.snr_db),
            "nt": self.nt,
            "nr": self.nr,
            "detector": self.detector,
            "t_iters": self.t_iters,
            "trials": self.trials,
            "bit_errors": self.bit_errors,
            "ber": self.ber,
            "ci_half_width": self.ci_half_width,
        }


@dataclass
class BerReport:
    points: list[BerPoint] = field(default_factory=list)

    def get(self, detector: str, snr_db: float | None = None, t_iters: int | None = None,
            nt: int | None = None) -> BerPoint:
        hits = [
            p
            for p in self.points
            if p.detector == detector
            and (snr_db is None or p.snr_db == snr_db)
            and (t_iters is None or p.t_iters == t_iters)
            and (nt is None or p.nt == nt)
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} points match {detector}, {snr_db}, {t_iters}, {nt}")
        return hits[0]

    def __add__(self, other: BerReport) -> BerReport:
        return BerReport(self.points + other.points)

    def __len__(self):
        return len(self.points)


def _points(cfg: SimConfig) -> list[tuple[float, str, int]]:
    out = []
    for snr in cfg.snr_db:
        for det in cfg.detectors:
            if det == "pjadmm":
                out.extend((float(snr), det, int(t)) for t in cfg.t_iters)
            else:
                out.append((float(snr), det, 0))
    return out


def _pjadmm_budgets(m, c, cfg: PjadmmConfig, budgets) -> dict[int, np.ndarray]:
    """Soft estimates ``detect`` would return for each budget, from one run."""
    cfg = cfg.resolve(m)
    wanted = sorted(set(budgets))
    out = {}
    s = init_state(m)
    prev = objective_value(s, m)
    for t in range(1, wanted[-1] + 1):
        s = iterate(s, m, cfg, c)
        v = s.trace[-1]
        if abs(v - prev) < cfg.delta:
            break
        if t in budgets:
            out[t] = s.x
        prev = v
    for b in wanted:
        out.setdefault(b, s.x)
    return out


def _trial_errors(cfg: SimConfig, trial: int, points) -> np.ndarray:
    c = Constellation(cfg.order)
    ch_seed, bit_seed, noise_seed = np.random.SeedSequence(cfg.seed, spawn_key=(trial,)).spawn(3)
    H = generate_channel(cfg.nr, cfg.nt, ch_seed)
    bits = np.random.default_rng(bit_seed).integers(0, 2, cfg.bits_per_trial)
    x = modulate(bits, c)
    clean = _clean_model(H, x)
    errors = np.zeros(len(points), dtype=np.int64)
    for snr in dict.fromkeys(p[0] for p in points):
        sigma2 = noise_variance_from_snr(snr, cfg.nt) / 2.0
        m = replace(clean, y=add_noise(clean.y, sigma2, noise_seed), sigma2=sigma2)
        here = [(k, det, t) for k, (s, det, t) in enumerate(points) if s == snr]
        budgets = [t for _, det, t in here if det == "pjadmm"]
        soft = {}
        if budgets:
            soft = _pjadmm_budgets(m, c, cfg.pjadmm_config(max(budgets)), budgets)
        for k, det, t in here:
            x_soft = mmse_detect(m, c).x_soft if det == "mmse" else soft[t]
            bits_hat = demodulate(unstack_real(quantize(x_soft, c)), c)
            errors[k] = np.count_nonzero(bits_hat != bits)
    return errors


def _clean_model(H: np.ndarray, x: np.ndarray) -> RealSystemModel:
    return complex_to_real(ComplexSystemModel(H=H, y=H @ x, x=x))


def _chunk_errors(cfg: SimConfig, trials: range, points) -> np.ndarray:
    total = np.zeros(len(points), dtype=np.int64)
    for k in trials:
        total += _trial_errors(cfg, k, points)
    return total


def _run_points(cfg: SimConfig, points) -> BerReport:
    if not points:
        return BerReport()
    n_chunks = cfg.workers * 4 if cfg.workers > 1 else 1
    bounds = np.linspace(0, cfg.trials, min(n_chunks, cfg.trials) + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    if cfg.workers == 1:
        parts = [_chunk_errors(cfg, ch, points) for ch in chunks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_chunk_errors, [cfg] * len(chunks), chunks, [points] * len(chunks)))
    totals = np.sum(parts, axis=0)
    bits = cfg.trials * cfg.bits_per_trial
    return BerReport(
        [
            BerPoint(snr, cfg.nt, cfg.nr, det, t, cfg.trials, bits, int(e))
            for (snr, det, t), e in zip(points, totals)
        ]
    )


def run_ber(cfg: SimConfig) -> BerReport:
    """BER of every (SNR, detector, budget) combination in ``cfg``."""
    return _run_points(cfg, _points(cfg))


def sweep_iterations(base: SimConfig, t_values) -> BerReport:
    """PJADMM BER per iteration budget on paired seeds, plus the MMSE reference."""
    t_iters = tuple(int(t) for t in t_values)
    if not t_iters:
        return BerReport()
    return run_ber(replace(base, t_iters=t_iters))


def sweep_snr(base: SimConfig, snr_list) -> BerReport:
    """BER curves over ``snr_list`` with both detectors on identical draws."""
    snr = tuple(float(s) for s in snr_list)
    if not snr:
        return BerReport()
    return run_ber(replace(base, snr_db=snr))


def full_snr_sweep(trials: int, seed: int = 0, workers: int = 1,
                   snr_list=tuple(range(0, 15, 2))) -> BerReport:
    """All reference configurations at their iteration budgets over ``snr_list``."""
    report = BerReport()
    for nt, t in REF_ITERS.items():
        base = SimConfig(REF_NR, nt, t_iters=(t,), trials=trials, seed=seed, workers=workers)
        report = report + sweep_snr(base, snr_list)
    return report


# --- time units -------------------------------------------------------------


def time_units(nr: int, nt: int, t_iters: int) -> int:
    """``4 Nr + T (14 Nr + 2 Nt)`` real multiplications on the parallel path."""
    for name, v in (("nr", nr), ("nt", nt), ("t_iters", t_iters)):
        if int(v) != v or v < 0:
            raise ValueError(f"{name} must be a non-negative integer, got {v}")
    return 4 * int(nr) + int(t_iters) * (14 * int(nr) + 2 * int(nt))


@dataclass(frozen=True)
class TimeUnitRow:
    nt: int
    nr: int
    t_iters: int | None
    detector: str
    time_units: int

    def as_row(self) -> dict:
        return {
            "nt": self.nt,
            "nr": self.nr,
            "t_iters": self.t_iters,
            "detector": self.detector,
            "time_units": self.time_units,
        }


@dataclass
class TimeUnitReport:
    rows: list[TimeUnitRow] = field(default_factory=list)

    def units(self, detector: str, nt: int) -> int:
        for r in self.rows:
            if r.detector == detector and r.nt == nt:
                return r.time_units
        raise KeyError((detector, nt))

    def speedup(self, nt: int, versus: str) -> float:
        return self.units(versus, nt) / self.units("pjadmm", nt)


def time_unit_rows(nr: int, nt: int, t_iters: int) -> list[TimeUnitRow]:
    """PJADMM row, plus cited reference rows when (nr, nt) is a reference setting."""
    rows = [TimeUnitRow(nt, nr, t_iters, "pjadmm", time_units(nr, nt, t_iters))]
    if nr == REF_NR and nt in REF_MMSE:
        rows.append(TimeUnitRow(nt, nr, None, "mmse", REF_MMSE[nt]))
        rows.append(TimeUnitRow(nt, nr, None, "altmin", REF_ALTMIN[nt]))
    return rows


def reference_report() -> TimeUnitReport:
    rows = []
    for nt, t in REF_ITERS.items():
        rows.extend(time_unit_rows(REF_NR, nt, t))
    return TimeUnitReport(rows)
