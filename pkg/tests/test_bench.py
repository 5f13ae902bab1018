import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from statsmodels.stats.proportion import proportion_confint

from pjmimo import bench
from pjmimo.bench import (
    BerReport,
    SimConfig,
    run_ber,
    sweep_iterations,
    sweep_snr,
    reference_report,
    time_unit_rows,
    time_units,
    wilson_interval,
)
from pjmimo.model import Constellation
from pjmimo.pjadmm import PjadmmConfig, detect

from conftest import qpsk_instance


class TestTimeUnits:
    @pytest.mark.parametrize(
        "nt,t,expected", [(16, 12, 22400), (32, 18, 33920), (64, 40, 77312), (128, 50, 102912)]
    )
    def test_values(self, nt, t, expected):
        assert time_units(128, nt, t) == expected

    def test_zero_iterations(self):
        assert time_units(128, 16, 0) == 512

    @pytest.mark.parametrize("bad", [(-1, 4, 2), (8, 4, 1.5)])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            time_units(*bad)

    def test_speedups(self):
        rep = reference_report()
        assert rep.speedup(16, "mmse") == pytest.approx(57000 / 22400)
        assert rep.speedup(64, "mmse") == pytest.approx(2195000 / 77312)
        assert rep.speedup(64, "altmin") == pytest.approx(1409000 / 77312)

    def test_reference_rows_only_for_table_settings(self):
        assert [r.detector for r in time_unit_rows(128, 16, 12)] == ["pjadmm", "mmse", "altmin"]
        assert len(time_unit_rows(64, 16, 12)) == 1


class TestWilson:
    @given(st.integers(1, 10**6), st.data())
    def test_matches_statsmodels(self, n, data):
        k = data.draw(st.integers(0, n))
        lo, hi = wilson_interval(k, n)
        rlo, rhi = proportion_confint(k, n, alpha=0.05, method="wilson")
        assert lo == pytest.approx(rlo, abs=1e-12)
        assert hi == pytest.approx(rhi, abs=1e-12)

    def test_bad_n(self):
        with pytest.raises(ValueError):
            wilson_interval(0, 0)


class TestSimConfig:
    @pytest.mark.parametrize(
        "kw",
        [dict(trials=0), dict(nt=0), dict(workers=0), dict(seed=-1), dict(order=8),
         dict(detectors=("zf",)), dict(t_iters=()), dict(rho=-1.0)],
    )
    def test_invalid(self, kw):
        args = dict(nr=8, nt=4) | kw
        with pytest.raises(ValueError):
            SimConfig(**args)

    def test_bits_per_trial(self):
        assert SimConfig(8, 4, order=16).bits_per_trial == 16


class TestBudgets:
    @pytest.mark.parametrize("delta", [0.0, 1e-12, 1e-3])
    def test_budgets_match_detect(self, rng, delta):
        c = Constellation(4)
        m, _, _ = qpsk_instance(rng, 16, 8, 0.5)
        budgets = [1, 3, 10, 25]
        got = bench._pjadmm_budgets(m, c, PjadmmConfig(delta=delta, max_iter=25), budgets)
        for t in budgets:
            ref = detect(m, c, PjadmmConfig(delta=delta, max_iter=t), with_kkt=False)
            np.testing.assert_array_equal(got[t], ref.x_soft)


SMALL = SimConfig(16, 4, snr_db=(4.0, 10.0), t_iters=(2, 8), trials=40, seed=3)


class TestBer:
    def test_report_shape(self):
        rep = run_ber(SMALL)
        assert len(rep) == 2 * 3
        p = rep.get("pjadmm", 4.0, 2)
        assert p.bits == 40 * 8 and 0 <= p.bit_errors <= p.bits
        assert set(p.as_row()) == set(bench_fields())

    def test_deterministic(self):
        assert run_ber(SMALL) == run_ber(SMALL)

    def test_worker_count_invariance(self):
        from dataclasses import replace

        assert run_ber(SMALL).points == run_ber(replace(SMALL, workers=2)).points

    def test_seed_changes_draws(self):
        from dataclasses import replace

        a = run_ber(replace(SMALL, snr_db=(0.0,)))
        b = run_ber(replace(SMALL, snr_db=(0.0,), seed=4))
        assert a.points != b.points

    def test_high_snr_mmse_is_error_free(self):
        rep = run_ber(SimConfig(32, 8, snr_db=(60.0,), detectors=("mmse",), trials=50))
        assert rep.get("mmse").bit_errors == 0

    def test_very_low_snr_is_a_coin_flip(self):
        rep = run_ber(SimConfig(16, 4, snr_db=(-60.0,), detectors=("mmse",), trials=500))
        p = rep.get("mmse")
        lo, hi = p.ci
        assert lo <= 0.5 <= hi

    def test_monotone_in_snr(self):
        rep = sweep_snr(SimConfig(32, 8, detectors=("mmse",), trials=200, seed=1), [0, 4, 8])
        bers = [rep.get("mmse", s).ber for s in (0.0, 4.0, 8.0)]
        assert bers[0] > bers[1] > bers[2]

    def test_monotone_in_iterations(self):
        rep = sweep_iterations(SimConfig(64, 16, snr_db=(12.0,), trials=100, seed=2), [1, 3, 10, 40])
        bers = [rep.get("pjadmm", t_iters=t).ber for t in (1, 3, 10, 40)]
        assert all(a >= b for a, b in zip(bers, bers[1:])) and bers[0] > bers[-1]

    def test_empty_sweeps(self):
        assert len(sweep_snr(SMALL, [])) == 0
        assert len(sweep_iterations(SMALL, [])) == 0
        assert isinstance(sweep_snr(SMALL, []), BerReport)

    def test_get_requires_unique(self):
        with pytest.raises(KeyError):
            run_ber(SMALL).get("pjadmm")


def bench_fields():
    from pjmimo.reporting import BER_FIELDS

    return BER_FIELDS
