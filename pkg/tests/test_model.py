import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pjmimo.model import (
    ComplexSystemModel,
    Constellation,
    add_noise,
    complex_to_real,
    demodulate,
    generate_channel,
    modulate,
    noise_variance_from_snr,
    quantize,
    real_to_bits,
    stack_real,
)

ORDERS = [4, 16, 64]


class TestConstellation:
    @pytest.mark.parametrize("order", ORDERS)
    def test_unit_energy_closed_form(self, order):
        c = Constellation(order)
        assert c.gamma**2 == pytest.approx(2 * (order - 1) / 3)
        a = c.alphabet
        # all symbols equally likely: E|x|^2 = 2 * mean(level^2)
        assert 2 * np.mean(a**2) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("order", ORDERS)
    def test_alphabet_shape(self, order):
        c = Constellation(order)
        a = c.alphabet
        assert np.all(np.diff(a) > 0)
        np.testing.assert_allclose(a, -a[::-1])
        assert not np.any(a == 0)
        assert c.bound == a.max() == pytest.approx((math.isqrt(order) - 1) / c.gamma)

    def test_qpsk_gamma(self):
        assert Constellation(4).gamma == pytest.approx(math.sqrt(2))

    @pytest.mark.parametrize("bad", [1, 2, 8, 9, 32, 36])
    def test_rejects_non_square(self, bad):
        with pytest.raises(ValueError):
            Constellation(bad)


class TestChannel:
    def test_deterministic(self):
        a = generate_channel(2, 2, seed=5)
        b = generate_channel(2, 2, seed=5)
        assert np.array_equal(a, b)

    def test_unit_variance(self):
        h = generate_channel(1000, 100, seed=1)
        assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.02)
        assert abs(np.mean(h)) < 0.01
        # circular symmetry: equal real and imaginary power
        assert np.var(h.real) == pytest.approx(0.5, abs=0.01)

    def test_reference_shape(self):
        assert generate_channel(128, 16, seed=0).shape == (128, 16)

    @pytest.mark.parametrize("nr,nt", [(0, 2), (2, 0)])
    def test_zero_dimension(self, nr, nt):
        with pytest.raises(ValueError):
            generate_channel(nr, nt)

    def test_more_users_than_antennas_warns(self):
        with pytest.warns(UserWarning):
            generate_channel(2, 4, seed=0)


class TestModulation:
    def test_qpsk_gray_points(self):
        c = Constellation(4)
        s = 1 / math.sqrt(2)
        assert modulate([0, 0], c)[0] == pytest.approx(s + 1j * s)
        assert modulate([1, 1], c)[0] == pytest.approx(-s - 1j * s)
        assert modulate([0, 1], c)[0] == pytest.approx(s - 1j * s)

    def test_energy(self):
        c = Constellation(16)
        bits = np.random.default_rng(0).integers(0, 2, 4 * 100_000)
        assert np.mean(np.abs(modulate(bits, c)) ** 2) == pytest.approx(1.0, abs=0.01)

    def test_framing_error(self):
        with pytest.raises(ValueError, match="multiple"):
            modulate([0, 1, 1], Constellation(4))

    @pytest.mark.parametrize("order", ORDERS)
    def test_levels_in_alphabet(self, order):
        c = Constellation(order)
        bits = np.random.default_rng(1).integers(0, 2, c.bits_per_symbol * 500)
        s = modulate(bits, c)
        assert np.all(np.isin(np.round(s.real, 12), np.round(c.alphabet, 12)))
        assert np.all(np.isin(np.round(s.imag, 12), np.round(c.alphabet, 12)))

    @pytest.mark.parametrize("order", ORDERS)
    def test_round_trip(self, order):
        c = Constellation(order)
        bits = np.random.default_rng(2).integers(0, 2, c.bits_per_symbol * 1000)
        assert np.array_equal(demodulate(modulate(bits, c), c), bits)

    @pytest.mark.parametrize("order", ORDERS)
    def test_adjacent_levels_differ_in_one_bit(self, order):
        c = Constellation(order)
        b = real_to_bits(c.alphabet, c)
        assert np.all(np.abs(np.diff(b.astype(int), axis=0)).sum(axis=1) == 1)


class TestRealModel:
    def test_block_structure(self):
        m = complex_to_real(ComplexSystemModel(H=[[1 + 2j]], y=[0]))
        np.testing.assert_array_equal(m.H, [[1, -2], [2, 1]])

    def test_imaginary_symbol(self):
        m = complex_to_real(ComplexSystemModel(H=[[1]], y=[1j]))
        np.testing.assert_array_equal(m.H @ np.array([0.0, 1.0]), [0.0, 1.0])
        np.testing.assert_array_equal(m.y, [0.0, 1.0])

    def test_matches_complex_evaluation(self, rng):
        H = generate_channel(4, 4, rng)
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        m = complex_to_real(ComplexSystemModel(H, H @ x))
        direct = H @ x
        assert np.max(np.abs(m.H @ stack_real(x) - stack_real(direct))) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_round_trip_property(self, nr, nt, seed):
        r = np.random.default_rng(seed)
        H = r.standard_normal((nr, nt)) + 1j * r.standard_normal((nr, nt))
        x = r.standard_normal(nt) + 1j * r.standard_normal(nt)
        m = complex_to_real(ComplexSystemModel(H, H @ x, 2.0))
        assert np.max(np.abs(m.H @ stack_real(x) - stack_real(H @ x))) < 1e-12
        assert m.sigma2 == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            ComplexSystemModel(H=np.ones((3, 2)), y=np.ones(2))


class TestNoise:
    def test_snr_convention(self):
        assert noise_variance_from_snr(0, 1) == 1.0
        assert noise_variance_from_snr(12, 16) == pytest.approx(16 / 10**1.2)
        assert noise_variance_from_snr(12, 16) == pytest.approx(1.009532, abs=1e-6)
        assert noise_variance_from_snr(400, 4) < 1e-30

    def test_zero_variance(self):
        v = np.arange(5.0)
        np.testing.assert_array_equal(add_noise(v, 0.0, seed=1), v)

    def test_variance(self):
        d = add_noise(np.zeros(1_000_000), 2.0, seed=3)
        assert np.var(d) == pytest.approx(2.0, abs=0.01)

    def test_deterministic(self):
        assert np.array_equal(add_noise(np.ones(10), 1.0, 9), add_noise(np.ones(10), 1.0, 9))

    def test_negative_variance(self):
        with pytest.raises(ValueError):
            add_noise(np.zeros(3), -1.0)


class TestQuantize:
    def test_nearest(self):
        c = Constellation(4)
        assert quantize(np.array([0.3]), c)[0] == pytest.approx(1 / math.sqrt(2))
        assert quantize(np.array([-5.0]), c)[0] == pytest.approx(-1 / math.sqrt(2))

    def test_tie_goes_up(self):
        c = Constellation(4)
        assert quantize(np.array([0.0]), c)[0] == pytest.approx(1 / math.sqrt(2))

    def test_16qam(self):
        c = Constellation(16)
        assert quantize(np.array([0.9]), c)[0] == pytest.approx(3 / math.sqrt(10))

    @settings(max_examples=200, deadline=None)
    @given(st.sampled_from(ORDERS), st.floats(-3, 3, allow_nan=False))
    def test_matches_brute_force(self, order, v):
        c = Constellation(order)
        d = np.abs(c.alphabet - v)
        best = c.alphabet[d == d.min()].max()
        assert quantize(np.array([v]), c)[0] == best
