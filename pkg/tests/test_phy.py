"""Link-budget formulas against hand values and a linear-domain oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slucoex import phy

dbm = st.floats(-150, 40, allow_nan=False)
rate = st.one_of(st.just(0.0), st.floats(1e-6, 1e6))


def oracle_sinr(signal, interferers, noise):
    """All arithmetic in linear milliwatts, independent of the module."""
    lin = np.power(10.0, np.asarray([signal, noise] + list(interferers), dtype=float) / 10.0)
    return 10.0 * np.log10(lin[0] / lin[1:].sum())


@pytest.mark.parametrize("freq,dist,expected", [(1.0, 1.0, 32.4), (5.8, 10.0, 64.97), (5.8, 100.0, 82.27)])
def test_path_loss_examples(freq, dist, expected):
    assert phy.path_loss_db(freq, dist) == pytest.approx(expected, abs=0.01)


def test_path_loss_oracle():
    assert phy.path_loss_db(5.8, 10.0) == pytest.approx(32.4 + 20 * np.log10(5.8) + 17.3, abs=1e-12)


@pytest.mark.parametrize("bad", [(5.8, 0.0), (5.8, -1.0), (0.0, 10.0)])
def test_path_loss_domain(bad):
    with pytest.raises(phy.PhyDomainError):
        phy.path_loss_db(*bad)


@pytest.mark.parametrize("bw,expected", [(1.0, -174.0), (20e6, -100.99)])
def test_noise_examples(bw, expected):
    assert phy.noise_power_dbm(phy.LinkParams(bandwidth=bw)) == pytest.approx(expected, abs=0.01)


@given(st.floats(1.0, 1e9), st.floats(-200, -100))
def test_noise_oracle(bw, psd):
    # 10 MHz gives -174 + 70 = -104.00 dBm
    assert phy.noise_power_dbm(phy.LinkParams(bandwidth=bw, noise_psd=psd)) == pytest.approx(
        psd + 10 * np.log10(bw), abs=1e-9)


def test_sinr_examples():
    assert phy.sinr_db(-60, [], -100.99) == pytest.approx(40.99, abs=1e-9)
    assert phy.sinr_db(-60, [-90], -100.99) == pytest.approx(oracle_sinr(-60, [-90], -100.99), rel=1e-12)
    assert phy.sinr_db(-60, [-90], -100.99) == pytest.approx(29.67, abs=0.01)


@given(dbm)
def test_sinr_signal_equals_noise(x):
    assert phy.sinr_db(x, [], x) == pytest.approx(0.0, abs=1e-9)


@given(dbm, st.lists(dbm, max_size=6), dbm)
def test_sinr_matches_linear_oracle(s, interf, noise):
    assert phy.sinr_db(s, interf, noise) == pytest.approx(oracle_sinr(s, interf, noise), rel=1e-12, abs=1e-12)


@given(dbm, dbm)
def test_sinr_no_interference_is_difference(s, noise):
    assert phy.sinr_db(s, [], noise) == pytest.approx(s - noise, abs=1e-9)


@given(dbm, st.lists(dbm, max_size=4), st.floats(-130, 40), st.floats(-110, -60))
def test_adding_interferer_lowers_sinr(s, interf, extra, noise):
    assert phy.sinr_db(s, interf + [extra], noise) < phy.sinr_db(s, interf, noise)


@given(st.floats(0.1, 100), st.floats(1, 1000), st.floats(0.1, 100), st.floats(0.01, 1000))
def test_path_loss_monotone(f, d, df, dd):
    assert phy.path_loss_db(f, d + dd) > phy.path_loss_db(f, d)
    assert phy.path_loss_db(f + df, d) > phy.path_loss_db(f, d)


@pytest.mark.parametrize("bw,sinr,expected", [(20e6, 0.0, 20e6), (20e6, 15.0, 100.56e6), (1.0, 0.0, 1.0)])
def test_shannon_examples(bw, sinr, expected):
    assert phy.shannon_rate(bw, sinr) == pytest.approx(expected, abs=0.01e6 if bw > 1 else 1e-12)


def test_shannon_oracle():
    assert phy.shannon_rate(20e6, 15.0) == pytest.approx(20e6 * np.log2(1 + 10 ** 1.5), rel=1e-12)


@given(st.floats(1, 1e9), st.floats(-30, 60), st.floats(0.01, 20), st.floats(1.1, 10))
def test_shannon_monotone_and_linear(bw, sinr, ds, k):
    assert phy.shannon_rate(bw, sinr + ds) > phy.shannon_rate(bw, sinr)
    assert phy.shannon_rate(k * bw, sinr) == pytest.approx(k * phy.shannon_rate(bw, sinr), rel=1e-12)


def test_jain_examples():
    assert phy.jain_index([1, 3]) == 0.8
    assert phy.jain_index([7.0, 7.0]) == 1.0
    assert phy.jain_index([5.0, 0.0]) == 0.5


@given(st.lists(rate, min_size=1, max_size=20).filter(lambda v: sum(v) > 0), st.floats(1e-3, 1e3))
def test_jain_properties(x, c):
    j = phy.jain_index(x)
    assert 1 / len(x) - 1e-12 <= j <= 1 + 1e-12
    assert phy.jain_index([c * v for v in x]) == pytest.approx(j, rel=1e-9)
    oracle = sum(x) ** 2 / (len(x) * sum(v * v for v in x))
    assert j == pytest.approx(oracle, rel=1e-9)


@given(st.floats(1e-3, 1e3), st.integers(1, 10))
def test_jain_equal_is_one(r, n):
    assert phy.jain_index([r] * n) == pytest.approx(1.0, rel=1e-12)


def test_jain_errors():
    for bad in ([], [0.0, 0.0], [1.0, -1.0]):
        with pytest.raises(phy.PhyDomainError):
            phy.jain_index(bad)


def test_utility_examples():
    s = phy.default_rate_scale()
    assert phy.utility(0.8, s, 1.0, s) == pytest.approx(1.0)
    assert phy.utility(0.8, 0.5 * s, 1.0, s) == pytest.approx(0.6)
    assert phy.utility(0.0, 123.0, 0.37, s) == pytest.approx(0.37)


def test_rate_scale_value():
    assert phy.default_rate_scale(20e6) == pytest.approx(2 * 20e6 * math.log2(1 + 1e4), rel=1e-12)


def test_throughput_and_prr_examples():
    assert phy.throughput_bps(0, 300, 1.0) == 0.0
    assert phy.throughput_bps(1000, 300, 1.0) == pytest.approx(2.4e6)
    assert phy.throughput_bps(1, 300, 0.01) == pytest.approx(240e3)
    assert phy.prr(5, 10) == 0.5
    assert phy.prr(10, 10) == 1.0
    assert phy.prr(0, 7) == 0.0
    with pytest.raises(phy.PhyDomainError):
        phy.throughput_bps(1, 300, 0.0)


@given(st.integers(0, 1000), st.integers(0, 1000))
def test_prr_bounds(a, b):
    s, n = min(a, b), max(a, b)
    assert 0.0 <= phy.prr(s, n) <= 1.0
