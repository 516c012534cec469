import numpy as np
import pytest

from pulsebench.exceptions import DegenerateVarianceError, InvalidLengthError, OrderingError
from pulsebench.numerics import ComplexSeq, irfft, linear_interp, pearson, rfft, rfft_freqs, standardize, stats


def naive_rdft(x):
    n = x.size
    k = np.arange(n // 2 + 1)[:, None]
    t = np.arange(n)[None, :]
    return (x[None, :] * np.exp(-2j * np.pi * k * t / n)).sum(axis=1)


def test_rfft_constant_signal():
    spectrum = rfft([1, 1, 1, 1])
    np.testing.assert_allclose(spectrum.re, [4, 0, 0], atol=1e-12)
    np.testing.assert_allclose(spectrum.im, [0, 0, 0], atol=1e-12)


def test_rfft_cosine_at_bin_one():
    spectrum = rfft([1, 0, -1, 0])
    np.testing.assert_allclose(spectrum.re, [0, 2, 0], atol=1e-12)
    np.testing.assert_allclose(spectrum.im, [0, 0, 0], atol=1e-12)


@pytest.mark.parametrize("n", [4, 5, 7, 16, 31, 64, 97, 128, 255, 450, 512])
def test_rfft_matches_naive_dft(n, rng):
    x = rng.standard_normal(n)
    expected = naive_rdft(x)
    got = rfft(x).to_complex()
    assert got.shape == (n // 2 + 1,)
    assert np.max(np.abs(got - expected)) / np.max(np.abs(expected)) < 1e-5


def test_rfft_random_lengths_against_oracle(rng):
    for n in rng.integers(4, 513, size=20):
        x = rng.standard_normal(int(n))
        expected = naive_rdft(x)
        assert np.max(np.abs(rfft(x).to_complex() - expected)) / np.max(np.abs(expected)) < 1e-5


def test_rfft_450_has_226_bins():
    assert len(rfft(np.zeros(450))) == 226


def test_rfft_rejects_short_input():
    with pytest.raises(InvalidLengthError):
        rfft([1.0])


def test_irfft_inverts_constant_spectrum():
    x = irfft(ComplexSeq(re=np.array([4.0, 0, 0]), im=np.zeros(3)), 4)
    np.testing.assert_allclose(x, [1, 1, 1, 1], atol=1e-12)


@pytest.mark.parametrize("n", [4, 5, 6, 7, 33, 100, 449, 450, 451, 1023, 1024, 2047, 2048])
def test_round_trip(n, rng):
    x = rng.standard_normal(n)
    back = irfft(rfft(x), n)
    assert np.max(np.abs(back - x)) < 1e-9 * np.max(np.abs(x))


def test_round_trip_random_lengths(rng):
    for n in rng.integers(4, 2049, size=25):
        x = rng.standard_normal(int(n))
        assert np.max(np.abs(irfft(rfft(x), int(n)) - x)) < 1e-9 * np.max(np.abs(x))


def test_rfft_is_linear(rng):
    x, y = rng.standard_normal((2, 451))
    combined = rfft(2.5 * x - 0.75 * y).to_complex()
    separate = 2.5 * rfft(x).to_complex() - 0.75 * rfft(y).to_complex()
    assert np.max(np.abs(combined - separate)) < 1e-9 * np.max(np.abs(separate))


def one_sided_energy(spectrum, n):
    power = np.abs(spectrum.to_complex()) ** 2
    weights = np.full(power.size, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    return float(np.sum(weights * power) / n)


@pytest.mark.parametrize("n", [4, 9, 450, 451, 2048])
def test_parseval(n, rng):
    x = rng.standard_normal(n)
    assert one_sided_energy(rfft(x), n) == pytest.approx(float(np.sum(x * x)), rel=1e-12)


def test_irfft_rejects_length_mismatch():
    with pytest.raises(InvalidLengthError):
        irfft(rfft(np.ones(8)), 12)


def test_isolating_one_bin_recovers_its_cosine():
    n = 64
    t = np.arange(n)
    x = np.cos(2 * np.pi * t / n) + 0.7 * np.sin(2 * np.pi * 5 * t / n)
    spectrum = rfft(x)
    keep = np.zeros(len(spectrum), dtype=bool)
    keep[1] = True
    isolated = irfft(ComplexSeq(np.where(keep, spectrum.re, 0), np.where(keep, spectrum.im, 0)), n)
    np.testing.assert_allclose(isolated, np.cos(2 * np.pi * t / n), atol=1e-10)


def test_rfft_freqs_spacing():
    freqs = rfft_freqs(450, 30.0)
    assert freqs.size == 226
    assert freqs[1] == pytest.approx(30.0 / 450)


def test_stats_population_std():
    mean, std = stats([1.0, 2.0, 3.0, 4.0])
    assert mean == pytest.approx(2.5)
    assert std == pytest.approx(np.sqrt(1.25))


def test_pearson_examples(rng):
    x = rng.standard_normal(50)
    assert pearson(x, x) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    assert pearson([60, 70, 80], [62, 68, 83]) == pytest.approx(210 / np.sqrt(46800), abs=1e-6)
    assert pearson([60, 70, 80], [62, 68, 83]) == pytest.approx(0.9707, abs=1e-3)


def test_pearson_ignores_positive_affine_maps(rng):
    a, b = rng.standard_normal((2, 40))
    b = b + 0.5 * a
    rho = pearson(a, b)
    assert pearson(3.0 * a + 5.0, 0.2 * b - 1.0) == pytest.approx(rho, abs=1e-12)
    assert pearson(-3.0 * a, b) == pytest.approx(-rho, abs=1e-12)


def test_pearson_zero_variance():
    with pytest.raises(DegenerateVarianceError):
        pearson([1, 1, 1], [1, 2, 3])


def test_standardize():
    z = standardize([2.0, 4.0, 6.0, 8.0])
    assert z.mean() == pytest.approx(0.0)
    assert z.std() == pytest.approx(1.0)
    with pytest.raises(DegenerateVarianceError):
        standardize([3.0, 3.0])


def test_linear_interp():
    assert linear_interp([0.0, 1.0], [0.0, 10.0], [0.5])[0] == pytest.approx(5.0)
    assert linear_interp([0.0, 1.0, 2.0], [0.0, 10.0, 4.0], [1.0])[0] == 10.0
    assert linear_interp([0.0, 1.0], [0.0, 10.0], [-1.0])[0] == 0.0
    assert linear_interp([0.0, 1.0], [0.0, 10.0], [3.0])[0] == 10.0


def test_linear_interp_rejects_unsorted_source():
    with pytest.raises(OrderingError):
        linear_interp([0.0, 2.0, 1.0], [0.0, 1.0, 2.0], [0.5])
