import numpy as np
import pytest

from imdcancel import (
    ComplexSeq,
    FirFilter,
    NotchState,
    awgn,
    build_dct_whitener,
    dct_matrix,
    delay_line_covariance,
    fir_convolve,
    mean_power_db,
    notch_apply,
    welch_psd,
)


def seq(vals, rate=30.72e6):
    return ComplexSeq(np.asarray(vals), rate)


class TestFirConvolve:
    def test_identity_filter(self):
        y = fir_convolve(seq([1, 0, 0]), FirFilter([1.0]))
        assert np.allclose(y.samples, [1, 0, 0])

    def test_moving_average(self):
        y = fir_convolve(seq([1, 1]), FirFilter([0.5, 0.5]))
        assert np.allclose(y.samples, [0.5, 1.0])

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        h = rng.standard_normal(21) + 1j * rng.standard_normal(21)
        expected = np.zeros(64, dtype=complex)
        for n in range(64):
            for k in range(21):
                if n - k >= 0:
                    expected[n] += h[k] * x[n - k]
        y = fir_convolve(seq(x), FirFilter(h))
        assert np.max(np.abs(y.samples - expected)) < 1e-12

    def test_linearity(self):
        rng = np.random.default_rng(8)
        x1 = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        x2 = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        h = FirFilter(rng.standard_normal(9) + 1j * rng.standard_normal(9))
        a, b = 1.7 - 0.3j, -0.4 + 2.2j
        lhs = fir_convolve(seq(a * x1 + b * x2), h).samples
        rhs = a * fir_convolve(seq(x1), h).samples + b * fir_convolve(seq(x2), h).samples
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            fir_convolve(seq([]), FirFilter([1.0]))

    def test_empty_filter_rejected(self):
        with pytest.raises(ValueError):
            FirFilter([])


class TestNotch:
    def test_dc_rejection(self):
        y = notch_apply(NotchState(), seq(np.ones(10000)))
        assert abs(y.samples[-1]) < 1e-8

    def test_impulse_matches_direct_recursion(self):
        x = np.zeros(50)
        x[0] = 1.0
        y = notch_apply(NotchState(), seq(x)).samples
        ref = np.zeros(50, dtype=complex)
        prev_x = prev_y = 0.0
        for n in range(50):
            ref[n] = x[n] - prev_x + 0.998 * prev_y
            prev_x, prev_y = x[n], ref[n]
        assert np.max(np.abs(y - ref)) < 1e-14

    def test_zero_in_zero_out(self):
        y = notch_apply(NotchState(), seq(np.zeros(16)))
        assert np.all(y.samples == 0)

    def test_streaming_matches_block(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(256) + 1j * rng.standard_normal(256)
        whole = notch_apply(NotchState(), seq(x)).samples
        st = NotchState()
        parts = np.concatenate(
            [notch_apply(st, seq(x[:100])).samples, notch_apply(st, seq(x[100:])).samples]
        )
        assert np.max(np.abs(whole - parts)) < 1e-14

    def test_scalar_step_matches_block(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(64)
        whole = notch_apply(NotchState(), seq(x)).samples
        st = NotchState()
        scalar = np.array([st.step(v) for v in x])
        assert np.max(np.abs(whole - scalar)) < 1e-14


class TestWelchPsd:
    def test_tone_peak_and_power(self):
        rate = 1e6
        n = 65536
        f0 = 125e3
        t = np.arange(n) / rate
        x = ComplexSeq(np.exp(2j * np.pi * f0 * t), rate)
        freqs, psd = welch_psd(x, 4096, 0.5)
        assert abs(freqs[np.argmax(psd)] - f0) < rate / 4096 + 1e-9
        total = np.sum(psd) * (freqs[1] - freqs[0])
        assert abs(total - 1.0) < 0.05

    def test_white_noise_flat(self):
        rate = 1e6
        x = awgn(500 * 512, 2.0, seed=5, rate=rate)
        freqs, psd = welch_psd(x, 512, 0.0)
        level_db = 10 * np.log10(psd)
        expected_db = 10 * np.log10(2.0 / rate)
        assert np.max(np.abs(level_db - expected_db)) < 1.0

    def test_zero_signal(self):
        _, psd = welch_psd(seq(np.zeros(4096)), 1024, 0.5)
        assert np.all(psd == 0)

    def test_parseval_random_signals(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            x = rng.standard_normal(8192) + 1j * rng.standard_normal(8192)
            cs = ComplexSeq(x, 2e6)
            freqs, psd = welch_psd(cs, 1024, 0.5)
            total = np.sum(psd) * (freqs[1] - freqs[0])
            assert abs(total - cs.mean_power()) / cs.mean_power() < 0.05

    def test_segment_too_long_rejected(self):
        with pytest.raises(ValueError):
            welch_psd(seq(np.zeros(100)), 128, 0.5)


class TestMeanPowerDb:
    def test_unit_samples(self):
        assert mean_power_db(seq(np.ones(16))) == pytest.approx(0.0, abs=1e-12)

    def test_one_plus_j(self):
        v = mean_power_db(seq(np.full(8, 1 + 1j)))
        assert v == pytest.approx(10 * np.log10(2), abs=1e-9)

    def test_unit_noise(self):
        x = awgn(100_000, 1.0, seed=2)
        assert abs(mean_power_db(x)) < 0.1

    def test_zero_sentinel(self):
        assert mean_power_db(seq(np.zeros(4))) == -np.inf


class TestAwgn:
    def test_zero_power(self):
        assert np.all(awgn(100, 0.0, seed=1).samples == 0)

    def test_power_estimate(self):
        x = awgn(100_000, 1.0, seed=3)
        assert abs(x.mean_power() - 1.0) < 0.02

    def test_seed_determinism(self):
        a = awgn(512, 0.7, seed=9).samples
        b = awgn(512, 0.7, seed=9).samples
        assert np.array_equal(a, b)

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            awgn(10, -1.0, seed=0)


class TestDctWhitener:
    def test_orthonormality(self):
        for size in (1, 4, 16, 33):
            d = dct_matrix(size)
            assert np.max(np.abs(d @ d.T - np.eye(size))) < 1e-10

    def test_scaled_identity_covariance(self):
        sigma2 = 4.0
        pipe = build_dct_whitener(sigma2 * np.eye(8), 8)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        v = pipe.apply(x)
        assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(x) / 2.0, rel=1e-12)

    def test_ar1_condition_number_shrinks(self):
        rho = 0.95
        size = 16
        idx = np.arange(size)
        cxx = rho ** np.abs(idx[:, None] - idx[None, :])
        pipe = build_dct_whitener(cxx, size)
        rotated = (pipe.power_norm[:, None] * (pipe.transform @ cxx @ pipe.transform.T)
                   * pipe.power_norm[None, :])
        cond_before = np.linalg.cond(cxx)
        cond_after = np.linalg.cond(rotated)
        assert cond_after < cond_before

    def test_size_one(self):
        pipe = build_dct_whitener(np.array([[4.0]]), 1)
        assert pipe.apply(np.array([2.0 + 0j]))[0] == pytest.approx(1.0)

    def test_non_hermitian_rejected(self):
        bad = np.array([[1.0, 1.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            build_dct_whitener(bad, 2)

    def test_whitened_variance_ar1(self):
        # per-component variance of the transformed delay-line vector ~ 1
        rng = np.random.default_rng(21)
        n = 100_000
        innov = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        x = np.empty(n, dtype=complex)
        acc = 0.0
        rho = 0.9
        scale = np.sqrt(1 - rho**2)
        for i in range(n):
            acc = rho * acc + scale * innov[i]
            x[i] = acc
        size = 8
        pipe = build_dct_whitener(delay_line_covariance(x, size), size)
        from imdcancel.harness import delay_matrix

        v = (pipe.combined @ delay_matrix(x, size).T).T[size:]
        var = np.mean(np.abs(v) ** 2, axis=0)
        assert np.max(np.abs(10 * np.log10(var))) < 0.5

    def test_delay_line_covariance_shape(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
        c = delay_line_covariance(x, 6)
        assert c.shape == (6, 6)
        assert np.max(np.abs(c - c.conj().T)) < 1e-12
        assert np.max(np.abs(np.diag(c).real - 2.0)) < 0.2
