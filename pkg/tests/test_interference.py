import numpy as np
import pytest

from imdcancel import (
    ComplexSeq,
    DlWaveformConfig,
    NotchState,
    RappPa,
    UlWaveformConfig,
    awgn,
    compose_rx,
    default_gamma_table,
    fir_convolve,
    gen_downlink,
    gen_leakage,
    gen_uplink,
    imd_synthesize,
    mean_power_db,
)
from imdcancel.interference import GammaTable, ImdCoefficients


class TestLeakage:
    def test_tap_count(self):
        for seed in range(5):
            assert gen_leakage(seed).fir.taps.size == 21

    def test_isolation_power(self):
        x = awgn(200_000, 1.0, seed=1)
        ch = gen_leakage(seed=3, isolation_db=50.0)
        y = fir_convolve(x, ch.fir)
        assert abs(mean_power_db(y) + 50.0) < 0.5

    def test_seed_determinism(self):
        a = gen_leakage(7).fir.taps
        b = gen_leakage(7).fir.taps
        assert np.array_equal(a, b)

    def test_decaying_envelope(self):
        for seed in range(20):
            mags = np.abs(gen_leakage(seed).fir.taps)
            assert mags[20] <= mags[0] * 10 ** (-40 / 20)
            for k in range(1, 21):
                assert mags[k] <= mags[max(0, k - 3) : k].max()

    def test_bad_isolation(self):
        with pytest.raises(ValueError):
            gen_leakage(1, isolation_db=0.0)


class TestImdSynthesize:
    def test_zero_coefficients(self):
        x = awgn(512, 1.0, seed=0)
        y = imd_synthesize(ImdCoefficients(0.0, 0.0, 0.0), x)
        assert np.all(y.samples == 0)

    def test_constant_input_decays(self):
        x = ComplexSeq(np.full(8000, 0.8 + 0.2j))
        y = imd_synthesize(ImdCoefficients(1.0 + 1.0j, 0.3, 0.1j), x)
        assert abs(y.samples[-1]) < 1e-6 * abs(y.samples[0])

    def test_matches_per_sample_oracle(self):
        rng = np.random.default_rng(5)
        v = rng.standard_normal(4096) + 1j * rng.standard_normal(4096)
        coeffs = ImdCoefficients(1.0 + 0.0j, 0.1 - 0.05j, 0.001j)
        y = imd_synthesize(coeffs, ComplexSeq(v)).samples
        # brute-force oracle: pointwise polynomial then notch recursion
        ref = np.zeros(4096, dtype=complex)
        prev_u = prev_y = 0.0
        for n in range(4096):
            m2 = abs(v[n]) ** 2
            u = coeffs.c2 * m2 + coeffs.c4 * m2**2 + coeffs.c6 * m2**3
            ref[n] = u - prev_u + 0.998 * prev_y
            prev_u, prev_y = u, ref[n]
        assert np.max(np.abs(y - ref)) < 1e-12 * max(1.0, np.max(np.abs(ref)))

    def test_invariant_under_phase_rotation(self):
        rng = np.random.default_rng(6)
        v = rng.standard_normal(1024) + 1j * rng.standard_normal(1024)
        coeffs = ImdCoefficients(0.7 - 0.2j, 0.05j, 0.001)
        base = imd_synthesize(coeffs, ComplexSeq(v)).samples
        rot = imd_synthesize(coeffs, ComplexSeq(v * np.exp(1.23j))).samples
        assert np.max(np.abs(base - rot)) < 1e-12 * max(1.0, np.max(np.abs(base)))

    @pytest.mark.parametrize("order,coeffs", [
        (2, ImdCoefficients(1.0, 0, 0)),
        (4, ImdCoefficients(0, 1.0, 0)),
        (6, ImdCoefficients(0, 0, 1.0)),
    ])
    def test_per_order_amplitude_scaling(self, order, coeffs):
        rng = np.random.default_rng(7)
        v = rng.standard_normal(512) + 1j * rng.standard_normal(512)
        a = 1.7
        base = imd_synthesize(coeffs, ComplexSeq(v)).samples
        scaled = imd_synthesize(coeffs, ComplexSeq(a * v)).samples
        ref = a**order * base
        # the notch recursion's long memory accumulates rounding noise
        assert np.max(np.abs(scaled - ref)) < 1e-10 * np.max(np.abs(ref))


class TestScaledQ:
    def test_rotation_preserves_magnitude(self):
        c = ImdCoefficients(3.0 - 4.0j, -1.0 + 0.5j, 0.2j)
        s = c.to_scaled_q()
        for a, b in [(c.c2, s.c2), (c.c4, s.c4), (c.c6, s.c6)]:
            assert abs(abs(a) - abs(b)) < 1e-12

    def test_q_is_minus_i_path(self):
        c = ImdCoefficients(3.0 - 4.0j, -1.0 + 0.5j, 0.0)
        s = c.to_scaled_q()
        assert s.c2.imag == pytest.approx(-s.c2.real)
        assert s.c4.imag == pytest.approx(-s.c4.real)
        # the in-phase sign survives the rotation
        assert np.sign(s.c2.real) == np.sign(c.c2.real)
        assert np.sign(s.c4.real) == np.sign(c.c4.real)

    def test_zero_passthrough(self):
        s = ImdCoefficients(1.0, 0.0, 0.0).to_scaled_q()
        assert s.c4 == 0 and s.c6 == 0


def tiny_signals(n=2048, seed=0):
    ul = gen_uplink(UlWaveformConfig(), 1, seed)
    dl = gen_downlink(DlWaveformConfig(), 1, seed + 1)
    return ul, dl


class TestComposeRx:
    def test_zero_gamma_zero_noise(self):
        ul, dl = tiny_signals()
        comp = compose_rx(
            ul, None, gen_leakage(0).fir, ImdCoefficients(0.0), dl,
            leakage_power_db=-20.0, snr_db=np.inf, noise_seed=1,
        )
        assert np.array_equal(comp.y_tot.samples, comp.y_rx_filtered.samples)

    def test_composition_identity(self):
        ul, dl = tiny_signals()
        table = default_gamma_table()
        comp = compose_rx(
            ul, RappPa.for_signal(ul), gen_leakage(1).fir, table.lookup(-14.0), dl,
            leakage_power_db=-14.0, noise_seed=2,
        )
        total = comp.y_rx_filtered.samples + comp.noise.samples + comp.y_imd.samples
        assert np.max(np.abs(comp.y_tot.samples - total)) == 0.0

    def test_power_targets_hit(self):
        ul, dl = tiny_signals()
        comp = compose_rx(
            ul, RappPa.for_signal(ul), gen_leakage(2).fir,
            default_gamma_table().lookup(-20.0), dl,
            leakage_power_db=-20.0, rx_power_db=0.0, snr_db=10.0, noise_seed=3,
        )
        assert abs(mean_power_db(comp.y_txl) + 20.0) < 1e-9
        assert abs(mean_power_db(comp.y_rx_filtered)) < 1e-9
        assert abs(mean_power_db(comp.noise) + 10.0) < 1e-9

    def test_high_leakage_interference_dominates(self):
        # at -14 dB leakage the uncancelled interference exceeds the Rx power
        ul = gen_uplink(UlWaveformConfig(), 2, 4)
        dl = gen_downlink(DlWaveformConfig(), 2, 5)
        comp = compose_rx(
            ul, RappPa.for_signal(ul), gen_leakage(3).fir,
            default_gamma_table().lookup(-14.0), dl,
            leakage_power_db=-14.0, noise_seed=4,
        )
        p_rx = comp.y_rx_filtered.mean_power()
        p_int = comp.y_imd.mean_power() + comp.noise.mean_power()
        assert 10 * np.log10(p_rx / p_int) < 0.0

    def test_length_mismatch_rejected(self):
        ul, dl = tiny_signals()
        short = ComplexSeq(dl.samples[:100], dl.rate)
        with pytest.raises(ValueError):
            compose_rx(ul, None, gen_leakage(0).fir, ImdCoefficients(1.0), short,
                       leakage_power_db=-20.0)

    def test_determinism(self):
        ul, dl = tiny_signals()
        kwargs = dict(leakage_power_db=-18.0, noise_seed=9)
        a = compose_rx(ul, None, gen_leakage(4).fir, ImdCoefficients(1.0, 0.1), dl, **kwargs)
        b = compose_rx(ul, None, gen_leakage(4).fir, ImdCoefficients(1.0, 0.1), dl, **kwargs)
        assert np.array_equal(a.y_tot.samples, b.y_tot.samples)


class TestGammaTable:
    def test_exact_at_grid_points(self):
        table = default_gamma_table()
        for g, entry in zip(table.grid_db, table.entries):
            got = table.lookup(float(g))
            assert got.c2 == entry.c2 and got.c4 == entry.c4 and got.c6 == entry.c6

    def test_linear_between_grid_points(self):
        table = GammaTable(
            np.array([-20.0, -10.0]),
            [ImdCoefficients(1.0 + 1.0j, 0.0), ImdCoefficients(3.0 - 1.0j, 2.0)],
        )
        mid = table.lookup(-15.0)
        assert mid.c2 == pytest.approx(2.0 + 0.0j)
        assert mid.c4 == pytest.approx(1.0)

    def test_clamped_outside(self):
        table = default_gamma_table()
        assert table.lookup(-50.0).c2 == table.entries[0].c2
        assert table.lookup(0.0).c2 == table.entries[-1].c2

    def test_low_power_second_order_dominates(self):
        # at the bottom of the range the higher-order contributions are <10%
        table = default_gamma_table()
        ul = gen_uplink(UlWaveformConfig(), 2, 11)
        y = fir_convolve(
            ComplexSeq(RappPa.for_signal(ul).gain * ul.samples), gen_leakage(5).fir
        )
        scale = np.sqrt(10 ** (-30.0 / 10.0) / y.mean_power())
        mag = np.abs(y.samples * scale)
        coeffs = table.lookup(-30.0)
        m2 = abs(coeffs.c2) * np.mean(mag**2)
        m4 = abs(coeffs.c4) * np.mean(mag**4)
        m6 = abs(coeffs.c6) * np.mean(mag**6)
        assert m4 < 0.1 * m2
        assert m6 < 0.1 * m2

    def test_interference_ratio_monotone_in_leakage(self):
        table = default_gamma_table()
        ul = gen_uplink(UlWaveformConfig(), 2, 12)
        dl = gen_downlink(DlWaveformConfig(), 2, 13)
        pa = RappPa.for_signal(ul)
        leak = gen_leakage(6).fir
        ratios = []
        for power in (-30.0, -25.0, -20.0, -15.0, -10.0):
            comp = compose_rx(ul, pa, leak, table.lookup(power), dl,
                              leakage_power_db=power, noise_seed=14)
            ratios.append(comp.y_imd.mean_power() / comp.y_rx_filtered.mean_power())
        assert all(b > a for a, b in zip(ratios, ratios[1:]))
