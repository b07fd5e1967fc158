import numpy as np
import pytest

import tvsense as tv
from tvsense.detect import Psd, WelchConfig
from tvsense.impair import tilt_gains

from conftest import random_iq


def tone_power(buf, freq_hz):
    n = np.arange(len(buf))
    probe = np.exp(2j * np.pi * freq_hz / buf.sample_rate_hz * n)
    # vdot conjugates the probe, so this demodulates the +freq_hz line
    return np.abs(np.vdot(probe, buf.samples) / len(buf)) ** 2


class TestDesignBandstop:
    def test_empty_centers_identity(self):
        taps = tv.design_bandstop(12.5e6, [])
        assert taps.shape == (1,)
        assert taps[0] == 1.0

    def test_spur_attenuation(self):
        noise = tv.gen_awgn(200_000, 1.0, seed=1)
        spurred = tv.inject_spurs(noise, (2.5e6,), 20.0, 1.0, seed=2)
        taps = tv.design_bandstop(12.5e6, [2.5e6], stop_width_hz=50e3, atten_db=40.0)
        filtered = tv.apply_filter(spurred, taps)
        before = tone_power(spurred, 2.5e6)
        after = tone_power(filtered, 2.5e6)
        assert 10 * np.log10(before / after) >= 40.0

    def test_deep_design_meets_template(self):
        rate = 12.5e6
        centers = [0.0, 2.5e6]
        width, atten = 50e3, 80.0
        taps = tv.design_bandstop(rate, centers, stop_width_hz=width, atten_db=atten)
        freqs = np.fft.fftshift(np.fft.fftfreq(1 << 16, 1.0 / rate))
        resp = np.fft.fftshift(np.abs(np.fft.fft(taps, 1 << 16)))
        db = 20 * np.log10(np.maximum(resp, 1e-30))
        for c in centers:
            stop = np.abs(freqs - c) <= width / 2
            assert db[stop].max() <= -atten
        passband = np.ones(freqs.size, bool)
        for c in centers:
            passband &= np.abs(freqs - c) >= 2 * width
        passband &= np.abs(freqs) <= 0.48 * rate
        assert np.abs(db[passband]).max() <= 0.5

    def test_h0_metric_distribution_barely_shifts(self):
        """Band-stop conditioning must not move the coherent-sum null tail."""
        taps = tv.design_bandstop(9.136e6, [2.5e6], stop_width_hz=50e3, atten_db=60.0)
        plain, filt = [], []
        for t in range(3000):
            noise = tv.gen_awgn(10_000, 1.0, seed=1000 + t, rate_hz=9.136e6)
            plain.append(tv.cp_sum_metric(noise, 2048) / tv.estimate_power(noise))
            fbuf = tv.apply_filter(noise, taps)
            filt.append(tv.cp_sum_metric(fbuf, 2048) / tv.estimate_power(fbuf))
        q_plain = np.quantile(plain, 0.99)
        q_filt = np.quantile(filt, 0.99)
        assert abs(q_filt - q_plain) / q_plain < 0.05

    def test_infeasible_coverage(self):
        with pytest.raises(ValueError, match="whole band"):
            tv.design_bandstop(1e6, [-3e5, -1e5, 1e5, 3e5], stop_width_hz=100e3)

    def test_out_of_band_stop(self):
        with pytest.raises(ValueError, match="Nyquist"):
            tv.design_bandstop(1e6, [0.6e6])

    def test_attenuation_floor(self):
        with pytest.raises(ValueError, match="40"):
            tv.design_bandstop(1e6, [1e5], atten_db=30.0)


class TestApplyFilter:
    def test_unit_tap_identity(self):
        rng = np.random.default_rng(3)
        buf = random_iq(rng, 512)
        out = tv.apply_filter(buf, np.array([1.0]))
        np.testing.assert_allclose(out.samples, buf.samples, rtol=1e-12)

    def test_pure_delay_shifts_and_trims(self):
        rng = np.random.default_rng(4)
        buf = random_iq(rng, 64)
        taps = np.zeros(7)
        taps[6] = 1.0  # group delay 3 then extra delay 3
        out = tv.apply_filter(buf, taps)
        np.testing.assert_allclose(out.samples[3:], buf.samples[:-3], rtol=1e-12)

    def test_matches_direct_convolution(self):
        rng = np.random.default_rng(5)
        buf = random_iq(rng, 200)
        taps = rng.standard_normal(9)
        got = tv.apply_filter(buf, taps)
        want = np.convolve(buf.samples, taps, mode="full")[4 : 4 + 200]
        np.testing.assert_allclose(got.samples, want, rtol=1e-10)

    def test_linearity(self):
        rng = np.random.default_rng(6)
        x, y = random_iq(rng, 256), random_iq(rng, 256)
        taps = rng.standard_normal(11)
        a, b = 2.5, -1.25j
        lhs = tv.apply_filter(tv.IqBuffer(a * x.samples + b * y.samples, 1e6), taps)
        rhs = a * tv.apply_filter(x, taps).samples + b * tv.apply_filter(y, taps).samples
        np.testing.assert_allclose(lhs.samples, rhs, rtol=1e-12)

    def test_even_length_rejected(self):
        buf = tv.gen_awgn(10, 1.0, seed=1)
        with pytest.raises(ValueError, match="odd"):
            tv.apply_filter(buf, np.ones(4))
        with pytest.raises(ValueError, match="empty"):
            tv.apply_filter(buf, np.zeros(0))


class TestEstimateNoisePsd:
    def test_white_floor(self):
        caps = [tv.gen_awgn(100_000, 1.0, seed=s) for s in range(3)]
        w = tv.estimate_noise_psd(caps, WelchConfig())
        assert np.all(np.abs(w.bins - 1.0) < 0.10)

    def test_tilted_floor_tracks_profile(self):
        gains = tilt_gains(256, 3.0)
        caps = [tv.shape_noise_floor(tv.gen_awgn(500_000, 1.0, seed=s), gains) for s in range(2)]
        w = tv.estimate_noise_psd(caps, WelchConfig())
        shifted = np.fft.fftshift(w.bins)
        inner = slice(4, 252)  # clear of the wrap transition
        np.testing.assert_allclose(shifted[inner], gains[inner] ** 2, rtol=0.10)

    def test_identical_captures_idempotent(self):
        cap = tv.gen_awgn(50_000, 1.0, seed=9)
        one = tv.estimate_noise_psd([cap], WelchConfig())
        two = tv.estimate_noise_psd([cap, cap], WelchConfig())
        np.testing.assert_allclose(one.bins, two.bins, rtol=1e-12)

    def test_insufficient_data(self):
        with pytest.raises(ValueError, match="insufficient data"):
            tv.estimate_noise_psd([tv.gen_awgn(1000, 1.0, seed=1)], WelchConfig())


class TestEqualizePsd:
    def test_self_quotient_is_flat(self):
        rng = np.random.default_rng(10)
        bins = rng.random(64) + 0.5
        out = tv.equalize_psd(Psd(bins), Psd(bins))
        np.testing.assert_allclose(out.bins, 1.0, rtol=1e-12)

    def test_double_gives_two(self):
        rng = np.random.default_rng(11)
        bins = rng.random(64) + 0.5
        out = tv.equalize_psd(Psd(2 * bins), Psd(bins))
        np.testing.assert_allclose(out.bins, 2.0, rtol=1e-12)

    def test_exclusions_union(self):
        out = tv.equalize_psd(Psd(np.ones(8), frozenset({1})), Psd(np.ones(8), frozenset({5})))
        assert out.excluded == frozenset({1, 5})

    def test_zero_reference_bin_rejected(self):
        w = np.ones(8)
        w[3] = 0.0
        with pytest.raises(ValueError, match="zero bin"):
            tv.equalize_psd(Psd(np.ones(8)), Psd(w))
        # but fine when that bin is excluded
        out = tv.equalize_psd(Psd(np.ones(8)), Psd(w, frozenset({3})))
        assert out.bins[0] == 1.0

    def test_equalization_recovers_off_floor_tone(self):
        """A narrowband carrier parked where the floor sags scores a higher
        peak-to-average after equalization."""
        gains = tilt_gains(256, 6.0)
        rate = 12.5e6
        w_ref = tv.estimate_noise_psd(
            [tv.shape_noise_floor(tv.gen_awgn(500_000, 1.0, seed=s), gains) for s in range(2)],
            WelchConfig(),
        )
        tone = tv.gen_fm_wm(tv.WmParams(carrier_offset_hz=-3.3e6), 0.01, rate, seed=3)
        noise = tv.gen_awgn(len(tone), 1.0, seed=4)
        mixed = tv.mix_at_snr(tone, noise, -14.0)
        shaped = tv.shape_noise_floor(mixed, gains)
        psd = tv.estimate_psd_welch(shaped, WelchConfig())
        assert tv.psd_par(tv.equalize_psd(psd, w_ref)) > tv.psd_par(psd)

    def test_noise_only_equalized_par_near_one(self):
        gains = tilt_gains(256, 3.0)
        w_ref = tv.estimate_noise_psd(
            [tv.shape_noise_floor(tv.gen_awgn(700_000, 1.0, seed=s), gains) for s in range(2)],
            WelchConfig(),
        )
        fresh = tv.shape_noise_floor(tv.gen_awgn(150_000, 1.0, seed=77), gains)
        eq = tv.equalize_psd(tv.estimate_psd_welch(fresh, WelchConfig()), w_ref)
        assert tv.psd_par(eq) == pytest.approx(1.0, abs=0.35)
        assert np.abs(eq.bins.mean() - 1.0) < 0.10


class TestNoisePsdIo:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(30)
        psd = Psd(rng.random(64) + 0.2, frozenset({3, 17}))
        path = tmp_path / "floor.ini"
        tv.save_noise_psd(str(path), psd)
        back = tv.load_noise_psd(str(path))
        np.testing.assert_array_equal(back.bins, psd.bins)
        assert back.excluded == psd.excluded

    def test_roundtrip_without_exclusions(self, tmp_path):
        psd = Psd(np.ones(8))
        path = tmp_path / "floor.ini"
        tv.save_noise_psd(str(path), psd)
        assert tv.load_noise_psd(str(path)).excluded == frozenset()


class TestSpurExclusion:
    def test_bins_and_widening(self):
        bins = tv.spur_exclusion_bins([0.0, 2.5e6], 12.5e6, 256, widen=2)
        assert bins == frozenset({254, 255, 0, 1, 2, 49, 50, 51, 52, 53})

    def test_exclusion_never_raises_sparsity_for_hot_bins(self):
        # averaged-periodogram floors are tight around their mean, so dropping
        # a handful of spur bins removes them from the count without pushing
        # floor bins over the relative level
        rng = np.random.default_rng(12)
        for _ in range(30):
            vals = 1.0 + 0.06 * rng.standard_normal(256)
            hot = rng.choice(256, size=3, replace=False)
            vals[hot] = rng.uniform(20.0, 100.0, size=3)
            base = tv.psd_ds(Psd(vals), 0.2)
            excl = tv.psd_ds(Psd(vals, frozenset(int(h) for h in hot)), 0.2)
            assert excl <= base
