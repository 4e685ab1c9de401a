import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atcdp import signal
from atcdp.errors import InvalidInputError
from synth import SR, bursty, mixture

FRAME = signal.SegmentationConfig().frame_length
HOP = signal.SegmentationConfig().hop


def tone(duration, start, length, sr=SR, freq=440.0, amp=0.5):
    x = np.zeros(int(duration * sr))
    i, j = int(start * sr), int((start + length) * sr)
    t = np.arange(j - i) / sr
    x[i:j] = amp * np.sin(2 * np.pi * freq * t)
    return signal.Waveform(x, sr)


class TestWaveform:
    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidInputError):
            signal.Waveform(np.array([0.0, 1.5]), SR)

    def test_rejects_bad_rate(self):
        with pytest.raises(InvalidInputError):
            signal.Waveform(np.zeros(10), 0)

    def test_samples_read_only(self):
        w = signal.Waveform(np.zeros(10), SR)
        with pytest.raises(ValueError):
            w.samples[0] = 1.0

    def test_wav_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        x = np.clip(rng.normal(size=8000) * 0.2, -1, 1)
        p = tmp_path / "a.wav"
        signal.Waveform(x, 8000).to_wav(p)
        w = signal.Waveform.from_wav(p)
        assert w.sample_rate == 8000
        assert len(w) == 8000
        # 16-bit quantization
        assert np.max(np.abs(w.samples - x)) <= 1 / 32768 + 1e-12

    def test_unreadable_wav(self, tmp_path):
        p = tmp_path / "bad.wav"
        p.write_bytes(b"not a wav file")
        with pytest.raises((OSError, EOFError, ValueError)):
            signal.Waveform.from_wav(p)


class TestSegmentation:
    def test_silence(self):
        assert signal.segment_by_energy(signal.Waveform(np.zeros(5 * SR), SR)) == []

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            signal.segment_by_energy(signal.Waveform(np.zeros(0), SR))

    def test_centered_burst(self):
        segs = signal.segment_by_energy(tone(5.0, 2.0, 1.0))
        assert len(segs) == 1
        tol = FRAME + 1e-9
        assert abs(segs[0].start - 2.0) <= tol
        assert abs(segs[0].end - 3.0) <= tol

    def test_two_bursts(self):
        x = tone(5.0, 0.5, 1.0).samples + tone(5.0, 3.5, 1.0).samples
        segs = signal.segment_by_energy(signal.Waveform(x, SR))
        assert len(segs) == 2
        assert segs[0].end < segs[1].start

    def test_short_gap_merged(self):
        x = tone(5.0, 1.0, 1.0).samples + tone(5.0, 2.1, 1.0).samples
        segs = signal.segment_by_energy(signal.Waveform(x, SR))
        assert len(segs) == 1

    def test_short_burst_dropped(self):
        assert signal.segment_by_energy(tone(5.0, 2.0, 0.05)) == []

    def test_segments_valid(self):
        rng = np.random.default_rng(3)
        w = bursty(6.0, [(0.5, 1.2), (2.0, 2.4), (4.0, 5.0)], rng)
        segs = signal.segment_by_energy(w)
        energies = signal.frame_energies(w.samples, SR, FRAME, HOP)
        threshold = np.median(energies) * 4
        assert segs == sorted(segs)
        for a, b in zip(segs, segs[1:]):
            assert a.end <= b.start
        for s in segs:
            assert 0 <= s.start < s.end <= w.duration
            assert s.duration >= 0.2
            i0 = int(round(s.start / HOP))
            i1 = int(round((s.end - FRAME) / HOP))
            assert energies[i0 : i1 + 1].mean() > threshold

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.01, 1.0))
    def test_gain_invariant(self, k):
        rng = np.random.default_rng(5)
        w = bursty(4.0, [(0.5, 1.5), (2.5, 3.0)], rng, level=0.2)
        scaled = signal.Waveform(w.samples * k, SR)
        assert signal.segment_by_energy(scaled) == signal.segment_by_energy(w)


class TestGain:
    def test_spikes(self):
        x = np.zeros(100)
        x[40] = 0.9
        assert list(signal.detect_spikes(x)) == [40, 41]

    def test_uniform_identity(self):
        # smooth and already above the target level: nothing to raise
        w = tone(1.0, 0.0, 1.0, amp=0.3)
        assert signal.apply_segment_gain(w) is w

    def test_quiet_half_raised(self):
        x = tone(2.0, 0.0, 2.0, amp=0.2).samples.copy()
        x[SR:] *= 0.1  # 20 dB quieter
        x[SR] = 0.95  # single-sample spike at the boundary
        out = signal.apply_segment_gain(signal.Waveform(x, SR))
        second = out.samples[SR + 1 :]
        rms = np.sqrt(np.mean(second**2))
        assert abs(20 * np.log10(rms / 0.1)) <= 1.0
        # louder partition untouched
        assert np.array_equal(out.samples[:SR], x[:SR])

    def test_clip_cap(self):
        x = np.full(SR, 0.001)
        x[SR // 2] = 0.5  # peak forces the cap
        out = signal.apply_segment_gain(signal.Waveform(x, SR), signal.GainConfig(target_rms=0.5, max_gain_db=80))
        assert np.isclose(np.max(np.abs(out.samples)), 1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.001, 0.5))
    def test_bounded_and_length(self, seed, scale):
        rng = np.random.default_rng(seed)
        x = np.clip(rng.laplace(size=4000) * scale, -1, 1)
        out = signal.apply_segment_gain(signal.Waveform(x, SR))
        assert len(out) == len(x)
        assert np.max(np.abs(out.samples)) <= 1.0


class TestWada:
    def test_too_short(self):
        with pytest.raises(InvalidInputError):
            signal.estimate_wada_snr(np.ones(3999) * 0.1)

    def test_all_zero(self):
        with pytest.raises(InvalidInputError):
            signal.estimate_wada_snr(np.zeros(8000))

    # Quantile samples reproduce the population statistic of a distribution,
    # so they test the estimator at its expectation without sampling noise.
    # Population values: Laplacian |x| ~ Exp gives Euler's gamma; Gaussian
    # gives (ln(4/pi) + gamma) / 2.

    @staticmethod
    def _quantiles(n):
        return (np.arange(n) + 0.5) / n

    def test_population_statistics(self):
        u = self._quantiles(200_000)
        lap = -np.log1p(-u)
        gauss = np.sqrt(2) * _erfinv(u)
        assert abs(signal.wada_statistic(lap) - 0.5772156649) < 1e-3
        assert abs(signal.wada_statistic(gauss) - 0.5 * (np.log(4 / np.pi) + 0.5772156649)) < 1e-3

    def test_clean_laplacian(self):
        u = self._quantiles(100_000)
        x = -np.log1p(-u) * np.where(np.arange(u.size) % 2, 1, -1) * 0.05
        est = signal.estimate_wada_snr(x)
        assert est.value >= 35

    def test_gaussian_noise(self):
        u = self._quantiles(100_000)
        x = np.sqrt(2) * _erfinv(u) * 0.1
        est = signal.estimate_wada_snr(x)
        lo = signal.load_wada_table()["snr_db"][0]
        assert est.value <= lo + 3

    def test_random_laplacian_median_high(self):
        rng = np.random.default_rng(11)
        est = [signal.estimate_wada_snr(rng.laplace(size=100_000)).value for _ in range(15)]
        assert np.median(est) >= 35

    def test_table_shape(self):
        table = signal.load_wada_table()
        assert table["snr_db"][0] == -20 and table["snr_db"][-1] == 40
        assert np.all(np.diff(table["statistic"]) > 0)
        assert table["samples_per_point"] >= 10**6

    def test_table_reproducible(self):
        a = signal.build_wada_table(samples_per_point=20000, snr_grid=[0, 10, 20])
        b = signal.build_wada_table(samples_per_point=20000, snr_grid=[0, 10, 20])
        assert a == b

    def test_bundled_matches_generator(self):
        # regenerate a few grid points at the bundled sample size
        table = signal.load_wada_table()
        fresh = signal.build_wada_table(table["samples_per_point"], snr_grid=table["snr_db"],
                                        seed=table["seed"])
        assert np.allclose(fresh["statistic"], table["statistic"], atol=1e-12)

    def test_clamped_flag(self):
        rng = np.random.default_rng(13)
        assert signal.estimate_wada_snr(rng.laplace(size=SR)).clamped

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1e-3, 1e3), st.integers(0, 1000))
    def test_scale_invariant(self, k, seed):
        rng = np.random.default_rng(seed)
        x = mixture(10, 8000, rng, speech_scale=0.001)
        a = signal.estimate_wada_snr(x).value
        b = signal.estimate_wada_snr(x * k).value
        assert abs(a - b) < 0.1

    @pytest.mark.parametrize("snr", [0, 10])
    def test_recovery_low_snr(self, snr):
        rng = np.random.default_rng(snr)
        est = [signal.estimate_wada_snr(mixture(snr, SR, rng)).value for _ in range(20)]
        assert abs(np.mean(est) - snr) <= 1.5


def _erfinv(u):
    """Half-normal quantile helper: erfinv by Newton iterations on math.erf."""
    import math

    y = np.array([0.0] * len(u))
    erf = np.vectorize(math.erf)
    for _ in range(60):
        err = erf(y) - u
        y -= err / (2 / np.sqrt(np.pi) * np.exp(-(y**2)))
    return y


def test_speech_ratio():
    w = signal.Waveform(np.zeros(8 * SR), SR)
    assert signal.speech_ratio(w, [signal.TimeSegment(1.0, 3.0)]) == 0.25


def test_time_segment_order():
    with pytest.raises(InvalidInputError):
        signal.TimeSegment(2.0, 1.0)
