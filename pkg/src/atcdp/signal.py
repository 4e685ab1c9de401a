"""Audio-domain processing: energy segmentation, spike-aware gain, blind SNR.

All functions are pure; a :class:`Waveform` is immutable once built.
"""

from __future__ import annotations

import json
import wave
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from atcdp.errors import InvalidInputError

WADA_TABLE_VERSION = 1
WADA_MIN_SAMPLES = 4000


@dataclass(frozen=True, eq=False)
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise InvalidInputError("waveform must be mono (1-D)")
        if self.sample_rate <= 0:
            raise InvalidInputError("sample_rate must be positive")
        if x.size and (not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 1.0):
            raise InvalidInputError("samples must lie within [-1, 1]")
        x = x.copy()
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self):
        return self.samples.size

    @classmethod
    def from_wav(cls, path) -> "Waveform":
        """Read a mono 16-bit PCM WAV file."""
        try:
            wf = wave.open(str(path), "rb")
        except (wave.Error, EOFError) as e:
            raise InvalidInputError(f"{path}: {e}") from None
        with wf:
            if wf.getnchannels() != 1:
                raise InvalidInputError(f"{path}: expected mono audio")
            if wf.getsampwidth() != 2:
                raise InvalidInputError(f"{path}: expected 16-bit PCM")
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
        pcm = np.frombuffer(raw, dtype="<i2").astype(np.float64)
        return cls(pcm / 32768.0, rate)

    def to_wav(self, path) -> None:
        pcm = np.clip(np.round(self.samples * 32768.0), -32768, 32767).astype("<i2")
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(self.sample_rate)
            wf.writeframes(pcm.tobytes())


@dataclass(frozen=True, order=True)
class TimeSegment:
    start: float
    end: float

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise InvalidInputError(f"invalid segment [{self.start}, {self.end}]")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class SnrEstimate:
    value: float
    clamped: bool = False

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class SegmentationConfig:
    frame_length: float = 0.025
    hop: float = 0.010
    threshold_factor: float = 4.0
    # quantile of the frame energies that the factor multiplies
    threshold_quantile: float = 0.5
    min_segment: float = 0.2
    min_gap: float = 0.3
    hangover: int = 5


@dataclass(frozen=True)
class GainConfig:
    spike_threshold: float = 0.5
    target_rms: float = 0.1
    max_gain_db: float = 30.0


def frame_energies(x: np.ndarray, sample_rate: int, frame_length: float, hop: float) -> np.ndarray:
    flen = max(1, int(round(frame_length * sample_rate)))
    step = max(1, int(round(hop * sample_rate)))
    if x.size <= flen:
        return np.array([np.mean(x**2)])
    n_frames = 1 + (x.size - flen) // step
    sq = np.concatenate([[0.0], np.cumsum(x**2)])
    starts = np.arange(n_frames) * step
    return (sq[starts + flen] - sq[starts]) / flen


def segment_by_energy(w: Waveform, cfg: SegmentationConfig | None = None) -> list[TimeSegment]:
    """Locate speech regions as runs of frames above an adaptive energy threshold.

    The threshold is a quantile (the median by default) of the frame energies
    times ``cfg.threshold_factor``, so the result does not change when the
    whole signal is scaled. Inactive stretches of at most ``cfg.hangover``
    frames inside a run are bridged; the run is never extended past its last
    active frame.
    """
    cfg = cfg or SegmentationConfig()
    if len(w) == 0:
        raise InvalidInputError("cannot segment an empty waveform")
    x = w.samples
    energies = frame_energies(x, w.sample_rate, cfg.frame_length, cfg.hop)
    threshold = np.quantile(energies, cfg.threshold_quantile) * cfg.threshold_factor
    active = energies > threshold
    if not active.any():
        return []

    idx = np.flatnonzero(active)
    runs = []
    run_start = prev = idx[0]
    for i in idx[1:]:
        if i - prev - 1 > cfg.hangover:
            runs.append((run_start, prev))
            run_start = i
        prev = i
    runs.append((run_start, prev))

    duration = w.duration
    spans = []
    for a, b in runs:
        start = a * cfg.hop
        end = min(b * cfg.hop + cfg.frame_length, duration)
        if spans and start - spans[-1][1] < cfg.min_gap:
            spans[-1] = (spans[-1][0], end, spans[-1][2], b)
        else:
            spans.append((start, end, a, b))

    segments = []
    for start, end, a, b in spans:
        if end - start < cfg.min_segment:
            continue
        if energies[a : b + 1].mean() <= threshold:
            continue
        segments.append(TimeSegment(float(start), float(end)))
    return segments


def detect_spikes(x: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Indices ``n`` where ``|x[n] - x[n-1]|`` exceeds ``threshold``."""
    if x.size < 2:
        return np.array([], dtype=int)
    return np.flatnonzero(np.abs(np.diff(x)) > threshold) + 1


def apply_segment_gain(w: Waveform, cfg: GainConfig | None = None) -> Waveform:
    """Boost quiet stretches delimited by spikes toward a target RMS.

    Each partition below ``cfg.target_rms`` is scaled by the smaller of the
    gain reaching the target, the ``max_gain_db`` ceiling and the gain that
    puts its peak at full scale. Louder partitions are left alone.
    """
    cfg = cfg or GainConfig()
    x = w.samples
    if x.size == 0:
        return w
    cuts = detect_spikes(x, cfg.spike_threshold)
    bounds = np.unique(np.concatenate([[0], cuts, [x.size]]))
    max_gain = 10 ** (cfg.max_gain_db / 20)
    out = x.copy()
    changed = False
    for a, b in zip(bounds[:-1], bounds[1:]):
        part = x[a:b]
        rms = np.sqrt(np.mean(part**2))
        peak = np.max(np.abs(part))
        if rms == 0 or rms >= cfg.target_rms:
            continue
        gain = min(cfg.target_rms / rms, max_gain, 1.0 / peak)
        if gain > 1.0:
            out[a:b] = np.clip(part * gain, -1.0, 1.0)
            changed = True
    if not changed:
        return w
    return Waveform(out, w.sample_rate)


def wada_statistic(x: np.ndarray) -> float:
    """log(mean|x|) - mean(log|x|) over the non-zero samples."""
    a = np.abs(np.asarray(x, dtype=np.float64))
    a = a[a > 0]
    if a.size == 0:
        raise InvalidInputError("all-zero waveform has no amplitude distribution")
    return float(np.log(a.mean()) - np.log(a).mean())


def build_wada_table(samples_per_point=4_000_000, snr_grid=None, seed=20220209):
    """Monte-Carlo statistic->SNR table for unit-power Laplacian speech in Gaussian noise.

    The same speech and noise draws are reused at every grid point, which
    keeps the curve smooth; it is then forced strictly increasing so it can be
    inverted by interpolation.
    """
    if snr_grid is None:
        snr_grid = np.arange(-20, 41, 1)
    snr_grid = np.asarray(snr_grid, dtype=np.float64)
    rng = np.random.default_rng(seed)
    speech = rng.laplace(size=samples_per_point)
    speech /= np.sqrt(np.mean(speech**2))
    noise = rng.standard_normal(samples_per_point)
    noise /= np.sqrt(np.mean(noise**2))
    g = np.array([wada_statistic(speech + noise * 10 ** (-snr / 20)) for snr in snr_grid])
    for i in range(1, g.size):
        g[i] = max(g[i], g[i - 1] + 1e-9)
    return {
        "version": WADA_TABLE_VERSION,
        "speech_model": "laplacian",
        "noise_model": "gaussian",
        "samples_per_point": int(samples_per_point),
        "seed": int(seed),
        "snr_db": snr_grid.tolist(),
        "statistic": g.tolist(),
    }


def load_wada_table(source=None) -> dict:
    """Table document from JSON text or a path; ``None`` gives the bundled table."""
    if source is None:
        source = resources.files("atcdp").joinpath("data/wada_snr_table.json").read_text()
    elif isinstance(source, Path):
        source = source.read_text()
    doc = json.loads(source)
    if doc.get("version") != WADA_TABLE_VERSION:
        raise InvalidInputError(f"unsupported WADA table version {doc.get('version')}")
    return doc


def _table_arrays(doc):
    return np.asarray(doc["statistic"], dtype=np.float64), np.asarray(doc["snr_db"], dtype=np.float64)


@lru_cache(maxsize=None)
def _bundled_table():
    return _table_arrays(load_wada_table())


def estimate_wada_snr(w: Waveform | np.ndarray, table=None) -> SnrEstimate:
    """Blind SNR of a speech waveform from the shape of its amplitude distribution."""
    x = w.samples if isinstance(w, Waveform) else np.asarray(w, dtype=np.float64)
    if x.size < WADA_MIN_SAMPLES:
        raise InvalidInputError(f"need at least {WADA_MIN_SAMPLES} samples, got {x.size}")
    g_tab, snr_tab = _table_arrays(table) if table is not None else _bundled_table()
    g = wada_statistic(x)
    if g <= g_tab[0]:
        return SnrEstimate(float(snr_tab[0]), True)
    if g >= g_tab[-1]:
        return SnrEstimate(float(snr_tab[-1]), True)
    return SnrEstimate(float(np.interp(g, g_tab, snr_tab)), False)


def speech_samples(w: Waveform, segments) -> np.ndarray:
    """Concatenate the samples covered by ``segments``."""
    sr = w.sample_rate
    parts = [w.samples[int(round(s.start * sr)) : int(round(s.end * sr))] for s in segments]
    if not parts:
        return np.array([])
    return np.concatenate(parts)


def speech_ratio(w: Waveform, segments) -> float:
    if w.duration <= 0:
        raise InvalidInputError("zero-duration waveform")
    total = 0.0
    for s in segments:
        if s.end > w.duration + 1e-9:
            raise InvalidInputError(f"segment {s} extends past the waveform end")
        total += s.duration
    return min(1.0, total / w.duration)
