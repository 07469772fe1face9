"""EEG feature pipeline: windowing and the three per-window views.

Recordings are cut into fixed-length windows.  Windows inside an
annotated seizure interval are oversampled with a sliding stride, windows
in the remaining signal are tiled without overlap and then subsampled, so
the class balance stays workable.  Each window then yields three feature
vectors: a decimated time-domain view, a band-limited spectrum-magnitude
view, and a multi-level wavelet-coefficient view.  Each view is z-scored
with statistics that can be persisted and reapplied to held-out data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    FeatureStats,
    MultiViewDataset,
    ValidationError,
    ViewDataset,
    one_hot_encode,
)

NORMAL = 0
SEIZURE = 1

VIEW_NAMES = ("time", "freq", "wavelet")

# Order-4 Daubechies scaling filter.  The analysis pair is derived from it
# below and the test suite checks orthonormality, the quadrature-mirror
# relation, and perfect reconstruction rather than trusting the digits.
DB4_LOWPASS = np.array(
    [
        0.23037781330889650,
        0.71484657055291565,
        0.63088076792985891,
        -0.027983769416859854,
        -0.18703481171909308,
        0.030841381835560764,
        0.032883011666885197,
        -0.010597401785069032,
    ]
)


def quadrature_mirror(lowpass: np.ndarray) -> np.ndarray:
    """Alternating-flip highpass companion of an orthonormal lowpass."""
    lowpass = np.asarray(lowpass, dtype=float)
    n = lowpass.size
    signs = (-1.0) ** np.arange(n)
    return signs * lowpass[::-1]


DB4_HIGHPASS = quadrature_mirror(DB4_LOWPASS)


@dataclass(frozen=True)
class SignalRecord:
    """One multi-channel recording with its seizure annotations.

    ``samples`` is (channels, n_samples); ``seizure_intervals`` holds
    [start, end) pairs in seconds, non-overlapping and inside the record.
    """

    samples: np.ndarray
    fs: float
    seizure_intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise ValidationError(
                f"samples must be (channels, n), got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples contain NaN or Inf")
        if self.fs <= 0:
            raise ValidationError(f"fs must be positive, got {self.fs}")
        duration = samples.shape[1] / self.fs
        intervals = tuple(
            (float(s), float(e)) for s, e in self.seizure_intervals
        )
        intervals = tuple(sorted(intervals))
        for s, e in intervals:
            if not (0.0 <= s < e):
                raise ValidationError(f"bad interval [{s}, {e})")
            if e > duration + 1e-9:
                raise ValidationError(
                    f"interval [{s}, {e}) runs past the record end "
                    f"({duration:.6f} s)"
                )
        for (_, prev_end), (next_start, _) in zip(intervals, intervals[1:]):
            if next_start < prev_end:
                raise ValidationError("seizure intervals overlap")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "seizure_intervals", intervals)

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return self.samples.shape[1] / self.fs


@dataclass(frozen=True)
class WindowSpec:
    """Windowing policy for :func:`segment`."""

    length_s: float = 1.0
    overlap_frac: float = 0.5
    negative_keep_frac: float = 0.5

    def __post_init__(self) -> None:
        if self.length_s <= 0:
            raise ValidationError(f"length_s must be positive, got {self.length_s}")
        if not 0.0 <= self.overlap_frac < 1.0:
            raise ValidationError(
                f"overlap_frac must be in [0, 1), got {self.overlap_frac}"
            )
        if not 0.0 < self.negative_keep_frac <= 1.0:
            raise ValidationError(
                f"negative_keep_frac must be in (0, 1], got "
                f"{self.negative_keep_frac}"
            )


@dataclass(frozen=True)
class FeatureConfig:
    """Per-view settings for :func:`extract_multiview`."""

    decimation: int = 4
    band: tuple[float, float] = (4.0, 30.0)
    levels: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.decimation < 1:
            raise ValidationError(
                f"decimation must be >= 1, got {self.decimation}"
            )
        lo, hi = self.band
        if not 0.0 <= lo < hi:
            raise ValidationError(f"band must satisfy 0 <= lo < hi, got {self.band}")
        if self.levels < 1:
            raise ValidationError(f"levels must be >= 1, got {self.levels}")


def window_samples(record: SignalRecord, spec: WindowSpec) -> int:
    """Window length in samples; must come out integral."""
    exact = spec.length_s * record.fs
    rounded = round(exact)
    if rounded < 1 or abs(exact - rounded) > 1e-9 * max(1.0, abs(exact)):
        raise ValidationError(
            f"window of {spec.length_s} s is not a whole number of samples "
            f"at fs={record.fs}"
        )
    return int(rounded)


def segment(
    record: SignalRecord,
    spec: WindowSpec,
    seed: int | np.random.SeedSequence | np.random.Generator = 0,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Cut a recording into labeled windows.

    Seizure windows start at each annotated interval's start and advance
    by length*(1-overlap) while they still fit inside the interval.
    Normal windows tile the complement of the intervals end to end, so no
    window ever spans an annotation boundary, and are then kept with
    probability mass ``negative_keep_frac`` using ``seed``.  Returns the
    (channels, length) windows and their labels in temporal order.
    """
    length = window_samples(record, spec)
    total = record.samples.shape[1]
    if total < length:
        warnings.warn(
            f"record of {total} samples is shorter than one window "
            f"({length}); no windows produced",
            RuntimeWarning,
            stacklevel=2,
        )
        return [], np.zeros(0, dtype=int)

    stride = max(1, int(round(length * (1.0 - spec.overlap_frac))))
    starts: list[tuple[int, int]] = []
    bounds = []
    for begin_s, end_s in record.seizure_intervals:
        begin = int(round(begin_s * record.fs))
        end = int(round(end_s * record.fs))
        bounds.append((begin, end))
        pos = begin
        while pos + length <= end:
            starts.append((pos, SEIZURE))
            pos += stride

    normal_starts = []
    edge = 0
    for begin, end in bounds + [(total, total)]:
        pos = edge
        while pos + length <= begin:
            normal_starts.append(pos)
            pos += length
        edge = max(edge, end)
    if spec.negative_keep_frac < 1.0 and normal_starts:
        rng = np.random.default_rng(seed)
        keep = int(round(spec.negative_keep_frac * len(normal_starts)))
        chosen = rng.choice(len(normal_starts), size=keep, replace=False)
        normal_starts = [normal_starts[i] for i in sorted(chosen)]
    starts.extend((pos, NORMAL) for pos in normal_starts)
    starts.sort(key=lambda item: item[0])

    windows = [record.samples[:, pos : pos + length] for pos, _ in starts]
    labels = np.array([label for _, label in starts], dtype=int)
    return windows, labels


def time_view(window: np.ndarray, decimation: int = 4) -> np.ndarray:
    """Decimated raw samples, channels concatenated in order."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 2:
        raise ValidationError(f"window must be 2-D, got shape {window.shape}")
    if decimation < 1:
        raise ValidationError(f"decimation must be >= 1, got {decimation}")
    return window[:, ::decimation].reshape(-1)


def channel_spectrum(signal: np.ndarray) -> np.ndarray:
    """Magnitude spectrum of a mean-removed single channel (full FFT).

    Removing the mean zeroes the DC bin, so slow drift never leaks into
    the band features.
    """
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1:
        raise ValidationError(f"signal must be 1-D, got shape {signal.shape}")
    return np.abs(np.fft.fft(signal - signal.mean()))


def band_bins(n: int, fs: float, band: tuple[float, float]) -> np.ndarray:
    """Indices of one-sided FFT bins whose frequency lies inside ``band``."""
    lo, hi = band
    lo_k = math.ceil(lo * n / fs - 1e-9)
    hi_k = math.floor(hi * n / fs + 1e-9)
    lo_k = max(lo_k, 0)
    hi_k = min(hi_k, n // 2)
    if hi_k < lo_k:
        raise ValidationError(
            f"band [{lo}, {hi}] Hz holds no FFT bins for {n} samples at "
            f"fs={fs}"
        )
    return np.arange(lo_k, hi_k + 1)


def freq_view(
    window: np.ndarray, fs: float, band: tuple[float, float] = (4.0, 30.0)
) -> np.ndarray:
    """Band-limited spectrum magnitudes, channels concatenated in order."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 2:
        raise ValidationError(f"window must be 2-D, got shape {window.shape}")
    bins = band_bins(window.shape[1], fs, band)
    rows = [channel_spectrum(channel)[bins] for channel in window]
    return np.concatenate(rows)


def dwt_step(
    signal: np.ndarray,
    lowpass: np.ndarray = DB4_LOWPASS,
    highpass: np.ndarray = DB4_HIGHPASS,
) -> tuple[np.ndarray, np.ndarray]:
    """One level of the periodized orthonormal wavelet analysis."""
    signal = np.asarray(signal, dtype=float)
    n = signal.size
    if n < 2 or n % 2:
        raise ValidationError(f"analysis needs an even length >= 2, got {n}")
    taps = np.asarray(lowpass).size
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(taps)[None, :]) % n
    patches = signal[idx]
    return patches @ lowpass, patches @ highpass


def idwt_step(
    approx: np.ndarray,
    detail: np.ndarray,
    lowpass: np.ndarray = DB4_LOWPASS,
    highpass: np.ndarray = DB4_HIGHPASS,
) -> np.ndarray:
    """Transpose of :func:`dwt_step`; exact inverse for orthonormal banks."""
    approx = np.asarray(approx, dtype=float)
    detail = np.asarray(detail, dtype=float)
    if approx.shape != detail.shape or approx.ndim != 1:
        raise ValidationError("approximation and detail must be equal-length")
    n = 2 * approx.size
    taps = np.asarray(lowpass).size
    idx = (2 * np.arange(approx.size)[:, None] + np.arange(taps)[None, :]) % n
    out = np.zeros(n)
    np.add.at(out, idx, approx[:, None] * lowpass[None, :])
    np.add.at(out, idx, detail[:, None] * highpass[None, :])
    return out


def wavelet_decompose(signal: np.ndarray, levels: int = 4) -> list[np.ndarray]:
    """Multi-level decomposition: [approx_L, detail_L, ..., detail_1]."""
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1:
        raise ValidationError(f"signal must be 1-D, got shape {signal.shape}")
    n = signal.size
    block = 2**levels
    if n % block:
        padded = math.ceil(n / block) * block
        raise ValidationError(
            f"length {n} is not divisible by 2^{levels}; pad the signal to "
            f"{padded} samples"
        )
    details: list[np.ndarray] = []
    approx = signal
    for _ in range(levels):
        approx, detail = dwt_step(approx)
        details.append(detail)
    return [approx] + details[::-1]


def wavelet_reconstruct(parts: list[np.ndarray]) -> np.ndarray:
    """Inverse of :func:`wavelet_decompose`."""
    if len(parts) < 2:
        raise ValidationError("need an approximation and at least one detail")
    approx = np.asarray(parts[0], dtype=float)
    for detail in parts[1:]:
        approx = idwt_step(approx, np.asarray(detail, dtype=float))
    return approx


def wavelet_view(window: np.ndarray, levels: int = 4) -> np.ndarray:
    """Stacked wavelet coefficients, channels concatenated in order."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 2:
        raise ValidationError(f"window must be 2-D, got shape {window.shape}")
    rows = [
        np.concatenate(wavelet_decompose(channel, levels))
        for channel in window
    ]
    return np.concatenate(rows)


def view_dims(
    channels: int, length: int, fs: float, config: FeatureConfig
) -> tuple[int, int, int]:
    """Feature dimension of each view for a given window geometry."""
    time_dim = channels * len(range(0, length, config.decimation))
    freq_dim = channels * band_bins(length, fs, config.band).size
    wave_dim = channels * length
    return time_dim, freq_dim, wave_dim


def extract_multiview(
    records: list[SignalRecord],
    spec: WindowSpec,
    config: FeatureConfig,
    stats: tuple[FeatureStats, ...] | None = None,
    domain_tag: str = "source",
) -> tuple[MultiViewDataset, tuple[FeatureStats, ...] | None]:
    """Windows, per-window views, and normalisation for a set of records.

    All records must share sampling rate and channel count.  When
    ``stats`` is omitted the z-score statistics are computed from the
    extracted features themselves and returned for persisting; pass the
    training statistics back in to normalise held-out data consistently.
    """
    if stats is not None and len(stats) != 3:
        raise ValidationError("need one stats entry per view")
    windows: list[np.ndarray] = []
    labels: list[int] = []
    fs = None
    channels = None
    length = None
    children = np.random.SeedSequence(config.seed).spawn(len(records))
    for record, child in zip(records, children):
        if fs is None:
            fs = record.fs
            channels = record.n_channels
            length = window_samples(record, spec)
        elif record.fs != fs or record.n_channels != channels:
            raise ValidationError(
                "records disagree on sampling rate or channel count"
            )
        chunk, chunk_labels = segment(record, spec, seed=child)
        windows.extend(chunk)
        labels.extend(int(v) for v in chunk_labels)

    if windows:
        raw = [
            np.stack([time_view(w, config.decimation) for w in windows]),
            np.stack([freq_view(w, fs, config.band) for w in windows]),
            np.stack([wavelet_view(w, config.levels) for w in windows]),
        ]
    elif fs is not None:
        dims = view_dims(channels, length, fs, config)
        raw = [np.zeros((0, d)) for d in dims]
    else:
        raw = [np.zeros((0, 0)) for _ in VIEW_NAMES]

    if stats is None and windows:
        stats = tuple(FeatureStats.from_data(mat) for mat in raw)
    onehot = one_hot_encode(labels, 2)
    views = []
    for view_id, mat in enumerate(raw):
        if stats is not None:
            mat = stats[view_id].apply(mat)
        views.append(ViewDataset(view_id=view_id, data=mat, labels=onehot))
    dataset = MultiViewDataset(views=tuple(views), domain_tag=domain_tag)
    return dataset, stats
