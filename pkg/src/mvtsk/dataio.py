"""File formats and synthetic data: everything that touches disk.

Formats are deliberately plain.  Signals are CSV with a time column and
one column per channel, annotations are CSV interval lists, and a small
key=value sidecar carries the sampling rate.  Feature matrices are CSV
with a versioned comment line.  Trained models are a JSON document with
a sha256 trailer so corrupt or truncated archives fail loudly.  All
float fields are written with repr, which round-trips every double
exactly, so a reloaded model predicts bit-identically.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .antecedent import AntecedentBank
from .core import (
    FeatureStats,
    MultiViewDataset,
    TrainConfig,
    ValidationError,
    ViewDataset,
    one_hot_encode,
)
from .features import VIEW_NAMES, SignalRecord
from .trainer import MultiViewModel
from .tsk import ConsequentBlock

MODEL_FORMAT = "mvtsk-model"
MODEL_VERSION = 1
FEATURE_FORMAT = "mvtsk-features"
FEATURE_VERSION = 1


class ParseError(ValueError):
    """Raised when a data file cannot be parsed; names file and line."""

    def __init__(self, path: Path | str, line: int | None, reason: str) -> None:
        at = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{at}: {reason}")
        self.path = str(path)
        self.line = line


class ArchiveError(ValueError):
    """Raised when a model archive is corrupt or incompatible."""


def fmt(value: float) -> str:
    """Shortest decimal that round-trips the exact double."""
    return repr(float(value))


def _parse_float(token: str, path: Path, line: int, column: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(path, line, f"{column}: {token!r} is not a number")
    if not math.isfinite(value):
        raise ParseError(path, line, f"{column}: non-finite value {token!r}")
    return value


def write_kv(path: Path, entries: dict[str, str]) -> None:
    """Write key=value lines, one per entry."""
    lines = [f"{key}={value}" for key, value in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_kv(path: Path) -> dict[str, str]:
    """Read key=value lines; blank lines and # comments are skipped."""
    path = Path(path)
    if not path.exists():
        raise ParseError(path, None, "file not found")
    out: dict[str, str] = {}
    for number, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(path, number, f"expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def save_record(record: SignalRecord, stem: Path) -> tuple[Path, Path, Path]:
    """Write a recording as the <stem>.csv/.ann.csv/.meta trio."""
    stem = Path(stem)
    signal_path = stem.with_suffix(".csv")
    ann_path = stem.parent / (stem.name + ".ann.csv")
    meta_path = stem.with_suffix(".meta")

    channels = record.n_channels
    header = "t," + ",".join(f"ch{i + 1}" for i in range(channels))
    rows = [header]
    for n in range(record.samples.shape[1]):
        t = n / record.fs
        rows.append(
            fmt(t) + "," + ",".join(fmt(v) for v in record.samples[:, n])
        )
    signal_path.write_text("\n".join(rows) + "\n", newline="\n")

    ann_rows = ["start_s,end_s"]
    ann_rows += [f"{fmt(s)},{fmt(e)}" for s, e in record.seizure_intervals]
    ann_path.write_text("\n".join(ann_rows) + "\n", newline="\n")

    write_kv(
        meta_path,
        {"fs": fmt(record.fs), "channels": str(channels)},
    )
    return signal_path, ann_path, meta_path


def _read_annotations(path: Path) -> list[tuple[float, float]]:
    path = Path(path)
    if not path.exists():
        raise ParseError(path, None, "file not found")
    intervals = []
    for number, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if number == 1 and line.lower().startswith("start"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(
                path, number, f"expected start_s,end_s, got {len(parts)} fields"
            )
        start = _parse_float(parts[0], path, number, "start_s")
        end = _parse_float(parts[1], path, number, "end_s")
        intervals.append((start, end))
    return intervals


def load_raw(
    signal_path: Path, annotation_path: Path | None = None
) -> SignalRecord:
    """Load a recording from its CSV plus key=value sidecar.

    The sidecar ``<stem>.meta`` must declare ``fs``.  The time column
    must be uniform to within a microsecond and agree with the declared
    rate.  Annotation intervals are validated against the record.
    """
    signal_path = Path(signal_path)
    if not signal_path.exists():
        raise ParseError(signal_path, None, "file not found")
    meta_path = signal_path.with_suffix(".meta")
    meta = read_kv(meta_path)
    if "fs" not in meta:
        raise ParseError(meta_path, None, "sidecar does not declare fs")
    fs = _parse_float(meta["fs"], meta_path, None, "fs")
    if fs <= 0:
        raise ParseError(meta_path, None, f"fs must be positive, got {fs}")

    lines = signal_path.read_text().splitlines()
    if not lines:
        raise ParseError(signal_path, None, "empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 2 or header[0] != "t":
        raise ParseError(
            signal_path, 1, "header must be t,<channel>,... columns"
        )
    channels = len(header) - 1
    times = []
    samples = []
    for number, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != channels + 1:
            raise ParseError(
                signal_path,
                number,
                f"expected {channels + 1} fields, got {len(parts)}",
            )
        times.append(_parse_float(parts[0], signal_path, number, "t"))
        samples.append(
            [
                _parse_float(tok, signal_path, number, header[c + 1])
                for c, tok in enumerate(parts[1:])
            ]
        )
    if len(times) < 2:
        raise ParseError(signal_path, None, "need at least two samples")
    times_arr = np.asarray(times)
    deltas = np.diff(times_arr)
    if np.any(deltas <= 0):
        bad = int(np.argmax(deltas <= 0))
        raise ParseError(
            signal_path, bad + 3, "time column is not strictly increasing"
        )
    if float(deltas.max() - deltas.min()) > 1e-6:
        raise ParseError(
            signal_path, None, "sampling interval varies by more than 1e-6 s"
        )
    if abs(float(deltas.mean()) - 1.0 / fs) > 1e-6:
        raise ParseError(
            signal_path,
            None,
            f"time step {deltas.mean():.9f} s disagrees with fs={fs}",
        )

    intervals: list[tuple[float, float]] = []
    if annotation_path is not None:
        intervals = _read_annotations(Path(annotation_path))
    try:
        return SignalRecord(
            samples=np.asarray(samples).T,
            fs=fs,
            seizure_intervals=tuple(intervals),
        )
    except ValidationError as exc:
        where = annotation_path if annotation_path is not None else signal_path
        raise ParseError(where, None, str(exc)) from exc


def write_features(
    dataset: MultiViewDataset,
    stats: tuple[FeatureStats, ...] | None,
    out_dir: Path,
    stem: str,
) -> list[Path]:
    """Write one CSV per view (plus stats CSVs) under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if dataset.n_views != len(VIEW_NAMES):
        raise ValidationError(
            f"expected {len(VIEW_NAMES)} views, got {dataset.n_views}"
        )
    labels = dataset.labels
    if labels is None:
        raise ValidationError("feature files require labels")
    label_idx = np.argmax(labels, axis=1)
    written = []
    for view, name in zip(dataset.views, VIEW_NAMES):
        path = out_dir / f"{stem}.{name}.csv"
        head = (
            f"# {FEATURE_FORMAT} v{FEATURE_VERSION} view={name} "
            f"domain={dataset.domain_tag}"
        )
        columns = [f"{name}_{i:04d}" for i in range(view.dim)] + ["label"]
        rows = [head, ",".join(columns)]
        for n in range(view.n_samples):
            rows.append(
                ",".join(fmt(v) for v in view.data[n]) + f",{label_idx[n]}"
            )
        path.write_text("\n".join(rows) + "\n", newline="\n")
        written.append(path)
        if stats is not None:
            stat_path = out_dir / f"{stem}.{name}.stats.csv"
            entry = stats[view.view_id]
            srows = ["feature,mean,std"]
            srows += [
                f"{i},{fmt(entry.mean[i])},{fmt(entry.std[i])}"
                for i in range(entry.mean.size)
            ]
            stat_path.write_text("\n".join(srows) + "\n", newline="\n")
            written.append(stat_path)
    return written


def _read_feature_csv(path: Path) -> tuple[str, str, np.ndarray, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise ParseError(path, None, "file not found")
    lines = path.read_text().splitlines()
    if len(lines) < 2 or not lines[0].startswith("#"):
        raise ParseError(path, 1, "missing format comment line")
    tokens = lines[0].lstrip("#").split()
    if len(tokens) < 2 or tokens[0] != FEATURE_FORMAT:
        raise ParseError(path, 1, f"not a {FEATURE_FORMAT} file")
    if tokens[1] != f"v{FEATURE_VERSION}":
        raise ParseError(
            path, 1, f"unsupported feature format version {tokens[1]}"
        )
    meta = dict(
        tok.split("=", 1) for tok in tokens[2:] if "=" in tok
    )
    view_name = meta.get("view", "")
    domain = meta.get("domain", "source")
    header = lines[1].split(",")
    if header[-1] != "label":
        raise ParseError(path, 2, "last column must be label")
    width = len(header) - 1
    data = []
    labels = []
    for number, raw in enumerate(lines[2:], start=3):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != width + 1:
            raise ParseError(
                path, number, f"expected {width + 1} fields, got {len(parts)}"
            )
        data.append(
            [
                _parse_float(tok, path, number, header[i])
                for i, tok in enumerate(parts[:-1])
            ]
        )
        try:
            label = int(parts[-1])
        except ValueError:
            raise ParseError(path, number, f"label {parts[-1]!r} is not an int")
        if label not in (0, 1):
            raise ParseError(path, number, f"label must be 0 or 1, got {label}")
        labels.append(label)
    matrix = np.asarray(data) if data else np.zeros((0, width))
    return view_name, domain, matrix, np.asarray(labels, dtype=int)


def read_feature_stats(path: Path) -> FeatureStats:
    path = Path(path)
    if not path.exists():
        raise ParseError(path, None, "file not found")
    lines = path.read_text().splitlines()
    if not lines or lines[0] != "feature,mean,std":
        raise ParseError(path, 1, "expected feature,mean,std header")
    means = []
    stds = []
    for number, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != 3:
            raise ParseError(path, number, "expected 3 fields")
        means.append(_parse_float(parts[1], path, number, "mean"))
        stds.append(_parse_float(parts[2], path, number, "std"))
    return FeatureStats(mean=np.asarray(means), std=np.asarray(stds))


def read_features(
    feature_dir: Path, stem: str, with_stats: bool = False
) -> tuple[MultiViewDataset, tuple[FeatureStats, ...] | None]:
    """Load the three per-view CSVs written by :func:`write_features`."""
    feature_dir = Path(feature_dir)
    views = []
    stats = []
    domain = "source"
    labels_ref = None
    for view_id, name in enumerate(VIEW_NAMES):
        path = feature_dir / f"{stem}.{name}.csv"
        view_name, domain, matrix, labels = _read_feature_csv(path)
        if view_name != name:
            raise ParseError(
                path, 1, f"expected view={name}, found view={view_name!r}"
            )
        if labels_ref is None:
            labels_ref = labels
        elif not np.array_equal(labels, labels_ref):
            raise ParseError(path, None, "label column differs across views")
        views.append(
            ViewDataset(
                view_id=view_id,
                data=matrix,
                labels=one_hot_encode(labels, 2),
            )
        )
        if with_stats:
            stats.append(
                read_feature_stats(feature_dir / f"{stem}.{name}.stats.csv")
            )
    dataset = MultiViewDataset(views=tuple(views), domain_tag=domain)
    return dataset, (tuple(stats) if with_stats else None)


@dataclass(frozen=True)
class ModelArchive:
    """Summary of one archive on disk."""

    path: Path
    version: int
    checksum: str


def _model_payload(model: MultiViewModel) -> dict:
    views = []
    for bank, block in zip(model.banks, model.consequents):
        views.append(
            {
                "centers": bank.centers.tolist(),
                "spreads": bank.spreads.tolist(),
                "scale": bank.scale,
                "coeffs": block.coeffs.tolist(),
                "ridge": block.ridge,
            }
        )
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "fuzzy_index": model.fuzzy_index,
        "n_classes": model.n_classes,
        "weights": model.weights.tolist(),
        "views": views,
        "normalization": None,
        "config": None,
    }
    if model.normalization is not None:
        payload["normalization"] = [
            {"mean": s.mean.tolist(), "std": s.std.tolist()}
            for s in model.normalization
        ]
    if model.config is not None:
        payload["config"] = {
            f.name: getattr(model.config, f.name)
            for f in fields(model.config)
        }
    return payload


def save_model(model: MultiViewModel, path: Path) -> ModelArchive:
    """Serialise a model as checksummed JSON; see :func:`load_model`."""
    path = Path(path)
    body = json.dumps(_model_payload(model), sort_keys=True)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    path.write_text(body + "\nsha256=" + digest + "\n", newline="\n")
    return ModelArchive(path=path, version=MODEL_VERSION, checksum=digest)


def load_model(path: Path) -> MultiViewModel:
    """Load a model archive, verifying checksum and format version."""
    path = Path(path)
    if not path.exists():
        raise ArchiveError(f"{path}: file not found")
    text = path.read_text()
    lines = text.splitlines()
    if len(lines) < 2 or not lines[-1].startswith("sha256="):
        raise ArchiveError(f"{path}: missing sha256 trailer")
    body = "\n".join(lines[:-1])
    expect = lines[-1][len("sha256=") :]
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if digest != expect:
        raise ArchiveError(f"{path}: checksum mismatch; archive is corrupt")
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"{path}: invalid JSON body: {exc}") from exc
    if payload.get("format") != MODEL_FORMAT:
        raise ArchiveError(f"{path}: not a {MODEL_FORMAT} archive")
    version = payload.get("version")
    if not isinstance(version, int) or version > MODEL_VERSION:
        raise ArchiveError(
            f"{path}: format version {version} is newer than supported "
            f"({MODEL_VERSION})"
        )
    banks = []
    blocks = []
    for view in payload["views"]:
        banks.append(
            AntecedentBank(
                centers=np.asarray(view["centers"]),
                spreads=np.asarray(view["spreads"]),
                scale=float(view["scale"]),
            )
        )
        blocks.append(
            ConsequentBlock(
                coeffs=np.asarray(view["coeffs"]), ridge=float(view["ridge"])
            )
        )
    normalization = None
    if payload.get("normalization") is not None:
        normalization = tuple(
            FeatureStats(
                mean=np.asarray(s["mean"]), std=np.asarray(s["std"])
            )
            for s in payload["normalization"]
        )
    config = None
    if payload.get("config") is not None:
        config = TrainConfig(**payload["config"])
    return MultiViewModel(
        banks=tuple(banks),
        consequents=tuple(blocks),
        weights=np.asarray(payload["weights"]),
        fuzzy_index=float(payload["fuzzy_index"]),
        n_classes=int(payload["n_classes"]),
        normalization=normalization,
        config=config,
    )


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic two-domain EEG generator.

    The target domain differs from the source by per-channel gain and
    offset, a shifted seizure oscillation frequency, damped seizure
    amplitude, a different spike rate, and a narrower background band.
    ``shift_scale`` scales all of those deviations; zero makes the two
    domains draws from the same distribution.
    """

    source_records: int = 6
    target_records: int = 4
    channels: int = 2
    fs: float = 256.0
    duration_s: float = 120.0
    seizures_per_record: int = 3
    seizure_len_s: tuple[float, float] = (5.0, 9.0)
    noise_band: tuple[float, float] = (0.5, 45.0)
    seizure_freq: tuple[float, float] = (3.0, 6.0)
    seizure_amp: float = 3.0
    spike_rate_hz: float = 3.0
    spike_amp: float = 6.0
    alpha_amp: float = 3.0
    alpha_rate_hz: float = 0.3
    target_gain: tuple[float, float] = (0.7, 1.4)
    target_offset: float = 0.5
    target_freq_shift: float = 1.5
    target_amp_factor: float = 0.75
    target_spike_factor: float = 1.6
    target_band_shift: float = 4.0
    shift_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.source_records < 0 or self.target_records < 0:
            raise ValidationError("record counts must be >= 0")
        if self.channels < 1:
            raise ValidationError("channels must be >= 1")
        if self.fs <= 0 or self.duration_s <= 0:
            raise ValidationError("fs and duration_s must be positive")
        if self.seizures_per_record < 0:
            raise ValidationError("seizures_per_record must be >= 0")
        lo, hi = self.seizure_len_s
        if not 0 < lo <= hi:
            raise ValidationError(f"bad seizure_len_s {self.seizure_len_s}")
        if self.shift_scale < 0:
            raise ValidationError("shift_scale must be >= 0")
        slot = self.duration_s / max(1, self.seizures_per_record)
        if self.seizures_per_record and slot < hi + 4.0:
            raise ValidationError(
                "record too short for the requested seizures"
            )


def _band_noise(
    rng: np.random.Generator, n: int, fs: float, band: tuple[float, float]
) -> np.ndarray:
    white = rng.standard_normal(n)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    mask = (freqs >= band[0]) & (freqs <= band[1])
    shaped = np.fft.irfft(np.fft.rfft(white) * mask, n)
    scale = shaped.std()
    return shaped / scale if scale > 0 else shaped


def _spike_train(
    t: np.ndarray, start: float, end: float, rate: float, amp: float,
    rng: np.random.Generator,
) -> np.ndarray:
    out = np.zeros_like(t)
    width = 0.02
    count = int((end - start) * rate)
    for i in range(count):
        center = start + (i + 0.5) / rate + rng.uniform(-0.05, 0.05)
        if center < start or center > end:
            continue
        z = (t - center) / width
        out += -amp * z * np.exp(-0.5 * z**2)
    return out


def _synth_record(
    rng: np.random.Generator, spec: SynthSpec, shifted: bool
) -> SignalRecord:
    scale = spec.shift_scale if shifted else 0.0
    n = int(round(spec.duration_s * spec.fs))
    t = np.arange(n) / spec.fs
    band_hi = spec.noise_band[1] - scale * spec.target_band_shift
    band = (spec.noise_band[0], max(band_hi, spec.noise_band[0] + 1.0))
    freq_shift = scale * spec.target_freq_shift
    amp_factor = 1.0 + scale * (spec.target_amp_factor - 1.0)
    spike_factor = 1.0 + scale * (spec.target_spike_factor - 1.0)

    intervals = []
    slot = spec.duration_s / max(1, spec.seizures_per_record)
    for k in range(spec.seizures_per_record):
        length = rng.uniform(*spec.seizure_len_s)
        lo = k * slot + 2.0
        hi = (k + 1) * slot - 2.0 - length
        start = rng.uniform(lo, hi)
        intervals.append((start, start + length))

    seizure_wave = np.zeros(n)
    for event, (start, end) in enumerate(intervals):
        f0 = rng.uniform(*spec.seizure_freq) + freq_shift
        phase = rng.uniform(0.0, 2.0 * np.pi)
        inside = (t >= start) & (t < end)
        # half-second raised-cosine ramps keep interval edges smooth
        ramp = np.clip((t - start) / 0.5, 0.0, 1.0) * np.clip(
            (end - t) / 0.5, 0.0, 1.0
        )
        envelope = np.where(inside, 0.5 * (1.0 - np.cos(np.pi * ramp)), 0.0)
        amp = spec.seizure_amp * amp_factor
        # alternate event character so no single view sees every seizure:
        # rhythmic tone, spike bursts, or both
        kind = event % 3
        if kind != 1:
            seizure_wave += (
                envelope * amp * np.sin(2.0 * np.pi * f0 * t + phase)
            )
        if kind != 0:
            seizure_wave += np.where(
                inside,
                _spike_train(
                    t, start, end, spec.spike_rate_hz * spike_factor,
                    spec.spike_amp * amp_factor, rng,
                ),
                0.0,
            )

    # alpha-like bursts appear in both classes; they are a nuisance the
    # classifier has to learn to ignore
    alpha_wave = np.zeros(n)
    for _ in range(int(round(spec.alpha_rate_hz * spec.duration_s))):
        center = rng.uniform(0.0, spec.duration_s)
        half = 0.5 * rng.uniform(1.0, 3.0)
        f_alpha = rng.uniform(9.0, 11.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        ramp = np.clip((t - (center - half)) / half, 0.0, 1.0) * np.clip(
            ((center + half) - t) / half, 0.0, 1.0
        )
        envelope = 0.5 * (1.0 - np.cos(np.pi * np.clip(ramp, 0.0, 1.0)))
        alpha_wave += (
            envelope * spec.alpha_amp
            * np.sin(2.0 * np.pi * f_alpha * t + phase)
        )

    samples = np.zeros((spec.channels, n))
    for c in range(spec.channels):
        background = _band_noise(rng, n, spec.fs, band) + alpha_wave
        channel_mix = rng.uniform(0.8, 1.2)
        gain = 1.0 + scale * (rng.uniform(*spec.target_gain) - 1.0)
        offset = scale * rng.uniform(-spec.target_offset, spec.target_offset)
        samples[c] = gain * (background + channel_mix * seizure_wave) + offset
    return SignalRecord(
        samples=samples, fs=spec.fs, seizure_intervals=tuple(intervals)
    )


def synth_domains(
    spec: SynthSpec, seed: int = 0
) -> tuple[list[SignalRecord], list[SignalRecord]]:
    """Generate the source and target record sets, deterministic in seed."""
    root = np.random.SeedSequence(seed)
    src_seq, tgt_seq = root.spawn(2)
    source = [
        _synth_record(np.random.default_rng(child), spec, shifted=False)
        for child in src_seq.spawn(spec.source_records)
    ]
    target = [
        _synth_record(np.random.default_rng(child), spec, shifted=True)
        for child in tgt_seq.spawn(spec.target_records)
    ]
    return source, target
