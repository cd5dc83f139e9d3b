"""EEG recordings: representation, CSV persistence, synthesis, segmentation.

A recording is segmented into 8-second pieces (2048 samples at 256 Hz) and
grouped 60 segments to a chunk, giving one 2048 x (60 * channels) matrix
per 8 minutes of signal. The matrix column layout is channel-major: all
segments of channel 0 first, then channel 1, and so on.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from szpred.errors import InsufficientDataError, ParameterError, ParseError, ShapeError

PHASES = ("interictal", "preictal", "ictal", "mixed")

SEGMENT_LENGTH = 2048
SEGMENTS_PER_CHUNK = 60
PREICTAL_MINUTES = 48


@dataclass(frozen=True)
class Recording:
    """Multi-channel EEG with equal-length channels (values in microvolts)."""

    patient_id: str
    sample_rate_hz: int
    channels: np.ndarray  # (n_channels, n_samples)
    phase: str
    onset_index: int | None = None

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float64)
        if ch.ndim != 2 or ch.shape[1] < 1:
            raise ShapeError(f"channels must be (n_channels, n_samples>=1), got {ch.shape}")
        object.__setattr__(self, "channels", ch)
        if self.sample_rate_hz <= 0:
            raise ParameterError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.phase not in PHASES:
            raise ParameterError(f"phase must be one of {PHASES}, got {self.phase!r}")
        if self.onset_index is not None and not 0 <= self.onset_index < ch.shape[1]:
            raise ParameterError(
                f"onset_index {self.onset_index} outside [0, {ch.shape[1]})"
            )

    @property
    def n_channels(self):
        return self.channels.shape[0]

    @property
    def n_samples(self):
        return self.channels.shape[1]

    @property
    def duration_s(self):
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True)
class SegmentMatrix:
    """One chunk: rows are samples within a segment, columns are
    (channel, segment) pairs in channel-major order."""

    values: np.ndarray
    segment_length: int
    segments_per_chunk: int
    channel_count: int
    chunk_index: int
    source_phase: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        expected = (self.segment_length, self.segments_per_chunk * self.channel_count)
        if v.shape != expected:
            raise ShapeError(f"values shape {v.shape} != {expected}")
        object.__setattr__(self, "values", v)

    def segment(self, channel, index):
        """Samples of one 8-second segment of one channel."""
        return self.values[:, channel * self.segments_per_chunk + index]


@dataclass(frozen=True)
class PreictalSignature:
    """Oscillator whose amplitude ramps linearly from 0 at start_s up to
    peak_amplitude at onset_s, holding the peak afterwards."""

    center_hz: float
    peak_amplitude: float
    start_s: float
    onset_s: float


@dataclass(frozen=True)
class SynthConfig:
    duration_s: float
    background_bands: tuple = ((10.0, 1.0),)  # (center_hz, amplitude)
    noise_sigma: float = 0.1
    preictal_signature: PreictalSignature | None = None
    seed: int = 0
    channels: int = 3
    sample_rate_hz: int = 256

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ParameterError(f"duration_s must be positive, got {self.duration_s}")
        if self.noise_sigma < 0:
            raise ParameterError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.channels < 1:
            raise ParameterError("need at least one channel")


def synthesize_eeg(config, phase="interictal", patient_id="synthetic"):
    """Deterministic synthetic EEG: sum of sinusoids plus white noise.

    With a preictal signature configured, the signature oscillator is mixed
    in with a linear amplitude ramp over [start_s, onset_s]; onset_index is
    set when the onset falls inside the recording.
    """
    n = int(round(config.duration_s * config.sample_rate_hz))
    t = np.arange(n) / config.sample_rate_hz
    base = np.zeros(n)
    for center_hz, amplitude in config.background_bands:
        base += amplitude * np.sin(2 * np.pi * center_hz * t)
    onset_index = None
    if config.preictal_signature is not None:
        sig = config.preictal_signature
        span = max(sig.onset_s - sig.start_s, 1.0 / config.sample_rate_hz)
        ramp = np.clip((t - sig.start_s) / span, 0.0, 1.0)
        base = base + sig.peak_amplitude * ramp * np.sin(2 * np.pi * sig.center_hz * t)
        idx = int(round(sig.onset_s * config.sample_rate_hz))
        if 0 <= idx < n:
            onset_index = idx
    rng = np.random.default_rng(config.seed)
    noise = rng.normal(0.0, config.noise_sigma, size=(config.channels, n)) if config.noise_sigma > 0 else 0.0
    channels = np.broadcast_to(base, (config.channels, n)) + noise
    return Recording(
        patient_id=patient_id,
        sample_rate_hz=config.sample_rate_hz,
        channels=np.ascontiguousarray(channels),
        phase=phase,
        onset_index=onset_index,
    )


def build_preictal(preictal, ictal):
    """Final 48 minutes of the preictal recording concatenated with the
    whole ictal recording; the onset lands exactly at the 48-minute mark."""
    if preictal.sample_rate_hz != ictal.sample_rate_hz:
        raise ParameterError("sample rates differ")
    if preictal.n_channels != ictal.n_channels:
        raise ParameterError("channel counts differ")
    rate = preictal.sample_rate_hz
    need = PREICTAL_MINUTES * 60 * rate
    if preictal.n_samples < need:
        raise InsufficientDataError(
            f"preictal recording holds {preictal.n_samples} samples, need {need} (48 min)"
        )
    channels = np.concatenate([preictal.channels[:, -need:], ictal.channels], axis=1)
    return Recording(
        patient_id=preictal.patient_id,
        sample_rate_hz=rate,
        channels=channels,
        phase="mixed",
        onset_index=need,
    )


def sample_training_window(rec, minutes, seed):
    """Contiguous window of `minutes`, start drawn uniformly over the
    segment-aligned offsets (multiples of 2048 samples)."""
    want = minutes * 60 * rec.sample_rate_hz
    if rec.n_samples < want:
        raise InsufficientDataError(
            f"recording holds {rec.n_samples} samples, need {want} ({minutes} min)"
        )
    if want == rec.n_samples:
        return rec
    valid_starts = (rec.n_samples - want) // SEGMENT_LENGTH + 1
    start = int(np.random.default_rng(seed).integers(0, valid_starts)) * SEGMENT_LENGTH
    onset = rec.onset_index
    if onset is not None:
        onset = onset - start if start <= onset < start + want else None
    return Recording(
        patient_id=rec.patient_id,
        sample_rate_hz=rec.sample_rate_hz,
        channels=rec.channels[:, start : start + want],
        phase=rec.phase,
        onset_index=onset,
    )


def segment(rec, segment_length=SEGMENT_LENGTH, segments_per_chunk=SEGMENTS_PER_CHUNK):
    """Split a recording into whole chunks; trailing samples that do not
    fill a chunk are dropped. Returns a list of SegmentMatrix."""
    chunk_samples = segment_length * segments_per_chunk
    n_chunks = rec.n_samples // chunk_samples
    out = []
    for c in range(n_chunks):
        block = rec.channels[:, c * chunk_samples : (c + 1) * chunk_samples]
        # (ch, seg*len) -> segments stacked as columns, channel-major
        cols = block.reshape(rec.n_channels * segments_per_chunk, segment_length).T
        out.append(
            SegmentMatrix(
                values=np.ascontiguousarray(cols),
                segment_length=segment_length,
                segments_per_chunk=segments_per_chunk,
                channel_count=rec.n_channels,
                chunk_index=c,
                source_phase=rec.phase,
            )
        )
    return out


def load_csv(path):
    """Read a recording from the CSV interchange format.

    Line 1: `sample_rate_hz=<int>,channels=<int>,phase=<word>` plus
    optional `onset_index=<int>` and `patient=<text>`; every following
    line is one sample instant with `channels` comma-separated floats.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header:
            raise ParseError("empty file", line=1)
        meta = {}
        for part in header.strip().split(","):
            if "=" not in part:
                raise ParseError(f"malformed header field {part!r}", line=1)
            key, _, value = part.partition("=")
            meta[key.strip()] = value.strip()
        try:
            rate = int(meta["sample_rate_hz"])
            n_channels = int(meta["channels"])
            phase = meta["phase"]
        except KeyError as exc:
            raise ParseError(f"header missing field {exc.args[0]}", line=1) from None
        except ValueError as exc:
            raise ParseError(f"bad header value: {exc}", line=1) from None
        onset = int(meta["onset_index"]) if "onset_index" in meta else None
        patient = meta.get("patient", "unknown")
        rows = []
        for lineno, raw in enumerate(fh, start=2):
            raw = raw.strip()
            if not raw:
                continue
            cells = raw.split(",")
            if len(cells) != n_channels:
                raise ParseError(
                    f"expected {n_channels} cells, found {len(cells)}", line=lineno
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ParseError(f"non-numeric cell in {raw!r}", line=lineno) from None
    if not rows:
        raise ParseError("no sample rows", line=2)
    channels = np.array(rows, dtype=np.float64).T
    return Recording(
        patient_id=patient,
        sample_rate_hz=rate,
        channels=channels,
        phase=phase,
        onset_index=onset,
    )


def save_csv(rec, path):
    """Write the CSV interchange format (UTF-8, LF endings, repr floats)."""
    buf = io.StringIO()
    header = f"sample_rate_hz={rec.sample_rate_hz},channels={rec.n_channels},phase={rec.phase}"
    if rec.onset_index is not None:
        header += f",onset_index={rec.onset_index}"
    header += f",patient={rec.patient_id}"
    buf.write(header + "\n")
    cols = rec.channels.T
    for row in cols:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())
