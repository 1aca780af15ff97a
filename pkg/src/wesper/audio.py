"""Deterministic signal-processing frontend.

WAV I/O, framing, STFT, mel/MFCC features and Griffin-Lim resynthesis.
Everything here is a pure function of its inputs; there is no hidden state,
so concurrent use is safe.

Conventions fixed for the whole package:
  * canonical sample rate 16 kHz (inputs are resampled on load),
  * hop 320 samples = 20 ms, n_fft 1024, Hann window,
  * log-mel floor 1e-5, HTK mel scale, 80 mel bands.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct
from scipy.signal import resample_poly

from .errors import FormatError, TooShortError, ValidationError

SAMPLE_RATE = 16000
HOP = 320  # 20 ms at 16 kHz; one STFT/mel frame per speech unit
N_FFT = 1024
N_MELS = 80
MEL_FLOOR = 1e-5
LOG_MEL_FLOOR = float(np.log(MEL_FLOOR))

_WAVE_PCM = 1
_WAVE_IEEE_FLOAT = 3


@dataclass(frozen=True)
class StftConfig:
    """Framing parameters; window is always Hann (periodic)."""

    n_fft: int = N_FFT
    hop: int = HOP

    def __post_init__(self):
        if not (0 < self.hop <= self.n_fft):
            raise ValidationError(
                f"require 0 < hop <= n_fft, got hop={self.hop} n_fft={self.n_fft}"
            )


@dataclass
class AudioClip:
    """Mono waveform with its sample rate. Samples are float64 in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be > 0, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError("AudioClip samples contain NaN or Inf")

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return self.length / self.sample_rate


@dataclass
class MelSpectrogram:
    """frames x n_mels matrix of log mel energies (natural log, floored)."""

    data: np.ndarray
    n_mels: int = N_MELS
    hop: int = HOP
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[1] != self.n_mels:
            raise ValidationError(
                f"mel data must be (frames, {self.n_mels}), got {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("mel spectrogram contains NaN or Inf")

    @property
    def frames(self) -> int:
        return self.data.shape[0]


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window (the DFT-even variant used for analysis)."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


# ---------------------------------------------------------------------------
# WAV I/O
# ---------------------------------------------------------------------------

def _parse_wav(raw: bytes, path: str) -> tuple[np.ndarray, int]:
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if size < 16:
                raise FormatError(f"{path}: fmt chunk truncated (size={size})")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None:
        raise FormatError(f"{path}: missing fmt chunk")
    if data is None:
        raise FormatError(f"{path}: missing data chunk")
    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if channels < 1:
        raise FormatError(f"{path}: channels={channels} invalid")
    if audio_format == _WAVE_PCM:
        if bits != 16:
            raise FormatError(
                f"{path}: bits_per_sample={bits} unsupported (PCM reader accepts 16)"
            )
        x = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == _WAVE_IEEE_FLOAT:
        if bits != 32:
            raise FormatError(
                f"{path}: bits_per_sample={bits} unsupported (float reader accepts 32)"
            )
        x = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise FormatError(
            f"{path}: audio_format={audio_format} unsupported (need PCM=1 or float=3)"
        )
    if channels > 1:
        usable = (x.shape[0] // channels) * channels
        x = x[:usable].reshape(-1, channels).mean(axis=1)
    if not np.all(np.isfinite(x)):
        raise FormatError(f"{path}: sample data contains NaN or Inf")
    return x, rate


def load_wav(path, target_rate: int = SAMPLE_RATE) -> AudioClip:
    """Read a WAV file as a mono clip at the canonical rate.

    PCM 16-bit and IEEE float 32-bit files are accepted, mono or multi-channel
    (channels are averaged). Files at other rates are resampled with a
    linear-phase polyphase filter.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise FormatError(f"{path}: unreadable ({exc})") from exc
    x, rate = _parse_wav(raw, str(path))
    clip = AudioClip(x, rate)
    if rate != target_rate:
        clip = resample(clip, target_rate)
    return clip


def save_wav(path, clip: AudioClip) -> None:
    """Write a mono 16-bit PCM WAV file. Samples are clipped to [-1, 1]."""
    q = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    data = q.tobytes()
    hdr = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    hdr += b"fmt " + struct.pack(
        "<IHHIIHH", 16, _WAVE_PCM, 1, clip.sample_rate,
        clip.sample_rate * 2, 2, 16,
    )
    hdr += b"data" + struct.pack("<I", len(data))
    with open(path, "wb") as fh:
        fh.write(hdr + data)


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Polyphase resampling to target_rate."""
    if target_rate <= 0:
        raise ValidationError(f"target_rate must be > 0, got {target_rate}")
    if clip.sample_rate == target_rate:
        return clip
    g = math.gcd(clip.sample_rate, target_rate)
    y = resample_poly(clip.samples, target_rate // g, clip.sample_rate // g)
    return AudioClip(y, target_rate)


# ---------------------------------------------------------------------------
# STFT / mel / MFCC
# ---------------------------------------------------------------------------

def stft_frame_count(length: int, cfg: StftConfig) -> int:
    """Number of full analysis frames for a signal of the given length."""
    if length < cfg.n_fft:
        return 0
    return (length - cfg.n_fft) // cfg.hop + 1


def stft(clip: AudioClip, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """Complex STFT, shape (frames, n_fft//2 + 1). No padding or centering."""
    x = clip.samples
    if x.shape[0] < cfg.n_fft:
        raise TooShortError(
            f"clip of {x.shape[0]} samples is shorter than n_fft={cfg.n_fft}"
        )
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.n_fft)[::cfg.hop]
    return np.fft.rfft(frames * hann_window(cfg.n_fft), axis=1)


def istft(spec: np.ndarray, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """Weighted overlap-add inverse of `stft`.

    Output length is (frames-1)*hop + n_fft; the synthesis uses the analysis
    window twice and divides by its summed square, the standard LSE inverse.
    Edge samples where the window-square sum is under 1% of its peak are set
    to zero instead of divided: dividing there amplifies rounding noise by
    orders of magnitude, and zeroing keeps this the exact least-squares
    inverse on the subspace of signals supported away from those edges (which
    is what makes Griffin-Lim's error non-increasing).
    """
    spec = np.asarray(spec)
    n_frames = spec.shape[0]
    w = hann_window(cfg.n_fft)
    frames = np.fft.irfft(spec, n=cfg.n_fft, axis=1) * w
    length = (n_frames - 1) * cfg.hop + cfg.n_fft
    y = np.zeros(length)
    norm = np.zeros(length)
    for m in range(n_frames):
        s = m * cfg.hop
        y[s:s + cfg.n_fft] += frames[m]
        norm[s:s + cfg.n_fft] += w * w
    keep = norm >= 1e-2 * norm.max()
    return np.where(keep, y / np.where(keep, norm, 1.0), 0.0)


def mel_filterbank(n_fft: int = N_FFT, n_mels: int = N_MELS,
                   sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Triangular HTK-mel filterbank, shape (n_mels, n_fft//2 + 1).

    Break points span 0 Hz to Nyquist on the mel scale. The lowest edge is
    pulled one FFT bin below DC so the DC bin still lands on the first
    filter's rising slope: every bin below Nyquist must feed at least one
    filter.
    """
    nyq = sample_rate / 2.0
    mel_pts = np.linspace(_hz_to_mel(0.0), _hz_to_mel(nyq), n_mels + 2)
    hz_pts = _mel_to_hz(mel_pts)
    hz_pts[0] = -sample_rate / n_fft
    bins_hz = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    left = hz_pts[:-2, None]
    center = hz_pts[1:-1, None]
    right = hz_pts[2:, None]
    rising = (bins_hz - left) / (center - left)
    falling = (right - bins_hz) / (right - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_spectrogram(clip: AudioClip, cfg: StftConfig = StftConfig(),
                    n_mels: int = N_MELS) -> MelSpectrogram:
    """Log mel spectrogram of the power spectrum, floored at 1e-5."""
    power = np.abs(stft(clip, cfg)) ** 2
    fb = mel_filterbank(cfg.n_fft, n_mels, clip.sample_rate)
    mel = power @ fb.T
    return MelSpectrogram(np.log(np.maximum(mel, MEL_FLOOR)), n_mels,
                          cfg.hop, clip.sample_rate)


def mfcc(clip: AudioClip, cfg: StftConfig = StftConfig(),
         n_mels: int = N_MELS, n_coef: int = 13) -> np.ndarray:
    """MFCCs: orthonormal DCT-II of the log-mel frames, first n_coef kept."""
    logmel = mel_spectrogram(clip, cfg, n_mels).data
    return dct(logmel, type=2, norm="ortho", axis=1)[:, :n_coef]


# ---------------------------------------------------------------------------
# Griffin-Lim
# ---------------------------------------------------------------------------

def mel_to_linear_power(mel: MelSpectrogram, cfg: StftConfig,
                        n_iters: int = 60) -> np.ndarray:
    """Invert the mel filterbank by non-negative least squares.

    Uses multiplicative updates (Lee-Seung), which keep the estimate
    non-negative and never increase the squared residual. The analysis floor
    is subtracted first so an all-floor mel maps to exact silence.
    """
    fb = mel_filterbank(cfg.n_fft, mel.n_mels, mel.sample_rate)
    target = np.maximum(np.exp(mel.data) - MEL_FLOOR, 0.0)  # (T, n_mels)
    if not target.any():
        return np.zeros((mel.frames, cfg.n_fft // 2 + 1))
    # Warm start from the transpose map, rescaled to the least-squares gain.
    s = target @ fb
    proj = s @ fb.T
    denom = float(np.sum(proj * proj))
    if denom > 0.0:
        s *= float(np.sum(proj * target)) / denom
    eps = 1e-12
    numer = target @ fb
    for _ in range(n_iters):
        s *= numer / ((s @ fb.T) @ fb + eps)
    return s


def griffin_lim(mel: MelSpectrogram, iterations: int = 32,
                cfg: StftConfig | None = None) -> AudioClip:
    """Resynthesize a waveform from a log-mel spectrogram.

    The mel matrix is mapped back to a linear magnitude spectrogram by NNLS
    pseudo-inversion of the filterbank, then phase is recovered by iterating
    ISTFT/STFT projections starting from zero phase (deterministic).
    """
    if cfg is None:
        cfg = StftConfig(hop=mel.hop)
    elif cfg.hop != mel.hop:
        raise ValidationError(f"cfg.hop={cfg.hop} does not match mel.hop={mel.hop}")
    if iterations < 0:
        raise ValidationError(f"iterations must be >= 0, got {iterations}")
    mag = np.sqrt(mel_to_linear_power(mel, cfg))
    spec = mag.astype(np.complex128)  # zero phase
    y = istft(spec, cfg)
    for _ in range(iterations):
        phase = np.exp(1j * np.angle(stft(AudioClip(y, mel.sample_rate), cfg)))
        y = istft(mag * phase, cfg)
    return AudioClip(y, mel.sample_rate)
