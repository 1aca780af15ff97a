"""LPC analysis/resynthesis converter from voiced speech to pseudo-whisper.

Each 25 ms frame is modelled as an all-pole envelope (Levinson-Durbin on the
windowed autocorrelation). The voiced excitation is thrown away and replaced
with seeded white noise shaped by a -3 dB/octave tilt, so pitch disappears
while the formant envelope survives. Per-frame gain is matched to the source
frame at -6 dB, which is roughly how much quieter real whisper is.

The converter is deterministic under a fixed noise seed and preserves the
input duration exactly, so (clip, whisperize(clip)) pairs are frame-
synchronous by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .audio import AudioClip, hann_window
from .errors import TooShortError, ValidationError

PITCH_LAG_MIN_MS = 2.5
PITCH_LAG_MAX_MS = 20.0


@dataclass(frozen=True)
class WhisperizeConfig:
    order: int = 16
    frame_len: int = 400   # 25 ms at 16 kHz
    hop: int = 160         # 10 ms
    noise_seed: int = 0
    spectral_tilt_db_per_octave: float = -3.0
    bandwidth_expansion: float = 0.994
    gain_db: float = -6.0
    voiced_threshold: float = 0.5

    def __post_init__(self):
        if not (0 < self.hop <= self.frame_len):
            raise ValidationError(
                f"require 0 < hop <= frame_len, got {self.hop}, {self.frame_len}"
            )
        if not (0 < self.order < self.frame_len):
            raise ValidationError(
                f"require 0 < order < frame_len, got order={self.order}"
            )


@dataclass
class LpcFrame:
    """All-pole model of one frame: x[n] ~ sum_k coeffs[k] * x[n-k-1]."""

    order: int
    coeffs: np.ndarray       # predictor coefficients a_1..a_p
    gain: float              # sqrt of residual power (per sample)
    voiced_flag: bool
    reflection: np.ndarray   # k_1..k_p from the Levinson recursion


def lpc_analyze(frame: np.ndarray, order: int,
                voiced_threshold: float = 0.5) -> LpcFrame:
    """Fit an order-p all-pole model by Levinson-Durbin.

    Zero-energy frames return all-zero coefficients with gain 0 instead of
    erroring; real corpora contain digital silence.
    """
    frame = np.asarray(frame, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(frame)):
        raise ValidationError("lpc_analyze: frame contains NaN or Inf")
    if frame.shape[0] <= order:
        raise ValidationError(
            f"lpc_analyze: frame length {frame.shape[0]} must exceed order {order}"
        )
    n = frame.shape[0]
    r = _autocorrelation(frame, order)
    if r[0] <= 0.0:
        return LpcFrame(order, np.zeros(order), 0.0, False, np.zeros(order))
    # Tiny diagonal loading keeps the recursion away from |k| = 1 on
    # pathologically predictable frames (pure sinusoids).
    r = r.copy()
    r[0] *= 1.0 + 1e-9

    a = np.zeros(order)
    k = np.zeros(order)
    err = r[0]
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        ki = acc / err
        k[i] = ki
        a_new = a.copy()
        a_new[i] = ki
        if i:
            a_new[:i] = a[:i] - ki * a[i - 1::-1]
        a = a_new
        err *= 1.0 - ki * ki

    gain = float(np.sqrt(max(err, 0.0) / n))
    voiced = _pitch_peak(frame, r0=float(r[0])) > voiced_threshold
    return LpcFrame(order, a, gain, voiced, k)


def _autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = x.shape[0]
    full = np.correlate(x, x, mode="full")
    return full[n - 1:n + max_lag]


def _pitch_peak(frame: np.ndarray, r0: float | None = None,
                sample_rate: int = 16000) -> float:
    """Max normalized autocorrelation in the speech pitch-lag range."""
    lo = int(PITCH_LAG_MIN_MS * sample_rate / 1000)
    hi = min(int(PITCH_LAG_MAX_MS * sample_rate / 1000), frame.shape[0] - 1)
    if hi < lo:
        return 0.0
    full = np.correlate(frame, frame, mode="full")
    n = frame.shape[0]
    r = full[n - 1:]
    if r0 is None:
        r0 = float(r[0])
    if r0 <= 0.0:
        return 0.0
    return float(np.max(r[lo:hi + 1]) / r0)


def pitch_strength(clip: AudioClip) -> float:
    """Normalized autocorrelation pitch peak of a whole clip (2.5-20 ms lags)."""
    return _pitch_peak(clip.samples, sample_rate=clip.sample_rate)


def _tilt_gains(n_fft: int, sample_rate: int, db_per_octave: float) -> np.ndarray:
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    ref = 1000.0
    f = np.maximum(freqs, sample_rate / n_fft)  # clamp DC to the first bin
    return (f / ref) ** (db_per_octave / (20.0 * np.log10(2.0)))


def whisperize(clip: AudioClip, cfg: WhisperizeConfig = WhisperizeConfig()) -> AudioClip:
    """Convert voiced speech into pseudo-whisper of identical length."""
    if clip.length < cfg.frame_len:
        raise TooShortError(
            f"clip of {clip.length} samples is shorter than one analysis frame "
            f"({cfg.frame_len})"
        )
    rng = np.random.default_rng(cfg.noise_seed)
    n = clip.length
    n_frames = max((n - cfg.frame_len) // cfg.hop + 1, 1)
    if (n_frames - 1) * cfg.hop + cfg.frame_len < n:
        n_frames += 1  # one extra frame to cover the tail
    padded = np.zeros((n_frames - 1) * cfg.hop + cfg.frame_len)
    padded[:n] = clip.samples

    window = hann_window(cfg.frame_len)
    tilt = _tilt_gains(cfg.frame_len, clip.sample_rate,
                       cfg.spectral_tilt_db_per_octave)
    target_scale = 10.0 ** (cfg.gain_db / 20.0)
    bw = cfg.bandwidth_expansion ** np.arange(1, cfg.order + 1)

    out = np.zeros_like(padded)
    norm = np.zeros_like(padded)
    for m in range(n_frames):
        start = m * cfg.hop
        src = padded[start:start + cfg.frame_len]
        noise = rng.standard_normal(cfg.frame_len)
        rms = float(np.sqrt(np.mean(src * src)))
        if rms < 1e-8:
            synth = np.zeros(cfg.frame_len)  # silence passes through
        else:
            lpc = lpc_analyze(src * window, cfg.order)
            shaped = np.fft.irfft(np.fft.rfft(noise) * tilt, n=cfg.frame_len)
            synth = lfilter([1.0], np.concatenate(([1.0], -lpc.coeffs * bw)), shaped)
            srms = float(np.sqrt(np.mean(synth * synth)))
            if srms > 0.0:
                synth *= rms * target_scale / srms
        out[start:start + cfg.frame_len] += synth * window
        norm[start:start + cfg.frame_len] += window

    # Single synthesis window, so normalize by the window sum (not its
    # square); samples where the sum is near zero (first/last hop) are
    # muted rather than divided, as dividing would amplify edge noise.
    keep = norm >= 1e-2 * norm.max()
    out = np.where(keep, out / np.where(keep, norm, 1.0), 0.0)
    return AudioClip(out[:n], clip.sample_rate)
