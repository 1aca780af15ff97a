"""Whisper-to-speech conversion toolkit: DSP, tiny autograd, self-supervised
speech units, and a non-autoregressive unit-to-mel decoder."""

from .audio import (
    SAMPLE_RATE,
    HOP,
    N_FFT,
    N_MELS,
    MEL_FLOOR,
    AudioClip,
    MelSpectrogram,
    StftConfig,
    load_wav,
    save_wav,
    resample,
    stft,
    istft,
    stft_frame_count,
    hann_window,
    mel_filterbank,
    mel_spectrogram,
    mfcc,
    griffin_lim,
)
from .errors import (
    WesperError,
    FormatError,
    TooShortError,
    ValidationError,
    ConfigError,
    ProtocolError,
    InsufficientDataError,
)
from .whisperizer import WhisperizeConfig, whisperize, lpc_analyze, pitch_strength

__version__ = "0.1.0"
