"""Audio I/O and signal-level transforms: resampling, speed perturbation,
log-mel features, and time/frequency masking."""

from elderaug.dsp.audio_io import (
    AudioClip,
    WavInfo,
    decode_wav,
    encode_wav,
    read_wav,
    wav_info,
    write_wav,
)
from elderaug.dsp.features import (
    LOG_FLOOR,
    MaskPolicy,
    MelSpectrogram,
    log_mel,
    mask_waveform,
    mel_center_frequencies,
    mel_filterbank,
    read_features,
    spec_augment,
    write_features,
)
from elderaug.dsp.resample import resample, speed_perturb

__all__ = [
    "AudioClip",
    "WavInfo",
    "decode_wav",
    "encode_wav",
    "read_wav",
    "wav_info",
    "write_wav",
    "LOG_FLOOR",
    "MaskPolicy",
    "MelSpectrogram",
    "log_mel",
    "mask_waveform",
    "mel_center_frequencies",
    "mel_filterbank",
    "read_features",
    "spec_augment",
    "write_features",
    "resample",
    "speed_perturb",
]
