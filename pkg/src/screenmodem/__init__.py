"""Simulated screen-pixel acoustic modem: pixel patterns, emission, channel and demodulator."""

__version__ = "0.1.0"

from .channel import (ChannelParams, ChannelProfile, apply_channel, bundled_profile, load_profile, mix_sources)
from .framing import crc8, deframe, frame_packet
from .modulation import ModulationParams, OfdmPlan, Scheme, modulate, modulate_ofdm
from .raster import (FrameBitmap, TimingConfig, TonePattern, Waveform, compute_pixel_clock, emit_waveform,
                     strip_pattern, tone_pattern)
from .receiver import (DecodeResult, SyncInfo, decode_stream, demodulate_ofdm, demodulate_packet,
                       detect_preamble, receive)
from .spectral import SpectraStream, measure_snr, spectral_stream

__all__ = [
    "ChannelParams", "ChannelProfile", "DecodeResult", "FrameBitmap", "ModulationParams", "OfdmPlan",
    "Scheme", "SpectraStream", "SyncInfo", "TimingConfig", "TonePattern", "Waveform", "apply_channel",
    "bundled_profile", "compute_pixel_clock", "crc8", "decode_stream", "deframe", "demodulate_ofdm",
    "demodulate_packet", "detect_preamble", "emit_waveform", "frame_packet", "load_profile", "measure_snr",
    "mix_sources", "modulate", "modulate_ofdm", "receive", "spectral_stream", "strip_pattern", "tone_pattern",
]
