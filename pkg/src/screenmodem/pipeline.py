"""Payload words to frames and emission, the transmit half of the loopback."""
from __future__ import annotations

from typing import Optional, Sequence

from .framing import frame_packet
from .modulation import ModulationParams, OfdmPlan, Scheme, modulate, modulate_ofdm
from .raster import FrameBitmap, TimingConfig, Waveform, blank_frame, emit_waveform


def packet_frames(payloads: Sequence[int], params: ModulationParams, timing: TimingConfig,
                  plan: Optional[OfdmPlan] = None, gap_bits: int = 0, lead_frames: int = 0) -> list[FrameBitmap]:
    """Frames for consecutive packets, ``gap_bits`` dark bit periods between them."""
    fpb = params.frames_per_bit(timing.refresh_rate)
    blank = blank_frame(timing)
    frames: list[FrameBitmap] = [blank] * lead_frames
    for i, word in enumerate(payloads):
        if i and gap_bits:
            frames.extend([blank] * (gap_bits * fpb))
        bits = frame_packet(word)
        if params.scheme is Scheme.OFDM:
            frames.extend(modulate_ofdm(bits, plan, params, timing, start_frame=len(frames)))
        else:
            frames.extend(modulate(bits, params, timing, start_frame=len(frames)))
    return frames


def transmit(payloads: Sequence[int], params: ModulationParams, timing: TimingConfig,
             plan: Optional[OfdmPlan] = None, gap_bits: int = 0, lead_frames: int = 0) -> Waveform:
    frames = packet_frames(payloads, params, timing, plan, gap_bits, lead_frames)
    if not frames:
        return Waveform(timing.sample_rate, [])
    return emit_waveform(frames, timing)
