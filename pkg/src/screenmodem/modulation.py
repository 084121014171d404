"""Map bit streams onto frame sequences (OOK, ASK, M-FSK, strip OFDM)."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConfigurationError, PaddingWarning
from .raster import FrameBitmap, TimingConfig, blank_frame, plan_tone, strip_pattern, tone_pattern


class Scheme(str, enum.Enum):
    OOK = "ook"
    FSK = "fsk"
    ASK = "ask"
    OFDM = "ofdm"

    @classmethod
    def parse(cls, text) -> "Scheme":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).lower())
        except ValueError:
            raise ConfigurationError(f"unknown scheme {text!r}; choose from ook, fsk, ask, ofdm") from None


DEFAULT_CARRIER = 12500.0
DEFAULT_FSK = {
    2: (12000.0, 13000.0),
    4: (12000.0, 12500.0, 13000.0, 13500.0),
    8: tuple(12000.0 + 500.0 * i for i in range(8)),
}


def default_fsk_freqs(m: int = 2) -> tuple:
    if m not in DEFAULT_FSK:
        raise ConfigurationError(f"no default tone set for {m}-FSK; pass fsk_freqs explicitly")
    return DEFAULT_FSK[m]


@dataclass(frozen=True)
class ModulationParams:
    """Transmitter settings.

    ``fsk_freqs[v]`` is the tone for symbol value ``v``; for binary FSK that
    makes ``fsk_freqs[1]`` the mark (bit 1) and ``fsk_freqs[0]`` the space.
    ``ask_levels`` is ``(high, low)`` brightness. ``bit_rate`` counts bits per
    second for every scheme, so multi-bit symbols last proportionally longer.
    """

    scheme: Scheme = Scheme.OOK
    bit_rate: int = 10
    carrier: float = DEFAULT_CARRIER
    fsk_freqs: tuple = DEFAULT_FSK[2]
    ask_levels: tuple = (255, 64)
    amplitude: int = 255
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        object.__setattr__(self, "fsk_freqs", tuple(float(f) for f in self.fsk_freqs))
        object.__setattr__(self, "ask_levels", tuple(int(v) for v in self.ask_levels))
        if self.bit_rate <= 0:
            raise ConfigurationError("bit_rate must be positive")
        if not 0 <= self.amplitude <= 255:
            raise ConfigurationError("amplitude must be within 0..255")
        if self.scheme is Scheme.FSK:
            m = len(self.fsk_freqs)
            if m < 2 or m & (m - 1):
                raise ConfigurationError(f"FSK needs a power-of-two number of tones, got {m}")
            spacing = 2.0 * self.bit_rate
            fs = sorted(self.fsk_freqs)
            if any(b - a < spacing for a, b in zip(fs, fs[1:])):
                raise ConfigurationError(f"FSK tones must be at least {spacing:g} Hz apart")
        if self.scheme is Scheme.ASK:
            high, low = self.ask_levels
            if not 0 <= low < high <= 255:
                raise ConfigurationError("ask_levels must satisfy 0 <= low < high <= 255")

    @property
    def bit_duration(self) -> float:
        return 1.0 / self.bit_rate

    def frames_per_bit(self, refresh_rate: int) -> int:
        q, r = divmod(refresh_rate, self.bit_rate)
        if r or q < 1:
            raise ConfigurationError(
                f"refresh rate {refresh_rate} Hz is not a whole multiple of {self.bit_rate} bps")
        return q

    def bits_per_symbol(self, plan: Optional["OfdmPlan"] = None) -> int:
        if self.scheme is Scheme.FSK:
            return int(math.log2(len(self.fsk_freqs)))
        if self.scheme is Scheme.OFDM:
            if plan is None:
                raise ConfigurationError("OFDM needs an OfdmPlan")
            return plan.count
        return 1


@dataclass(frozen=True)
class OfdmPlan:
    """Sub-carrier ``i`` sits at ``center + i * spacing`` and owns screen strip ``i``."""

    center: float
    spacing: float
    count: int
    symbol_duration: float

    def __post_init__(self):
        if self.count < 1:
            raise ConfigurationError("OFDM needs at least one sub-carrier")
        if self.symbol_duration <= 0 or self.spacing <= 0:
            raise ConfigurationError("spacing and symbol duration must be positive")
        ratio = self.spacing * self.symbol_duration
        if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
            raise ConfigurationError(
                f"spacing {self.spacing} Hz is not a multiple of 1/T = {1 / self.symbol_duration:g} Hz")

    @property
    def frequencies(self) -> list[float]:
        return [self.center + i * self.spacing for i in range(self.count)]

    @classmethod
    def default(cls, count: int, bit_rate: int, center: float = DEFAULT_CARRIER,
                min_spacing: float = 200.0) -> "OfdmPlan":
        """Symbols carry ``count`` bits; spacing is the smallest multiple of 1/T >= min_spacing."""
        symbol = count / bit_rate
        spacing = math.ceil(min_spacing * symbol - 1e-9) / symbol
        return cls(float(center), spacing, count, symbol)


def _pad(bits: Sequence[int], group: int) -> list[int]:
    bits = [1 if b else 0 for b in bits]
    extra = (-len(bits)) % group
    if extra:
        warnings.warn(f"padded {extra} zero bit(s) to complete the last {group}-bit symbol",
                      PaddingWarning, stacklevel=3)
        bits += [0] * extra
    return bits


def _symbols(bits: list[int], group: int):
    for i in range(0, len(bits), group):
        chunk = bits[i:i + group]
        yield chunk


def modulate(bits: Sequence[int], params: ModulationParams, timing: TimingConfig,
             start_frame: int = 0) -> list[FrameBitmap]:
    """Frame sequence for OOK, ASK or M-FSK.

    Every frame carries the raster phase of its absolute index
    (``start_frame`` + position) so the carrier runs continuously across
    frame and symbol boundaries.
    """
    if params.scheme is Scheme.OFDM:
        raise ConfigurationError("use modulate_ofdm for OFDM")
    fpb = params.frames_per_bit(timing.refresh_rate)
    k = params.bits_per_symbol()
    fps = fpb * k
    per_frame = timing.raster_pixels
    # fail early on unrepresentable tones
    for f in (params.fsk_freqs if params.scheme is Scheme.FSK else (params.carrier,)):
        plan_tone(timing, f, params.amplitude)
    frames = []
    index = start_frame
    blank = blank_frame(timing)
    for sym in _symbols(_pad(bits, k), k):
        value = int("".join(map(str, sym)), 2)
        for _ in range(fps):
            phase = index * per_frame
            if params.scheme is Scheme.OOK:
                frame = tone_pattern(timing, params.carrier, params.amplitude, phase) if value else blank
            elif params.scheme is Scheme.ASK:
                level = params.ask_levels[0] if value else params.ask_levels[1]
                frame = tone_pattern(timing, params.carrier, level, phase) if level else blank
            else:
                frame = tone_pattern(timing, params.fsk_freqs[value], params.amplitude, phase)
            frames.append(frame)
            index += 1
    return frames


def modulate_ofdm(bits: Sequence[int], plan: OfdmPlan, params: ModulationParams, timing: TimingConfig,
                  start_frame: int = 0) -> list[FrameBitmap]:
    """Split-screen OFDM: each symbol lights strip ``i`` when its bit is 1."""
    if plan.count > timing.v_res:
        raise ConfigurationError(f"{plan.count} sub-carriers need more than {timing.v_res} rows")
    fps_exact = plan.symbol_duration * timing.refresh_rate
    fps = int(round(fps_exact))
    if fps < 1 or abs(fps - fps_exact) > 1e-6:
        raise ConfigurationError(
            f"symbol duration {plan.symbol_duration} s is not a whole number of frames at {timing.refresh_rate} Hz")
    freqs = plan.frequencies
    for f in freqs:
        plan_tone(timing, f, params.amplitude)
    per_frame = timing.raster_pixels
    frames = []
    index = start_frame
    for sym in _symbols(_pad(bits, plan.count), plan.count):
        chosen = [f if b else None for f, b in zip(freqs, sym)]
        for _ in range(fps):
            frames.append(strip_pattern(timing, chosen, params.amplitude, index * per_frame))
            index += 1
    return frames


def ofdm_params(plan: OfdmPlan, bit_rate: Optional[int] = None, amplitude: int = 255) -> ModulationParams:
    """ModulationParams whose bit rate matches the plan's symbol duration."""
    rate = bit_rate if bit_rate is not None else int(round(plan.count / plan.symbol_duration))
    return ModulationParams(Scheme.OFDM, rate, carrier=plan.center, amplitude=amplitude)
