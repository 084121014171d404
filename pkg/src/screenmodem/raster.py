"""Pixel patterns that make a display emit acoustic tones, and the emission model.

A frame is scanned out row by row at the pixel clock. Alternating runs of lit
and dark pixels along that scan order load the panel's power supply as a
square wave, so a bitmap whose runs are ``cycle_size`` pixels long is heard as
a tone at ``pixel_clock / cycle_size`` Hz.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument, InvalidFrame, InvalidTiming, OutOfRangeTone, UnrepresentableTone

DEFAULT_SAMPLE_RATE = 48000


@dataclass(frozen=True)
class TimingConfig:
    h_res: int
    v_res: int
    refresh_rate: int
    h_total: Optional[int] = None
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        for name in ("h_res", "v_res", "refresh_rate", "sample_rate"):
            if int(getattr(self, name)) < 1:
                raise InvalidTiming(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.h_total is None:
            object.__setattr__(self, "h_total", self.h_res)
        if self.h_total < self.h_res:
            raise InvalidTiming(f"h_total ({self.h_total}) must be >= h_res ({self.h_res})")

    @property
    def pixel_clock(self) -> int:
        return compute_pixel_clock(self)

    @property
    def raster_pixels(self) -> int:
        """Pixels scanned per frame, blanking included."""
        return self.h_total * self.v_res

    @property
    def max_frequency(self) -> float:
        return self.pixel_clock / 4

    @classmethod
    def parse(cls, text: str, sample_rate: int = DEFAULT_SAMPLE_RATE) -> "TimingConfig":
        """Parse ``WxH@Hz[:htotal]``, e.g. ``1680x1050@60`` or ``1920x1080@60:2200``."""
        try:
            geometry, rest = text.lower().split("@")
            w, h = geometry.split("x")
            if ":" in rest:
                hz, htotal = rest.split(":")
                h_total = int(htotal)
            else:
                hz, h_total = rest, None
            return cls(int(w), int(h), int(hz), h_total, sample_rate)
        except ValueError as exc:
            if isinstance(exc, InvalidTiming):
                raise
            raise InvalidTiming(f"cannot parse timing {text!r}; expected WxH@Hz[:htotal]") from exc


PAPER_TIMING = TimingConfig(1680, 1050, 60)


def compute_pixel_clock(timing: TimingConfig) -> int:
    """Visible pixels per second: ``h_res * v_res * refresh_rate``."""
    if min(timing.h_res, timing.v_res, timing.refresh_rate) <= 0:
        raise InvalidTiming("timing has a zero dimension")
    return timing.h_res * timing.v_res * timing.refresh_rate


@dataclass(frozen=True)
class TonePattern:
    frequency: float
    cycle_size: int
    half_cycle: int
    brightness: int
    pixel_clock: int

    @property
    def actual_frequency(self) -> float:
        """Tone actually produced once cycle_size is rounded to whole pixels."""
        return self.pixel_clock / self.cycle_size

    @property
    def frequency_error(self) -> float:
        return self.actual_frequency - self.frequency


def plan_tone(timing: TimingConfig, frequency: float, brightness: int = 255) -> TonePattern:
    pclk = compute_pixel_clock(timing)
    if not 0 <= brightness <= 255:
        raise InvalidArgument(f"brightness must be in [0, 255], got {brightness}")
    if not 0 < frequency <= pclk / 4:
        raise OutOfRangeTone(f"{frequency} Hz is outside (0, {pclk / 4:g}] for a {pclk} Hz pixel clock")
    cycle = int(round(pclk / frequency))
    if cycle < 2:
        raise UnrepresentableTone(f"{frequency} Hz needs a cycle of {pclk / frequency:.3f} pixels")
    return TonePattern(float(frequency), cycle, cycle // 2, int(brightness), pclk)


@dataclass(frozen=True)
class Strip:
    """Band of rows carrying one square wave; ``cycle_size == 0`` means dark."""

    row_start: int
    row_stop: int
    cycle_size: int = 0
    half_cycle: int = 0
    brightness: int = 0
    phase: int = 0

    @property
    def lit(self) -> bool:
        return self.cycle_size > 0 and self.half_cycle > 0 and self.brightness > 0


class FrameBitmap:
    """One grayscale frame.

    Frames built by :func:`tone_pattern` / :func:`strip_pattern` keep their
    strip layout and only rasterize ``luma`` on first access, which lets the
    emission model skip the per-pixel scan.
    """

    __slots__ = ("width", "height", "h_total", "strips", "__dict__")

    def __init__(self, width: int, height: int, luma=None, *, h_total: Optional[int] = None,
                 strips: Optional[Sequence[Strip]] = None):
        self.width = int(width)
        self.height = int(height)
        self.h_total = int(h_total) if h_total is not None else self.width
        self.strips = tuple(strips) if strips is not None else None
        if luma is None and self.strips is None:
            raise InvalidFrame("frame needs either pixel data or a strip layout")
        if luma is not None:
            arr = np.asarray(luma)
            if arr.shape != (self.height, self.width):
                raise InvalidFrame(f"luma shape {arr.shape} != ({self.height}, {self.width})")
            if arr.dtype != np.uint8:
                if arr.min(initial=0) < 0 or arr.max(initial=0) > 255:
                    raise InvalidFrame("luma values must be within 0..255")
                arr = arr.astype(np.uint8)
            arr = arr.copy()
            arr.setflags(write=False)
            self.__dict__["luma"] = arr

    @classmethod
    def from_array(cls, luma) -> "FrameBitmap":
        arr = np.asarray(luma)
        if arr.ndim != 2:
            raise InvalidFrame("luma must be a 2-D array")
        return cls(arr.shape[1], arr.shape[0], arr)

    @cached_property
    def luma(self) -> np.ndarray:
        out = np.zeros((self.height, self.width), dtype=np.uint8)
        x = np.arange(self.width, dtype=np.int64)
        for s in self.strips:
            if not s.lit:
                continue
            rows = np.arange(s.row_stop - s.row_start, dtype=np.int64)
            sample_number = x[None, :] + rows[:, None] * self.h_total + s.phase
            out[s.row_start:s.row_stop] = np.where(sample_number % s.cycle_size < s.half_cycle,
                                                   np.uint8(s.brightness), np.uint8(0))
        out.setflags(write=False)
        return out

    @property
    def is_dark(self) -> bool:
        if self.strips is not None:
            return not any(s.lit for s in self.strips)
        return not self.luma.any()

    def matches(self, timing: TimingConfig) -> bool:
        return self.width == timing.h_res and self.height == timing.v_res

    def __eq__(self, other):
        if not isinstance(other, FrameBitmap):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and np.array_equal(self.luma, other.luma)

    __hash__ = None

    def __repr__(self):
        kind = "layout" if self.strips is not None else "pixels"
        return f"FrameBitmap({self.width}x{self.height}, {kind})"


def blank_frame(timing: TimingConfig) -> FrameBitmap:
    return FrameBitmap(timing.h_res, timing.v_res, h_total=timing.h_total,
                       strips=[Strip(0, timing.v_res)])


def tone_pattern(timing: TimingConfig, frequency: float, brightness: int = 255, phase: int = 0) -> FrameBitmap:
    """Full-screen bitmap that emits ``frequency`` when scanned out.

    Pixel ``(x, y)`` is lit when ``(x + y*h_total + phase) % cycle_size < half_cycle``.
    ``phase`` shifts the raster index so consecutive frames can continue the
    carrier where the previous frame stopped.
    """
    tone = plan_tone(timing, frequency, brightness)
    strip = Strip(0, timing.v_res, tone.cycle_size, tone.half_cycle, tone.brightness,
                  int(phase) % tone.cycle_size)
    return FrameBitmap(timing.h_res, timing.v_res, h_total=timing.h_total, strips=[strip])


def strip_bounds(v_res: int, n: int) -> list[tuple[int, int]]:
    edges = [i * v_res // n for i in range(n + 1)]
    return list(zip(edges[:-1], edges[1:]))


def strip_pattern(timing: TimingConfig, frequencies: Sequence[Optional[float]], brightness: int = 255,
                  phase: int = 0) -> FrameBitmap:
    """Split the screen into ``len(frequencies)`` horizontal strips, one tone each.

    Strip rows are numbered from the strip's own top row. A ``None`` entry
    leaves that strip dark.
    """
    n = len(frequencies)
    if n == 0:
        raise InvalidArgument("strip_pattern needs at least one frequency")
    if n > timing.v_res:
        raise InvalidArgument(f"{n} strips do not fit in {timing.v_res} rows")
    strips = []
    for (top, bottom), f in zip(strip_bounds(timing.v_res, n), frequencies):
        if f is None:
            strips.append(Strip(top, bottom))
            continue
        tone = plan_tone(timing, f, brightness)
        strips.append(Strip(top, bottom, tone.cycle_size, tone.half_cycle, tone.brightness,
                            int(phase) % tone.cycle_size))
    return FrameBitmap(timing.h_res, timing.v_res, h_total=timing.h_total, strips=strips)


@dataclass
class Waveform:
    sample_rate: int
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InvalidArgument("waveform samples must be one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgument("waveform contains non-finite samples")

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self.samples) else 0.0

    @classmethod
    def silence(cls, sample_rate: int, seconds: float) -> "Waveform":
        return cls(sample_rate, np.zeros(int(round(seconds * sample_rate))))

    def __add__(self, other: "Waveform") -> "Waveform":
        """Concatenate in time."""
        if other.sample_rate != self.sample_rate:
            raise InvalidArgument("cannot concatenate waveforms with different sample rates")
        return Waveform(self.sample_rate, np.concatenate([self.samples, other.samples]))


def _on_count(m, cycle, half):
    """Lit pixels among raster indices [0, m) of a square wave starting lit."""
    return (m // cycle) * half + np.minimum(m % cycle, half)


def _frame_drive_layout(frame: FrameBitmap, edges: np.ndarray) -> np.ndarray:
    """Mean drive level per sample block, computed from the strip layout."""
    out = np.zeros(len(edges) - 1)
    width = frame.h_total
    lo_edges, hi_edges = edges[:-1], edges[1:]
    for s in frame.strips:
        if not s.lit:
            continue
        start, stop = s.row_start * width, s.row_stop * width
        a = np.clip(lo_edges, start, stop) - start + s.phase
        b = np.clip(hi_edges, start, stop) - start + s.phase
        lit = _on_count(b, s.cycle_size, s.half_cycle) - _on_count(a, s.cycle_size, s.half_cycle)
        out += lit * (s.brightness / 255.0)
    return out / np.diff(edges)


def _frame_drive_pixels(frame: FrameBitmap, timing: TimingConfig, edges: np.ndarray) -> np.ndarray:
    """Mean drive level per sample block, from a raster scan of the pixels."""
    raster = np.zeros((timing.v_res, timing.h_total))
    raster[:, :timing.h_res] = frame.luma / 255.0
    csum = np.concatenate([[0.0], np.cumsum(raster.ravel())])
    return (csum[edges[1:]] - csum[edges[:-1]]) / np.diff(edges)


def emit_waveform(frames: Sequence[FrameBitmap], timing: TimingConfig, *, scan_pixels: bool = False) -> Waveform:
    """Model the acoustic emission of a frame sequence.

    Each frame is raster-scanned (blanking pixels dark), the drive level
    ``luma/255`` is block-averaged down to ``timing.sample_rate`` and the
    per-frame mean is removed. ``scan_pixels`` forces the per-pixel path even
    when a strip layout is available.
    """
    frames = list(frames)
    if not frames:
        raise InvalidArgument("emit_waveform needs at least one frame")
    sr, rate = timing.sample_rate, timing.refresh_rate
    total_pixels = timing.raster_pixels
    bounds = np.round(np.arange(len(frames) + 1) * sr / rate).astype(np.int64)
    out = np.empty(bounds[-1])
    layout_ok = timing.h_total == timing.h_res and not scan_pixels
    edge_cache: dict[int, np.ndarray] = {}
    memo: dict[tuple, np.ndarray] = {}
    for j, frame in enumerate(frames):
        if not frame.matches(timing):
            raise InvalidFrame(f"frame {j} is {frame.width}x{frame.height}, timing is {timing.h_res}x{timing.v_res}")
        n = int(bounds[j + 1] - bounds[j])
        if n not in edge_cache:
            if n > total_pixels:
                raise InvalidTiming("sample rate exceeds the raster rate; nothing to average")
            edge_cache[n] = np.round(np.arange(n + 1) * total_pixels / n).astype(np.int64)
        edges = edge_cache[n]
        if frame.strips is not None and frame.is_dark:
            out[bounds[j]:bounds[j + 1]] = 0.0
            continue
        key = (frame.strips, n) if frame.strips is not None else (id(frame), n)
        chunk = memo.get(key)
        if chunk is None:
            if layout_ok and frame.strips is not None:
                drive = _frame_drive_layout(frame, edges)
            else:
                drive = _frame_drive_pixels(frame, timing, edges)
            chunk = drive - drive.mean()
            memo[key] = chunk
        out[bounds[j]:bounds[j + 1]] = chunk
    return Waveform(sr, out)
