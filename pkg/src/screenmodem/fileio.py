"""Binary PGM frames, 16-bit mono WAV and raw PCM."""
from __future__ import annotations

import os
import wave
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .errors import FormatError
from .raster import FrameBitmap, Waveform

PathLike = Union[str, os.PathLike]


def write_pgm(path: PathLike, frame: FrameBitmap) -> None:
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(frame.luma).tobytes())


def _pgm_tokens(data: bytes, count: int):
    """First ``count`` header tokens of a PNM file and the offset just past them."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path: PathLike) -> FrameBitmap:
    data = Path(path).read_bytes()
    (magic, w, h, maxval), offset = _pgm_tokens(data, 4)
    if magic != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {magic!r})")
    width, height, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=offset)
    return FrameBitmap.from_array(pixels.reshape(height, width))


def write_frames(directory: PathLike, frames: Iterable[FrameBitmap]) -> int:
    """Write ``frame_000001.pgm`` onwards; returns the number written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = 0
    for n, frame in enumerate(frames, start=1):
        write_pgm(directory / f"frame_{n:06d}.pgm", frame)
    return n


def read_frames(directory: PathLike) -> list[FrameBitmap]:
    return [read_pgm(p) for p in sorted(Path(directory).glob("frame_*.pgm"))]


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    """Scale to int16; signals louder than full scale are peak-normalized first."""
    samples = np.asarray(samples, dtype=np.float64)
    peak = float(np.max(np.abs(samples))) if len(samples) else 0.0
    if peak > 1.0:
        samples = samples / peak
    return np.round(samples * 32767).astype("<i2")


def write_wav(path: PathLike, signal: Waveform) -> None:
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(signal.sample_rate))
        wf.writeframes(to_pcm16(signal.samples).tobytes())


def read_wav(path: PathLike) -> Waveform:
    try:
        with wave.open(str(path), "rb") as wf:
            channels, width, rate = wf.getnchannels(), wf.getsampwidth(), wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    if channels != 1 or width != 2:
        raise FormatError(f"{path}: need mono 16-bit PCM, got {channels} channel(s) at {8 * width} bits")
    return Waveform(rate, np.frombuffer(raw, dtype="<i2") / 32767.0)


def read_raw_pcm(path: PathLike, sample_rate: int) -> Waveform:
    raw = Path(path).read_bytes()
    if len(raw) % 2:
        raise FormatError(f"{path}: odd byte count for 16-bit PCM")
    return Waveform(sample_rate, np.frombuffer(raw, dtype="<i2") / 32767.0)
