"""Simulated acoustic path: gain, white Gaussian noise at a target SNR, source mixing."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .errors import IncompatibleWaveform, InvalidArgument, ProfileParseError, UndefinedSNR
from .raster import Waveform
from .spectral import averaged_periodogram, band_bins, noise_bin_power

PROFILE_HEADER = ["brand", "distance_m", "bit_rate_bps", "snr_db"]
POSITION_HEADER = ["screen", "model", "resolution", "position", "snr_db"]
METER_WINDOW = 4096


@dataclass(frozen=True)
class ProfileRow:
    brand: str
    distance: float
    bit_rate: int
    snr: Optional[float]


class ChannelProfile:
    """SNR measurements keyed by (brand, distance in metres, bit rate)."""

    def __init__(self, rows: Sequence[ProfileRow]):
        self.rows = list(rows)
        self._index = {self._key(r.brand, r.distance, r.bit_rate): r for r in self.rows}

    @staticmethod
    def _key(brand, distance, bit_rate):
        return str(brand).strip().lower(), round(float(distance), 3), int(bit_rate)

    def lookup(self, brand: str, distance: float, bit_rate: int) -> Optional[float]:
        """SNR in dB, or None when the table has no measurement for that cell."""
        row = self._index.get(self._key(brand, distance, bit_rate))
        return None if row is None else row.snr

    def resolve(self, key: str) -> Optional[float]:
        """Look up a ``brand:distance:bitrate`` key."""
        try:
            brand, distance, rate = key.rsplit(":", 2)
            return self.lookup(brand, float(distance), int(rate))
        except ValueError:
            raise InvalidArgument(f"profile key {key!r} is not brand:distance:bitrate") from None

    @property
    def brands(self) -> list[str]:
        return list(dict.fromkeys(r.brand for r in self.rows))

    def __len__(self):
        return len(self.rows)


def load_profile(table: str) -> ChannelProfile:
    """Parse CSV text with header ``brand,distance_m,bit_rate_bps,snr_db``.

    An empty or ``-`` SNR cell means the source table had no measurement.
    """
    reader = csv.reader(io.StringIO(table))
    try:
        header = next(reader)
    except StopIteration:
        raise ProfileParseError(1, "empty profile") from None
    if [h.strip() for h in header] != PROFILE_HEADER:
        raise ProfileParseError(1, f"header must be {','.join(PROFILE_HEADER)}")
    rows = []
    for cells in reader:
        line = reader.line_num
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != 4:
            raise ProfileParseError(line, f"expected 4 fields, got {len(cells)}")
        brand, distance, rate, snr = (c.strip() for c in cells)
        if not brand:
            raise ProfileParseError(line, "missing brand")
        try:
            d = float(distance)
            r = int(rate)
            s = None if snr in ("", "-") else float(snr)
        except ValueError as exc:
            raise ProfileParseError(line, str(exc)) from None
        if s is not None and not math.isfinite(s):
            raise ProfileParseError(line, "SNR must be finite")
        rows.append(ProfileRow(brand, d, r, s))
    return ChannelProfile(rows)


def bundled_profile() -> ChannelProfile:
    text = resources.files("screenmodem.profiles").joinpath("table2_snr.csv").read_text(encoding="utf-8")
    return load_profile(text)


def bundled_positions() -> list[dict]:
    """Receiver-position SNRs per screen (back/front/left/right/desk)."""
    text = resources.files("screenmodem.profiles").joinpath("table3_position.csv").read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != POSITION_HEADER:
        raise ProfileParseError(1, f"header must be {','.join(POSITION_HEADER)}")
    return [dict(row, snr_db=float(row["snr_db"])) for row in reader]


@dataclass(frozen=True)
class ChannelParams:
    """``noise_std`` fixes the noise floor directly and overrides ``target_snr``."""

    target_snr: float = math.inf
    gain: float = 1.0
    seed: int = 0
    carrier_hz: Optional[float] = None
    noise_std: Optional[float] = None

    def __post_init__(self):
        if not self.gain > 0:
            raise InvalidArgument("gain must be positive")
        if math.isnan(self.target_snr):
            raise InvalidArgument("target_snr is NaN")
        if self.noise_std is not None and self.noise_std < 0:
            raise InvalidArgument("noise_std must be non-negative")


def carrier_bin_power(samples: np.ndarray, sample_rate: int, carrier_hz: Optional[float] = None,
                      window_length: int = METER_WINDOW) -> float:
    power = averaged_periodogram(samples, window_length)
    if carrier_hz is None:
        lo, hi = band_bins(sample_rate, window_length)
        return float(power[lo:hi].max())
    return float(power[int(round(carrier_hz * window_length / sample_rate))])


def noise_std_for_snr(signal: Waveform, snr_db: float, carrier_hz: Optional[float] = None,
                      window_length: int = METER_WINDOW) -> float:
    """Noise std that puts the mean per-bin noise ``snr_db`` below the carrier bin."""
    p = carrier_bin_power(signal.samples, signal.sample_rate, carrier_hz, window_length)
    if p == 0.0:
        raise UndefinedSNR("signal has no carrier energy; a finite SNR is undefined")
    return math.sqrt(p / (10 ** (snr_db / 10) * noise_bin_power(1.0, window_length)))


def apply_channel(signal: Waveform, params: ChannelParams) -> Waveform:
    if len(signal) == 0:
        raise InvalidArgument("signal is empty")
    out = params.gain * np.asarray(signal.samples, dtype=np.float64)
    if params.noise_std is not None:
        std = params.noise_std
    elif math.isinf(params.target_snr) and params.target_snr > 0:
        return Waveform(signal.sample_rate, out)
    else:
        std = noise_std_for_snr(Waveform(signal.sample_rate, out), params.target_snr, params.carrier_hz)
    rng = np.random.default_rng(params.seed)
    return Waveform(signal.sample_rate, out + rng.normal(0.0, std, len(out)))


@dataclass(frozen=True)
class MixResult:
    waveform: Waveform
    normalization: float


def mix_sources(signals: Sequence[Waveform], gains: Optional[Sequence[float]] = None,
                normalize: bool = True) -> MixResult:
    """Weighted sum of sources (shorter ones zero-padded), scaled to unit peak."""
    signals = list(signals)
    if not signals:
        raise InvalidArgument("mix_sources needs at least one signal")
    gains = [1.0] * len(signals) if gains is None else list(gains)
    if len(gains) != len(signals):
        raise InvalidArgument("one gain per signal is required")
    rate = signals[0].sample_rate
    if any(s.sample_rate != rate for s in signals):
        raise IncompatibleWaveform("all sources must share one sample rate")
    n = max(len(s) for s in signals)
    total = np.zeros(n)
    for s, g in zip(signals, gains):
        total[:len(s)] += g * s.samples
    factor = 1.0
    if normalize:
        peak = float(np.max(np.abs(total))) if n else 0.0
        if peak > 0:
            factor = 1.0 / peak
            total *= factor
    return MixResult(Waveform(rate, total), factor)
