"""Short-time spectra and the per-bin SNR meter."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.signal import get_window

from .errors import InsufficientData, InvalidArgument
from .raster import Waveform

NOISE_BAND = (3000.0, 22000.0)


@dataclass
class SpectraStream:
    """Magnitude spectra of Hann-tapered segments at a fixed hop.

    Frame ``t`` covers samples ``[t*hop, t*hop + window_length)``; its time
    stamp is the window centre.
    """

    sample_rate: int
    window_length: int
    hop: int
    magnitudes: np.ndarray = field(repr=False)

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def hop_seconds(self) -> float:
        return self.hop / self.sample_rate

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.window_length

    @property
    def centers(self) -> np.ndarray:
        """Window-centre sample index of every frame."""
        return np.arange(self.n_frames) * self.hop + self.window_length / 2

    @property
    def times(self) -> np.ndarray:
        return self.centers / self.sample_rate

    def bin_of(self, frequency: float) -> int:
        return int(round(frequency * self.window_length / self.sample_rate))

    def __iter__(self):
        return iter(zip(self.times, self.magnitudes))

    @cached_property
    def noise_reference(self) -> np.ndarray:
        """Per-frame median magnitude across the noise band; robust to a few carriers."""
        lo, hi = band_bins(self.sample_rate, self.window_length)
        if self.n_frames == 0:
            return np.zeros(0)
        return np.median(self.magnitudes[:, lo:hi], axis=1)


def band_bins(sample_rate: int, window_length: int, band=NOISE_BAND) -> tuple[int, int]:
    nyq_bin = window_length // 2
    lo = int(np.ceil(band[0] * window_length / sample_rate))
    hi = int(np.floor(band[1] * window_length / sample_rate)) + 1
    return max(lo, 1), min(hi, nyq_bin)


def _frames(samples: np.ndarray, window_length: int, hop: int) -> np.ndarray:
    view = np.lib.stride_tricks.sliding_window_view(samples, window_length)
    return view[::hop]


def spectral_stream(signal: Waveform, window_length: int = 4096, hop: Optional[int] = None,
                    window: str = "hann") -> SpectraStream:
    if window_length < 2 or window_length & (window_length - 1):
        raise InvalidArgument(f"window_length must be a power of two, got {window_length}")
    hop = window_length // 2 if hop is None else int(hop)
    if not 0 < hop <= window_length:
        raise InvalidArgument(f"hop must be in (0, {window_length}], got {hop}")
    samples = np.asarray(signal.samples, dtype=np.float64)
    if len(samples) < window_length:
        raise InsufficientData(f"signal has {len(samples)} samples, window needs {window_length}")
    taper = get_window(window, window_length)
    mags = np.abs(np.fft.rfft(_frames(samples, window_length, hop) * taper, axis=1))
    return SpectraStream(signal.sample_rate, window_length, hop, mags)


def averaged_periodogram(samples: np.ndarray, window_length: int = 4096, hop: Optional[int] = None) -> np.ndarray:
    """Mean of |X_k|^2 over Hann-windowed frames (unnormalized)."""
    hop = window_length // 2 if hop is None else hop
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < window_length:
        samples = np.pad(samples, (0, window_length - len(samples)))
    taper = get_window("hann", window_length)
    spec = np.fft.rfft(_frames(samples, window_length, hop) * taper, axis=1)
    return np.mean(spec.real ** 2 + spec.imag ** 2, axis=0)


def noise_bin_power(noise_std: float, window_length: int = 4096) -> float:
    """Expected |X_k|^2 of white noise with the given std under the Hann taper."""
    taper = get_window("hann", window_length)
    return float(noise_std ** 2 * np.sum(taper ** 2))


@dataclass(frozen=True)
class SnrReading:
    snr_db: float
    carrier_bin: int
    carrier_hz: float
    carrier_power: float
    noise_power: float


def measure_snr(signal: Waveform, carrier_hz: Optional[float] = None, window_length: int = 4096,
                exclude_bins: int = 3) -> SnrReading:
    """Carrier-bin power over mean per-bin power in the 3-22 kHz band.

    Without ``carrier_hz`` the strongest bin inside the band is taken as the
    carrier. Bins within ``exclude_bins`` of the carrier are left out of the
    noise mean, and the mean noise level is subtracted from the carrier bin
    so the reading estimates the noise-free carrier power.
    """
    sr = signal.sample_rate
    power = averaged_periodogram(signal.samples, window_length)
    lo, hi = band_bins(sr, window_length)
    if carrier_hz is None:
        k = lo + int(np.argmax(power[lo:hi]))
    else:
        k = int(round(carrier_hz * window_length / sr))
    mask = np.zeros(len(power), dtype=bool)
    mask[lo:hi] = True
    mask[max(k - exclude_bins, 0):k + exclude_bins + 1] = False
    noise = float(np.mean(power[mask]))
    # the carrier bin holds its share of the noise too; take it back out
    carrier = max(float(power[k]) - noise, 0.0)
    if noise == 0.0:
        snr = np.inf if carrier > 0 else np.nan
    else:
        snr = 10 * np.log10(carrier / noise) if carrier > 0 else -np.inf
    return SnrReading(float(snr), k, k * sr / window_length, carrier, noise)
