"""Packet demodulator working on a stream of short-time spectra.

The outer loop follows the usual detect / synchronize / read / check order:
find the preamble, learn the on and off levels from it, read the remaining
40 bits at the learned timing, and compare CRCs. Corrupted packets are
returned with ``status == "crc-mismatch"`` rather than dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, TruncatedPacket, UnresolvablePlan
from .framing import CRC_BITS, PACKET_BITS, PAYLOAD_BITS, PREAMBLE, deframe
from .modulation import ModulationParams, OfdmPlan, Scheme
from .raster import Waveform
from .spectral import SpectraStream, spectral_stream

DETECTION_THRESHOLD = 0.75
# minimum on-minus-off magnitude, in units of the band's median magnitude
CONTRAST_THRESHOLD = 1.5
GUARD_BITS = 2
DECISIONS_PER_BIT = 8
MAX_WINDOW = 4096


@dataclass(frozen=True)
class SymbolMap:
    """What the receiver watches: one FFT bin per channel and the expected level per symbol."""

    scheme: Scheme
    freqs: tuple
    bits_per_symbol: int
    low_level: float = 0.0

    @classmethod
    def build(cls, params: ModulationParams, plan: Optional[OfdmPlan] = None) -> "SymbolMap":
        k = params.bits_per_symbol(plan)
        if params.scheme is Scheme.FSK:
            return cls(params.scheme, tuple(params.fsk_freqs), k)
        if params.scheme is Scheme.OFDM:
            return cls(params.scheme, tuple(plan.frequencies), k)
        low = 0.0
        if params.scheme is Scheme.ASK:
            low = params.ask_levels[1] / params.ask_levels[0]
        return cls(params.scheme, (params.carrier,), k, low)

    @property
    def uses_argmax(self) -> bool:
        return self.scheme is Scheme.FSK

    def levels(self, bits: Sequence[int]) -> np.ndarray:
        """Expected relative magnitude on every channel while ``bits`` is on air."""
        if self.scheme is Scheme.FSK:
            out = np.zeros(len(self.freqs))
            out[int("".join(map(str, bits)), 2)] = 1.0
            return out
        if self.scheme is Scheme.OFDM:
            return np.asarray(bits, dtype=float)
        return np.array([1.0 if bits[0] else self.low_level])

    @property
    def preamble_symbols(self) -> list:
        """Preamble symbols that contain no payload bits."""
        k = self.bits_per_symbol
        return [PREAMBLE[i:i + k] for i in range(0, len(PREAMBLE) - k + 1, k)]

    @property
    def packet_symbols(self) -> int:
        return math.ceil(PACKET_BITS / self.bits_per_symbol)


def front_end(params: ModulationParams, sample_rate: int) -> tuple[int, int]:
    """(window_length, hop) for a bit rate: hop is an eighth of a bit, window <= one bit, capped at 4096."""
    bit = sample_rate / params.bit_rate
    hop = max(1, int(round(bit / DECISIONS_PER_BIT)))
    window = min(MAX_WINDOW, 1 << int(math.floor(math.log2(bit))))
    return window, min(hop, window)


def analyze(signal: Waveform, params: ModulationParams) -> SpectraStream:
    window, hop = front_end(params, signal.sample_rate)
    return spectral_stream(signal, window, hop)


@dataclass(frozen=True)
class SyncInfo:
    start: int
    bit_period: float
    symbol_period: float
    score: float
    contrast: float
    high: float
    low: float

    @property
    def threshold(self) -> float:
        return 0.5 * (self.high + self.low)

    @property
    def levels(self) -> tuple:
        return self.high, self.low


@dataclass
class DecodeResult:
    payload: int
    received_crc: int
    calculated_crc: int
    confidence: list = field(default_factory=list)
    start: int = 0
    sample_rate: int = 0
    bits: list = field(default_factory=list, repr=False)

    @property
    def status(self) -> str:
        return "ok" if self.received_crc == self.calculated_crc else "crc-mismatch"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def time_s(self) -> float:
        return self.start / self.sample_rate if self.sample_rate else 0.0

    @property
    def mean_confidence(self) -> float:
        return float(np.mean(self.confidence)) if len(self.confidence) else 0.0

    @property
    def payload_hex(self) -> str:
        return f"{self.payload:08X}"

    def record(self) -> str:
        """``time_s,status,payload_hex,crc_rx,crc_calc,mean_bit_confidence``."""
        return (f"{self.time_s:.4f},{self.status},{self.payload_hex},{self.received_crc:02X},"
                f"{self.calculated_crc:02X},{self.mean_confidence:.3f}")


RECORD_HEADER = "time_s,status,payload_hex,crc_rx,crc_calc,mean_bit_confidence"


def result_from_bits(bits: Sequence[int], confidence=None, start: int = 0, sample_rate: int = 0) -> DecodeResult:
    """CRC-check 48 decided bits (or the 40 after the preamble)."""
    bits = [1 if b else 0 for b in bits]
    d = deframe(bits)
    conf = list(confidence) if confidence is not None else [1.0] * (PAYLOAD_BITS + CRC_BITS)
    return DecodeResult(d.payload, d.received_crc, d.calculated_crc, conf, start, sample_rate, bits)


def _check_resolvable(stream: SpectraStream, smap: SymbolMap):
    if len(smap.freqs) < 2:
        return
    bins = sorted(stream.bin_of(f) for f in smap.freqs)
    if min(b - a for a, b in zip(bins, bins[1:])) < 2:
        raise UnresolvablePlan(
            f"carriers closer than 2 FFT bins ({2 * stream.bin_width:.1f} Hz) at window {stream.window_length}")


def _channel_data(stream: SpectraStream, smap: SymbolMap) -> np.ndarray:
    nyq = stream.window_length // 2
    bins = [stream.bin_of(f) for f in smap.freqs]
    if any(b < 1 or b >= nyq for b in bins):
        raise ConfigurationError("a carrier lies outside the analysed band")
    return stream.magnitudes[:, bins]


def detect_preamble(stream: SpectraStream, params: ModulationParams, *, plan: Optional[OfdmPlan] = None,
                    start: int = 0, threshold: float = DETECTION_THRESHOLD) -> Optional[SyncInfo]:
    """Locate the first preamble at or after sample ``start``.

    The template spans a silent guard of two bit periods followed by the
    whole-symbol part of the preamble, evaluated on every monitored bin. The
    guard pins the onset, so repeats of the alternating pattern inside the
    payload cannot outscore the real start. A candidate must reach
    ``threshold`` normalized correlation and a minimum on/off contrast over
    the band's noise floor; among candidates within three bit periods of the
    first one the best-correlated wins.
    """
    smap = SymbolMap.build(params, plan)
    data = _channel_data(stream, smap)
    n_frames, n_ch = data.shape
    sr, hop, half_window = stream.sample_rate, stream.hop, stream.window_length / 2
    bit = sr / params.bit_rate
    sym = bit * smap.bits_per_symbol
    symbols = smap.preamble_symbols
    pre_len = len(symbols) * sym
    guard = GUARD_BITS * bit

    # template in frame offsets j relative to candidate k: frame k+j has centre s_k + j*hop + hop/2
    j_lo = -int(math.ceil(guard / hop))
    j_hi = int(math.ceil(pre_len / hop))
    js, rows = [], []
    for j in range(j_lo, j_hi):
        u = j * hop + hop / 2
        if u < -guard or u >= pre_len:
            continue
        js.append(j)
        rows.append(np.zeros(n_ch) if u < 0 else smap.levels(symbols[int(u // sym)]))
    js = np.array(js)
    tmpl = np.array(rows)
    in_preamble = js >= 0
    last_j = int(js.max())
    if n_frames <= last_j:
        return None

    s0 = half_window - hop / 2
    k_min = int(math.ceil((start - bit / 4 - s0) / hop))
    k_max = n_frames - 1 - last_j
    if k_max < k_min:
        return None
    ks = np.arange(k_min, k_max + 1)

    centers = stream.centers
    valid = (centers >= start - bit / 4).astype(float)
    ref = stream.noise_reference
    pad_lo = max(0, -(k_min + int(js.min())))
    pad = lambda a: np.concatenate([np.zeros((pad_lo,) + a.shape[1:]), a])
    vd, vref, vmask = pad(data * valid[:, None]), pad(ref * valid), pad(valid)
    d_sum, d_sq = vd.sum(axis=1), (vd ** 2).sum(axis=1)

    K = len(ks)
    n = np.zeros(K); s_t = np.zeros(K); s_tt = np.zeros(K); s_d = np.zeros(K); s_dd = np.zeros(K)
    s_td = np.zeros(K); on_sum = np.zeros(K); on_n = np.zeros(K); off_sum = np.zeros(K); off_n = np.zeros(K)
    ref_sum = np.zeros(K)
    for j, row in zip(js, tmpl):
        idx = ks + j + pad_lo
        m = vmask[idx]
        n += m * n_ch
        s_t += m * row.sum()
        s_tt += m * (row ** 2).sum()
        s_d += d_sum[idx]
        s_dd += d_sq[idx]
        s_td += vd[idx] @ row
        on = row >= 1.0
        on_sum += vd[idx][:, on].sum(axis=1)
        on_n += m * on.sum()
        off_sum += vd[idx][:, ~on].sum(axis=1)
        off_n += m * (~on).sum()
        ref_sum += vref[idx]

    with np.errstate(invalid="ignore", divide="ignore"):
        var_t = s_tt - s_t ** 2 / n
        var_d = s_dd - s_d ** 2 / n
        score = (s_td - s_t * s_d / n) / np.sqrt(var_t * var_d)
        contrast = on_sum / on_n - off_sum / off_n
        noise_floor = ref_sum / (n / n_ch)
    score = np.nan_to_num(score, nan=0.0, posinf=0.0, neginf=0.0)
    contrast = np.nan_to_num(contrast, nan=0.0)
    # need most of the template observed
    enough = n >= 0.5 * len(js) * n_ch
    passed = enough & (score >= threshold) & (contrast > CONTRAST_THRESHOLD * noise_floor)
    hits = np.flatnonzero(passed)
    if hits.size == 0:
        return None
    first = hits[0]
    window = hits[hits <= first + int(math.ceil(3 * bit / hop))]
    best = window[np.argmax(score[window])]
    k = int(ks[best])
    s = max(0, int(round(k * hop + s0)))

    # levels from the middle half of each preamble symbol
    hi_vals, lo_vals = [], []
    for j, row in zip(js[in_preamble], tmpl[in_preamble]):
        t = k + j
        u = j * hop + hop / 2
        pos = (u % sym) / sym
        if t < 0 or t >= n_frames or not 0.25 <= pos < 0.75:
            continue
        hi_vals.extend(data[t, row >= 1.0])
        lo_vals.extend(data[t, row < 1.0])
    high = float(np.mean(hi_vals)) if hi_vals else float(np.max(data[max(k, 0):k + last_j + 1]))
    low = float(np.mean(lo_vals)) if lo_vals else 0.0
    return SyncInfo(s, bit, sym, float(score[best]), float(contrast[best]), high, low)


def _decide(stream: SpectraStream, data: np.ndarray, smap: SymbolMap, sync: SyncInfo, n_samples: Optional[int]):
    sym, hop, half_window = sync.symbol_period, stream.hop, stream.window_length / 2
    n_sym = smap.packet_symbols
    end = sync.start + n_sym * sym
    limit = n_samples if n_samples is not None else stream.n_frames * hop + stream.window_length
    if end > limit + hop / 2:
        raise TruncatedPacket(f"packet needs samples up to {end:.0f}, stream ends at {limit}")
    bits, conf = [], []
    for i in range(n_sym):
        a = sync.start + i * sym
        t_lo = max(0, int(math.ceil((a - half_window) / hop)))
        t_hi = min(stream.n_frames, int(math.ceil((a + sym - half_window) / hop)))
        if t_hi <= t_lo:
            raise TruncatedPacket(f"no spectra inside symbol {i}")
        block = data[t_lo:t_hi]
        if smap.uses_argmax:
            picks = np.argmax(block, axis=1)
            votes = np.bincount(picks, minlength=block.shape[1])
            order = np.argsort(votes)[::-1]
            top = votes[order[0]]
            tied = np.flatnonzero(votes == top)
            value = int(order[0]) if len(tied) == 1 else int(tied[np.argmax(block.mean(axis=0)[tied])])
            second = votes[order[1]] if len(votes) > 1 else 0
            c = (top - second) / len(block)
            bits.extend(int(b) for b in format(value, f"0{smap.bits_per_symbol}b"))
            conf.extend([c] * smap.bits_per_symbol)
        else:
            ones = (block > sync.threshold).sum(axis=0)
            zeros = len(block) - ones
            for ch in range(block.shape[1]):
                if ones[ch] == zeros[ch]:
                    bit = int(block[:, ch].mean() > sync.threshold)
                else:
                    bit = int(ones[ch] > zeros[ch])
                bits.append(bit)
                conf.append(abs(int(ones[ch]) - int(zeros[ch])) / len(block))
    return bits[:PACKET_BITS], conf[:PACKET_BITS]


def demodulate_packet(stream: SpectraStream, sync: SyncInfo, params: ModulationParams, *,
                      plan: Optional[OfdmPlan] = None, n_samples: Optional[int] = None) -> DecodeResult:
    """Read payload and CRC after a detected preamble and check them."""
    smap = SymbolMap.build(params, plan)
    data = _channel_data(stream, smap)
    bits, conf = _decide(stream, data, smap, sync, n_samples)
    return result_from_bits(bits, conf[len(PREAMBLE):], sync.start, stream.sample_rate)


def decode_stream(stream: SpectraStream, params: ModulationParams, *, plan: Optional[OfdmPlan] = None,
                  n_samples: Optional[int] = None) -> list[DecodeResult]:
    """Decode every packet in the stream, resuming after each one."""
    smap = SymbolMap.build(params, plan)
    _check_resolvable(stream, smap)
    results = []
    resume = 0
    while True:
        sync = detect_preamble(stream, params, plan=plan, start=resume)
        if sync is None:
            break
        try:
            result = demodulate_packet(stream, sync, params, plan=plan, n_samples=n_samples)
        except TruncatedPacket:
            break
        results.append(result)
        resume = int(round(sync.start + smap.packet_symbols * sync.symbol_period))
    return results


def demodulate_ofdm(stream: SpectraStream, plan: OfdmPlan, params: ModulationParams,
                    n_samples: Optional[int] = None) -> list[DecodeResult]:
    """Per-strip OOK decisions on ``center + i*spacing``; bits are regrouped in transmit order."""
    if params.scheme is not Scheme.OFDM:
        params = ModulationParams(Scheme.OFDM, params.bit_rate, carrier=plan.center, amplitude=params.amplitude)
    return decode_stream(stream, params, plan=plan, n_samples=n_samples)


def receive(signal: Waveform, params: ModulationParams, plan: Optional[OfdmPlan] = None) -> list[DecodeResult]:
    """Spectral front end plus :func:`decode_stream` for a whole waveform."""
    stream = analyze(signal, params)
    return decode_stream(stream, params, plan=plan, n_samples=len(signal))
