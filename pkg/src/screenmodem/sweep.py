"""Monte-Carlo harness: tx -> channel -> rx over grids of scheme, rate and SNR."""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .channel import ChannelParams, ChannelProfile, apply_channel, bundled_profile, mix_sources, noise_std_for_snr
from .errors import ConfigurationError
from .framing import PACKET_BITS, PAYLOAD_BITS, PREAMBLE, frame_packet
from .modulation import ModulationParams, OfdmPlan, Scheme, default_fsk_freqs, ofdm_params
from .pipeline import transmit
from .raster import PAPER_TIMING, TimingConfig, Waveform, emit_waveform, tone_pattern
from .receiver import DecodeResult, analyze, decode_stream, receive
from .spectral import measure_snr

log = logging.getLogger(__name__)

CHECKED_BITS = PACKET_BITS - len(PREAMBLE)
TAIL_SECONDS = 0.3
MAX_LEAD_FRAMES = 40


def scheme_setup(label: str, bit_rate: int, carrier: Optional[float] = None,
                 brightness: int = 255) -> tuple[ModulationParams, Optional[OfdmPlan]]:
    """Parameters for a sweep label: ``ook``, ``ask``, ``fsk`` / ``fsk4`` / ``fsk8``, ``ofdm2`` / ``ofdm4``."""
    name = label.lower()
    extra = {} if carrier is None else {"carrier": carrier}
    if name in ("ook", "ask"):
        return ModulationParams(name, bit_rate, amplitude=brightness, **extra), None
    if name.startswith("fsk"):
        m = int(name[3:] or 2)
        return ModulationParams("fsk", bit_rate, fsk_freqs=default_fsk_freqs(m), amplitude=brightness), None
    if name.startswith("ofdm"):
        n = int(name[4:] or 2)
        plan = OfdmPlan.default(n, bit_rate, **({} if carrier is None else {"center": carrier}))
        return ofdm_params(plan, bit_rate, brightness), plan
    raise ConfigurationError(f"unknown scheme label {label!r}")


SnrPoint = Union[float, str]


@dataclass
class SweepConfig:
    schemes: Sequence[str] = ("ook",)
    bit_rates: Sequence[int] = (10,)
    snr_points: Sequence[SnrPoint] = (math.inf,)
    packets: int = 20
    seed: int = 0
    brightness_levels: Sequence[int] = (255,)
    timing: TimingConfig = PAPER_TIMING
    profile: Optional[ChannelProfile] = None

    def __post_init__(self):
        if self.packets < 1:
            raise ConfigurationError("packets per point must be >= 1")


@dataclass
class SweepRow:
    scheme: str
    bit_rate: int
    snr_db: float
    packets_sent: int
    packets_ok: int
    bit_errors: int

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.packets_sent * CHECKED_BITS)

    @property
    def throughput_bps_effective(self) -> float:
        airtime = self.packets_sent * PACKET_BITS / self.bit_rate
        return self.packets_ok * PAYLOAD_BITS / airtime


SWEEP_COLUMNS = ["scheme", "bit_rate", "snr_db", "packets_sent", "packets_ok", "bit_errors", "ber",
                 "throughput_bps_effective"]


def _fmt_snr(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:g}"


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(SWEEP_COLUMNS) + "\n")
        for r in self.rows:
            out.write(f"{r.scheme},{r.bit_rate},{_fmt_snr(r.snr_db)},{r.packets_sent},{r.packets_ok},"
                      f"{r.bit_errors},{r.ber:.6f},{r.throughput_bps_effective:.4f}\n")
        return out.getvalue()


def resolve_snr(point: SnrPoint, profile: Optional[ChannelProfile]) -> Optional[float]:
    if isinstance(point, str):
        try:
            return float(point)
        except ValueError:
            pass
        return (profile or bundled_profile()).resolve(point)
    return float(point)


def _seed(rng) -> int:
    return int(rng.integers(0, 2 ** 63))


def bit_errors(result: Optional[DecodeResult], word: int) -> int:
    if result is None:
        return CHECKED_BITS
    sent = frame_packet(word)[len(PREAMBLE):]
    got = result.bits[len(PREAMBLE):]
    return sum(a != b for a, b in zip(sent, got))


def match_packets(results: Sequence[DecodeResult], starts: Sequence[int], tolerance: float):
    """Pair each expected start with the decode nearest to it (or None)."""
    out = []
    for s in starts:
        best = None
        for r in results:
            if abs(r.start - s) <= tolerance and (best is None or abs(r.start - s) < abs(best.start - s)):
                best = r
        out.append(best)
    return out


def simulate_packet(word: int, params: ModulationParams, plan: Optional[OfdmPlan], timing: TimingConfig,
                    snr_db: float, rng) -> tuple[bool, int]:
    """One packet after a random dark lead-in; returns (decoded ok, bit errors)."""
    lead = int(rng.integers(0, MAX_LEAD_FRAMES + 1))
    wav = transmit([word], params, timing, plan, lead_frames=lead)
    wav = wav + Waveform.silence(timing.sample_rate, TAIL_SECONDS)
    noisy = apply_channel(wav, ChannelParams(snr_db, seed=_seed(rng)))
    results = receive(noisy, params, plan)
    start = round(lead * timing.sample_rate / timing.refresh_rate)
    tol = 0.5 * timing.sample_rate / params.bit_rate
    (hit,) = match_packets(results, [start], tol)
    ok = hit is not None and hit.ok and hit.payload == word
    return ok, bit_errors(hit, word)


def run_point(label: str, bit_rate: int, snr_db: float, packets: int, seed, timing: TimingConfig = PAPER_TIMING,
              brightness: int = 255) -> SweepRow:
    params, plan = scheme_setup(label, bit_rate, brightness=brightness)
    params.frames_per_bit(timing.refresh_rate)
    rng = np.random.default_rng(seed)
    n_ok = errors = 0
    for _ in range(packets):
        word = int(rng.integers(0, 2 ** 32))
        ok, e = simulate_packet(word, params, plan, timing, snr_db, rng)
        n_ok += ok
        errors += e
    return SweepRow(label, bit_rate, snr_db, packets, n_ok, errors)


def run_sweep(config: SweepConfig) -> SweepReport:
    """Grid over schemes x bit rates x SNR points; rows come out in grid order."""
    report = SweepReport()
    brightness = config.brightness_levels[0] if config.brightness_levels else 255
    for si, label in enumerate(config.schemes):
        for ri, rate in enumerate(config.bit_rates):
            if rate <= 0 or config.timing.refresh_rate % rate:
                for point in config.snr_points:
                    msg = (f"skip {label} @ {rate} bps, snr {point}: "
                           f"{config.timing.refresh_rate} Hz refresh is not a multiple of the bit rate")
                    report.skipped.append(msg)
                    log.warning(msg)
                continue
            for pi, point in enumerate(config.snr_points):
                snr = resolve_snr(point, config.profile)
                if snr is None:
                    msg = f"skip {label} @ {rate} bps: no measurement for profile point {point}"
                    report.skipped.append(msg)
                    log.warning(msg)
                    continue
                row = run_point(label, rate, snr, config.packets, [config.seed, si, ri, pi], config.timing, brightness)
                report.rows.append(row)
    return report


@dataclass(frozen=True)
class BrightnessRow:
    brightness: int
    inbin_power: float
    snr_db: float


def brightness_sweep(levels: Sequence[int] = (1, 3, 7, 15, 255), timing: TimingConfig = PAPER_TIMING,
                     carrier: float = 12500.0, reference_snr: float = 35.0, seconds: float = 2.0,
                     seed: int = 0) -> list[BrightnessRow]:
    """Tone at each brightness under one fixed noise floor.

    The floor is set so the brightest level reads ``reference_snr``; every
    level then gets the same noise realization.
    """
    n_frames = int(round(seconds * timing.refresh_rate))
    per_frame = timing.raster_pixels
    clean = {}
    for v in levels:
        frames = [tone_pattern(timing, carrier, v, k * per_frame) for k in range(n_frames)]
        clean[v] = emit_waveform(frames, timing)
    ref_level = max(levels)
    actual = timing.pixel_clock / round(timing.pixel_clock / carrier)
    std = noise_std_for_snr(clean[ref_level], reference_snr, actual)
    rows = []
    for v in levels:
        noiseless = measure_snr(clean[v], actual).carrier_power if clean[v].peak > 0 else 0.0
        noisy = apply_channel(clean[v], ChannelParams(noise_std=std, seed=seed))
        rows.append(BrightnessRow(v, noiseless, measure_snr(noisy, actual).snr_db))
    return rows


def brightness_csv(rows: Sequence[BrightnessRow]) -> str:
    lines = ["brightness,inbin_power,snr_db"]
    lines += [f"{r.brightness},{r.inbin_power:.6e},{r.snr_db:.3f}" for r in rows]
    return "\n".join(lines) + "\n"


@dataclass
class SourceRow:
    source: int
    carrier_hz: float
    gain: float
    packets_sent: int
    packets_ok: int
    bit_errors: int
    bit_rate: int

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.packets_sent * CHECKED_BITS)

    @property
    def throughput_bps_effective(self) -> float:
        return self.packets_ok * PAYLOAD_BITS / (self.packets_sent * PACKET_BITS / self.bit_rate)


@dataclass
class MultiSourceReport:
    rows: list

    @property
    def aggregate_throughput(self) -> float:
        return sum(r.throughput_bps_effective for r in self.rows)

    def to_csv(self) -> str:
        lines = ["source,carrier_hz,gain,packets_sent,packets_ok,bit_errors,ber,throughput_bps_effective"]
        for r in self.rows:
            lines.append(f"{r.source},{r.carrier_hz:g},{r.gain:g},{r.packets_sent},{r.packets_ok},{r.bit_errors},"
                         f"{r.ber:.6f},{r.throughput_bps_effective:.4f}")
        lines.append(f"aggregate,,,,,,,{self.aggregate_throughput:.4f}")
        return "\n".join(lines) + "\n"


MIN_CARRIER_SEPARATION = 500.0


def run_multisource(carriers: Sequence[float], snr_db: float, packets: int = 20,
                    gains: Optional[Sequence[float]] = None, bit_rate: int = 10, seed: int = 0,
                    timing: TimingConfig = PAPER_TIMING) -> MultiSourceReport:
    """Several screens sending OOK on their own carriers into one microphone.

    Each source sends ``packets`` back-to-back packets after its own random
    lead-in. The mix is normalized, noise is added relative to the strongest
    carrier, and one demodulator per carrier decodes the shared recording.
    """
    carriers = [float(c) for c in carriers]
    if not 1 <= len(carriers) <= 4:
        raise ConfigurationError("between 1 and 4 sources are supported")
    for i, a in enumerate(carriers):
        for b in carriers[i + 1:]:
            if abs(a - b) < MIN_CARRIER_SEPARATION:
                raise ConfigurationError(f"carriers {a:g} and {b:g} Hz are closer than {MIN_CARRIER_SEPARATION:g} Hz")
    gains = [1.0] * len(carriers) if gains is None else [float(g) for g in gains]
    if len(gains) != len(carriers):
        raise ConfigurationError("one gain per carrier is required")
    rng = np.random.default_rng(seed)
    fpb_samples = timing.sample_rate / bit_rate
    packet_samples = PACKET_BITS * fpb_samples
    sources, plans = [], []
    for c in carriers:
        params = ModulationParams(Scheme.OOK, bit_rate, carrier=c)
        words = [int(w) for w in rng.integers(0, 2 ** 32, packets)]
        lead = int(rng.integers(0, MAX_LEAD_FRAMES + 1))
        wav = transmit(words, params, timing, lead_frames=lead)
        lead_samples = round(lead * timing.sample_rate / timing.refresh_rate)
        starts = [round(lead_samples + i * packet_samples) for i in range(packets)]
        sources.append(wav)
        plans.append((params, words, starts))
    mixed = mix_sources(sources, gains).waveform
    mixed = mixed + Waveform.silence(timing.sample_rate, TAIL_SECONDS)
    noisy = apply_channel(mixed, ChannelParams(snr_db, seed=_seed(rng)))
    stream = analyze(noisy, plans[0][0])
    rows = []
    for i, ((params, words, starts), gain) in enumerate(zip(plans, gains)):
        results = decode_stream(stream, params, n_samples=len(noisy))
        hits = match_packets(results, starts, 0.5 * fpb_samples)
        ok = sum(h is not None and h.ok and h.payload == w for h, w in zip(hits, words))
        errs = sum(bit_errors(h, w) for h, w in zip(hits, words))
        rows.append(SourceRow(i, carriers[i], gain, packets, ok, errs, bit_rate))
    return MultiSourceReport(rows)
