"""Command-line front end: ``screenmodem tx|rx|sweep|multisource|profile show``.

Exit status is 0 on success (including runs that detect nothing), 1 for
usage errors and 2 for bad data or unreadable files.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .channel import ChannelParams, apply_channel, bundled_positions, bundled_profile
from .errors import ModemError
from .fileio import read_raw_pcm, read_wav, write_frames, write_wav
from .framing import PACKET_BITS, payload_words
from .modulation import DEFAULT_CARRIER, ModulationParams, OfdmPlan, Scheme, default_fsk_freqs, ofdm_params
from .pipeline import packet_frames
from .raster import DEFAULT_SAMPLE_RATE, TimingConfig, Waveform, emit_waveform
from .receiver import RECORD_HEADER, analyze, decode_stream
from .sweep import SweepConfig, brightness_csv, brightness_sweep, run_multisource, run_sweep

log = logging.getLogger("screenmodem")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_modem_flags(p: argparse.ArgumentParser, snr=True):
    p.add_argument("--scheme", default="ook", choices=[s.value for s in Scheme])
    p.add_argument("--bitrate", type=int, default=10, help="bits per second (default 10)")
    p.add_argument("--carrier", type=float, default=None,
                   help=f"OOK/ASK carrier or OFDM centre in Hz (default {DEFAULT_CARRIER:g})")
    p.add_argument("--fsk-freqs", type=_floats, default=None,
                   help="comma-separated tones indexed by symbol value (default 12000,13000)")
    p.add_argument("--ofdm-n", type=int, default=2, help="OFDM sub-carriers / screen strips")
    p.add_argument("--brightness", type=int, default=255, help="pixel level V of lit pixels")
    p.add_argument("--ask-low", type=int, default=64, help="brightness of ASK zero bits")
    p.add_argument("--timing", default="1680x1050@60", help="WxH@Hz[:htotal]")
    p.add_argument("--sample-rate", type=int, default=DEFAULT_SAMPLE_RATE)
    p.add_argument("--seed", type=int, default=0)
    if snr:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--snr", type=float, default=None, help="channel SNR in dB")
        g.add_argument("--profile", default=None, help="SNR from the bundled table, brand:distance:bitrate")


def _timing(args) -> TimingConfig:
    return TimingConfig.parse(args.timing, args.sample_rate)


def _modem(args) -> tuple[ModulationParams, Optional[OfdmPlan]]:
    scheme = Scheme.parse(args.scheme)
    carrier = DEFAULT_CARRIER if args.carrier is None else args.carrier
    if scheme is Scheme.OFDM:
        plan = OfdmPlan.default(args.ofdm_n, args.bitrate, center=carrier)
        return ofdm_params(plan, args.bitrate, args.brightness), plan
    fsk = tuple(args.fsk_freqs) if args.fsk_freqs else default_fsk_freqs(2)
    params = ModulationParams(scheme, args.bitrate, carrier=carrier, fsk_freqs=fsk,
                              ask_levels=(args.brightness, args.ask_low), amplitude=args.brightness)
    return params, None


def _channel_snr(args) -> Optional[float]:
    if getattr(args, "profile", None):
        snr = bundled_profile().resolve(args.profile)
        if snr is None:
            raise ModemError(f"profile point {args.profile} has no measurement")
        return snr
    return getattr(args, "snr", None)


def cmd_tx(args) -> int:
    data = sys.stdin.buffer.read() if args.input == "-" else Path(args.input).read_bytes()
    if len(data) % 4:
        pad = 4 - len(data) % 4
        log.warning("input is %d bytes; padding with %d zero byte(s) to a whole 32-bit word", len(data), pad)
        data += b"\x00" * pad
    timing = _timing(args)
    params, plan = _modem(args)
    words = payload_words(data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = packet_frames(words, params, timing, plan, gap_bits=args.gap_bits)
    if frames:
        wav = emit_waveform(frames, timing)
    else:
        wav = Waveform(timing.sample_rate, [])
    snr = _channel_snr(args)
    if snr is not None and len(wav) and wav.peak > 0:
        wav = apply_channel(wav, ChannelParams(snr, seed=args.seed))
    wav_path = Path(args.wav) if args.wav else out / "emission.wav"
    write_wav(wav_path, wav)
    written = 0
    if not args.no_frames:
        written = write_frames(out / "frames", frames)
    airtime = len(words) * PACKET_BITS / params.bit_rate
    print(f"packets={len(words)} bits={len(words) * PACKET_BITS} duration_s={airtime:g} "
          f"frames={len(frames)} frames_written={written} wav={wav_path}")
    return EXIT_OK


def cmd_rx(args) -> int:
    if args.raw:
        signal = read_raw_pcm(args.wav, args.sample_rate)
    else:
        signal = read_wav(args.wav)
    params, plan = _modem(args)
    results = []
    if len(signal):
        try:
            stream = analyze(signal, params)
        except ModemError:
            stream = None
        if stream is not None:
            results = decode_stream(stream, params, plan=plan, n_samples=len(signal))
    lines = [RECORD_HEADER] + [r.record() for r in results]
    text = "\n".join(lines) + "\n"
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    payload = b"".join(r.payload.to_bytes(4, "big") for r in results if r.ok)
    if args.out:
        Path(args.out).write_bytes(payload)
    ok = sum(r.ok for r in results)
    print(f"packets={len(results)} ok={ok} bytes={len(payload)}", file=sys.stderr)
    return EXIT_OK


def _snr_points(args) -> list:
    points: list = []
    if args.snr:
        for tok in args.snr.split(","):
            tok = tok.strip()
            if tok:
                points.append(math.inf if tok.lower() in ("inf", "+inf") else float(tok))
    points.extend(args.profile or [])
    return points or [math.inf]


def cmd_sweep(args) -> int:
    timing = _timing(args)
    if args.brightness_levels:
        carrier = DEFAULT_CARRIER if args.carrier is None else args.carrier
        rows = brightness_sweep(_ints(args.brightness_levels), timing, carrier,
                                reference_snr=args.reference_snr, seed=args.seed)
        text = brightness_csv(rows)
    else:
        config = SweepConfig(schemes=[s.strip() for s in args.schemes.split(",") if s.strip()],
                             bit_rates=_ints(args.bitrates), snr_points=_snr_points(args),
                             packets=args.packets, seed=args.seed, timing=timing,
                             brightness_levels=[args.brightness])
        text = run_sweep(config).to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_multisource(args) -> int:
    carriers = args.carriers or [6000.0, 9000.0, 14500.0, 15500.0][:args.n]
    if len(carriers) != args.n:
        raise UsageError(f"--n {args.n} but {len(carriers)} carrier(s) given")
    snr = _channel_snr(args)
    report = run_multisource(carriers, math.inf if snr is None else snr, args.packets, args.gains,
                             args.bitrate, args.seed, _timing(args))
    text = report.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_profile(args) -> int:
    if args.table == "position":
        print("screen,model,resolution,position,snr_db")
        for row in bundled_positions():
            print(f"{row['screen']},{row['model']},{row['resolution']},{row['position']},{row['snr_db']:g}")
        return EXIT_OK
    print("brand,distance_m,bit_rate_bps,snr_db")
    for r in bundled_profile().rows:
        print(f"{r.brand},{r.distance:g},{r.bit_rate},{'' if r.snr is None else format(r.snr, 'g')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="screenmodem", description="Pixel-pattern acoustic modem simulator.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("tx", help="encode bytes into frames and an emission WAV")
    p.add_argument("input", help="input file, '-' for stdin")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--wav", default=None, help="WAV path (default OUT/emission.wav)")
    p.add_argument("--no-frames", action="store_true", help="skip writing PGM frames")
    p.add_argument("--gap-bits", type=int, default=0, help="dark bit periods between packets")
    _add_modem_flags(p)
    p.set_defaults(func=cmd_tx)

    p = sub.add_parser("rx", help="decode packets from a WAV or raw PCM recording")
    p.add_argument("wav")
    p.add_argument("-o", "--out", default=None, help="write ok payload bytes here")
    p.add_argument("--report", default=None, help="write decode records here instead of stdout")
    p.add_argument("--raw", action="store_true", help="input is headerless 16-bit LE PCM")
    _add_modem_flags(p, snr=False)
    p.set_defaults(func=cmd_rx)

    p = sub.add_parser("sweep", help="BER / packet-success grid, or a brightness sweep")
    p.add_argument("--schemes", default="ook", help="comma list: ook,ask,fsk,fsk4,fsk8,ofdm2,ofdm4")
    p.add_argument("--bitrates", default="10", help="comma list of bps")
    p.add_argument("--snr", default=None, help="comma list of dB values ('inf' allowed)")
    p.add_argument("--profile", action="append", default=None, help="brand:distance:bitrate, repeatable")
    p.add_argument("--packets", type=int, default=20)
    p.add_argument("--brightness", type=int, default=255)
    p.add_argument("--brightness-levels", default=None, help="comma list of V; switches to brightness mode")
    p.add_argument("--reference-snr", type=float, default=35.0, help="SNR of the brightest level")
    p.add_argument("--carrier", type=float, default=None)
    p.add_argument("--timing", default="1680x1050@60")
    p.add_argument("--sample-rate", type=int, default=DEFAULT_SAMPLE_RATE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("multisource", help="several screens on separate carriers")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--carriers", type=_floats, default=None)
    p.add_argument("--gains", type=_floats, default=None)
    p.add_argument("--packets", type=int, default=20)
    p.add_argument("--bitrate", type=int, default=10)
    p.add_argument("--timing", default="1680x1050@60")
    p.add_argument("--sample-rate", type=int, default=DEFAULT_SAMPLE_RATE)
    p.add_argument("--seed", type=int, default=0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--snr", type=float, default=None)
    g.add_argument("--profile", default=None)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_multisource)

    p = sub.add_parser("profile", help="bundled SNR tables")
    psub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    show = psub.add_parser("show")
    show.add_argument("--table", choices=["snr", "position"], default="snr")
    show.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"screenmodem: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModemError, OSError) as exc:
        print(f"screenmodem: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
