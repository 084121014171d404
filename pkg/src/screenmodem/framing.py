"""Packet layout: 8-bit preamble, 32-bit payload, CRC-8 over the payload."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import FramingError

PREAMBLE = (1, 0, 1, 0, 1, 0, 1, 0)
PAYLOAD_BITS = 32
CRC_BITS = 8
PACKET_BITS = len(PREAMBLE) + PAYLOAD_BITS + CRC_BITS

CRC_POLY = 0x07

_CRC_TABLE = []
for _byte in range(256):
    _reg = _byte
    for _ in range(8):
        _reg = ((_reg << 1) ^ CRC_POLY) & 0xFF if _reg & 0x80 else (_reg << 1) & 0xFF
    _CRC_TABLE.append(_reg)


def crc8(payload: int) -> int:
    """CRC-8, polynomial 0x07, zero init, MSB first, no reflection or final XOR."""
    if not 0 <= payload < 1 << PAYLOAD_BITS:
        raise FramingError(f"payload must fit in {PAYLOAD_BITS} bits")
    reg = 0
    for byte in payload.to_bytes(4, "big"):
        reg = _CRC_TABLE[reg ^ byte]
    return reg


def int_to_bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def bits_to_int(bits: Iterable[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | (1 if b else 0)
    return value


def parse_bits(text: str) -> list[int]:
    """ASCII ``'0'``/``'1'`` text to a bit list; whitespace is ignored."""
    cleaned = "".join(text.split())
    if any(c not in "01" for c in cleaned):
        raise FramingError("bit string may only contain '0' and '1'")
    return [int(c) for c in cleaned]


def format_bits(bits: Sequence[int]) -> str:
    return "".join("1" if b else "0" for b in bits)


def frame_packet(payload) -> list[int]:
    """Serialize one packet: preamble, payload MSB first, then its CRC.

    ``payload`` is a 32-bit integer or a sequence of exactly 32 bits.
    """
    if isinstance(payload, int):
        if not 0 <= payload < 1 << PAYLOAD_BITS:
            raise FramingError(f"payload 0x{payload:X} does not fit in {PAYLOAD_BITS} bits")
        value = payload
    else:
        bits = list(payload)
        if len(bits) != PAYLOAD_BITS:
            raise FramingError(f"payload has {len(bits)} bits, expected {PAYLOAD_BITS}")
        value = bits_to_int(bits)
    return list(PREAMBLE) + int_to_bits(value, PAYLOAD_BITS) + int_to_bits(crc8(value), CRC_BITS)


@dataclass(frozen=True)
class Deframed:
    payload: int
    received_crc: int
    calculated_crc: int

    @property
    def ok(self) -> bool:
        return self.received_crc == self.calculated_crc


def deframe(bits: Sequence[int]) -> Deframed:
    """Split a 48-bit packet (or the 40 bits after the preamble) and check its CRC."""
    bits = list(bits)
    if len(bits) == PACKET_BITS:
        bits = bits[len(PREAMBLE):]
    if len(bits) != PAYLOAD_BITS + CRC_BITS:
        raise FramingError(f"expected {PACKET_BITS} or {PAYLOAD_BITS + CRC_BITS} bits, got {len(bits)}")
    payload = bits_to_int(bits[:PAYLOAD_BITS])
    return Deframed(payload, bits_to_int(bits[PAYLOAD_BITS:]), crc8(payload))


def payload_words(data: bytes) -> list[int]:
    """Chunk bytes into big-endian 32-bit payloads; the caller pads beforehand."""
    if len(data) % 4:
        raise FramingError("data length must be a multiple of 4 bytes")
    return [int.from_bytes(data[i:i + 4], "big") for i in range(0, len(data), 4)]
