import itertools

import pytest
from hypothesis import given, strategies as st

from oracles import crc8_bitserial, crc8_polydiv
from screenmodem.errors import FramingError
from screenmodem.framing import (PACKET_BITS, PREAMBLE, bits_to_int, crc8, deframe, format_bits, frame_packet,
                                 int_to_bits, parse_bits, payload_words)

words = st.integers(min_value=0, max_value=2 ** 32 - 1)

# Frozen from the bit-serial oracle before the table implementation existed.
DEADBEEF_CRC = 0xCA


def test_crc_of_zero_is_zero():
    assert crc8(0) == 0


def test_crc_deadbeef_matches_bitserial_oracle():
    assert crc8_bitserial(0xDEADBEEF) == DEADBEEF_CRC
    assert crc8_polydiv(0xDEADBEEF) == DEADBEEF_CRC
    assert crc8(0xDEADBEEF) == DEADBEEF_CRC


@given(words)
def test_crc_agrees_with_oracle(p):
    assert crc8(p) == crc8_bitserial(p)


@given(words, words)
def test_crc_linearity(a, b):
    assert crc8(a ^ b) == crc8(a) ^ crc8(b)


def test_crc_rejects_oversized_payload():
    with pytest.raises(FramingError):
        crc8(1 << 32)


def test_frame_zero_payload():
    assert format_bits(frame_packet(0)) == "10101010" + "0" * 32 + "00000000"


def test_frame_deadbeef_tail_is_oracle_crc():
    bits = frame_packet(0xDEADBEEF)
    assert bits[:8] == list(PREAMBLE)
    assert bits_to_int(bits[8:40]) == 0xDEADBEEF
    assert bits_to_int(bits[40:]) == crc8_bitserial(0xDEADBEEF)


@given(words)
def test_frame_length_and_roundtrip(p):
    bits = frame_packet(p)
    assert len(bits) == PACKET_BITS == 48
    d = deframe(bits)
    assert d.ok and d.payload == p


def test_frame_accepts_bit_sequence():
    assert frame_packet(int_to_bits(0x12345678, 32)) == frame_packet(0x12345678)


@pytest.mark.parametrize("bad", [-1, 1 << 32, [1] * 31, [0] * 33])
def test_frame_rejects_wrong_length(bad):
    with pytest.raises(FramingError):
        frame_packet(bad)


def _span_corruptions(payload, positions):
    bits = frame_packet(payload)[8:]
    for pos in positions:
        bits[pos] ^= 1
    return deframe(bits)


@pytest.mark.parametrize("payload", [0x00000000, 0xDEADBEEF, 0xAA55AA55])
def test_every_single_bit_error_detected(payload):
    assert all(not _span_corruptions(payload, [i]).ok for i in range(40))


@pytest.mark.parametrize("payload", [0x00000000, 0xDEADBEEF])
def test_every_double_bit_error_detected(payload):
    pairs = list(itertools.combinations(range(40), 2))
    assert len(pairs) == 780
    assert all(not _span_corruptions(payload, pair).ok for pair in pairs)


def test_deframe_wrong_length():
    with pytest.raises(FramingError):
        deframe([0] * 41)


def test_bit_text_roundtrip():
    assert format_bits(parse_bits("10 11\n0")) == "10110"
    with pytest.raises(FramingError):
        parse_bits("102")


def test_payload_words_big_endian():
    assert payload_words(b"ABCDEFGH") == [0x41424344, 0x45464748]
    assert payload_words(b"") == []
    with pytest.raises(FramingError):
        payload_words(b"ABC")
