import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import tone_pixel
from screenmodem.errors import InvalidArgument, InvalidFrame, InvalidTiming, OutOfRangeTone
from screenmodem.fileio import read_pgm, write_pgm
from screenmodem.raster import (PAPER_TIMING, FrameBitmap, TimingConfig, blank_frame, compute_pixel_clock,
                                emit_waveform, plan_tone, strip_pattern, tone_pattern)
from screenmodem.spectral import averaged_periodogram


@pytest.mark.parametrize("w,h,hz,expected", [
    (1680, 1050, 60, 105_840_000),
    (1920, 1080, 60, 124_416_000),
    (1280, 1024, 60, 78_643_200),
])
def test_pixel_clock(w, h, hz, expected):
    assert compute_pixel_clock(TimingConfig(w, h, hz)) == expected


@pytest.mark.parametrize("kwargs", [dict(h_res=0, v_res=10, refresh_rate=60),
                                    dict(h_res=10, v_res=10, refresh_rate=0),
                                    dict(h_res=10, v_res=10, refresh_rate=60, h_total=9)])
def test_invalid_timing(kwargs):
    with pytest.raises(InvalidTiming):
        TimingConfig(**kwargs)


def test_timing_parse():
    t = TimingConfig.parse("1920x1080@60:2200", 44100)
    assert (t.h_res, t.v_res, t.refresh_rate, t.h_total, t.sample_rate) == (1920, 1080, 60, 2200, 44100)
    assert TimingConfig.parse("1680x1050@60") == PAPER_TIMING
    with pytest.raises(InvalidTiming):
        TimingConfig.parse("1680-1050")


def test_tone_5khz_cycle():
    tone = plan_tone(PAPER_TIMING, 5000)
    assert (tone.cycle_size, tone.half_cycle) == (21168, 10584)
    frame = tone_pattern(PAPER_TIMING, 5000, 200)
    luma = frame.luma
    assert luma[0, 0] == 200
    y, x = divmod(10584, 1680)
    assert luma[y, x] == 0
    assert luma[y, x - 1] == 200


def test_tone_20khz_cycle():
    assert plan_tone(PAPER_TIMING, 20000).cycle_size == 5292


def test_band_height_halves_as_frequency_doubles():
    # Lit rows come in horizontal bands whose height is the half-cycle in rows.
    heights = [plan_tone(PAPER_TIMING, f).half_cycle / PAPER_TIMING.h_total for f in (5000, 10000, 20000)]
    assert heights[0] == pytest.approx(2 * heights[1], rel=1e-3)
    assert heights[1] == pytest.approx(2 * heights[2], rel=1e-3)
    col = tone_pattern(PAPER_TIMING, 5000).luma[:, 0] > 0
    first_dark_row = int(np.argmin(col))
    assert first_dark_row == pytest.approx(heights[0], abs=1)


def test_tone_errors():
    with pytest.raises(OutOfRangeTone):
        plan_tone(PAPER_TIMING, PAPER_TIMING.pixel_clock / 4 + 1)
    with pytest.raises(OutOfRangeTone):
        plan_tone(PAPER_TIMING, 0)
    with pytest.raises(InvalidArgument):
        plan_tone(PAPER_TIMING, 5000, 256)
    # f <= pclk/4 keeps cycle_size >= 4, so the cycle < 2 guard is defensive only
    assert plan_tone(PAPER_TIMING, PAPER_TIMING.pixel_clock / 4).cycle_size == 4


def test_frequency_error_reported():
    tone = plan_tone(PAPER_TIMING, 7777)
    assert tone.actual_frequency == PAPER_TIMING.pixel_clock / tone.cycle_size
    assert abs(tone.frequency_error) < 7777 / tone.cycle_size


def test_cycle_halving_invariant_paper_timing():
    for f in range(3000, 26000, 997):
        assert abs(plan_tone(PAPER_TIMING, f).cycle_size - 2 * plan_tone(PAPER_TIMING, 2 * f).cycle_size) <= 2


@given(st.floats(min_value=100, max_value=20000))
def test_cycle_halving_property(f):
    a = plan_tone(PAPER_TIMING, f).cycle_size
    b = plan_tone(PAPER_TIMING, 2 * f).cycle_size
    assert abs(a - 2 * b) <= 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 255), st.floats(min_value=1000, max_value=40000), st.integers(0, 10 ** 6),
       st.integers(64, 80))
def test_tone_pixels_match_oracle(brightness, f, phase, h_total):
    t = TimingConfig(64, 48, 60, h_total=h_total)
    tone = plan_tone(t, f, brightness)
    luma = tone_pattern(t, f, brightness, phase).luma
    for y in range(0, 48, 7):
        for x in range(0, 64, 5):
            assert luma[y, x] == tone_pixel(x, y, h_total, tone.cycle_size, tone.half_cycle, brightness, phase)


def test_tone_deterministic():
    a = tone_pattern(PAPER_TIMING, 12345, 99)
    b = tone_pattern(PAPER_TIMING, 12345, 99)
    assert np.array_equal(a.luma, b.luma)
    assert a == b


def test_strip_single_equals_tone(small_timing):
    assert strip_pattern(small_timing, [5000], 77) == tone_pattern(small_timing, 5000, 77)


def test_strip_two_halves(small_timing):
    frame = strip_pattern(small_timing, [3000, None])
    luma = frame.luma
    assert np.array_equal(luma[:24], tone_pattern(small_timing, 3000).luma[:24])
    assert not luma[24:].any()
    other = strip_pattern(small_timing, [None, 3000]).luma
    assert not other[:24].any()
    # strip rows are counted from the strip's own top row
    assert np.array_equal(other[24:], tone_pattern(small_timing, 3000).luma[:24])


def test_strip_errors(small_timing):
    with pytest.raises(InvalidArgument):
        strip_pattern(small_timing, [])
    with pytest.raises(InvalidArgument):
        strip_pattern(small_timing, [3000] * 49)


def _band_power(wav, f, half_width=500.0, window=4096):
    p = averaged_periodogram(wav.samples, window)
    k0, k1 = (int(round((f + s * half_width) * window / wav.sample_rate)) for s in (-1, 1))
    return float(p[k0:k1 + 1].sum())


def test_quarter_strip_carries_quarter_energy():
    frames_full = [tone_pattern(PAPER_TIMING, 12500, 255, k * PAPER_TIMING.raster_pixels) for k in range(60)]
    frames_strip = [strip_pattern(PAPER_TIMING, [12500, None, None, None], 255, k * PAPER_TIMING.raster_pixels)
                    for k in range(60)]
    full = _band_power(emit_waveform(frames_full, PAPER_TIMING), 12500)
    strip = _band_power(emit_waveform(frames_strip, PAPER_TIMING), 12500)
    ratio_db = 10 * np.log10(strip / full)
    assert ratio_db == pytest.approx(10 * np.log10(0.25), abs=1.0)


def test_emitted_tone_peak():
    frames = [tone_pattern(PAPER_TIMING, 10000, 255, k * PAPER_TIMING.raster_pixels) for k in range(60)]
    wav = emit_waveform(frames, PAPER_TIMING)
    assert len(wav) == 48000
    spectrum = np.abs(np.fft.rfft(wav.samples[:4096] * np.hanning(4096)))
    assert abs(int(np.argmax(spectrum)) - round(10000 * 4096 / 48000)) <= 1


def test_black_frames_emit_silence(paper_timing):
    wav = emit_waveform([blank_frame(paper_timing)] * 10, paper_timing)
    assert not wav.samples.any()
    frame = FrameBitmap.from_array(np.zeros((1050, 1680), np.uint8))
    assert not emit_waveform([frame], paper_timing).samples.any()


def _oracle_emission(frame_luma, timing):
    """Direct raster scan with blanking, block averages and DC removal."""
    raster = []
    for y in range(timing.v_res):
        raster.extend(frame_luma[y] / 255.0)
        raster.extend([0.0] * (timing.h_total - timing.h_res))
    raster = np.array(raster)
    n = round(timing.sample_rate / timing.refresh_rate)
    edges = [round(i * len(raster) / n) for i in range(n + 1)]
    blocks = np.array([raster[edges[i]:edges[i + 1]].mean() for i in range(n)])
    return blocks - blocks.mean()


@pytest.mark.parametrize("h_total", [64, 72])
def test_emission_matches_raster_oracle(h_total):
    t = TimingConfig(64, 48, 60, h_total=h_total)
    frame = tone_pattern(t, 3000, 180, 11)
    expected = _oracle_emission(frame.luma, t)
    assert np.allclose(emit_waveform([frame], t).samples, expected, atol=1e-12)
    assert np.allclose(emit_waveform([frame], t, scan_pixels=True).samples, expected, atol=1e-12)


def test_layout_and_pixel_routes_agree(paper_timing):
    frames = [strip_pattern(paper_timing, [12000, None, 13000], 200, k * 7919) for k in range(3)]
    fast = emit_waveform(frames, paper_timing).samples
    slow = emit_waveform(frames, paper_timing, scan_pixels=True).samples
    assert np.max(np.abs(fast - slow)) < 1e-9


def test_per_frame_dc_removed(small_timing):
    frames = [tone_pattern(small_timing, 3000, v) for v in (255, 40, 7)]
    wav = emit_waveform(frames, small_timing)
    for j in range(3):
        assert abs(wav.samples[j * 800:(j + 1) * 800].mean()) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 50), st.sampled_from([48000, 44100, 22050]), st.sampled_from([50, 60, 75]))
def test_emission_length(n_frames, sr, hz):
    t = TimingConfig(64, 48, hz, sample_rate=sr)
    wav = emit_waveform([blank_frame(t)] * n_frames, t)
    assert len(wav) == round(n_frames * sr / hz)


def test_brightness_monotone_power(paper_timing):
    k = round(12500 * 4096 / 48000)
    powers = []
    for v in (1, 3, 7, 15, 255):
        frames = [tone_pattern(paper_timing, 12500, v, i * paper_timing.raster_pixels) for i in range(6)]
        powers.append(averaged_periodogram(emit_waveform(frames, paper_timing).samples)[k])
    assert all(a < b for a, b in zip(powers, powers[1:]))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 254))
def test_brightness_non_decreasing_property(v):
    t = TimingConfig(64, 48, 60)
    lo = emit_waveform([tone_pattern(t, 3000, v)], t).samples
    hi = emit_waveform([tone_pattern(t, 3000, v + 1)], t).samples
    assert np.sum(hi ** 2) >= np.sum(lo ** 2)


def test_emission_errors(paper_timing, small_timing):
    with pytest.raises(InvalidArgument):
        emit_waveform([], paper_timing)
    with pytest.raises(InvalidFrame):
        emit_waveform([blank_frame(small_timing)], paper_timing)


def test_pgm_roundtrip(tmp_path, small_timing):
    frame = tone_pattern(small_timing, 4321, 123, 5)
    path = tmp_path / "f.pgm"
    write_pgm(path, frame)
    assert path.read_bytes().startswith(b"P5\n64 48\n255\n")
    assert read_pgm(path) == frame
