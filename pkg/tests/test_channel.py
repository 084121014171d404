import math

import numpy as np
import pytest
from scipy.signal import find_peaks
from hypothesis import given, settings, strategies as st

from screenmodem.channel import (ChannelParams, apply_channel, bundled_positions, bundled_profile, load_profile,
                                 mix_sources, noise_std_for_snr)
from screenmodem.errors import IncompatibleWaveform, InvalidArgument, ProfileParseError, UndefinedSNR
from screenmodem.raster import PAPER_TIMING, Waveform, emit_waveform, tone_pattern
from screenmodem.spectral import averaged_periodogram, measure_snr

SR = 48000

# Measured SNR grid transcribed independently of the bundled CSV:
# distance -> 12 cells (ViewSonic, Samsung, EIZO, TV) x (5, 10, 20 bps).
MEASURED = {
    0.0: [24, 28, 27, 23, 23, 24, 22, 22, 20, 32, 38, 25],
    0.5: [26, 23, 26, 20, 22, 20, 12, 11, 11, 30, 38, 36],
    1.0: [27, 30, 34, 21, 19, 20, 23, 22, 21, 32, 30, 22],
    1.5: [26, 29, 31, 17, 19, 18, 12, 12, 13, 23, 22, 21],
    2.0: [18, 23, 27, 14, 17, 13, 17, 14, 13, 23, 20, 18],
    2.5: [27, 20, 23, 15, 13, 5, None, None, None, None, None, None],
}
BRANDS = ["ViewSonic", "Samsung", "EIZO", "TV"]


def _tone(f, seconds=1.0, amp=0.5):
    t = np.arange(int(SR * seconds)) / SR
    return Waveform(SR, amp * np.sin(2 * np.pi * f * t))


def _emitted_tone(f, seconds=1.0):
    n = int(seconds * 60)
    frames = [tone_pattern(PAPER_TIMING, f, 255, k * PAPER_TIMING.raster_pixels) for k in range(n)]
    return emit_waveform(frames, PAPER_TIMING)


def test_profile_spot_values():
    prof = bundled_profile()
    assert prof.lookup("ViewSonic", 1.0, 20) == 34
    assert prof.lookup("Samsung", 2.5, 20) == 5
    assert prof.lookup("TV", 0, 10) == 38
    for rate in (5, 10, 20):
        assert prof.lookup("EIZO", 2.5, rate) is None
    assert prof.lookup("viewsonic", 1, 20) == 34
    assert prof.resolve("ViewSonic:1:20") == 34
    assert prof.lookup("Nobody", 1, 20) is None


def test_profile_full_grid():
    prof = bundled_profile()
    assert len(prof) == 72
    for d, cells in MEASURED.items():
        for i, snr in enumerate(cells):
            assert prof.lookup(BRANDS[i // 3], d, (5, 10, 20)[i % 3]) == snr


def test_positions_table():
    rows = bundled_positions()
    assert len(rows) == 45
    dell = [r for r in rows if r["model"] == "E2216HV"]
    assert {r["position"]: r["snr_db"] for r in dell}["back"] == pytest.approx(23.79)


def test_profile_parse_error_names_line():
    text = "brand,distance_m,bit_rate_bps,snr_db\nA,1,10,20\nB,1,ten,20\n"
    with pytest.raises(ProfileParseError) as exc:
        load_profile(text)
    assert exc.value.line == 3
    with pytest.raises(ProfileParseError) as exc:
        load_profile("brand,distance_m,bit_rate_bps,snr_db\nA,1,10\n")
    assert exc.value.line == 2
    with pytest.raises(ProfileParseError):
        load_profile("wrong,header\n")


def test_profile_missing_cells():
    prof = load_profile("brand,distance_m,bit_rate_bps,snr_db\nA,1,10,-\nB,2,5,\n")
    assert prof.lookup("A", 1, 10) is None and prof.lookup("B", 2, 5) is None
    with pytest.raises(InvalidArgument):
        prof.resolve("A-1-10")


def test_infinite_snr_is_identity():
    x = _tone(10000)
    y = apply_channel(x, ChannelParams(math.inf, gain=1.0))
    assert np.array_equal(x.samples, y.samples)
    z = apply_channel(x, ChannelParams(math.inf, gain=2.0))
    assert np.array_equal(z.samples, 2 * x.samples)


@pytest.mark.parametrize("seed", range(5))
def test_target_snr_20db_measured(seed):
    wav = _emitted_tone(10000)
    noisy = apply_channel(wav, ChannelParams(20.0, seed=seed))
    assert 19.0 <= measure_snr(noisy).snr_db <= 21.0


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=5, max_value=40), st.floats(min_value=0.1, max_value=10), st.integers(0, 2 ** 32))
def test_target_snr_property(snr, gain, seed):
    noisy = apply_channel(_tone(12000, 4.0), ChannelParams(snr, gain=gain, seed=seed))
    assert measure_snr(noisy, 12000).snr_db == pytest.approx(snr, abs=1.0)


def test_seed_determinism_and_decorrelation():
    x = _tone(10000)
    a = apply_channel(x, ChannelParams(10, seed=7)).samples - x.samples
    b = apply_channel(x, ChannelParams(10, seed=7)).samples - x.samples
    c = apply_channel(x, ChannelParams(10, seed=8)).samples - x.samples
    assert np.array_equal(a, b)
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.05


def test_silent_input_finite_snr():
    with pytest.raises(UndefinedSNR):
        apply_channel(Waveform(SR, np.zeros(SR)), ChannelParams(10))
    with pytest.raises(UndefinedSNR):
        noise_std_for_snr(Waveform(SR, np.zeros(SR)), 10)


def test_channel_param_errors():
    with pytest.raises(InvalidArgument):
        ChannelParams(10, gain=0)
    with pytest.raises(InvalidArgument):
        apply_channel(Waveform(SR, []), ChannelParams(10))


def test_fixed_noise_std():
    x = Waveform(SR, np.zeros(SR * 2))
    y = apply_channel(x, ChannelParams(noise_std=0.1, seed=3))
    assert np.std(y.samples) == pytest.approx(0.1, rel=0.02)


def test_mix_identity_and_zero_gain():
    a, b = _tone(6000), _tone(9000)
    single = mix_sources([a], normalize=False).waveform
    assert np.array_equal(single.samples, a.samples)
    res = mix_sources([a], [1.0])
    assert res.normalization == pytest.approx(1 / a.peak)
    assert np.allclose(mix_sources([a, b], [1.0, 0.0], normalize=False).waveform.samples, a.samples)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(100, 3000), st.integers(100, 3000))
def test_mix_linearity(g1, g2, na, nb):
    rng = np.random.default_rng(na * 7919 + nb)
    a, b = Waveform(SR, rng.normal(size=na)), Waveform(SR, rng.normal(size=nb))
    whole = mix_sources([a, b], [g1, g2], normalize=False).waveform.samples
    n = max(na, nb)
    pa = np.zeros(n)
    pb = np.zeros(n)
    pa[:na] = mix_sources([a], [g1], normalize=False).waveform.samples
    pb[:nb] = mix_sources([b], [g2], normalize=False).waveform.samples
    assert np.max(np.abs(pa + pb - whole)) <= 1e-9


def test_mix_peak_normalized():
    res = mix_sources([_tone(6000, amp=1.0), _tone(9000, amp=1.0)])
    assert res.waveform.peak == pytest.approx(1.0)
    assert res.normalization < 1.0


def test_mix_rate_mismatch():
    with pytest.raises(IncompatibleWaveform):
        mix_sources([_tone(6000), Waveform(44100, np.zeros(10))])


def test_four_tone_mix_has_four_peaks():
    carriers = (6000, 9000, 14500, 15500)
    mixed = mix_sources([_emitted_tone(f) for f in carriers]).waveform
    p = averaged_periodogram(mixed.samples, 4096)
    bins = [round(f * 4096 / SR) for f in carriers]
    # each carrier bin is a local maximum well above the band floor
    floor = np.median(p[256:1878])
    for k in bins:
        assert p[k] == p[k - 3:k + 4].max()
        assert p[k] > 1e3 * floor
    band = p[256:1878]
    peaks, _ = find_peaks(band)
    strongest = peaks[np.argsort(band[peaks])[-4:]] + 256
    assert sorted(strongest) == bins
