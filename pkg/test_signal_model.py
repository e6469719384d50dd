#!/usr/bin/env python3
import sys
import logging
from pathlib import Path

import mpmath
import numpy as np
import pytest

# Add the project directory to the Python path
sys.path.insert(0, str(Path(__file__).parent))

from src.errors import DomainError, IngestionError, ParameterError
from src.signals.generators import (SOS_SEGMENT, make_chirp, make_constant, make_four_region, make_sos,
                                    make_tone, peak_amplitude)
from src.signals.grid import hermite_cumulative
from src.signals.ingest import from_uniform_samples, ingest_csv, read_signal_csv, write_signal_csv
from src.signals.model import (SincAtom, build_signal, energy_integrals, eval_derivative, eval_signal,
                               sinc_derivatives)

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

mpmath.mp.dps = 30


def _mp_sinc(x):
    return mpmath.sinc(mpmath.pi * x)


@pytest.mark.parametrize("x", [0.0, 1e-4, 0.01, 0.3, 1.0, 2.5, -7.25])
def test_sinc_derivatives_match_extended_precision(x):
    value, d1, d2 = sinc_derivatives(np.array([x]))
    assert value[0] == pytest.approx(float(_mp_sinc(x)), abs=1e-14)
    assert d1[0] == pytest.approx(float(mpmath.diff(_mp_sinc, x, 1)), abs=1e-12)
    assert d2[0] == pytest.approx(float(mpmath.diff(_mp_sinc, x, 2)), abs=1e-11)


@pytest.mark.parametrize("x", [0.0, 1e-4, 0.01, 0.3, 1.0, 2.5, -7.25])
def test_higher_sinc_derivatives_match_extended_precision(x):
    derivatives = sinc_derivatives(np.array([x]), order=4)
    assert len(derivatives) == 5
    assert derivatives[3][0] == pytest.approx(float(mpmath.diff(_mp_sinc, x, 3)), abs=1e-10)
    assert derivatives[4][0] == pytest.approx(float(mpmath.diff(_mp_sinc, x, 4)), abs=1e-9)


def test_sinc_derivative_order_is_bounded():
    with pytest.raises(ParameterError):
        sinc_derivatives(np.array([0.5]), order=5)


def _mp_signal(signal, t):
    total = mpmath.mpf(signal.offset)
    for atom in signal.atoms:
        total += atom.amplitude * _mp_sinc(2 * atom.rate * (mpmath.mpf(t) - atom.center))
    return total


def test_closed_form_evaluation_matches_extended_precision(sos, rng):
    points = rng.uniform(sos.t_start, sos.t_end, 8)
    for t in points:
        assert eval_signal(sos, float(t)) == pytest.approx(float(_mp_signal(sos, t)), abs=1e-12)
        expected = mpmath.diff(lambda u: _mp_signal(sos, u), t)
        assert eval_derivative(sos, float(t)) == pytest.approx(float(expected), rel=1e-9, abs=1e-9)


def test_energy_integrals_match_extended_precision(sos):
    t_a, t_b = -0.0731, -0.0512
    pair = energy_integrals(sos, t_a, t_b, shift=3.0)
    expected_e = mpmath.quad(lambda u: (_mp_signal(sos, u) + 3) ** 2, [t_a, t_b])
    expected_d = mpmath.quad(lambda u: mpmath.diff(lambda v: _mp_signal(sos, v), u) ** 2, [t_a, t_b])
    assert pair.e == pytest.approx(float(expected_e), rel=1e-8)
    assert pair.d == pytest.approx(float(expected_d), rel=1e-8)


def test_energy_integrals_of_empty_interval_are_zero(sos):
    pair = energy_integrals(sos, 0.01, 0.01, shift=3.0)
    assert pair.e == 0.0 and pair.d == 0.0


def test_energy_integrals_outside_window_raise(sos):
    with pytest.raises(DomainError):
        energy_integrals(sos, sos.t_start - 0.01, 0.0)
    with pytest.raises(DomainError):
        energy_integrals(sos, 0.1, 0.05)


def test_hermite_cumulative_is_exact_for_quintics():
    t = np.linspace(0.0, 1.0, 11)
    g = t ** 5 - 2.0 * t ** 3 + 1.0
    gp = 5.0 * t ** 4 - 6.0 * t ** 2
    gppp = 60.0 * t ** 2 - 12.0
    cumulative = hermite_cumulative(g, gp, gppp, t[1] - t[0])
    assert cumulative[-1] == pytest.approx(1.0 / 6.0 - 0.5 + 1.0, rel=1e-13)
    assert cumulative[5] == pytest.approx(0.5 ** 6 / 6.0 - 0.5 ** 4 / 2.0 + 0.5, rel=1e-13)


def test_chirp_is_normalized_and_deterministic(chirp):
    assert len(chirp.atoms) == 130
    assert chirp.omega0 == pytest.approx(2.0 * np.pi * 100.0)
    assert peak_amplitude(chirp) == pytest.approx(1.0, rel=1e-9)
    assert make_chirp().identifier == chirp.identifier
    assert chirp.nyquist_count == 180


def test_sos_layout_and_seeding(sos):
    f1 = [a for a in sos.atoms if a.rate == 50.0]
    f2 = [a for a in sos.atoms if a.rate == 20.0]
    assert len(f1) == 15
    assert len(f2) == 14
    assert all(abs(a.center) <= SOS_SEGMENT / 2.0 + 1e-12 for a in f1)
    assert all(abs(abs(a.center) - SOS_SEGMENT) <= SOS_SEGMENT / 2.0 + 1e-12 for a in f2)
    assert sos.nyquist_count == 90
    assert make_sos(7).identifier == sos.identifier
    assert make_sos(8).identifier != sos.identifier


def test_four_region_signal_is_normalized():
    signal = make_four_region()
    assert signal.omega0 == pytest.approx(2.0 * np.pi * 50.0)
    assert peak_amplitude(signal) == pytest.approx(1.0, rel=1e-9)


def test_atom_above_band_is_rejected():
    with pytest.raises(ParameterError):
        build_signal(atoms=[SincAtom(amplitude=1.0, center=0.0, rate=80.0)], omega0=2.0 * np.pi * 50.0,
                     window=(-0.1, 0.1))


def test_empty_window_is_rejected():
    with pytest.raises(ParameterError):
        build_signal(atoms=[], omega0=10.0, window=(0.2, 0.2))


def test_tone_and_constant():
    tone = make_tone(0.5, 2.0 * np.pi * 10.0)
    assert eval_signal(tone, 0.0) == pytest.approx(0.5)
    constant = make_constant(0.25)
    assert np.allclose(constant.value(np.linspace(-0.4, 0.4, 9)), 0.25)
    with pytest.raises(ParameterError):
        make_tone(1.5, 10.0)


def test_identifier_tracks_content_not_name(chirp):
    renamed = chirp.model_copy(update={"name": "other"})
    assert renamed.identifier == chirp.identifier
    assert chirp.with_offset(0.5).identifier != chirp.identifier


def test_uniform_samples_are_reproduced_exactly():
    fs = 200.0
    times = np.arange(40) / fs
    values = np.sin(2.0 * np.pi * 7.0 * times)
    signal = from_uniform_samples(times, values, fs)
    assert signal.window == pytest.approx((0.0, 40 / fs))
    assert np.allclose(signal.value(times) / signal.scale, values, atol=1e-12)


def test_declared_band_must_fit_sampling_rate():
    times = np.arange(16) / 100.0
    with pytest.raises(ParameterError):
        from_uniform_samples(times, np.zeros(16), 100.0, band_hz=60.0)


def test_jittered_timestamp_names_the_row(tmp_path):
    times = np.arange(20) / 1000.0
    times[11] += 2e-5
    path = tmp_path / "jitter.csv"
    path.write_text("time,value\n" + "".join(f"{float(t)!r},{0.1 * i}\n" for i, t in enumerate(times)))
    with pytest.raises(IngestionError) as excinfo:
        ingest_csv(path, fs=1000.0)
    # Header is line 1, so sample 11 sits on line 13
    assert excinfo.value.row == 13
    assert "row 13" in str(excinfo.value)


def test_unparseable_value_names_the_row(tmp_path):
    path = tmp_path / "bad.csv"
    lines = [f"{i / 1000.0!r},{i}" for i in range(12)]
    lines[4] = "0.004,abc"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(IngestionError) as excinfo:
        ingest_csv(path, fs=1000.0)
    assert excinfo.value.row == 5


def test_all_zero_recording_ingests(tmp_path):
    path = tmp_path / "zeros.csv"
    path.write_text("".join(f"{i / 2000.0!r},0\n" for i in range(64)))
    signal = ingest_csv(path, fs=2000.0, band_hz=100.0)
    assert signal.omega0 == pytest.approx(2.0 * np.pi * 100.0)
    assert np.all(signal.value(np.linspace(signal.t_start, signal.t_end, 50)) == 0.0)


def test_sampling_rate_is_inferred(tmp_path):
    path = tmp_path / "inferred.csv"
    path.write_text("".join(f"{i / 500.0!r},{float(np.cos(i / 7.0))!r}\n" for i in range(32)))
    signal = ingest_csv(path)
    assert signal.omega0 == pytest.approx(np.pi * 500.0)


def test_missing_file_is_an_ingestion_error(tmp_path):
    with pytest.raises(IngestionError):
        ingest_csv(tmp_path / "absent.csv", fs=100.0)


def test_signal_csv_keeps_band_and_values(tmp_path):
    tone = make_tone(0.8, 2.0 * np.pi * 5.0, window=(0.0, 0.4), omega0=2.0 * np.pi * 20.0)
    path = write_signal_csv(tone, tmp_path / "tone.csv", oversample=16)
    loaded = read_signal_csv(path)
    assert loaded.omega0 == pytest.approx(tone.omega0)
    nodes = tone.fine_grid(16).t[:-1]
    assert np.allclose(loaded.value(nodes) / loaded.scale, tone.value(nodes), atol=1e-12)


def test_energy_integrals_are_additive(sos):
    t_a, t_m, t_b = -0.2117, 0.0093, 0.1874
    whole = energy_integrals(sos, t_a, t_b, shift=3.0)
    left = energy_integrals(sos, t_a, t_m, shift=3.0)
    right = energy_integrals(sos, t_m, t_b, shift=3.0)
    assert left.e + right.e == pytest.approx(whole.e, rel=1e-10)
    assert left.d + right.d == pytest.approx(whole.d, rel=1e-10)


def test_tone_energies_match_closed_forms():
    amplitude, omega = 0.9, 2.0 * np.pi * 20.0
    tone = make_tone(amplitude, omega)
    t_a, t_b = -0.3013, 0.1172
    swing = (np.sin(2.0 * omega * t_b) - np.sin(2.0 * omega * t_a)) / (4.0 * omega)
    pair = energy_integrals(tone, t_a, t_b)
    assert pair.e == pytest.approx(amplitude ** 2 * ((t_b - t_a) / 2.0 + swing), rel=1e-8)
    assert pair.d == pytest.approx(amplitude ** 2 * omega ** 2 * ((t_b - t_a) / 2.0 - swing), rel=1e-8)


def test_derivative_matches_central_differences(chirp, rng):
    step = 1e-7
    for t in rng.uniform(chirp.t_start + 0.01, chirp.t_end - 0.01, 10):
        expected = (eval_signal(chirp, float(t) + step) - eval_signal(chirp, float(t) - step)) / (2.0 * step)
        assert eval_derivative(chirp, float(t)) == pytest.approx(expected, abs=1e-5)


def _windowed_tones(t):
    return np.exp(-((t - 0.5) / 0.1) ** 2) * (np.sin(2.0 * np.pi * 40.0 * t) + 0.5 * np.cos(2.0 * np.pi * 85.0 * t))


def test_ingested_signal_interpolates_between_samples(rng):
    fs = 2000.0
    times = np.arange(2000) / fs
    signal = from_uniform_samples(times, _windowed_tones(times), fs, band_hz=100.0)
    off = rng.uniform(0.2, 0.8, 25)
    expected = _windowed_tones(off)
    peak = np.max(np.abs(_windowed_tones(times)))
    assert np.allclose(signal.value(off) / signal.scale, expected, atol=1e-6 * peak)


def test_ingest_normalizes_against_the_dense_peak():
    fs = 2000.0
    times = np.arange(500) / fs
    signal = from_uniform_samples(times, np.sin(2.0 * np.pi * 97.0 * times), fs, band_hz=100.0)
    assert np.max(np.abs(signal.fine_grid().f)) <= signal.amp_bound * (1.0 + 1e-9)
    assert peak_amplitude(signal) == pytest.approx(signal.amp_bound, rel=1e-9)
