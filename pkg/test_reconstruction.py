#!/usr/bin/env python3
import sys
import logging
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError
from scipy.integrate import quad

# Add the project directory to the Python path
sys.path.insert(0, str(Path(__file__).parent))

from conftest import SOS_CONVENTIONAL, SOS_VBT
from src.encoder.params import Encoding, EncodingMetadata, Regime, VbtMode
from src.encoder.tem import encode_conventional, encode_vbt, uniform_encoding
from src.errors import MetadataMismatchError, ParameterError, ReconstructionError
from src.reconstruction.iterative import (ReconstructionConfig, classify_step, iterative_reconstruct,
                                          write_reconstruction_csv, write_trace_csv)
from src.reconstruction.operator import (apply_operator_A, guard_slice, interval_kernel_integrals, kernel, nmse,
                                         output_grid, sinc_interpolate_uniform, uniform_samples)
from src.signals.generators import make_chirp, make_sos

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


@pytest.fixture(scope="module")
def sos_shifted():
    return encode_vbt(make_sos(7), SOS_VBT, VbtMode.SHIFTED)


@pytest.fixture(scope="module")
def sos_result(sos_shifted):
    config = ReconstructionConfig.for_encoding(sos_shifted)
    return iterative_reconstruct(sos_shifted, config, ground_truth=make_sos(7))


def test_kernel_peak_and_zeros():
    omega0 = 2.0 * np.pi * 50.0
    assert kernel(0.0, omega0) == pytest.approx(omega0 / np.pi)
    assert abs(kernel(np.pi / omega0, omega0)) < 1e-12


def test_interval_kernel_integrals_match_quadrature():
    omega0 = 2.0 * np.pi * 50.0
    firings = np.array([-0.03, -0.011, 0.004, 0.027])
    centers = (firings[:-1] + firings[1:]) / 2.0
    M = interval_kernel_integrals(firings, centers, omega0)
    for m in range(3):
        for n in range(3):
            expected, _ = quad(lambda t: float(kernel(t - centers[n], omega0)), firings[m], firings[m + 1],
                               epsabs=1e-14, epsrel=1e-12)
            assert M[m, n] == pytest.approx(expected, abs=1e-12)


def test_output_grid_needs_eightfold_oversampling():
    with pytest.raises(ParameterError):
        output_grid((-0.45, 0.45), 2.0 * np.pi * 50.0, oversample=4)
    grid = output_grid((-0.45, 0.45), 2.0 * np.pi * 50.0, oversample=16)
    assert np.max(np.diff(grid)) <= 0.01 / 16 * (1 + 1e-12)


def test_uniform_nyquist_sample_counts(sos):
    chirp = make_chirp()
    assert uniform_samples(chirp)[0].size == 180
    assert uniform_samples(sos)[0].size == 90


def test_sinc_interpolation_reproduces_samples(sos):
    fs = sos.omega0 / np.pi
    times, values = uniform_samples(sos, fs)
    assert np.allclose(sinc_interpolate_uniform(times, values, fs, times), values, atol=1e-12)


def test_sinc_interpolation_rejects_irregular_spacing():
    times = np.array([0.0, 0.01, 0.021])
    with pytest.raises(ParameterError):
        sinc_interpolate_uniform(times, np.zeros(3), 100.0, np.linspace(0.0, 0.02, 5))


def test_nmse_values():
    reference = np.array([1.0, -2.0, 0.5, 3.0])
    assert nmse(reference, reference) == float("-inf")
    assert nmse(reference, 0.9 * reference) == pytest.approx(-20.0)
    with pytest.raises(ReconstructionError):
        nmse(np.zeros(4), reference)
    with pytest.raises(ParameterError):
        nmse(reference, reference[:3])


def test_guard_slice_trims_each_end():
    assert guard_slice(100, 0.1) == slice(10, 90)
    with pytest.raises(ParameterError):
        guard_slice(100, 0.5)


def test_config_rejects_coarse_grid():
    with pytest.raises(ValidationError):
        ReconstructionConfig(omega0=2.0 * np.pi * 50.0, grid_dt=0.01 / 4)


def test_operator_A_removes_shift_with_augmented_averages(sos, sos_shifted):
    grid = output_grid(sos.window, sos.omega0)
    covered = grid[(grid >= sos_shifted.firings[0]) & (grid <= sos_shifted.firings[-1])]
    plain = apply_operator_A(sos_shifted, sos.omega0, covered, offset_augment=False)
    augmented = apply_operator_A(sos_shifted, sos.omega0, covered)
    target = sos.value(covered)
    assert np.linalg.norm(augmented - target - sos_shifted.shift) < np.linalg.norm(plain - target - sos_shifted.shift)


def test_reconstruction_of_shifted_encoding_converges(sos_result, sos_shifted):
    assert sos_result.final_nmse <= -40.0
    assert sos_result.iterations_run == len(sos_result.nmse_trace)
    assert sos_result.stop_reason in ("plateau", "exact", "max_iters", "diverging")
    assert sos_result.empirical_contraction <= SOS_VBT.alpha * 1.05
    assert sos_result.coefficients.shape == (sos_shifted.sample_count,)


def test_reconstruction_without_ground_truth_tracks_residual(sos_shifted):
    result = iterative_reconstruct(sos_shifted, ReconstructionConfig.for_encoding(sos_shifted, max_iters=40))
    assert result.nmse_trace == []
    assert len(result.residual_trace) == result.iterations_run
    assert result.residual_trace[-1] < result.residual_trace[0]
    assert result.empirical_contraction is None


def test_conventional_encoding_reconstructs(sos):
    encoding = encode_conventional(sos, SOS_CONVENTIONAL)
    result = iterative_reconstruct(encoding, ReconstructionConfig.for_encoding(encoding), ground_truth=sos)
    assert result.final_nmse <= -40.0


def test_zero_signal_reconstructs_exactly(zero_signal):
    encoding = encode_vbt(zero_signal, SOS_VBT, VbtMode.SHIFTED)
    result = iterative_reconstruct(encoding, ReconstructionConfig.for_encoding(encoding), ground_truth=zero_signal)
    assert np.all(result.f_hat == 0.0)
    assert result.stop_reason == "exact"
    assert result.nmse_trace == []


def test_mismatched_ground_truth_is_rejected(sos_shifted):
    with pytest.raises(MetadataMismatchError):
        iterative_reconstruct(sos_shifted, ReconstructionConfig.for_encoding(sos_shifted), ground_truth=make_sos(8))


def test_empty_encoding_cannot_be_reconstructed(sos):
    encoding = uniform_encoding(sos, sos.duration * 2.0)
    with pytest.raises(ReconstructionError):
        iterative_reconstruct(encoding, ReconstructionConfig.for_encoding(encoding))


def test_reconstruction_csv_outputs(tmp_path, sos_result, sos_shifted):
    config = ReconstructionConfig.for_encoding(sos_shifted)
    path = write_reconstruction_csv(sos_result, config, tmp_path / "recon.csv")
    frame = pd.read_csv(path, comment="#")
    assert list(frame.columns) == ["t", "f_hat"]
    assert len(frame) == sos_result.t.size
    trace = pd.read_csv(write_trace_csv(sos_result, config, tmp_path / "trace.csv"), comment="#")
    assert list(trace.columns) == ["iteration", "nmse_db"]
    assert trace["nmse_db"].tolist() == pytest.approx(sos_result.nmse_trace, rel=1e-15)
    assert path.read_text().startswith("# config=")


def _single_average(omega0):
    return Encoding(
        firings=[-0.001, 0.001], averages=[1.0], energies=[0.0], derivative_energies=[0.0], thresholds=[0.0],
        bias_integrals=[0.0], regimes=[Regime.FIXED],
        metadata=EncodingMetadata(scheme="uniform", signal_id="unit", omega0=omega0, t0=-0.001,
                                  window=(-0.001, 0.001)),
    )


def test_operator_A_of_a_single_average_is_the_kernel():
    omega0 = 2.0 * np.pi * 100.0
    grid = np.array([0.0, 0.0025, -0.0041])
    values = apply_operator_A(_single_average(omega0), omega0, grid, offset_augment=False)
    assert values[0] == pytest.approx(200.0, rel=1e-12)
    assert np.allclose(values, kernel(grid, omega0), rtol=1e-12, atol=0.0)


def test_operator_A_is_linear_in_the_averages(sos, sos_shifted, rng):
    grid = output_grid(sos.window, sos.omega0)
    y1 = sos_shifted.y
    y2 = rng.normal(size=y1.size) * np.max(np.abs(y1))
    combined = apply_operator_A(sos_shifted.with_averages(2.0 * y1 - 3.0 * y2), sos.omega0, grid,
                                offset_augment=False)
    parts = (2.0 * apply_operator_A(sos_shifted.with_averages(y1), sos.omega0, grid, offset_augment=False)
             - 3.0 * apply_operator_A(sos_shifted.with_averages(y2), sos.omega0, grid, offset_augment=False))
    assert np.allclose(combined, parts, rtol=1e-12, atol=1e-10 * np.max(np.abs(parts)))


def test_nmse_of_a_tenth_of_a_percent_error_is_minus_fifty_db():
    reference = np.array([1.0, -2.0, 0.5, 3.0])
    assert nmse(reference, reference * (1.0 + 10.0 ** -2.5)) == pytest.approx(-50.0, abs=1e-9)


def test_first_iterate_is_the_operator_output(sos, sos_shifted):
    shift = sos_shifted.shift
    literal = ReconstructionConfig.for_encoding(sos_shifted, max_iters=1, carry_offset=False)
    result = iterative_reconstruct(sos_shifted, literal)
    expected = apply_operator_A(sos_shifted, sos.omega0, result.t) - shift
    assert np.allclose(result.f_hat, expected, rtol=1e-12, atol=1e-9 * np.max(np.abs(expected)))

    carried = ReconstructionConfig.for_encoding(sos_shifted, max_iters=1)
    result = iterative_reconstruct(sos_shifted, carried)
    expected = apply_operator_A(sos_shifted, sos.omega0, result.t, offset_augment=False)
    assert np.allclose(result.f_hat, expected, rtol=1e-12, atol=1e-9 * np.max(np.abs(expected)))


def test_literal_recursion_on_the_shifted_signal_converges(sos, sos_shifted):
    config = ReconstructionConfig.for_encoding(sos_shifted, carry_offset=False, guard_band=0.1)
    result = iterative_reconstruct(sos_shifted, config, ground_truth=sos)
    assert result.stop_reason in ("plateau", "max_iters", "diverging")
    assert result.nmse_trace[-1] < result.nmse_trace[0]


@pytest.mark.parametrize("trace, expected", [
    ([-5.0], None),
    ([float("-inf")], "exact"),
    ([-3.0, -2.0], None),
    ([-3.0, -6.0, -9.0, -8.0], None),
    ([-3.0, -6.0, -9.0, -12.0, -11.0], "diverging"),
    ([-3.0, -6.0, -9.0, -12.0, -11.95], None),
    ([-8.94, -9.98, -9.9], None),
    ([-3.0, -6.0, -9.0, -9.0005], "plateau"),
    ([-3.0, -6.0, -9.0, -12.0, -15.0], None),
])
def test_stop_rule(trace, expected):
    config = ReconstructionConfig(omega0=2.0 * np.pi * 50.0, grid_dt=0.01 / 16)
    assert classify_step(trace, config) == expected


def test_diverging_trace_stops_the_run(monkeypatch, sos_shifted):
    # Residual trace falls for four iterations, then rises
    traces = iter([-10.0, -20.0, -30.0, -40.0, -35.0])
    monkeypatch.setattr("src.reconstruction.iterative._db", lambda numerator, denominator: next(traces))
    result = iterative_reconstruct(sos_shifted, ReconstructionConfig.for_encoding(sos_shifted, max_iters=50))
    assert result.stop_reason == "diverging"
    assert result.iterations_run == 5
