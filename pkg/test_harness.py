#!/usr/bin/env python3
import sys
import json
import logging
from pathlib import Path

import numpy as np
import pytest
from scipy import special

# Add the project directory to the Python path
sys.path.insert(0, str(Path(__file__).parent))

from src.config import load_settings
from src.errors import ParameterError, ReportIOError
from src.harness.experiments import CONVENTIONAL, UNIFORM, VBT, run_experiment, run_trials, trial_seeds
from src.harness.report import (SAMPLE_COUNT_CONVENTION, ExperimentReport, MethodRecord, PlotData, Series,
                                canonical_json, emit_report)
from src.main import COMMANDS, EXIT_IO, EXIT_OK, EXIT_USAGE, main

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def square_task(index, value):
    return {"index": index, "value": value * value}


def _plots():
    return [
        PlotData(name="demo-line", title="demo", series=[
            Series(label="f(t)", x=[0.0, 0.5, 1.0], y=[0.0, 1.0, 0.25]),
            Series(label="firings", x=[0.2, 0.7], y=[0.4, 0.6], style="stem"),
        ]),
        PlotData(name="demo-heatmap", title="grid", xlabel="beta", ylabel="alpha",
                 matrix=[[1.0, 2.0], [3.0, float("nan")]], xticks=[500.0, 1000.0], yticks=[0.1, 0.3]),
    ]


def test_canonical_json_round_trip_is_byte_identical():
    payload = {
        "b": [1.0, float("inf"), 0.1 + 0.2, -float("inf")],
        "a": {"value": float("nan"), "flag": np.bool_(True)},
        "n": np.float64(2.5),
        "k": np.int64(3),
        "arr": np.array([0.125, 1e-300]),
    }
    text = canonical_json(payload)
    assert canonical_json(json.loads(text)) == text
    parsed = json.loads(text)
    assert parsed["b"][1] == "inf" and parsed["b"][3] == "-inf"
    assert parsed["a"]["value"] == "nan"
    assert parsed["b"][2] == 0.1 + 0.2
    assert list(parsed) == sorted(parsed)


def test_report_with_no_records_is_still_valid(tmp_path):
    report = ExperimentReport(preset="sos-table", seed=7)
    manifest = emit_report(report, tmp_path)
    assert manifest == ["report.json", "timing.json"]
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["records"] == []
    assert payload["manifest"] == manifest
    assert payload["sample_count_convention"] == SAMPLE_COUNT_CONVENTION


def test_runtimes_live_outside_report_json(tmp_path):
    report = ExperimentReport(preset="chirp-comparison", seed=0,
                              records=[MethodRecord(method=VBT, samples=169, nmse_db=-50.0, runtime_s=1.25)])
    emit_report(report, tmp_path)
    payload = json.loads((tmp_path / "report.json").read_text())
    assert "runtime_s" not in payload["records"][0]
    assert json.loads((tmp_path / "timing.json").read_text()) == {VBT: 1.25}


def test_plots_are_written_reproducibly(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    for outdir in (first, second):
        emit_report(ExperimentReport(preset="demo", seed=0, plots=_plots()), outdir)
    for name in ("demo-line.csv", "demo-line.svg", "demo-heatmap.csv", "demo-heatmap.svg", "report.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert (first / "demo-line.csv").read_text().splitlines()[0] == "series,x,y"
    assert (first / "demo-heatmap.csv").read_text().splitlines()[0] == "y,x,value"


def test_json_only_skips_plot_files(tmp_path):
    manifest = emit_report(ExperimentReport(preset="demo", seed=0, plots=_plots()), tmp_path, json_only=True)
    assert manifest == ["report.json", "timing.json"]
    assert not list(tmp_path.glob("*.svg"))


def test_unwritable_outdir_raises_report_io_error(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    with pytest.raises(ReportIOError):
        emit_report(ExperimentReport(preset="demo", seed=0), blocker)


def test_unknown_preset_is_rejected():
    with pytest.raises(ParameterError):
        run_experiment("no-such-preset")


def test_trial_seeds_are_deterministic_and_distinct():
    seeds = trial_seeds(7, 30)
    assert seeds == trial_seeds(7, 30)
    assert len(set(seeds)) == 30
    assert seeds != trial_seeds(8, 30)
    assert trial_seeds(7, 5) == seeds[:5]


def test_parallel_trials_match_serial_trials():
    jobs = [(i, float(i) - 3.5) for i in range(12)]
    serial = run_trials(square_task, jobs, workers=1)
    parallel = run_trials(square_task, jobs, workers=3)
    assert serial == parallel
    assert [r["index"] for r in parallel] == list(range(12))


def test_settings_precedence(monkeypatch, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"grid": {"oversample": 32}, "output": {"outdir": "elsewhere"}}))
    monkeypatch.setenv("VBT_SEED", "11")
    monkeypatch.setenv("VBT_OUTDIR", "from-env")
    settings = load_settings(str(config))
    assert settings.grid_oversample == 32
    assert settings.seed == 11
    assert settings.outdir == "from-env"
    assert load_settings(str(config), seed=3, outdir=None).seed == 3


def test_invalid_settings_raise_parameter_error(monkeypatch, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ParameterError):
        load_settings(str(broken))
    monkeypatch.setenv("VBT_GRID_OVERSAMPLE", "4")
    with pytest.raises(ParameterError):
        load_settings()


def test_cli_rejects_unknown_preset():
    with pytest.raises(SystemExit) as excinfo:
        main(["experiment", "no-such-preset"])
    assert excinfo.value.code == EXIT_USAGE


def test_cli_ingest_without_input_is_a_usage_error(tmp_path):
    assert main(["--outdir", str(tmp_path), "experiment", "ingest-csv"]) == EXIT_USAGE


def test_cli_generate_writes_signal_csv(tmp_path):
    assert main(["--outdir", str(tmp_path), "--json-only", "generate", "--signal", "tone"]) == EXIT_OK
    path = tmp_path / "tone.csv"
    assert path.exists()
    assert path.read_text().startswith("# omega0=")


def test_cli_missing_input_file_is_an_io_error(tmp_path):
    code = main(["--outdir", str(tmp_path), "generate", "--signal", "csv", "--input",
                 str(tmp_path / "absent.csv"), "--fs", "1000"])
    assert code == EXIT_IO


def test_cli_reports_unexpected_errors_as_usage_failures(monkeypatch, tmp_path, capsys):
    def broken(args, settings):
        raise RuntimeError("boom")

    monkeypatch.setitem(COMMANDS, "generate", broken)
    assert main(["--outdir", str(tmp_path), "generate", "--signal", "tone"]) == EXIT_USAGE
    assert "boom" in capsys.readouterr().err


def test_cli_verify_passes_on_chirp(tmp_path, capsys):
    code = main(["--outdir", str(tmp_path), "--json-only", "verify", "--signal", "chirp"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["scheme"] == "vbt-shifted"
    assert all(check["passed"] for check in payload["checks"].values())


def test_cli_encode_then_reconstruct(tmp_path, capsys):
    outdir = str(tmp_path)
    assert main(["--outdir", outdir, "--json-only", "encode", "--signal", "sos"]) == EXIT_OK
    encoding = json.loads(capsys.readouterr().out)["file"]
    assert main(["--outdir", outdir, "--json-only", "reconstruct", "--encoding", encoding,
                 "--signal", "sos"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["nmse_db"] <= -40.0
    assert (tmp_path / "sos-0-shifted-reconstruction.csv").exists()
    assert (tmp_path / "sos-0-shifted-trace.csv").exists()


@pytest.mark.slow
def test_chirp_comparison_acceptance(tmp_path, settings):
    report = run_experiment("chirp-comparison", seed=0, outdir=tmp_path / "a", settings=settings)
    assert 756 <= report.record(CONVENTIONAL).samples <= 836
    assert report.record(UNIFORM).samples == 180
    assert 152 <= report.record(VBT).samples <= 186
    for record in report.records:
        assert record.nmse_db <= -45.0
    assert len([name for name in report.manifest if name.endswith(".svg")]) == 4

    run_experiment("chirp-comparison", seed=0, outdir=tmp_path / "b", settings=settings)
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


@pytest.mark.slow
def test_sos_table_acceptance():
    settings = load_settings(workers=4)
    report = run_experiment("sos-table", {"trials": 30}, seed=7, settings=settings)
    stats = {s.method: s for s in report.trials}
    assert 80.0 <= stats[VBT].samples_mean <= 115.0
    assert stats[UNIFORM].samples_mean == 90.0
    assert stats[CONVENTIONAL].samples_mean >= 6.0 * stats[VBT].samples_mean
    assert stats[VBT].nmse_mean <= -45.0
    assert report.checks["sub_nyquist_trials_below_minus_40db"] >= 25


@pytest.mark.slow
def test_shift_effect_acceptance(settings):
    report = run_experiment("shift-effect", seed=0, settings=settings)
    assert report.checks["ratio_at_least_4"]
    assert report.record("vbt-unshifted").samples >= 4 * report.record("vbt-shifted").samples


@pytest.mark.slow
def test_adaptive_switch_acceptance(settings):
    report = run_experiment("adaptive-switch", seed=0, settings=settings)
    adaptive = report.record("vbt-adaptive")
    assert report.checks["adaptive_not_above_fixed"]
    assert 115 <= adaptive.samples <= 157
    assert adaptive.nmse_db <= -35.0


@pytest.mark.slow
def test_iteration_trace_decays(settings):
    report = run_experiment("iteration-trace", seed=7, settings=settings)
    assert report.checks["monotone_after_3"][VBT]
    assert report.checks["geometric_decay"]


@pytest.mark.slow
def test_ingest_surrogate_acceptance(tmp_path, settings):
    # ECG-like record: a negative baseline ramped in and out smoothly with two QRS complexes
    fs = 2000.0
    t = np.arange(2000) / fs
    baseline = -0.85 * 0.5 * (special.erf((t - 0.06) / 0.02) - special.erf((t - 0.94) / 0.02))
    values = baseline.copy()
    for beat in (0.3, 0.7):
        values += 1.85 * np.exp(-((t - beat) / 0.008) ** 2)
        values -= 0.1 * (np.exp(-((t - beat + 0.02) / 0.008) ** 2) + np.exp(-((t - beat - 0.02) / 0.008) ** 2))
    path = tmp_path / "surrogate.csv"
    path.write_text("time,value\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, values)))

    report = run_experiment("ingest-csv", {"input": str(path), "fs": fs, "profile": "ecg"}, seed=0,
                            outdir=tmp_path / "out", settings=settings)
    record = report.record(VBT)
    assert report.checks["nyquist_count"] == 200
    assert record.samples < 200
    assert record.nmse_db <= -25.0
    assert report.config["overrides"]["input"] == "surrogate.csv"
