import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from src.analysis.checks import (bernstein_check, check_local_condition, estimate_contraction,
                                 geometric_decay_check, trace_is_monotone, wirtinger_check)
from src.analysis.profiles import firing_rate_profile, interval_bounds
from src.config import Settings, load_settings
from src.encoder.params import AdaptiveParams, ConventionalParams, Encoding, VbtMode, VbtParams
from src.encoder.tem import encode_adaptive, encode_conventional, encode_vbt, uniform_encoding
from src.errors import EncodingError, ParameterError, ReconstructionError
from src.harness.report import ExperimentReport, MethodRecord, PlotData, Series, TrialStats, emit_report
from src.reconstruction.iterative import ReconstructionConfig, ReconstructionResult, iterative_reconstruct
from src.reconstruction.operator import nmse, output_grid, sinc_interpolate_uniform, uniform_samples
from src.signals.generators import make_chirp, make_four_region, make_sos, make_tone
from src.signals.ingest import ingest_csv
from src.signals.model import BandlimitedSignal

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

PRESETS = (
    "shift-effect", "four-region-demo", "chirp-comparison", "sos-comparison", "sos-table",
    "iteration-trace", "param-heatmap", "adaptive-switch", "ingest-csv",
)
SIGNALS = ("chirp", "sos", "four-region", "tone", "csv")
INGEST_PROFILES = ("ecg", "guided-wave")

CONVENTIONAL = "c-if-tem"
UNIFORM = "uniform"
VBT = "vbt-if-tem"


def _build(model: type, **kwargs) -> BaseModel:
    """Validate a parameter model, reporting failures as ParameterError."""
    try:
        return model(**kwargs)
    except ValidationError as e:
        raise ParameterError(f"invalid {model.__name__}: {e}") from e


def conventional_params(block: Dict[str, Any]) -> ConventionalParams:
    return _build(ConventionalParams, bias=block["bias"], threshold=block["delta"])


def vbt_params(block: Dict[str, Any], **overrides: Any) -> VbtParams:
    values = {k: block[k] for k in ("alpha", "beta", "shift", "c") if k in block}
    values.update({k: block[k] for k in ("gamma1", "gamma2") if k in block})
    values.update({k: v for k, v in overrides.items() if v is not None})
    return _build(VbtParams, **values)


def adaptive_params(block: Dict[str, Any]) -> AdaptiveParams:
    return AdaptiveParams.from_pairs(
        alpha_high=block["alpha_high"], beta_high=block["beta_high"],
        alpha_low=block["alpha_low"], beta_low=block["beta_low"],
        delta_switch=block["delta_switch"], shift=block["shift"], c=block.get("c", 1.0),
    )


def trial_seeds(master: int, count: int) -> List[int]:
    """Per-trial seeds mixed from the master seed and the trial index."""
    return [int(np.random.SeedSequence([master, i]).generate_state(1)[0]) for i in range(count)]


def make_named_signal(name: str, seed: int = 0, input_path: Optional[Union[str, Path]] = None,
                      fs: Optional[float] = None, band_hz: Optional[float] = None) -> BandlimitedSignal:
    """
    Build one of the test signals by name.

    Args:
        name: 'chirp', 'sos', 'four-region', 'tone' or 'csv'
        seed: Coefficient seed of the SoS signal
        input_path: CSV recording for 'csv'
        fs: Sampling rate of the recording in Hz
        band_hz: Declared band of the recording in Hz

    Returns:
        BandlimitedSignal
    """
    if name == "chirp":
        return make_chirp()
    if name == "sos":
        return make_sos(seed)
    if name == "four-region":
        return make_four_region()
    if name == "tone":
        return make_tone(0.9, 2.0 * np.pi * 20.0, omega0=2.0 * np.pi * 50.0)
    if name == "csv":
        if input_path is None:
            raise ParameterError("signal 'csv' requires --input")
        return ingest_csv(input_path, fs=fs, band_hz=band_hz)
    raise ParameterError(f"unknown signal '{name}', expected one of {', '.join(SIGNALS)}")


def reconstruction_config(encoding: Encoding, settings: Settings) -> ReconstructionConfig:
    try:
        return ReconstructionConfig.for_encoding(
            encoding, oversample=settings.reconstruction_oversample, max_iters=settings.max_iters,
            stop_delta_db=settings.stop_delta_db, rise_tolerance_db=settings.rise_tolerance_db,
            guard_band=settings.guard_band,
            divergence_factor=settings.divergence_factor, divergence_window=settings.divergence_window,
        )
    except ValidationError as e:
        raise ParameterError(f"invalid reconstruction settings: {e}") from e


def run_method(method: str, signal: BandlimitedSignal, settings: Settings,
               encode: Callable[[], Encoding]) -> Tuple[MethodRecord, Encoding, ReconstructionResult]:
    """Encode, reconstruct against the ground truth and summarize one method."""
    started = time.perf_counter()
    encoding = encode()
    result = iterative_reconstruct(encoding, reconstruction_config(encoding, settings), ground_truth=signal)
    record = MethodRecord(
        method=method, samples=encoding.sample_count, nmse_db=result.final_nmse,
        iterations=result.iterations_run, runtime_s=time.perf_counter() - started,
        details={"scheme": encoding.metadata.scheme, "stop_reason": result.stop_reason,
                 "empirical_contraction": result.empirical_contraction},
    )
    return record, encoding, result


def run_uniform(signal: BandlimitedSignal, settings: Settings) -> Tuple[MethodRecord, np.ndarray, np.ndarray]:
    """Nyquist-rate uniform sampling followed by classical sinc interpolation."""
    started = time.perf_counter()
    fs = signal.omega0 / np.pi
    times, values = uniform_samples(signal, fs)
    grid = output_grid(signal.window, signal.omega0, settings.reconstruction_oversample)
    f_hat = sinc_interpolate_uniform(times, values, fs, grid)
    error = nmse(signal.value(grid), f_hat, settings.guard_band)
    record = MethodRecord(method=UNIFORM, samples=int(times.size), nmse_db=error, iterations=0,
                          runtime_s=time.perf_counter() - started, details={"fs": fs})
    return record, grid, f_hat


def _encoder_kwargs(settings: Settings) -> Dict[str, Any]:
    return {"oversample": settings.grid_oversample, "max_firings": settings.max_firings,
            "self_check": settings.self_check}


def _signal_series(signal: BandlimitedSignal, grid: np.ndarray, label: str = "f(t)") -> Series:
    return Series(label=label, x=grid.tolist(), y=signal.value(grid).tolist())


def _stem_series(signal: BandlimitedSignal, encoding: Encoding, label: str) -> Series:
    times = encoding.times
    return Series(label=label, x=times.tolist(), y=signal.value(times).tolist(), style="stem")


def _method_plot(name: str, title: str, signal: BandlimitedSignal, encoding: Encoding,
                 result: ReconstructionResult) -> PlotData:
    return PlotData(name=name, title=title, series=[
        _signal_series(signal, result.t),
        _stem_series(signal, encoding, "firings"),
        Series(label="reconstruction", x=result.t.tolist(), y=result.f_hat.tolist()),
    ])


def _rate_plot(name: str, title: str, encoding: Encoding) -> PlotData:
    profile = firing_rate_profile(encoding)
    midpoints = profile.midpoints
    return PlotData(name=name, title=title, ylabel="firing rate [Hz]", series=[
        Series(label="1/T_n", x=midpoints, y=profile.rates, style="step"),
        Series(label="Nyquist rate", x=[midpoints[0], midpoints[-1]],
               y=[profile.nyquist_rate, profile.nyquist_rate]),
    ])


def _stats(method: str, samples: List[float], errors: List[Optional[float]], failures: int = 0) -> TrialStats:
    finite = [e for e in errors if e is not None and np.isfinite(e)]
    return TrialStats(
        method=method, trials=len(samples),
        samples_mean=float(np.mean(samples)) if samples else 0.0,
        samples_std=float(np.std(samples)) if samples else 0.0,
        nmse_mean=float(np.mean(finite)) if finite else None,
        nmse_std=float(np.std(finite)) if finite else None,
        failures=failures,
    )


def _comparison(signal: BandlimitedSignal, block: Dict[str, Any], settings: Settings):
    """Run C-IF-TEM, uniform and shifted VBT on one signal."""
    kwargs = _encoder_kwargs(settings)
    conv = run_method(CONVENTIONAL, signal, settings,
                      lambda: encode_conventional(signal, conventional_params(block), **kwargs))
    uniform = run_uniform(signal, settings)
    vbt = run_method(VBT, signal, settings,
                     lambda: encode_vbt(signal, vbt_params(block), VbtMode.SHIFTED, **kwargs))
    return conv, uniform, vbt


def _comparison_plots(prefix: str, signal: BandlimitedSignal, conv, uniform, vbt) -> List[PlotData]:
    uniform_record, grid, uniform_hat = uniform
    times, values = uniform_samples(signal)
    plots = [
        _method_plot(f"{prefix}-{CONVENTIONAL}", f"{signal.name}: C-IF-TEM ({conv[0].samples} firings)",
                     signal, conv[1], conv[2]),
        PlotData(name=f"{prefix}-{UNIFORM}", title=f"{signal.name}: uniform ({uniform_record.samples} samples)",
                 series=[_signal_series(signal, grid),
                         Series(label="samples", x=times.tolist(), y=values.tolist(), style="stem"),
                         Series(label="reconstruction", x=grid.tolist(), y=uniform_hat.tolist())]),
        _method_plot(f"{prefix}-{VBT}", f"{signal.name}: VBT-IF-TEM ({vbt[0].samples} firings)",
                     signal, vbt[1], vbt[2]),
    ]
    plots.append(PlotData(name=f"{prefix}-overlay", title=f"{signal.name}: reconstructions", series=[
        _signal_series(signal, grid),
        Series(label=CONVENTIONAL, x=conv[2].t.tolist(), y=conv[2].f_hat.tolist()),
        Series(label=UNIFORM, x=grid.tolist(), y=uniform_hat.tolist()),
        Series(label=VBT, x=vbt[2].t.tolist(), y=vbt[2].f_hat.tolist()),
    ]))
    return plots


def _sub_nyquist(encoding: Encoding) -> bool:
    return bool(np.any(encoding.intervals > np.pi / encoding.metadata.omega0))


def sos_trial(index: int, seed: int, block: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    """One SoS comparison trial; returns plain values so it can cross process boundaries."""
    signal = make_sos(seed)
    conv, uniform, vbt = _comparison(signal, block, settings)
    return {
        "index": index, "seed": seed,
        "samples": {CONVENTIONAL: conv[0].samples, UNIFORM: uniform[0].samples, VBT: vbt[0].samples},
        "nmse": {CONVENTIONAL: conv[0].nmse_db, UNIFORM: uniform[0].nmse_db, VBT: vbt[0].nmse_db},
        "sub_nyquist": _sub_nyquist(vbt[1]),
    }


def heatmap_trial(index: int, seed: int, alpha: float, beta: float, block: Dict[str, Any],
                  settings: Settings) -> Dict[str, Any]:
    """One (alpha, beta) lattice trial on a fresh SoS signal."""
    signal = make_sos(seed)
    try:
        record, _, _ = run_method(
            VBT, signal, settings,
            lambda: encode_vbt(signal, vbt_params(block, alpha=alpha, beta=beta), VbtMode.SHIFTED,
                               **_encoder_kwargs(settings)),
        )
    except (EncodingError, ReconstructionError) as e:
        logger.warning(f"Heatmap trial alpha={alpha} beta={beta} seed={seed} failed: {str(e)}")
        return {"index": index, "samples": None, "nmse": None}
    return {"index": index, "samples": record.samples, "nmse": record.nmse_db}


def run_trials(task: Callable[..., Dict[str, Any]], jobs: List[Tuple], workers: int = 1) -> List[Dict[str, Any]]:
    """
    Run independent trials serially or in a process pool.

    Args:
        task: Picklable module-level function whose first argument is the trial index
        jobs: Argument tuples, one per trial
        workers: Pool size; 1 runs in-process

    Returns:
        Trial outputs sorted by trial index
    """
    results: List[Dict[str, Any]] = []
    if workers <= 1 or len(jobs) <= 1:
        results = [task(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(task, *job) for job in jobs]
            for future in as_completed(futures):
                results.append(future.result())
    return sorted(results, key=lambda r: r["index"])


def _shift_effect(report: ExperimentReport, settings: Settings, overrides: Dict[str, Any]) -> None:
    signal = make_chirp()
    block = {**settings.preset("chirp"), **overrides}
    kwargs = _encoder_kwargs(settings)

    started = time.perf_counter()
    unshifted = encode_vbt(signal, vbt_params(block, shift=0.0), VbtMode.UNSHIFTED, **kwargs)
    unshifted_record = MethodRecord(method="vbt-unshifted", samples=unshifted.sample_count,
                                    runtime_s=time.perf_counter() - started)
    shifted_record, shifted, result = run_method("vbt-shifted", signal, settings,
                                                 lambda: encode_vbt(signal, vbt_params(block), VbtMode.SHIFTED,
                                                                    **kwargs))
    report.records.extend([unshifted_record, shifted_record])
    ratio = unshifted.sample_count / max(shifted.sample_count, 1)
    report.checks["firing_ratio"] = ratio
    report.checks["ratio_at_least_4"] = ratio >= 4.0
    report.checks["unshifted_floored_intervals"] = len(unshifted.metadata.floored_intervals)

    grid = result.t
    report.plots.extend([
        PlotData(name="shift-effect-unshifted", title=f"unshifted: {unshifted.sample_count} firings",
                 series=[_signal_series(signal, grid), _stem_series(signal, unshifted, "firings")]),
        PlotData(name="shift-effect-shifted", title=f"shifted s={shifted.shift:g}: {shifted.sample_count} firings",
                 series=[_signal_series(signal, grid), _stem_series(signal, shifted, "firings")]),
    ])


def _four_region(report: ExperimentReport, settings: Settings, overrides: Dict[str, Any]) -> None:
    signal = make_four_region()
    block = {**settings.preset("four_region"), **overrides}
    params = vbt_params(block)
    record, encoding, result = run_method(
        VBT, signal, settings, lambda: encode_vbt(signal, params, VbtMode.SHIFTED, **_encoder_kwargs(settings)))
    report.records.extend([record])

    profile = firing_rate_profile(encoding)
    t_low, t_high = interval_bounds(params, signal.omega0)
    report.checks.update({
        "sub_nyquist_fraction": profile.sub_nyquist_fraction,
        "low_variation_bound_s": t_low,
        "high_variation_bound_s": t_high,
        "max_interval_s": float(encoding.intervals.max()),
    })
    report.plots.extend([
        _method_plot("four-region-signal", f"four-region demo ({encoding.sample_count} firings)",
                     signal, encoding, result),
        _rate_plot("four-region-rate", "firing-rate profile", encoding),
    ])


def _chirp_comparison(report: ExperimentReport, settings: Settings, overrides: Dict[str, Any]) -> None:
    signal = make_chirp()
    block = {**settings.preset("chirp"), **overrides}
    conv, uniform, vbt = _comparison(signal, block, settings)
    report.records.extend([conv[0], uniform[0], vbt[0]])
    report.plots.extend(_comparison_plots("chirp", signal, conv, uniform, vbt))


def _sos_comparison(report: ExperimentReport, settings: Settings, overrides: Dict[str, Any]) -> None:
    signal = make_sos(report.seed)
    block = {**settings.preset("sos"), **overrides}
    conv, uniform, vbt = _comparison(signal, block, settings)
    report.records.extend([conv[0], uniform[0], vbt[0]])
    report.checks["sub_nyquist_interval"] = _sub_nyquist(vbt[1])
    report.plots.extend(_comparison_plots("sos", signal, conv, uniform, vbt))
    report.plots.append(_rate_plot("sos-rate", "VBT firing-rate profile", vbt[1]))


def _sos_table(report: ExperimentReport, settings: Settings, overrides: Dict[str, Any]) -> None:
    block = {**settings.preset("sos"), **overrides}
    trials = int(block.pop("trials", 100))
    if trials < 1:
        raise ParameterError(f"trials must be positive, got {trials}")
    seeds = trial_seeds(report.seed, trials)
    outputs = run_trials(sos_trial, [(i, s, block, settings) for i, s in enumerate(seeds)], settings.workers)

    for method in (CONVENTIONAL, UNIFORM, VBT):
        report.trials.append(_stats(method, [o["samples"][method] for o in outputs],
                                    [o["nmse"][method] for o in outputs]))
    sub_nyquist_good = sum(1 for o in outputs if o["sub_nyquist"] and (o["nmse"][VBT] or 0.0) <= -40.0)
    report.checks.update({
        "trials": trials,
        "trial_seeds": seeds,
        "sub_nyquist_trials": sum(1 for o in outputs if o["sub_nyquist"]),
        "sub_nyquist_trials_below_minus_40db": sub_nyquist_good,
    })
    report.matrices["per_trial"] = {
        "samples": {m: [o["samples"][m] for o in outputs] for m in (CONVENTIONAL, UNIFORM, VBT)},
        "nmse_db": {m: [o["nmse"][m] for o in outputs] for m in (CONVENTIONAL, UNIFORM, VBT)},
    }


def _iteration_trace(report: ExperimentReport, settings: Settings, overrides: Dict[str, Any]) -> None:
    signal = make_sos(report.seed)
    block = {**settings.preset("sos"), **overrides}
    kwargs = _encoder_kwargs(settings)
    params = vbt_params(block)
    conv_record, _, conv_result = run_method(
        CONVENTIONAL, signal, settings, lambda: encode_conventional(signal, conventional_params(block), **kwargs))
    vbt_record, encoding, vbt_result = run_method(
        VBT, signal, settings, lambda: encode_vbt(signal, params, VbtMode.SHIFTED, **kwargs))
    report.records.extend([conv_record, vbt_record])

    decay = geometric_decay_check(vbt_result.nmse_trace, params.alpha)
    report.checks.update({
        "monotone_after_3": {CONVENTIONAL: trace_is_monotone(conv_result.nmse_trace),
                             VBT: trace_is_monotone(vbt_result.nmse_trace)},
        "geometric_decay": decay.passed,
        "stop_reason": {CONVENTIONAL: conv_result.stop_reason, VBT: vbt_result.stop_reason},
    })
    report.matrices["nmse_trace"] = {CONVENTIONAL: conv_result.nmse_trace, VBT: vbt_result.nmse_trace}
    report.plots.append(PlotData(
        name="iteration-trace", title=f"NMSE versus iteration ({signal.name})", xlabel="iteration",
        ylabel="NMSE [dB]", series=[
            Series(label=CONVENTIONAL, x=list(range(len(conv_result.nmse_trace))), y=conv_result.nmse_trace),
            Series(label=VBT, x=list(range(len(vbt_result.nmse_trace))), y=vbt_result.nmse_trace),
            Series(label="alpha^(l+1) envelope", x=list(range(len(decay.envelope))), y=decay.envelope),
        ]))


def _param_heatmap(report: ExperimentReport, settings: Settings, overrides: Dict[str, Any]) -> None:
    lattice = {**settings.preset("heatmap"), **overrides}
    block = {**settings.preset("sos"), **{k: v for k, v in overrides.items() if k in ("shift", "c")}}
    alphas = [float(a) for a in lattice.get("alphas", [0.1, 0.3, 0.5, 0.7, 0.9])]
    betas = [float(b) for b in lattice.get("betas", [500, 1000, 2400, 5000, 10000])]
    trials = int(lattice.get("trials", 20))
    if trials < 1:
        raise ParameterError(f"trials must be positive, got {trials}")
    seeds = trial_seeds(report.seed, trials)

    jobs = []
    for i, alpha in enumerate(alphas):
        for j, beta in enumerate(betas):
            for k, seed in enumerate(seeds):
                jobs.append(((i * len(betas) + j) * trials + k, seed, alpha, beta, block, settings))
    outputs = run_trials(heatmap_trial, jobs, settings.workers)

    nmse_matrix, samples_matrix, failures = [], [], []
    for i in range(len(alphas)):
        nmse_row, samples_row, failure_row = [], [], []
        for j in range(len(betas)):
            cell = outputs[(i * len(betas) + j) * trials:(i * len(betas) + j + 1) * trials]
            ok = [o for o in cell if o["samples"] is not None]
            errors = [o["nmse"] for o in ok if o["nmse"] is not None and np.isfinite(o["nmse"])]
            nmse_row.append(float(np.mean(errors)) if errors else float("nan"))
            samples_row.append(float(np.mean([o["samples"] for o in ok])) if ok else float("nan"))
            failure_row.append(len(cell) - len(ok))
        nmse_matrix.append(nmse_row)
        samples_matrix.append(samples_row)
        failures.append(failure_row)

    report.matrices.update({"alphas": alphas, "betas": betas, "trials": trials, "mean_nmse_db": nmse_matrix,
                            "mean_samples": samples_matrix, "failures": failures})
    report.plots.extend([
        PlotData(name="heatmap-nmse", title="mean NMSE [dB]", xlabel="beta", ylabel="alpha",
                 matrix=nmse_matrix, xticks=betas, yticks=alphas),
        PlotData(name="heatmap-samples", title="mean number of samples", xlabel="beta", ylabel="alpha",
                 matrix=samples_matrix, xticks=betas, yticks=alphas),
    ])


def _adaptive_switch(report: ExperimentReport, settings: Settings, overrides: Dict[str, Any]) -> None:
    signal = make_chirp()
    block = {**settings.preset("adaptive"), **overrides}
    fixed_block = settings.preset("chirp")
    kwargs = _encoder_kwargs(settings)

    fixed_record, _, _ = run_method("vbt-fixed", signal, settings,
                                    lambda: encode_vbt(signal, vbt_params(fixed_block), VbtMode.SHIFTED, **kwargs))
    adaptive_record, encoding, result = run_method("vbt-adaptive", signal, settings,
                                                   lambda: encode_adaptive(signal, adaptive_params(block), **kwargs))
    report.records.extend([fixed_record, adaptive_record])

    regimes = [r.value for r in encoding.regimes]
    report.checks.update({
        "adaptive_not_above_fixed": adaptive_record.samples <= fixed_record.samples,
        "high_regime_intervals": regimes.count("high"),
        "low_regime_intervals": regimes.count("low"),
    })
    report.plots.extend([
        _method_plot("adaptive-signal", f"adaptive switching ({encoding.sample_count} firings)",
                     signal, encoding, result),
        _rate_plot("adaptive-rate", "adaptive firing-rate profile", encoding),
    ])


def _ingest(report: ExperimentReport, settings: Settings, overrides: Dict[str, Any]) -> None:
    input_path = overrides.pop("input", None)
    fs = overrides.pop("fs", None)
    if input_path is None or fs is None:
        raise ParameterError("preset 'ingest-csv' requires --input and --fs")
    profile_name = overrides.pop("profile", None) or "ecg"
    profiles = settings.preset("ingest")
    if profile_name not in profiles:
        raise ParameterError(f"unknown ingest profile '{profile_name}', expected one of {', '.join(profiles)}")
    block = {**profiles[profile_name], **overrides}
    band_hz = block.get("band_hz")

    signal = ingest_csv(input_path, fs=float(fs), band_hz=band_hz)
    record, encoding, result = run_method(
        VBT, signal, settings,
        lambda: encode_vbt(signal, vbt_params(block), VbtMode.SHIFTED, **_encoder_kwargs(settings)))
    report.records.extend([record])

    nyquist_count = int(np.floor(2.0 * (signal.omega0 / (2.0 * np.pi)) * signal.duration + 1e-9))
    report.checks.update({
        "profile": profile_name,
        "input": Path(input_path).name,
        "nyquist_count": nyquist_count,
        "below_nyquist_count": encoding.sample_count < nyquist_count,
    })
    report.plots.extend([
        _method_plot("ingest-signal", f"{signal.name} ({encoding.sample_count} firings)", signal, encoding, result),
        _rate_plot("ingest-rate", "firing-rate profile", encoding),
    ])


_RUNNERS: Dict[str, Callable[[ExperimentReport, Settings, Dict[str, Any]], None]] = {
    "shift-effect": _shift_effect,
    "four-region-demo": _four_region,
    "chirp-comparison": _chirp_comparison,
    "sos-comparison": _sos_comparison,
    "sos-table": _sos_table,
    "iteration-trace": _iteration_trace,
    "param-heatmap": _param_heatmap,
    "adaptive-switch": _adaptive_switch,
    "ingest-csv": _ingest,
}


def _config_echo(settings: Settings, overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Settings that influence the numbers; output location and worker count are left out."""
    echo = settings.model_dump(exclude={"outdir", "json_only", "workers"})
    echo["overrides"] = {k: (Path(v).name if k == "input" else v) for k, v in overrides.items() if v is not None}
    return echo


def run_experiment(preset: str, overrides: Optional[Dict[str, Any]] = None, seed: Optional[int] = None,
                   outdir: Optional[Union[str, Path]] = None, settings: Optional[Settings] = None) -> ExperimentReport:
    """
    Run one experiment preset end to end and emit its report.

    Args:
        preset: One of PRESETS
        overrides: Preset parameter overrides (e.g. trials, alpha, input, fs)
        seed: Master seed (defaults to settings.seed)
        outdir: Output directory; nothing is written when None
        settings: Runtime settings (defaults to load_settings())

    Returns:
        ExperimentReport with its manifest filled when written
    """
    if preset not in _RUNNERS:
        raise ParameterError(f"unknown preset '{preset}', expected one of {', '.join(PRESETS)}")
    settings = settings or load_settings()
    seed = settings.seed if seed is None else seed
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    report = ExperimentReport(preset=preset, seed=seed, config=_config_echo(settings, overrides))
    logger.info(f"Running preset '{preset}' with seed {seed}")
    started = time.perf_counter()
    _RUNNERS[preset](report, settings, dict(overrides))
    logger.info(f"Preset '{preset}' finished in {time.perf_counter() - started:.1f}s")

    if outdir is not None:
        emit_report(report, outdir, json_only=settings.json_only)
    return report


SCHEMES = ("conventional", "unshifted", "shifted", "regularized", "adaptive", "uniform")
_SIGNAL_PRESETS = {"chirp": "chirp", "sos": "sos", "four-region": "four_region", "tone": "sos"}


def encode_signal(signal: BandlimitedSignal, scheme: str, settings: Settings, signal_kind: str = "chirp",
                  profile: Optional[str] = None, **overrides: Any) -> Encoding:
    """
    Encode a signal with one of SCHEMES using preset defaults plus overrides.

    Missing preset keys fall back to the chirp preset; 'csv' signals take
    their defaults from the ingest profile.
    """
    if scheme not in SCHEMES:
        raise ParameterError(f"unknown scheme '{scheme}', expected one of {', '.join(SCHEMES)}")
    if signal_kind == "csv":
        profiles = settings.preset("ingest")
        specific = profiles.get(profile or "ecg", {})
    else:
        specific = settings.preset(_SIGNAL_PRESETS.get(signal_kind, "chirp"))
    block = {**settings.preset("chirp"), **specific, **{k: v for k, v in overrides.items() if v is not None}}
    kwargs = _encoder_kwargs(settings)

    if scheme == "conventional":
        return encode_conventional(signal, conventional_params(block), **kwargs)
    if scheme == "uniform":
        return uniform_encoding(signal, signal.nyquist_interval, oversample=settings.grid_oversample)
    if scheme == "adaptive":
        adaptive = {**settings.preset("adaptive"), **{k: v for k, v in overrides.items() if v is not None}}
        return encode_adaptive(signal, adaptive_params(adaptive), **kwargs)
    if scheme == "unshifted":
        return encode_vbt(signal, vbt_params(block, shift=0.0), VbtMode.UNSHIFTED, **kwargs)
    return encode_vbt(signal, vbt_params(block), VbtMode(scheme), **kwargs)


def verify_encoding(signal: BandlimitedSignal, encoding: Encoding,
                    settings: Optional[Settings] = None) -> Dict[str, Any]:
    """
    Run the theorem-backed checks on an encoding.

    Returns:
        Mapping of check name to {'passed': bool, ...details}
    """
    settings = settings or load_settings()
    results: Dict[str, Any] = {}
    local = check_local_condition(signal, encoding)
    results["local_condition"] = {"passed": all(local.local_pass), "pass_rate": local.pass_rate}
    results["interval_bound"] = {"passed": all(local.theorem_pass)}
    results["aggregate_condition"] = {"passed": local.aggregate_pass, "lhs": local.aggregate_lhs,
                                      "rhs": local.aggregate_rhs}
    wirtinger = wirtinger_check(signal, encoding)
    results["wirtinger"] = {"passed": all(wirtinger.passed),
                            "max_ratio": max(wirtinger.ratios) if wirtinger.ratios else 0.0}
    bernstein = bernstein_check(signal, settings.grid_oversample)
    results["bernstein"] = {"passed": bernstein.passed, "lhs": bernstein.derivative_energy, "rhs": bernstein.bound}

    alpha = encoding.alpha()
    if alpha is not None:
        contraction = estimate_contraction(signal, encoding, oversample=settings.reconstruction_oversample)
        results["contraction"] = {"passed": contraction <= alpha * 1.05, "value": contraction, "alpha": alpha}
        params = encoding.interval_params(0)
        if params is not None and encoding.metadata.scheme in ("vbt-shifted", "vbt-unshifted"):
            t_low, _ = interval_bounds(params, signal.omega0)
            results["low_variation_bound"] = {"passed": bool(np.all(encoding.intervals <= t_low * (1.0 + 1e-9))),
                                              "bound": t_low}
    return results
