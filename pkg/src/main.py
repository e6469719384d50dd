#!/usr/bin/env python3
import sys
import logging
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional

# Allow running as `python src/main.py` from the repository root
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.config import Settings, load_settings
from src.encoder.io import read_encoding_csv, write_encoding_csv
from src.errors import IngestionError, ReportIOError, VbtError, VerificationError
from src.harness.experiments import (INGEST_PROFILES, PRESETS, SCHEMES, SIGNALS, encode_signal, make_named_signal,
                                     reconstruction_config, run_experiment, verify_encoding)
from src.harness.report import canonical_json
from src.reconstruction.iterative import iterative_reconstruct, write_reconstruction_csv, write_trace_csv
from src.signals.ingest import write_signal_csv

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFICATION = 2
EXIT_IO = 3


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        print(f"Error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _add_signal_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--signal", choices=SIGNALS, default="chirp", help="Test signal to use")
    parser.add_argument("--input", type=str, help="Two-column time,value CSV (for --signal csv)")
    parser.add_argument("--fs", type=float, help="Sampling rate of the CSV recording in Hz")
    parser.add_argument("--band-hz", type=float, help="Declared band of the CSV recording in Hz")
    parser.add_argument("--profile", choices=INGEST_PROFILES, help="Ingest parameter profile")


def _add_encoder_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scheme", choices=SCHEMES, default="shifted", help="Encoding scheme")
    parser.add_argument("--alpha", type=float, help="Contraction parameter in (0, 1)")
    parser.add_argument("--beta", type=float, help="Threshold energy weight")
    parser.add_argument("--shift", type=float, help="Constant shift s")
    parser.add_argument("--c", type=float, help="Amplitude bound c")
    parser.add_argument("--gamma1", type=float, help="Bias regularizer (regularized scheme)")
    parser.add_argument("--gamma2", type=float, help="Threshold regularizer (regularized scheme)")
    parser.add_argument("--bias", type=float, help="Constant bias b (conventional scheme)")
    parser.add_argument("--delta", type=float, help="Constant threshold (conventional scheme)")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(description="Adaptive non-uniform sampling with variable-bias variable-threshold "
                                   "integrate-and-fire time encoding")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--grid-oversample", type=int, help="Fine-grid points per Nyquist interval")
    parser.add_argument("--outdir", type=str, help="Output directory")
    parser.add_argument("--json-only", action="store_true", default=None, help="Print only JSON output")
    parser.add_argument("--workers", type=int, help="Worker processes for seeded trials")
    parser.add_argument("--config", type=str, help="Path to a JSON config file")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Logging level")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="Write a test signal as a time,value CSV")
    _add_signal_args(generate)

    encode = commands.add_parser("encode", help="Encode a signal and write the encoding CSV")
    _add_signal_args(encode)
    _add_encoder_args(encode)

    reconstruct = commands.add_parser("reconstruct", help="Reconstruct a signal from an encoding CSV")
    reconstruct.add_argument("--encoding", required=True, type=str, help="Encoding CSV")
    reconstruct.add_argument("--guard-band", type=float, help="Fraction excluded from NMSE at each end")
    reconstruct.add_argument("--max-iters", type=int, help="Iteration cap")
    _add_signal_args(reconstruct)
    reconstruct.add_argument("--no-ground-truth", action="store_true",
                             help="Reconstruct without the source signal (residual trace only)")

    verify = commands.add_parser("verify", help="Encode a signal and run the theorem checks")
    _add_signal_args(verify)
    _add_encoder_args(verify)

    experiment = commands.add_parser("experiment", help="Run an experiment preset")
    experiment.add_argument("preset", choices=PRESETS, help="Experiment preset")
    experiment.add_argument("--trials", type=int, help="Number of seeded trials")
    experiment.add_argument("--guard-band", type=float, help="Fraction excluded from NMSE at each end")
    experiment.add_argument("--input", type=str, help="Two-column time,value CSV (ingest-csv)")
    experiment.add_argument("--fs", type=float, help="Sampling rate of the CSV in Hz (ingest-csv)")
    experiment.add_argument("--band-hz", type=float, help="Declared band in Hz (ingest-csv)")
    experiment.add_argument("--profile", choices=INGEST_PROFILES, help="Ingest parameter profile")
    experiment.add_argument("--alpha", type=float, help="Override alpha")
    experiment.add_argument("--beta", type=float, help="Override beta")
    experiment.add_argument("--shift", type=float, help="Override shift s")
    return parser


def _encoder_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: getattr(args, k) for k in ("alpha", "beta", "shift", "c", "gamma1", "gamma2", "bias", "delta")}


def _signal(args: argparse.Namespace, settings: Settings):
    return make_named_signal(args.signal, seed=settings.seed, input_path=args.input, fs=args.fs,
                             band_hz=args.band_hz)


def _emit(payload: Any) -> None:
    print(canonical_json(payload), end="")


def cmd_generate(args: argparse.Namespace, settings: Settings) -> int:
    signal = _signal(args, settings)
    path = write_signal_csv(signal, Path(settings.outdir) / f"{signal.name}.csv", settings.grid_oversample)
    _emit({"signal": signal.describe(), "file": str(path)})
    return EXIT_OK


def cmd_encode(args: argparse.Namespace, settings: Settings) -> int:
    signal = _signal(args, settings)
    encoding = encode_signal(signal, args.scheme, settings, signal_kind=args.signal, profile=args.profile,
                             **_encoder_overrides(args))
    path = write_encoding_csv(encoding, Path(settings.outdir) / f"{signal.name}-{args.scheme}-encoding.csv")
    _emit({"signal": signal.name, "scheme": encoding.metadata.scheme, "samples": encoding.sample_count,
           "warnings": encoding.metadata.warnings, "file": str(path)})
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace, settings: Settings) -> int:
    encoding = read_encoding_csv(args.encoding)
    ground_truth = None if args.no_ground_truth else _signal(args, settings)
    config = reconstruction_config(encoding, settings)
    result = iterative_reconstruct(encoding, config, ground_truth=ground_truth)
    stem = Path(args.encoding).stem.replace("-encoding", "")
    outdir = Path(settings.outdir)
    files = [
        write_reconstruction_csv(result, config, outdir / f"{stem}-reconstruction.csv"),
        write_trace_csv(result, config, outdir / f"{stem}-trace.csv"),
    ]
    _emit({"samples": encoding.sample_count, "iterations": result.iterations_run,
           "stop_reason": result.stop_reason, "nmse_db": result.final_nmse,
           "files": [str(f) for f in files]})
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    signal = _signal(args, settings)
    encoding = encode_signal(signal, args.scheme, settings, signal_kind=args.signal, profile=args.profile,
                             **_encoder_overrides(args))
    results = verify_encoding(signal, encoding, settings)
    _emit({"signal": signal.name, "scheme": encoding.metadata.scheme, "samples": encoding.sample_count,
           "checks": results})
    failed = [name for name, outcome in results.items() if not outcome["passed"]]
    if failed:
        raise VerificationError(f"failed checks: {', '.join(failed)}")
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace, settings: Settings) -> int:
    overrides = {"trials": args.trials, "input": args.input, "fs": args.fs, "band_hz": args.band_hz,
                 "profile": args.profile, "alpha": args.alpha, "beta": args.beta, "shift": args.shift}
    report = run_experiment(args.preset, overrides, seed=settings.seed, outdir=settings.outdir, settings=settings)
    if settings.json_only:
        _emit(report.to_payload())
    else:
        for record in report.records:
            nmse = "n/a" if record.nmse_db is None else f"{record.nmse_db:.2f} dB"
            print(f"{record.method:>16}  #S={record.samples:<6d} NMSE={nmse:<12} "
                  f"iterations={record.iterations:<4d} runtime={record.runtime_s:.2f}s")
        for stats in report.trials:
            nmse = "n/a" if stats.nmse_mean is None else f"{stats.nmse_mean:.2f} +/- {stats.nmse_std:.2f} dB"
            print(f"{stats.method:>16}  #S={stats.samples_mean:.1f} +/- {stats.samples_std:.1f}  NMSE={nmse}")
        print(f"Wrote {len(report.manifest)} files to {settings.outdir}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "encode": cmd_encode,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
    "experiment": cmd_experiment,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)
    level = "ERROR" if args.json_only else args.log_level
    logging.getLogger().setLevel(getattr(logging, level))

    try:
        settings = load_settings(
            args.config, seed=args.seed, grid_oversample=args.grid_oversample, outdir=args.outdir,
            json_only=args.json_only, workers=args.workers,
            guard_band=getattr(args, "guard_band", None), max_iters=getattr(args, "max_iters", None),
        )
        if settings.json_only:
            logging.getLogger().setLevel(logging.ERROR)
        return COMMANDS[args.command](args, settings)
    except VerificationError as e:
        logger.error(f"Verification failed: {str(e)}")
        print(f"Verification failed: {str(e)}", file=sys.stderr)
        return EXIT_VERIFICATION
    except (IngestionError, ReportIOError, OSError) as e:
        logger.error(f"I/O error: {str(e)}")
        print(f"Error: {str(e)}", file=sys.stderr)
        return EXIT_IO
    except VbtError as e:
        logger.error(f"Error: {str(e)}")
        print(f"Error: {str(e)}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f"Unexpected error in '{args.command}': {str(e)}")
        print(f"Error: {str(e)}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
