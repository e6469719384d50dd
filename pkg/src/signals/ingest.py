import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.errors import IngestionError, ParameterError, ReportIOError
from src.signals.generators import normalize
from src.signals.model import BandlimitedSignal, SincAtom, build_signal

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

MIN_SAMPLES = 8
SPACING_TOLERANCE = 1e-9


def from_uniform_samples(times: Sequence[float], values: Sequence[float], fs: float,
                         band_hz: Optional[float] = None, name: str = "ingested",
                         row_offset: int = 0) -> BandlimitedSignal:
    """
    Build a signal from uniformly spaced samples by sinc interpolation.

    One sinc atom with rate fs/2 is placed on every sample, so the result
    reproduces each sample exactly. The interpolant can overshoot between the
    samples, so the amplitude is normalized against the peak on the dense fine
    grid rather than the sample values.

    Args:
        times: Sample instants in seconds
        values: Sample values
        fs: Sampling rate in Hz
        band_hz: Known signal band in Hz; omega0 = 2 pi band_hz when given, pi fs otherwise
        name: Signal name
        row_offset: Row number of the first sample, used in error messages

    Returns:
        Normalized BandlimitedSignal spanning [t_0, t_last + 1/fs)
    """
    if not np.isfinite(fs) or fs <= 0:
        raise ParameterError(f"sampling rate must be positive, got {fs}")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise IngestionError("time and value columns differ in length")
    if times.size < MIN_SAMPLES:
        raise IngestionError(f"need at least {MIN_SAMPLES} samples, got {times.size}")

    bad = np.flatnonzero(~(np.isfinite(times) & np.isfinite(values)))
    if bad.size:
        raise IngestionError("non-finite sample", row=row_offset + int(bad[0]))

    period = 1.0 / fs
    spacing = np.diff(times)
    off = np.flatnonzero(np.abs(spacing - period) > SPACING_TOLERANCE * period)
    if off.size:
        row = row_offset + int(off[0]) + 1
        raise IngestionError(f"sample spacing {spacing[off[0]]:.12g}s differs from 1/fs = {period:.12g}s", row=row)

    if band_hz is not None:
        if band_hz <= 0 or band_hz > fs / 2.0:
            raise ParameterError(f"declared band {band_hz} Hz must lie in (0, fs/2 = {fs / 2.0}] Hz")
        omega0 = 2.0 * np.pi * band_hz
    else:
        omega0 = np.pi * fs

    atoms = [SincAtom(amplitude=float(v), center=float(t), rate=fs / 2.0) for t, v in zip(times, values)]
    signal = build_signal(
        atoms=atoms, omega0=omega0, window=(float(times[0]), float(times[-1]) + period),
        name=name, band_declared=band_hz is not None,
    )
    logger.info(f"Ingested {times.size} samples at {fs} Hz into '{name}' (omega0={omega0:.6g} rad/s)")
    return normalize(signal)


def ingest_csv(path: Union[str, Path], fs: Optional[float] = None, band_hz: Optional[float] = None,
               name: Optional[str] = None) -> BandlimitedSignal:
    """
    Read a two-column time,value CSV (with or without a header) and ingest it.

    Args:
        path: CSV file path
        fs: Sampling rate in Hz; inferred from the first spacing when omitted
        band_hz: Known signal band in Hz
        name: Signal name (defaults to the file stem)

    Returns:
        Normalized BandlimitedSignal
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None, comment="#", skip_blank_lines=True)
    except FileNotFoundError as e:
        raise IngestionError(f"input file not found: {path}") from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise IngestionError(f"cannot parse {path}: {e}") from e

    if frame.shape[1] < 2:
        raise IngestionError(f"{path} must have two columns (time, value)")
    frame = frame.iloc[:, :2]

    # A non-numeric first row is a header
    row_offset = 1
    first = pd.to_numeric(frame.iloc[0], errors="coerce")
    if first.isna().any():
        frame = frame.iloc[1:]
        row_offset = 2

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad_rows = numeric.index[numeric.isna().any(axis=1)]
    if len(bad_rows):
        position = int(numeric.index.get_loc(bad_rows[0]))
        raise IngestionError("unparseable value", row=row_offset + position)

    times = numeric.iloc[:, 0].to_numpy(dtype=float)
    values = numeric.iloc[:, 1].to_numpy(dtype=float)
    if fs is None:
        if times.size < 2 or times[1] <= times[0]:
            raise IngestionError("cannot infer the sampling rate from the first two rows", row=row_offset)
        fs = 1.0 / (times[1] - times[0])
        logger.info(f"Inferred sampling rate {fs:.6g} Hz from {path}")

    return from_uniform_samples(times, values, fs, band_hz=band_hz, name=name or path.stem,
                                row_offset=row_offset)


def write_signal_csv(signal: BandlimitedSignal, path: Union[str, Path], oversample: int = 64) -> Path:
    """
    Write the signal sampled on its fine grid as time,value rows.

    The first line is a comment carrying omega0, c and the window.
    """
    path = Path(path)
    grid = signal.fine_grid(oversample)
    frame = pd.DataFrame({"time": grid.t, "value": grid.f})
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(f"# omega0={signal.omega0!r} c={signal.amp_bound!r} "
                    f"window={signal.t_start!r},{signal.t_end!r}\n")
            frame.to_csv(f, index=False, float_format="%.17g")
    except OSError as e:
        raise ReportIOError(str(path), e) from e
    logger.info(f"Wrote signal '{signal.name}' ({len(frame)} rows) to {path}")
    return path


def read_signal_header(path: Union[str, Path]) -> Tuple[Optional[float], Optional[float]]:
    """Return (omega0, c) from a signal CSV comment header, or (None, None)."""
    with open(path, 'r', encoding='utf-8') as f:
        first = f.readline().strip()
    if not first.startswith("#"):
        return None, None
    fields = dict(part.split("=", 1) for part in first[1:].split() if "=" in part)
    omega0 = float(fields["omega0"]) if "omega0" in fields else None
    amp = float(fields["c"]) if "c" in fields else None
    return omega0, amp


def read_signal_csv(path: Union[str, Path], name: Optional[str] = None) -> BandlimitedSignal:
    """Load a signal CSV written by write_signal_csv, keeping its declared band."""
    omega0, _ = read_signal_header(path)
    band_hz = omega0 / (2.0 * np.pi) if omega0 is not None else None
    frame = pd.read_csv(path, comment="#")
    times = frame.iloc[:, 0].to_numpy(dtype=float)
    fs = 1.0 / (times[1] - times[0])
    # The fine grid ends on the window edge; drop it to keep a half-open record
    signal = from_uniform_samples(times[:-1], frame.iloc[:-1, 1].to_numpy(dtype=float), fs,
                                  band_hz=band_hz, name=name or Path(path).stem)
    return signal
