import json
import logging
import re
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from src.encoder.params import Encoding, EncodingMetadata
from src.errors import IngestionError, ReportIOError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

COLUMNS = ["t_n", "y_n", "T_n", "E_n", "D_n", "regime", "threshold", "bias_integral"]
_HEADER = re.compile(r"^#\s*scheme=(\S+) params=(\S+) omega0=(\S+) shift=(\S+) t0=(\S+) meta=(.*)$")


def _compact(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def encoding_header(encoding: Encoding) -> str:
    meta = encoding.metadata
    return (f"# scheme={meta.scheme} params={_compact(meta.params)} omega0={meta.omega0!r} shift={meta.shift!r} "
            f"t0={meta.t0!r} meta={_compact(meta.model_dump(mode='json'))}")


def encoding_frame(encoding: Encoding) -> pd.DataFrame:
    """One row per firing; the interval columns of the last row are empty."""
    n = encoding.sample_count

    def pad(values):
        return list(values) + [np.nan]

    return pd.DataFrame({
        "t_n": encoding.firings,
        "y_n": pad(encoding.averages),
        "T_n": pad(encoding.intervals.tolist()),
        "E_n": pad(encoding.energies),
        "D_n": pad(encoding.derivative_energies),
        "regime": [r.value for r in encoding.regimes] + [""],
        "threshold": pad(encoding.thresholds),
        "bias_integral": pad(encoding.bias_integrals),
    }, columns=COLUMNS, index=range(n + 1))


def write_encoding_csv(encoding: Encoding, path: Union[str, Path]) -> Path:
    """Write an Encoding as CSV with a metadata header at 17 significant digits."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(encoding_header(encoding) + "\n")
            encoding_frame(encoding).to_csv(f, index=False, float_format="%.17g")
    except OSError as e:
        logger.error(f"Failed to write encoding to {path}: {str(e)}")
        raise ReportIOError(path, e) from e
    logger.info(f"Wrote encoding with {encoding.sample_count} firings to {path}")
    return path


def read_encoding_csv(path: Union[str, Path]) -> Encoding:
    """Read an Encoding written by write_encoding_csv."""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            header = f.readline().rstrip("\n")
        frame = pd.read_csv(path, skiprows=1, float_precision="round_trip", keep_default_na=False,
                            na_values=[""])
    except FileNotFoundError as e:
        raise IngestionError(f"encoding file not found: {path}") from e
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestionError(f"cannot parse encoding file {path}: {e}") from e

    match = _HEADER.match(header)
    if match is None:
        raise IngestionError("missing or malformed encoding header", row=1)
    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise IngestionError(f"encoding file lacks columns {missing}", row=2)

    metadata = EncodingMetadata(**json.loads(match.group(6)))
    body = frame.iloc[:-1]
    return Encoding(
        firings=frame["t_n"].astype(float).tolist(),
        averages=body["y_n"].astype(float).tolist(),
        energies=body["E_n"].astype(float).tolist(),
        derivative_energies=body["D_n"].astype(float).tolist(),
        thresholds=body["threshold"].astype(float).tolist(),
        bias_integrals=body["bias_integral"].astype(float).tolist(),
        regimes=body["regime"].astype(str).tolist(),
        metadata=metadata,
    )
