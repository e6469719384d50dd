import os
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from src.errors import ParameterError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "config.json"
ENV_PREFIX = "VBT_"


class Settings(BaseModel):
    """Runtime settings merged from config/config.json, the environment and CLI flags."""
    grid_oversample: int = Field(default=64, ge=8, description="Fine-grid points per Nyquist interval")
    reconstruction_oversample: int = Field(default=16, ge=8, description="Output-grid points per Nyquist interval")
    max_firings: int = Field(default=200000, gt=0)
    self_check: bool = True
    max_iters: int = Field(default=500, ge=1)
    stop_delta_db: float = Field(default=1e-3, ge=0.0)
    rise_tolerance_db: float = Field(default=0.1, ge=0.0)
    guard_band: float = Field(default=0.0, ge=0.0, lt=0.5)
    divergence_factor: float = Field(default=10.0, gt=1.0)
    divergence_window: int = Field(default=10, ge=1)
    presets: Dict[str, Any] = Field(default_factory=dict)
    outdir: str = "./results"
    json_only: bool = False
    seed: int = 0
    workers: int = Field(default=1, ge=1)

    def preset(self, name: str) -> Dict[str, Any]:
        """Return a copy of one preset parameter block (empty if absent)."""
        return dict(self.presets.get(name, {}))


def _read_config_file(path: Path) -> Dict[str, Any]:
    """Flatten the sectioned JSON config into Settings field names."""
    with open(path, 'r', encoding='utf-8') as f:
        raw = json.load(f)

    grid = raw.get("grid", {})
    encoder = raw.get("encoder", {})
    recon = raw.get("reconstruction", {})
    output = raw.get("output", {})

    flat = {
        "grid_oversample": grid.get("oversample"),
        "reconstruction_oversample": grid.get("reconstruction_oversample"),
        "max_firings": encoder.get("max_firings"),
        "self_check": encoder.get("self_check"),
        "max_iters": recon.get("max_iters"),
        "stop_delta_db": recon.get("stop_delta_db"),
        "rise_tolerance_db": recon.get("rise_tolerance_db"),
        "guard_band": recon.get("guard_band"),
        "divergence_factor": recon.get("divergence_factor"),
        "divergence_window": recon.get("divergence_window"),
        "presets": raw.get("presets"),
        "outdir": output.get("outdir"),
        "json_only": output.get("json_only"),
    }
    return {k: v for k, v in flat.items() if v is not None}


def _env_overrides() -> Dict[str, Any]:
    """Collect VBT_* environment overrides mirroring the CLI flags."""
    mapping = {
        "SEED": "seed",
        "GRID_OVERSAMPLE": "grid_oversample",
        "OUTDIR": "outdir",
        "JSON_ONLY": "json_only",
        "WORKERS": "workers",
        "MAX_ITERS": "max_iters",
    }
    overrides = {}
    for suffix, field in mapping.items():
        value = os.getenv(ENV_PREFIX + suffix)
        if value is None or value == "":
            continue
        if field == "json_only":
            overrides[field] = value.strip().lower() in ("1", "true", "yes", "on")
        else:
            overrides[field] = value
    return overrides


def load_settings(config_path: Optional[str] = None, **cli_overrides: Any) -> Settings:
    """
    Load settings with precedence CLI flag > environment > config file > default.

    Args:
        config_path: Optional path to a JSON config file. Falls back to VBT_CONFIG,
                     then to config/config.json in the repository.
        **cli_overrides: Values given on the command line; None means "not given".

    Returns:
        Validated Settings
    """
    load_dotenv()

    path = Path(config_path or os.getenv(ENV_PREFIX + "CONFIG") or DEFAULT_CONFIG_PATH)
    values: Dict[str, Any] = {}
    if path.exists():
        try:
            values.update(_read_config_file(path))
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Failed to read config file {path}: {str(e)}")
            raise ParameterError(f"unreadable config file {path}: {e}") from e
    else:
        logger.warning(f"Config file {path} not found, using built-in defaults")

    values.update(_env_overrides())
    values.update({k: v for k, v in cli_overrides.items() if v is not None})

    try:
        return Settings(**values)
    except ValidationError as e:
        logger.error(f"Invalid settings: {str(e)}")
        raise ParameterError(str(e)) from e
