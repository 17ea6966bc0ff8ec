"""
Process-level settings for FiberLink
Read from the environment (and an optional .env file) with sane defaults
"""

import os
import logging
import psutil
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Physical constants
SPEED_OF_LIGHT = 299792458.0  # m/s
DEFAULT_FIBER_SPEED = 2.0 * SPEED_OF_LIGHT / 3.0


def _default_threads() -> int:
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    return max(1, int(cores))


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


LOG_LEVEL = os.getenv('FIBERLINK_LOG_LEVEL', 'INFO').upper()
OUT_DIR = os.getenv('FIBERLINK_OUT_DIR', 'output')
THREADS = _env_int('FIBERLINK_THREADS', _default_threads())
MODE_CAP = _env_int('FIBERLINK_MODE_CAP', 4096)
REL_TOL = _env_float('FIBERLINK_REL_TOL', 1e-8)
ABS_TOL = _env_float('FIBERLINK_ABS_TOL', 1e-10)

VERSION = '1.0.0'


def setup_logging(level: str = None):
    """Configure the root logger once for command-line use"""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format=LOG_FORMAT,
    )
