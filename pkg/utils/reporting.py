"""
Output writers for FiberLink runs
CSV tables with unit-bearing headers, JSON reports and the per-run manifest
"""

import csv
import json
import time
import hashlib
import logging
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import psutil

from config import VERSION

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.10g'
MANIFEST_SUFFIX = '.manifest.json'


def format_value(value: Any) -> str:
    """Deterministic text form of one CSV cell"""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    if value is None:
        return ''
    return str(value)


def write_csv(path, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    """Write a header row plus data rows; values go through format_value"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as f:
        w = csv.writer(f, lineterminator='\n')
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    logger.info(f"📄 Wrote {len(rows)} rows to {path}")
    return path


def write_dict_rows(path, columns: Sequence[str], rows: Sequence[Dict[str, Any]],
                    headers: Optional[Dict[str, str]] = None) -> Path:
    """Rows given as dicts; headers maps a key to its unit-bearing column title"""
    headers = headers or {}
    return write_csv(path, [headers.get(c, c) for c in columns], [[r.get(c) for c in columns] for r in rows])


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, 'value') and hasattr(value, 'name'):
        return value.value
    return value


def to_json(payload: Any) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False)


def write_json(path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(payload) + '\n', encoding='utf-8')
    return path


def series_columns(k: int) -> List[str]:
    """Column titles of an amplitude time series tracking fiber modes -k..k"""
    from dynamics import LOSS_CHANNELS
    names = ['A', 'a']
    names += [f'c{n:+d}' for n in range(-k, k + 1)]
    names += ['b', 'B']
    columns = ['t [s]']
    for name in names:
        columns += [f'Re {name}', f'Im {name}']
    columns.append('norm')
    columns += [f'loss_{channel}' for channel in LOSS_CHANNELS]
    return columns


def write_series_csv(path, result, track_modes: int = 3, full_modes: bool = False) -> Path:
    """Amplitudes of atoms, cavities and fiber modes -k..k over time, with norm and cumulative losses"""
    series = result.series
    n = result.n_modes_used
    k = n if full_modes else min(track_modes, n)
    amps = series.amplitudes
    # Fiber mode c_j sits at column 2 + n + j of the full layout
    picked = np.concatenate(([0, 1], 2 + n + np.arange(-k, k + 1), [amps.shape[1] - 2, amps.shape[1] - 1]))
    rows = []
    for i, t in enumerate(series.t):
        row = [t]
        for z in amps[i, picked]:
            row += [z.real, z.imag]
        row.append(series.norm[i])
        row += list(series.losses[i])
        rows.append(row)
    return write_csv(path, series_columns(k), rows)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def host_info() -> Dict[str, Any]:
    proc = psutil.Process()
    return {
        'python': platform.python_version(),
        'platform': platform.platform(),
        'cpu_physical': psutil.cpu_count(logical=False),
        'cpu_logical': psutil.cpu_count(),
        'rss_bytes': proc.memory_info().rss,
    }


@dataclass
class RunManifest:
    command: str
    arguments: Dict[str, Any]
    config: Dict[str, Any]
    version: str = VERSION
    outputs: List[Dict[str, str]] = field(default_factory=list)
    started: float = field(default_factory=time.perf_counter)

    def add_output(self, path) -> None:
        path = Path(path)
        self.outputs.append({'path': path.name, 'sha256': sha256_file(path)})

    def write(self, out_dir) -> Path:
        """Manifest next to the outputs; the only artifact carrying a timestamp"""
        payload = {
            'command': self.command,
            'arguments': self.arguments,
            'config': self.config,
            'version': self.version,
            'outputs': self.outputs,
            'wall_time_s': round(time.perf_counter() - self.started, 6),
            'timestamp': datetime.now(timezone.utc).isoformat(timespec='seconds'),
            'host': host_info(),
        }
        path = write_json(Path(out_dir) / f'{self.command}{MANIFEST_SUFFIX}', payload)
        logger.info(f"🧾 Manifest written to {path}")
        return path
