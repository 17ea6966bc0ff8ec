"""
Figure presets and the Table I dataset
Both live as JSON under data/ and are loaded on first access
"""

import copy
import logging
from pathlib import Path
from typing import Any, Dict, List

from errors import ConfigError
from utils.units import load_json

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / 'data'
PRESETS_FILE = DATA_DIR / 'presets.json'
TABLE1_FILE = DATA_DIR / 'table1.json'


class PresetStore:
    def __init__(self, presets_path: Path = PRESETS_FILE, table_path: Path = TABLE1_FILE):
        self.presets = load_json(presets_path)
        self.table = load_json(table_path)
        logger.debug(f"Loaded {len(self.presets)} figure presets and {len(self.table['rows'])} Table I rows")

    def names(self) -> List[str]:
        return sorted(self.presets)

    def get(self, name: str) -> Dict[str, Any]:
        key = str(name).lower().strip().removeprefix('fig').strip('. ')
        if key not in self.presets:
            raise ConfigError(f"unknown figure preset {name!r}; choose from {', '.join(self.names())}",
                              field='--fig')
        return copy.deepcopy(self.presets[key])

    def table1_rows(self) -> List[Dict[str, Any]]:
        return copy.deepcopy(self.table['rows'])

    def caption_fiber(self) -> Dict[str, float]:
        return dict(self.table['caption_fiber'])


# Lazy initialization of the preset store
_store_instance = None


class LazyPresets:
    """Preset store wrapper that reads the data files only when accessed"""
    def __getattr__(self, name):
        global _store_instance
        if _store_instance is None:
            _store_instance = PresetStore()
        return getattr(_store_instance, name)


presets = LazyPresets()


def apply_overrides(doc: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Copy of a setup document with dotted keys ("fiber.attenuation") replaced"""
    out = copy.deepcopy(doc)
    for dotted, value in overrides.items():
        parts = dotted.split('.')
        target = out
        for part in parts[:-1]:
            if not isinstance(target.get(part), dict):
                raise ConfigError("override path does not name a section", field=dotted)
            target = target[part]
        target[parts[-1]] = value
    return out


def preset_variants(preset: Dict[str, Any]) -> List[Dict[str, Any]]:
    """[(label, setup document)] for every variant of a preset; a single unlabeled one if none"""
    base = preset['setup']
    variants = preset.get('variants') or [{'label': '', 'set': {}}]
    return [{'label': v['label'], 'setup': apply_overrides(base, v.get('set', {}))} for v in variants]


def get_preset(name: str) -> Dict[str, Any]:
    return presets.get(name)


def table1_rows() -> List[Dict[str, Any]]:
    return presets.table1_rows()
