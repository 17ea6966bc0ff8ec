"""
Config ingestion for FiberLink
Turns JSON setup documents (plain SI numbers or {"value", "unit"} pairs) into typed configs
"""

import json
import math
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from errors import ConfigError

logger = logging.getLogger(__name__)

# Multiplier into SI / rad·s⁻¹; Hz-family units are "/2π" values
UNIT_FACTORS = {
    'ppm': 1e-6,
    'm': 1.0,
    'km': 1e3,
    'dB_per_km': 1.0,
    'Hz': 2.0 * math.pi,
    'kHz': 2.0 * math.pi * 1e3,
    'MHz': 2.0 * math.pi * 1e6,
    'rad_per_s': 1.0,
    's': 1.0,
    'ms': 1e-3,
    'us': 1e-6,
    'm_per_s': 1.0,
}

# Units each kind of quantity may carry
UNIT_KINDS = {
    'fraction': {'ppm'},
    'length': {'m', 'km'},
    'attenuation': {'dB_per_km'},
    'rate': {'Hz', 'kHz', 'MHz', 'rad_per_s'},
    'time': {'s', 'ms', 'us'},
    'speed': {'m_per_s'},
}


def parse_quantity(raw: Any, field: str, kind: Optional[str] = None) -> float:
    """Plain number or {"value": x, "unit": u} -> float in internal units"""
    if isinstance(raw, bool):
        raise ConfigError("expected a number, got a boolean", field=field)
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, dict):
        if 'value' not in raw:
            raise ConfigError("quantity object needs a 'value'", field=field)
        value = raw['value']
        unit = raw.get('unit')
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"quantity value must be numeric, got {value!r}", field=field)
        if unit is None:
            return float(value)
        if unit not in UNIT_FACTORS:
            raise ConfigError(f"unknown unit {unit!r}", field=field)
        if kind is not None and unit not in UNIT_KINDS[kind]:
            raise ConfigError(f"unit {unit!r} does not fit a {kind}", field=field)
        return float(value) * UNIT_FACTORS[unit]
    raise ConfigError(f"expected a number or quantity object, got {type(raw).__name__}", field=field)


def load_json(path) -> Dict[str, Any]:
    """Read a JSON document, reporting syntax errors with line and column"""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}")
    return parse_json(text, source=str(path))


def parse_json(text: str, source: str = '<string>') -> Dict[str, Any]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {source}: {e.msg}", line=e.lineno, column=e.colno)
    if not isinstance(doc, dict):
        raise ConfigError(f"top level of {source} must be an object")
    return doc


def _section(doc: Dict[str, Any], key: str) -> Dict[str, Any]:
    section = doc.get(key)
    if section is None:
        raise ConfigError("missing section", field=key)
    if not isinstance(section, dict):
        raise ConfigError("section must be an object", field=key)
    return section


def _required(section: Dict[str, Any], prefix: str, key: str, kind: Optional[str] = None) -> float:
    if key not in section:
        raise ConfigError("missing field", field=f"{prefix}.{key}")
    return parse_quantity(section[key], f"{prefix}.{key}", kind)


def _optional(section: Dict[str, Any], prefix: str, key: str, default, kind: Optional[str] = None):
    if key not in section or section[key] is None:
        return default
    return parse_quantity(section[key], f"{prefix}.{key}", kind)


def cavity_from_dict(section: Dict[str, Any], prefix: str = 'cavity'):
    from params import CavitySpec
    return CavitySpec(
        length_l=_required(section, prefix, 'length_l', 'length'),
        t2=_required(section, prefix, 't2', 'fraction'),
        loss2=_optional(section, prefix, 'loss2', 0.0, 'fraction'),
    )


def setup_from_dict(doc: Dict[str, Any]):
    """SetupConfig from a document with `cavity`, `fiber`, `atom` and optional `cavity_b`"""
    from analytics import gamma_from_cooperativity
    from config import DEFAULT_FIBER_SPEED
    from params import AtomSpec, FiberSpec, SetupConfig, mirror_rate

    cavity = cavity_from_dict(_section(doc, 'cavity'))
    cavity_b = cavity_from_dict(_section(doc, 'cavity_b'), 'cavity_b') if doc.get('cavity_b') else None

    fiber_doc = _section(doc, 'fiber')
    fiber = FiberSpec(
        length_L=_required(fiber_doc, 'fiber', 'length_L', 'length'),
        attenuation=_optional(fiber_doc, 'fiber', 'attenuation', 0.0, 'attenuation'),
        speed_cf=_optional(fiber_doc, 'fiber', 'speed_cf', DEFAULT_FIBER_SPEED, 'speed'),
        coupling_efficiency=_optional(fiber_doc, 'fiber', 'coupling_efficiency', 1.0),
    )

    atom_doc = _section(doc, 'atom')
    g_atc = _required(atom_doc, 'atom', 'g_atc', 'rate')
    delta_at = _required(atom_doc, 'atom', 'delta_at', 'rate')
    if 'cooperativity' in atom_doc and 'gamma_sp' in atom_doc:
        raise ConfigError("give either gamma_sp or cooperativity, not both", field='atom.cooperativity')
    if 'cooperativity' in atom_doc:
        C = parse_quantity(atom_doc['cooperativity'], 'atom.cooperativity')
        if C <= 0:
            raise ConfigError("cooperativity must be positive", field='atom.cooperativity')
        kappa = 0.5 * (mirror_rate(cavity.t2, cavity.length_l) + mirror_rate(cavity.loss2, cavity.length_l))
        gamma_sp = gamma_from_cooperativity(g_atc, kappa, C)
    else:
        gamma_sp = _optional(atom_doc, 'atom', 'gamma_sp', 0.0, 'rate')

    return SetupConfig(
        cavity=cavity,
        fiber=fiber,
        atom=AtomSpec(g_atc=g_atc, delta_at=delta_at, gamma_sp=gamma_sp),
        cavity_b=cavity_b,
    )


def sim_from_dict(doc: Optional[Dict[str, Any]], **overrides):
    from dynamics import SimConfig
    doc = dict(doc or {})
    kwargs = {}
    for key in ('n_modes', 'n_samples', 'mode_cap', 'track_modes'):
        if key in doc:
            kwargs[key] = int(doc[key])
    for key in ('rel_tol', 'abs_tol', 'settle_eps'):
        if key in doc:
            kwargs[key] = parse_quantity(doc[key], f'sim.{key}')
    if doc.get('t_margin') is not None:
        kwargs['t_margin'] = parse_quantity(doc['t_margin'], 'sim.t_margin', 'time')
    for key in ('method', 'frame'):
        if key in doc:
            kwargs[key] = str(doc[key])
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SimConfig(**kwargs)
    except TypeError as e:
        raise ConfigError(f"invalid simulation settings: {e}", field='sim')


def space_from_dict(doc: Optional[Dict[str, Any]]):
    from optimizer import SearchSpace
    doc = dict(doc or {})
    kwargs = {}
    for key in ('T_range', 'x_spl_range', 'omega_ratio_range', 'g_max_range'):
        if key in doc:
            lo, hi = doc[key]
            kwargs[key] = (float(lo), float(hi))
    if 'grid_points' in doc:
        kwargs['grid_points'] = tuple(int(n) for n in doc['grid_points'])
    for key in ('refine',):
        if key in doc:
            kwargs[key] = bool(doc[key])
    if 'refine_tol' in doc:
        kwargs['refine_tol'] = float(doc['refine_tol'])
    if 'max_refine_evals' in doc:
        kwargs['max_refine_evals'] = int(doc['max_refine_evals'])
    if 'wps_points' in doc:
        kwargs['wps_points'] = int(doc['wps_points'])
    return SearchSpace(**kwargs)


def protocol_from_dict(doc: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Normalize a `protocol` block: quantities become floats in internal units"""
    doc = dict(doc or {'type': 'ap'})
    kinds = {'T': 'time', 'g_max': 'rate', 'omega_max': 'rate', 'g0': 'rate', 'launch_offset': 'time'}
    out: Dict[str, Any] = {'type': str(doc.get('type', 'ap')).lower()}
    for key, value in doc.items():
        if key == 'type':
            continue
        out[key] = parse_quantity(value, f'protocol.{key}', kinds.get(key))
    return out


def load_setup(path) -> Tuple[Any, Dict[str, Any]]:
    """(SetupConfig, raw document) from a JSON config file"""
    doc = load_json(path)
    return setup_from_dict(doc), doc
