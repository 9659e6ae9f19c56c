"""
Configuration loading for the numerics toolkit.

Values come from three layers, highest priority first:
  1. command-line flags
  2. a run file given with --config (YAML or plain key=value lines)
  3. config.yaml in the project root
Built-in defaults fill anything the three layers leave unset.
"""

import os
import logging

import yaml

logger = logging.getLogger(__name__)


DEFAULTS = {
    'tolerances': {'closed_form': 1e-7, 'nested': 1e-5, 'mc_sigmas': 3.0},
    'kernels': {'t_min': 1e-3, 'kernel_tol': 1e-10},
    'params': {'a': 1.0, 'c': 1.0, 'tau': 1.0},
    'sampler': {
        'grid_points': 2048,
        'tail_mass_tol': 1e-8,
        'range_policy': 'auto',
        'range_lo': -12.0,
        'range_hi': 4.0,
        'seed': 20240601,
        'n_paths': 1000,
        'bld_steps': 512,
    },
    'suite': {'profile': 'fast', 'fast_instances': 1, 'thorough_instances': 6, 'mc_paths': 100000},
    'logging': {'level': 'WARNING', 'log_file': ''},
}


def get_project_root():
    """Get the project root directory."""
    script_dir = os.path.dirname(os.path.abspath(__file__))
    return os.path.dirname(script_dir)


def load_config(config_path=None):
    """Load configuration from config.yaml in the project root.

    Args:
        config_path: explicit path; defaults to <project root>/config.yaml

    Returns:
        dict with the parsed YAML, or {} when the file is missing or unreadable
    """
    if config_path is None:
        config_path = os.path.join(get_project_root(), 'config.yaml')

    if os.path.exists(config_path):
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                config = yaml.safe_load(f)
                return config if config else {}
        except Exception as e:
            logger.warning("Could not load config.yaml: %s", e)
            return {}
    return {}


def _coerce(value):
    text = value.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in '"\'':
        return text[1:-1]
    lowered = text.lower()
    if lowered in ('true', 'yes', 'on'):
        return True
    if lowered in ('false', 'no', 'off'):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_key_value(text):
    """Parse plain ``key=value`` lines into a flat dict.

    Blank lines and lines starting with '#' are skipped. Dotted keys
    (``sampler.seed=7``) are expanded into nested sections.
    """
    result = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise ValueError(f"line {line_no}: expected key=value, got {raw!r}")
        key, value = line.split('=', 1)
        key = key.strip()
        if not key:
            raise ValueError(f"line {line_no}: empty key")
        target = result
        parts = key.split('.')
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = _coerce(value)
    return result


def load_run_config(path):
    """Read the --config override file.

    A YAML mapping is used as-is; anything else is parsed as key=value lines.
    """
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        parsed = yaml.safe_load(text)
    except yaml.YAMLError:
        parsed = None
    if isinstance(parsed, dict):
        return parsed
    return parse_key_value(text)


def _section(cfg, section):
    value = cfg.get(section, {}) if cfg else {}
    return value if isinstance(value, dict) else {}


def resolve(section, flags=None, file_cfg=None, base_cfg=None):
    """Merge one config section across the precedence layers.

    Flat keys in a key=value run file (``seed=7``) apply to every section
    that defines that key.

    Args:
        section: section name, e.g. 'sampler'
        flags: dict of command-line values; None entries do not override
        file_cfg: parsed --config file
        base_cfg: parsed config.yaml

    Returns:
        merged dict for the section
    """
    merged = dict(DEFAULTS.get(section, {}))
    merged.update(_section(base_cfg, section))
    if file_cfg:
        merged.update(_section(file_cfg, section))
        for key, value in file_cfg.items():
            if not isinstance(value, dict) and key in merged:
                merged[key] = value
    for key, value in (flags or {}).items():
        if value is not None:
            merged[key] = value
    return merged
