"""
Analysis Settings
Numerical tolerances and size guards shared by every module
"""

import json
from pathlib import Path

CONFIG_PATH = Path(__file__).parent.parent / "config" / "presets.json"


def load_config(path=None):
    """Load the whole presets file"""
    config_path = Path(path) if path else CONFIG_PATH
    with open(config_path, 'r') as f:
        return json.load(f)


def load_preset(preset_name, path=None):
    """Load a named analysis preset from config"""
    presets = load_config(path)["presets"]
    if preset_name not in presets:
        raise KeyError(f"unknown preset '{preset_name}' (available: {', '.join(sorted(presets))})")
    return presets[preset_name]


class AnalysisSettings:
    def __init__(self, params=None):
        """
        Initialize settings from parameter dictionary

        Expected params:
        - stochastic_tol: float (absolute row-sum tolerance)
        - report_digits: int (decimals in the human report)
        - bisection_tol: float (sampler mixing-weight tolerance)
        - bisection_max_iter: int (sampler iteration cap)
        - enumeration_max_entries: int (oracle leakage guard, rows * cols)
        - remap_search_max: int (oracle remap guard, |Y|^|Z|)
        - universe_max: int (induced adjacency guard, v^u)
        - subset_check_max_cols: int (oracle subset-S check guard)
        """
        params = params or {}
        self.stochastic_tol = float(params.get('stochastic_tol', 1e-9))
        self.report_digits = int(params.get('report_digits', 6))
        self.bisection_tol = float(params.get('bisection_tol', 1e-10))
        self.bisection_max_iter = int(params.get('bisection_max_iter', 200))
        self.enumeration_max_entries = int(params.get('enumeration_max_entries', 4096))
        self.remap_search_max = int(params.get('remap_search_max', 10_000_000))
        self.universe_max = int(params.get('universe_max', 1_000_000))
        self.subset_check_max_cols = int(params.get('subset_check_max_cols', 10))

    @classmethod
    def from_config(cls, path=None):
        return cls(load_config(path).get("settings", {}))


def _load_default_settings():
    """Settings block of config/presets.json, built-in defaults if it cannot be read"""
    try:
        return AnalysisSettings.from_config()
    except (OSError, ValueError, KeyError):
        return AnalysisSettings()


DEFAULT_SETTINGS = _load_default_settings()
