"""Strict JSON configuration for the command-line pipeline.

A config file is a JSON object whose top-level sections mirror the
pipeline stages.  Every key is checked against the known schema: unknown
sections or keys abort with an error naming them, and values must match
the declared type.  ``effective_config`` materializes every default so
runs can embed the complete resolved parameter set in their reports.
"""

import json

from .errors import ConfigError, ParseError

# section -> key -> (default, type); bool is listed before int because a
# Python bool passes isinstance(int) checks
_SCHEMA = {
    "clean": {
        "radius": (1.0, float),
        "k_min": (2, int),
    },
    "ground": {
        "initial_cell": (40.0, float),
        "min_cell": (2.0, float),
        "dist_thresh": (0.3, float),
        "angle_thresh": (8.0, float),
        "normal_limit": (90.0, float),
        "enable_nonobtuse": (False, bool),
        "enable_normal": (True, bool),
        "corner_seed_mode": ("nearest_seed_z", str),
    },
    "dem": {
        "cell": (0.5, float),
    },
    "raster": {
        "resolution": (0.05, float),
        "aggregator": ("max", str),
        "threshold_method": ("otsu", str),
        "sigma": (1.0, float),
        "window": (256, int),
        "stride": (256, int),
        "edge_mag_thresh": (64.0, float),
        "min_edge_density": (0.01, float),
    },
    "glyph": {
        "p_distort": (0.3, float),
        "distort_mode": ("basic", str),
        "median_passes": (0, int),
        "noise_density": (0.02, float),
        "target_size": (32, int),
    },
    "pose": {
        "max_iters": (20, int),
        "stop_rel_change": (0.05, float),
        "polish": (True, bool),
        "gn_max_iters": (50, int),
        "gn_step_tol": (1e-10, float),
        "ransac_threshold_px": (2.0, float),
        "ransac_confidence": (0.999, float),
        "ransac_max_trials": (2000, int),
        "offset_deg": (15.0, float),
        "offset_m": (10.0, float),
    },
    "scene": {
        "n_plane": (120, int),
        "n_clutter": (30, int),
        "noise_sigma_px": (1.0, float),
        "outlier_fraction": (0.2, float),
        "patch_half": (20.0, float),
        "plane_tilt_deg": (2.0, float),
        "camera_height": (28.0, float),
        "width": (1280, int),
        "height": (960, int),
    },
}

_TOP_KEYS = {"seed": (0, int)}


def _check_value(dotted, value, want):
    if want is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"config: key {dotted} must be a boolean, "
                              f"got {value!r}")
        return value
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config: key {dotted} must be an integer, "
                              f"got {value!r}")
        return value
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config: key {dotted} must be a number, "
                              f"got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"config: key {dotted} must be a string, "
                          f"got {value!r}")
    return value


def validate_config(data, path="<config>"):
    """Check a parsed JSON object against the schema; returns it."""
    if not isinstance(data, dict):
        raise ConfigError(f"config: {path} must hold a JSON object")
    for section, content in data.items():
        if section in _TOP_KEYS:
            _check_value(section, content, _TOP_KEYS[section][1])
            continue
        if section not in _SCHEMA:
            raise ConfigError(f"config: unknown section {section!r}")
        if not isinstance(content, dict):
            raise ConfigError(
                f"config: section {section!r} must be an object")
        for key, value in content.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"config: unknown key {section}.{key}")
            _check_value(f"{section}.{key}", value, _SCHEMA[section][key][1])
    return data


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError:
        raise
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}")
    return validate_config(data, path)


def effective_config(data=None, overrides=None):
    """Materialize every default, overlay the file values, then any
    per-key overrides given as {"section.key": value} (None skipped)."""
    data = data or {}
    out = {}
    for section, keys in _SCHEMA.items():
        block = {}
        file_block = data.get(section, {})
        for key, (default, want) in keys.items():
            if key in file_block:
                block[key] = _check_value(f"{section}.{key}",
                                          file_block[key], want)
            else:
                block[key] = default
        out[section] = block
    for key, (default, want) in _TOP_KEYS.items():
        out[key] = (_check_value(key, data[key], want)
                    if key in data else default)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in dotted:
            section, key = dotted.split(".", 1)
            want = _SCHEMA[section][key][1]
            out[section][key] = _check_value(dotted, value, want)
        else:
            out[dotted] = _check_value(dotted, value, _TOP_KEYS[dotted][1])
    return out
