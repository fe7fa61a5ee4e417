"""JSON run configuration.

A config is one JSON object.  Top-level keys describe the acquisition and
recovery (see :data:`SWEEP_KEYS`); an optional ``"settings"`` list holds
per-setting overrides (typically the mixer), each producing one curve::

    {
      "schema": 1,
      "generator": {"kind": "lorentzian", "gamma": 0.5},
      "T": 1.0, "lam": 0.2, "oversampling": 5,
      "unfolder": {"unfolder": "hod", "order": 3},
      "snr_db": [10, 20, 30, 40], "trials": 50, "seed": 0,
      "settings": [
        {"label": "no mixer", "mixer": null},
        {"label": "mixer", "mixer": {"dc": 1, "cos": [[1, 200], [2, 200]]}}
      ]
    }

Generators: ``{"kind": "lorentzian", "gamma": g}``, ``{"kind": "bspline",
"order": n, "scale": s}``, ``{"kind": "sinc", "bandwidth": w}`` and
``{"kind": "tabulated", "path": "pulse.csv", "rate": 1000}`` (relative
paths resolve against the config file).  Mixers: ``{"dc": c0, "cos":
[[k, amp], ...], "sin": [[k, amp], ...]}`` or raw Fourier coefficients
``{"coeffs": [[l, re, im], ...]}``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from .analog_chain import MixerSpec
from .harness import SweepConfig
from .signal_model import BSpline, FineSignal, Generator, Lorentzian, Sinc, Tabulated

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "load_config",
    "build_generator",
    "build_mixer",
    "sweep_configs",
    "SWEEP_KEYS",
]

SCHEMA_VERSION = 1

SWEEP_KEYS = {
    "T", "n_coeffs", "lam", "oversampling", "mixer", "unfolder", "snr_db", "trials",
    "seed", "pad", "pad_right", "q", "epsilon", "bl_projection", "edge", "label",
}
_TOP_ONLY = {"schema", "generator", "settings", "full_trials", "title", "demo", "ecg"}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def load_config(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema {schema!r} (this build reads {SCHEMA_VERSION})")
    doc.setdefault("_base_dir", str(path.resolve().parent))
    return doc


def _number(d: dict, key: str, default=None, positive: bool = False) -> float:
    if key not in d:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key!r} must be a finite number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{key!r} must be positive, got {v!r}")
    return float(v)


def build_generator(d, base_dir=".") -> Generator:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("generator must be an object with a 'kind'")
    kind = d["kind"]
    try:
        if kind == "lorentzian":
            return Lorentzian(_number(d, "gamma", positive=True))
        if kind == "bspline":
            order = d.get("order", 1)
            if isinstance(order, bool) or not isinstance(order, int) or order < 0:
                raise ConfigError(f"bspline order must be a non-negative integer, got {order!r}")
            return BSpline(order, _number(d, "scale", 1.0, positive=True))
        if kind == "sinc":
            return Sinc(_number(d, "bandwidth", positive=True))
        if kind == "tabulated":
            from .ecg import load_recording

            if "path" not in d:
                raise ConfigError("tabulated generator needs a 'path'")
            path = Path(base_dir) / d["path"]
            rate = _number(d, "rate", 1000.0, positive=True)
            rec = load_recording(path, rate, skip_header=bool(d.get("skip_header", False)),
                                 column=int(d.get("column", 0)))
            return Tabulated(FineSignal(_number(d, "t0", 0.0), 1.0 / rate, rec.values))
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError(f"generator {kind!r}: {exc}") from None
    raise ConfigError(f"unknown generator kind {kind!r}")


def build_mixer(d, T: float) -> MixerSpec | None:
    if d is None:
        return None
    if not isinstance(d, dict):
        raise ConfigError("mixer must be an object or null")
    try:
        if "coeffs" in d:
            coeffs = {}
            for entry in d["coeffs"]:
                l, re, im = (list(entry) + [0.0])[:3]
                coeffs[int(l)] = complex(re, im)
            return MixerSpec(T, coeffs)
        unknown = set(d) - {"dc", "cos", "sin"}
        if unknown:
            raise ConfigError(f"unknown mixer keys {sorted(unknown)}")
        return MixerSpec.from_cosines(T, d.get("dc", 0.0),
                                      [tuple(p) for p in d.get("cos", [])],
                                      [tuple(p) for p in d.get("sin", [])])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mixer: {exc}") from None


def sweep_configs(doc: dict, full: bool = False, seed: int | None = None) -> list[SweepConfig]:
    """One :class:`SweepConfig` per setting (or one for the whole document)."""
    base_dir = doc.get("_base_dir", ".")
    unknown = set(doc) - SWEEP_KEYS - _TOP_ONLY - {"_base_dir"}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "generator" not in doc:
        raise ConfigError("missing key 'generator'")
    gen = build_generator(doc["generator"], base_dir)
    common = {k: v for k, v in doc.items() if k in SWEEP_KEYS}
    settings = doc.get("settings") or [{}]
    if not isinstance(settings, list):
        raise ConfigError("'settings' must be a list of objects")
    out = []
    for i, override in enumerate(settings):
        if not isinstance(override, dict):
            raise ConfigError(f"settings[{i}] must be an object")
        bad = set(override) - SWEEP_KEYS
        if bad:
            raise ConfigError(f"settings[{i}]: unknown keys {sorted(bad)}")
        merged = {**common, **override}
        merged.setdefault("label", override.get("label", f"setting{i}") if len(settings) > 1 else "default")
        if full:
            merged["trials"] = int(doc.get("full_trials", 500))
        if seed is not None:
            merged["seed"] = int(seed)
        T = _number(merged, "T", 1.0, positive=True)
        merged["T"] = T
        merged["mixer"] = build_mixer(merged.get("mixer"), T)
        if "snr_db" in merged:
            merged["snr_db"] = tuple(math.inf if s is None else s for s in merged["snr_db"])
        try:
            out.append(SweepConfig(generator=gen, **merged))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"settings[{i}]: {exc}") from None
    labels = [c.label for c in out]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"setting labels must be unique, got {labels}")
    return out
