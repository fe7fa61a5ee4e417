import json
import math

import numpy as np
import pytest

from modsi.config import ConfigError, build_generator, build_mixer, load_config, sweep_configs
from modsi.signal_model import BSpline, Lorentzian, Sinc, Tabulated


def _write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


def test_generators(tmp_path):
    assert isinstance(build_generator({"kind": "lorentzian", "gamma": 0.5}), Lorentzian)
    b = build_generator({"kind": "bspline", "order": 1, "scale": 2.5})
    assert isinstance(b, BSpline) and b.scale == 2.5
    assert isinstance(build_generator({"kind": "sinc", "bandwidth": 3.0}), Sinc)
    (tmp_path / "pulse.csv").write_text("0\n1\n0.5\n0\n")
    t = build_generator({"kind": "tabulated", "path": "pulse.csv", "rate": 100}, tmp_path)
    assert isinstance(t, Tabulated) and t.pulse.dt == 0.01 and t.value(0.01) == 1.0
    for bad in [{"kind": "lorentzian"}, {"kind": "lorentzian", "gamma": -1}, {"kind": "bspline", "order": -1},
                {"kind": "bspline", "order": 1.5}, {"kind": "nope"}, {"gamma": 1}, {"kind": "tabulated"},
                {"kind": "tabulated", "path": "missing.csv"}, {"kind": "lorentzian", "gamma": True}]:
        with pytest.raises(ConfigError):
            build_generator(bad, tmp_path)


def test_mixers():
    assert build_mixer(None, 1.0) is None
    m = build_mixer({"dc": 1, "cos": [[1, 200], [2, 200]]}, 1.0)
    assert m.coeffs[1] == 100 and m.coeffs[0] == 1
    raw = build_mixer({"coeffs": [[0, 1], [1, 0.5, 0.25], [-1, 0.5, -0.25]]}, 1.0)
    assert raw.coeffs[1] == 0.5 + 0.25j
    for bad in [{"coeffs": [[1, 1.0]]}, {"dc": 0}, {"cosine": []}, [1, 2], {"cos": [[1]]}]:
        with pytest.raises(ConfigError):
            build_mixer(bad, 1.0)


def test_load_and_settings(tmp_path):
    doc = {"generator": {"kind": "lorentzian", "gamma": 0.5}, "trials": 3, "snr_db": [10, None],
           "settings": [{"label": "a", "mixer": None}, {"label": "b", "mixer": {"dc": 1, "cos": [[1, 2]]}, "lam": 0.3}]}
    cfgs = sweep_configs(load_config(_write(tmp_path, doc)))
    assert [c.label for c in cfgs] == ["a", "b"]
    assert cfgs[0].mixer is None and cfgs[1].mixer.coeffs[1] == 1.0
    assert cfgs[1].lam == 0.3 and cfgs[0].lam == 0.2
    assert cfgs[0].snr_db == (10.0, math.inf)
    full = sweep_configs(load_config(_write(tmp_path, doc)), full=True, seed=9)
    assert full[0].trials == 500 and full[0].seed == 9


def test_single_setting_label(tmp_path):
    cfgs = sweep_configs(load_config(_write(tmp_path, {"generator": {"kind": "lorentzian", "gamma": 1}})))
    assert len(cfgs) == 1 and cfgs[0].label == "default"


@pytest.mark.parametrize("doc", [
    "{not json", "[1, 2]", {"schema": 2, "generator": {"kind": "lorentzian", "gamma": 1}},
])
def test_load_errors(tmp_path, doc):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, doc))


@pytest.mark.parametrize("doc", [
    {"generator": {"kind": "lorentzian", "gamma": 1}, "typo": 1},
    {"T": 1.0},
    {"generator": {"kind": "lorentzian", "gamma": 1}, "trials": 0},
    {"generator": {"kind": "lorentzian", "gamma": 1}, "settings": [{"label": "a"}, {"label": "a"}]},
    {"generator": {"kind": "lorentzian", "gamma": 1}, "settings": [{"bogus": 1}]},
    {"generator": {"kind": "lorentzian", "gamma": 1}, "settings": {"label": "a"}},
    {"generator": {"kind": "lorentzian", "gamma": 1}, "unfolder": {"unfolder": "hod", "bogus": 2}},
    {"generator": {"kind": "lorentzian", "gamma": 1}, "T": "one"},
])
def test_sweep_config_errors(tmp_path, doc):
    with pytest.raises(ConfigError):
        sweep_configs(load_config(_write(tmp_path, doc)))


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.json")):
        doc = load_config(path)
        if "generator" in doc:
            assert sweep_configs(doc)
