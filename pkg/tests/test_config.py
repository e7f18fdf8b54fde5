import json

import pytest

from cavity_unravel.config import ConfigError, apply_overrides, load_config, parse_config

BASE = {"engine": "mcwf", "initial_state": {"kind": "fock", "n": 2}, "dim": 20, "gamma": 1.0,
        "nbar": 0.5, "dt": 0.001, "horizon": 0.1, "sample_every": 10, "trajectories": 8}


def with_(**kw):
    raw = dict(BASE)
    raw.update(kw)
    return raw


def test_valid_config():
    cfg = parse_config(BASE)
    assert cfg.engine == "mcwf" and cfg.params.nbar == 0.5 and cfg.dim == 20
    assert cfg.outputs["burn_in"] == 10.0 and cfg.outputs["qgrid_times"] == [0.0, 0.1]
    assert cfg.initial_field().amplitudes[2] == 1


def test_default_dim():
    raw = dict(BASE)
    del raw["dim"]
    assert parse_config(raw).dim >= 30


@pytest.mark.parametrize("raw,key", [
    (with_(engine="rk45"), "engine"),
    (with_(gamma=0.0), "gamma"),
    (with_(nbar=-1.0), "nbar"),
    (with_(dt="0.1"), "dt"),
    (with_(horizon=0.1005), "horizon"),
    (with_(sample_every=7), "sample_every"),
    (with_(trajectories=0), "trajectories"),
    (with_(initial_state={"kind": "fock", "n": 20}), "initial_state.n"),
    (with_(initial_state={"kind": "squeezed"}), "initial_state.kind"),
    (with_(initial_state={"kind": "thermal"}), "initial_state.kind"),
    (with_(colour="red"), "colour"),
    (with_(r_a=1.0), "r_a"),
    (with_(outputs={"qgrid_times": [0.0105]}), "outputs.qgrid_times"),
    (with_(outputs={"plots": True}), "outputs.plots"),
    (with_(scheme="milstein"), "scheme"),
    (with_(engine="lindblad"), "trajectories"),
])
def test_errors_name_the_key(raw, key):
    with pytest.raises(ConfigError) as e:
        parse_config(raw)
    assert e.value.key == key
    assert str(e.value).startswith(key)


def test_micro_engine_derives_params():
    raw = {"engine": "micro2", "initial_state": {"kind": "fock", "n": 0}, "r_a": 100.0,
           "r_b": 300.0, "coupling_tau": 0.05, "dt": 0.01, "horizon": 1.0}
    cfg = parse_config(raw)
    assert cfg.params.gamma == pytest.approx(0.5) and cfg.params.nbar == 0.5
    assert cfg.model == "two_level"
    with pytest.raises(ConfigError) as e:
        parse_config(dict(raw, gamma=2.0))
    assert e.value.key == "gamma"
    with pytest.raises(ConfigError) as e:
        parse_config(dict(raw, r_b=50.0))
    assert e.value.key == "r_b"
    with pytest.raises(ConfigError) as e:
        parse_config(dict(raw, epsilon=3.0))
    assert e.value.key == "epsilon"
    cfg = parse_config(dict(raw, engine="micro3", epsilon=3.0, coupling_tau=0.01))
    assert cfg.params.epsilon == 3.0 and cfg.model == "three_level"


def test_overrides():
    cfg = parse_config(BASE)
    assert apply_overrides(cfg) is cfg
    o = apply_overrides(cfg, engine="hssde", seed0=4, workers=2)
    assert (o.engine, o.seed0, o.workers) == ("hssde", 4, 2)
    with pytest.raises(ConfigError):
        apply_overrides(cfg, engine="nope")


def test_load_config(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps(BASE))
    cfg, data = load_config(f)
    assert cfg.engine == "mcwf" and data == f.read_bytes()
    f.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(f)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
