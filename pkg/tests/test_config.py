from __future__ import annotations

import json
import math

import numpy as np
import pytest

from amoebakit import config as cfg
from amoebakit.gallery import builtin_specs, real_plane


def _variety(**extra):
    base = {"schema_version": 1, "name": "line", "k": 1, "components": ["t1", "1+t1"]}
    base.update(extra)
    return base


def test_schema_is_bundled():
    s = cfg.schema()
    assert s["properties"]["schema_version"] == {"const": 1}


def test_minimal_variety():
    conf = cfg.from_dict(_variety())
    assert conf.kind == "variety"
    spec = conf.require_variety()
    assert spec.n == 2 and spec.domain[0].re == (-math.inf, math.inf)


def test_domain_exclusions_and_multiplicity():
    conf = cfg.from_dict(
        _variety(
            domain=[{"re": [0, 6.2832], "im": [None, None]}],
            exclusions=[{"var": 1, "center": "-1", "radius": 1e-9}],
            multiplicity={"log": 2, "arg": 1},
            tags=["real"],
        )
    )
    spec = conf.variety
    assert spec.domain[0].re == (0, 6.2832) and spec.domain[0].im[1] == math.inf
    assert spec.exclusions[0].center == -1 and spec.exclusions[0].radius == 1e-9
    assert (spec.multiplicity_log, spec.multiplicity_arg) == (2, 1)
    assert spec.has_tag("real")


@pytest.mark.parametrize("name", list(builtin_specs()))
def test_builtins_round_trip(name):
    spec = builtin_specs()[name]
    data = json.loads(json.dumps(cfg.variety_to_dict(spec)))
    again = cfg.from_dict(data).variety
    assert again.components == spec.components
    assert again.domain == spec.domain
    assert again.exclusions == spec.exclusions
    assert (again.multiplicity_log, again.multiplicity_arg) == (spec.multiplicity_log, spec.multiplicity_arg)


def test_plane_round_trip():
    conf = cfg.from_dict(json.loads(json.dumps(cfg.plane_to_dict(real_plane()))))
    assert conf.kind == "plane"
    assert np.allclose(conf.plane.a, real_plane().a)
    assert conf.variety.n == 4


def test_polynomial():
    conf = cfg.from_dict({"schema_version": 1, "polynomial": {"coefficients": {"2,0": 1, "0,2": "1", "0,0": -1}}})
    assert conf.kind == "polynomial"
    assert conf.polynomial.shape == (3, 3)
    with pytest.raises(cfg.ConfigError):
        conf.require_variety()


@pytest.mark.parametrize(
    "data, fragment",
    [
        ({"k": 1, "components": ["t1"]}, ""),
        (_variety(schema_version=2), ""),
        (_variety(extra=1), ""),
        (_variety(k=0), ""),
        (_variety(components=[]), ""),
        (_variety(components=["t1", "t2"]), "component 2"),
        (_variety(components=["t1", "1+"]), "component 2"),
        (_variety(n=3), "n=3"),
        (_variety(domain=[{"re": [0, 1]}, {"re": [0, 1]}]), "domain"),
        (_variety(exclusions=[{"var": 2, "center": 0}]), "beyond"),
        (_variety(exclusions=[{"var": 1, "center": 0, "radius": 0}]), ""),
        (_variety(multiplicity={"log": 0}), ""),
        ({"schema_version": 1, "plane": {"k": 2, "b": [1], "a": [[1]]}}, "plane"),
        ({"schema_version": 1, "plane": {"k": 1, "b": ["1+"], "a": [[1]]}}, "bad number"),
        ({"schema_version": 1, "polynomial": {"coefficients": {"x": 1}}}, ""),
        ([], ""),
    ],
)
def test_invalid_configs(data, fragment):
    with pytest.raises(cfg.ConfigError) as err:
        cfg.from_dict(data)
    assert fragment in str(err.value)


def test_load_errors(tmp_path):
    with pytest.raises(cfg.ConfigError):
        cfg.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(cfg.ConfigError) as err:
        cfg.load(bad)
    assert "line 1" in str(err.value)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(_variety()))
    assert cfg.load(good).name == "line"


def test_complex_str():
    assert cfg.complex_str(1) == "1.0+0.0i"
    assert cfg.complex_str(complex(0, -2.5)) == "0.0-2.5i"
    assert cfg._number(cfg.complex_str(-2.5j)) == -2.5j
