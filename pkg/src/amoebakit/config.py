"""JSON input files, validated against the bundled schema before use."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .expr import ExpressionError, parse, parse_number
from .planes import AffinePlaneSpec, to_variety
from .raster import parse_poly
from .variety import Exclusion, Rect, VarietySpec

SCHEMA_VERSION = 1
DEFAULT_EXCLUSION_RADIUS = 1e-12


class ConfigError(ValueError):
    pass


@lru_cache(maxsize=1)
def schema() -> dict:
    text = resources.files("amoebakit").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


@dataclass
class Config:
    name: str
    kind: str  # variety, plane, polynomial
    raw: dict
    variety: VarietySpec | None = None
    plane: AffinePlaneSpec | None = None
    polynomial: np.ndarray | None = None

    def require_variety(self) -> VarietySpec:
        if self.variety is None:
            raise ConfigError(f"this command needs a variety or plane, got a {self.kind}")
        return self.variety


def validate(data: Any) -> None:
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        where = "/".join(str(p) for p in best.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {best.message}")


def _number(v) -> complex:
    if isinstance(v, str):
        return parse_number(v)
    return complex(v)


def _interval(pair) -> tuple[float, float]:
    lo = -math.inf if pair[0] is None else float(pair[0])
    hi = math.inf if pair[1] is None else float(pair[1])
    return lo, hi


def _variety(data: dict, name: str) -> VarietySpec:
    k = data["k"]
    comps = data["components"]
    if "n" in data and data["n"] != len(comps):
        raise ConfigError(f"n={data['n']} but {len(comps)} components given")
    nodes = []
    for i, src in enumerate(comps):
        try:
            nodes.append(parse(src, k))
        except ExpressionError as exc:
            raise ConfigError(f"component {i + 1}: {exc}") from exc
    domain = []
    for d in data.get("domain", []):
        domain.append(Rect(_interval(d.get("re", [None, None])), _interval(d.get("im", [None, None]))))
    if domain and len(domain) != k:
        raise ConfigError(f"domain lists {len(domain)} ranges, expected k={k}")
    excl = []
    for e in data.get("exclusions", []):
        if e["var"] > k:
            raise ConfigError(f"exclusion variable t{e['var']} beyond k={k}")
        excl.append(Exclusion(e["var"], _number(e["center"]), float(e.get("radius", DEFAULT_EXCLUSION_RADIUS))))
    mult = data.get("multiplicity", {})
    try:
        return VarietySpec(
            name,
            k,
            nodes,
            domain=domain,
            exclusions=excl,
            multiplicity_log=mult.get("log"),
            multiplicity_arg=mult.get("arg"),
            tags=tuple(data.get("tags", ())),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def from_dict(data: Any) -> Config:
    validate(data)
    name = data.get("name", "unnamed")
    try:
        if "components" in data:
            return Config(name, "variety", data, variety=_variety(data, name))
        if "plane" in data:
            p = data["plane"]
            b = [_number(v) for v in p["b"]]
            a = [[_number(v) for v in row] for row in p["a"]]
            if len(a) != len(b) or any(len(row) != p["k"] for row in a):
                raise ConfigError("plane coefficient matrix must be s x k with s = len(b)")
            plane = AffinePlaneSpec(p["k"], b, a, name)
            return Config(name, "plane", data, variety=to_variety(plane), plane=plane)
        poly = parse_poly(data["polynomial"]["coefficients"])
        return Config(name, "polynomial", data, polynomial=poly)
    except ExpressionError as exc:
        raise ConfigError(f"bad number: {exc}") from exc
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load(path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    return from_dict(data)


def complex_str(z) -> str:
    z = complex(z)
    return f"{z.real!r}{z.imag:+}i"


def variety_to_dict(spec: VarietySpec) -> dict:
    """Config dict for a variety (round-trips through ``from_dict``)."""

    def bound(v):
        return None if math.isinf(v) else v

    out: dict = {
        "schema_version": SCHEMA_VERSION,
        "name": spec.name,
        "k": spec.k,
        "n": spec.n,
        "components": spec.sources,
        "domain": [{"re": [bound(r.re[0]), bound(r.re[1])], "im": [bound(r.im[0]), bound(r.im[1])]} for r in spec.domain],
        "exclusions": [
            {"var": e.var, "center": complex_str(e.center), "radius": e.radius}
            for e in spec.exclusions
        ],
        "tags": list(spec.tags),
    }
    mult = {}
    if spec.multiplicity_log is not None:
        mult["log"] = spec.multiplicity_log
    if spec.multiplicity_arg is not None:
        mult["arg"] = spec.multiplicity_arg
    if mult:
        out["multiplicity"] = mult
    return out


def plane_to_dict(plane: AffinePlaneSpec) -> dict:
    s = complex_str
    return {
        "schema_version": SCHEMA_VERSION,
        "name": plane.name,
        "plane": {"k": plane.k, "b": [s(v) for v in plane.b], "a": [[s(v) for v in row] for row in plane.a]},
    }
