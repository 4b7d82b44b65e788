"""JSON readers and writers for functionals, transforms, generators and multipoles."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SpecError
from .functional import (CompositeGenerator, CurveMeasure, Diagonal, DiracMultipole, DiscreteMeasure,
                         FunctionalSpec, FunctionalSum, Kernel, QuadratureDensity)
from .polynomial import Poly
from .transforms import TransformSpec
from .uvarov import CurvePerturbation, MultipoleSet


def load(source):
    """Dict from a path, JSON text or an already-parsed object."""
    if isinstance(source, dict):
        return source
    if isinstance(source, (str, Path)):
        text = str(source)
        if not text.lstrip().startswith("{"):
            p = Path(text)
            if not p.exists():
                raise SpecError(f"file not found: {p}")
            text = p.read_text()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"malformed JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise SpecError("top-level JSON value must be an object")
        return obj
    raise SpecError(f"cannot read a specification from {type(source).__name__}")


def _number(c):
    if isinstance(c, (list, tuple)):
        z = complex(c[0], c[1] if len(c) > 1 else 0.0)
        return z.real if z.imag == 0 else z
    return c


def _poly(obj, D=None):
    if obj is None:
        return None
    if isinstance(obj, dict) and "poly" in obj:
        obj = obj["poly"]
    return Poly.from_json(obj, D)


def _component(c):
    try:
        kind = c["type"]
    except (KeyError, TypeError):
        raise SpecError(f"functional component needs a 'type': {c!r}") from None
    try:
        if kind == "density":
            box = tuple(tuple(float(v) for v in ab) for ab in c["box"])
            return QuadratureDensity(box, c.get("weight", "lebesgue"), c.get("nodes"), _number(c.get("scale", 1.0)))
        if kind == "discrete":
            atoms = [(np.atleast_1d(np.asarray(a[0], dtype=float)), _number(a[1])) for a in c["atoms"]]
            return DiscreteMeasure(atoms)
        if kind == "multipole":
            return DiracMultipole(tuple(c["point"]), tuple(c["deriv"]), _number(c.get("coef", 1.0)))
        if kind == "curve":
            params = {k: v for k, v in c.items() if k not in ("type", "curve", "interval", "weight", "nodes", "scale")}
            params.update(c.get("params", {}))
            return CurveMeasure(c["curve"], tuple(c["interval"]), c.get("weight", "lebesgue"), c.get("nodes"),
                                params, _number(c.get("scale", 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"bad {kind} component: {exc}") from exc
    raise SpecError(f"unknown functional component type {kind!r}")


def functional_from_json(obj):
    obj = load(obj)
    if "terms" in obj and isinstance(obj["terms"], list) and obj["terms"] and "components" in obj["terms"][0]:
        return FunctionalSum([functional_from_json(t) for t in obj["terms"]])
    comps = obj.get("components")
    if not isinstance(comps, list) or not comps:
        raise SpecError("functional needs a non-empty 'components' list")
    parts = [_component(c) for c in comps]
    D = parts[0].D
    if any(p.D != D for p in parts):
        raise SpecError("functional components disagree on the dimension")
    return FunctionalSpec(parts, divisor=_poly(obj.get("divisor"), D), multiplier=_poly(obj.get("multiplier"), D))


def transform_from_json(obj, D=None):
    obj = load(obj)
    masses = functional_from_json(obj["masses"]) if obj.get("masses") else None
    if D is None and masses is not None:
        D = masses.D
    q1 = _poly(obj.get("q1"), D)
    q2 = _poly(obj.get("q2"), D)
    nodes = obj.get("nodes")
    if nodes is not None:
        nodes = np.array([[_number(v) for v in row] for row in nodes])
    return TransformSpec(q1, q2, masses, nodes, D)


def generator_from_json(obj):
    """``{"type": "diagonal" | "kernel" | "composite", ...}``; a bare functional means diagonal."""
    obj = load(obj)
    kind = obj.get("type", "diagonal" if "components" in obj else None)
    if kind == "diagonal":
        return Diagonal(functional_from_json(obj.get("functional", obj)))
    if kind == "kernel":
        try:
            x = np.asarray(obj["x"], dtype=float)
            y = np.asarray(obj["y"], dtype=float)
            w = np.asarray(obj["w"], dtype=float)
        except (KeyError, ValueError) as exc:
            raise SpecError(f"bad kernel generator: {exc}") from exc
        return Kernel(x.reshape(len(x), -1), y.reshape(len(y), -1), w)
    if kind == "composite":
        return CompositeGenerator([generator_from_json(p) for p in obj["parts"]])
    raise SpecError(f"unknown generator type {kind!r}")


def multipoles_from_json(obj):
    return MultipoleSet.from_json(load(obj))


def curve_from_json(obj):
    obj = load(obj)
    return CurvePerturbation(_component({**obj, "type": "curve"}), obj.get("nodes"))


def complex_json(a):
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default)


def _default(o):
    if isinstance(o, np.generic):
        return o.item() if not np.iscomplexobj(o) else [o.real.item(), o.imag.item()]
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return complex_json(o) if np.iscomplexobj(o) else o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")
