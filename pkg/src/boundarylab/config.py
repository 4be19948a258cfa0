"""JSON experiment configuration: validation and object construction.

Every record is validated against an explicit key schema before any
computation; unknown keys are rejected with the offending field named, so
typos never silently change an experiment.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .geometry import BoundaryGraph
from .modulus import CompositeModulus, Modulus, constant, log_modulus, make_composite, power, table
from .pucci import EllipticityPair
from .solver import FixedOp, LaplaceOp, PucciOp

__all__ = [
    "load_config", "modulus_from_config", "graph_from_config",
    "operator_from_config", "ellipticity_from_config", "data_from_config",
]

SCHEMA_VERSION = 1


def _check_keys(rec: dict, where: str, required: set, optional: set = frozenset()):
    if not isinstance(rec, dict):
        raise ConfigError(f"{where}: expected an object, got {type(rec).__name__}")
    keys = set(rec)
    unknown = keys - required - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - keys
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _positive(rec, key, where):
    v = rec[key]
    if not isinstance(v, (int, float)) or not v > 0:
        raise ConfigError(f"{where}.{key}: expected a positive number, got {v!r}")
    return float(v)


def load_config(path) -> dict:
    """Read a config file and check the schema version field."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"config schema_version {raw.get('schema_version')!r} != {SCHEMA_VERSION}"
        )
    return raw


def modulus_from_config(rec, where: str = "modulus"):
    kind = rec.get("kind") if isinstance(rec, dict) else None
    if kind == "constant":
        _check_keys(rec, where, {"kind", "L"}, {"t0"})
        return constant(float(rec["L"]), float(rec.get("t0", 1.0)))
    if kind == "power":
        _check_keys(rec, where, {"kind", "alpha"}, {"scale", "t0"})
        return power(_positive(rec, "alpha", where), float(rec.get("scale", 1.0)),
                     float(rec.get("t0", 1.0)))
    if kind == "log":
        _check_keys(rec, where, {"kind"}, {"c", "t0"})
        return log_modulus(float(rec.get("c", 1.0)), float(rec.get("t0", 0.5)))
    if kind == "table":
        _check_keys(rec, where, {"kind", "ts", "values"}, {"t0"})
        return table(rec["ts"], rec["values"],
                     float(rec["t0"]) if "t0" in rec else None)
    if kind == "composite":
        _check_keys(rec, where, {"kind", "a", "b", "c", "omega1", "omega2"})
        return make_composite(
            _positive(rec, "a", where), _positive(rec, "b", where),
            _positive(rec, "c", where),
            modulus_from_config(rec["omega1"], where + ".omega1"),
            modulus_from_config(rec["omega2"], where + ".omega2"))
    raise ConfigError(f"{where}.kind: unknown modulus kind {kind!r}")


def graph_from_config(rec, where: str = "domain") -> BoundaryGraph:
    family = rec.get("family") if isinstance(rec, dict) else None
    common = {"family", "dim", "chart_radius"}
    per = {"zero": set(), "linear": {"a"}, "cone": {"L"}, "c1model": {"omega"},
           "sinusoid": {"A", "k"}, "table": {"ts", "values"}}
    if family not in per:
        raise ConfigError(f"{where}.family: unknown family {family!r}")
    optional = common - {"family"}
    if family == "c1model":
        optional = optional | {"sign"}
    _check_keys(rec, where, {"family"} | per[family], optional)
    kwargs = {}
    if family == "c1model" and "sign" in rec:
        kwargs["sign"] = float(rec["sign"])
    if family == "linear":
        kwargs["a"] = rec["a"]
    elif family == "cone":
        kwargs["L"] = float(rec["L"])
    elif family == "c1model":
        kwargs["omega"] = modulus_from_config(rec["omega"], where + ".omega")
    elif family == "sinusoid":
        kwargs["A"] = float(rec["A"])
        kwargs["k"] = float(rec["k"])
    elif family == "table":
        kwargs["ts"] = rec["ts"]
        kwargs["values"] = rec["values"]
    return BoundaryGraph(family, dim=int(rec.get("dim", 2)),
                         chart_radius=float(rec.get("chart_radius", 0.5)), **kwargs)


def ellipticity_from_config(rec, where: str = "ellipticity") -> EllipticityPair:
    _check_keys(rec, where, {"lam", "Lam"})
    lam, Lam = rec["lam"], rec["Lam"]
    if not (isinstance(lam, (int, float)) and isinstance(Lam, (int, float))
            and 0 < lam <= Lam):
        raise ConfigError(f"{where}: need numbers 0 < lam <= Lam, got {rec}")
    return EllipticityPair(float(lam), float(Lam))


def operator_from_config(rec, where: str = "operator"):
    kind = rec.get("kind") if isinstance(rec, dict) else None
    if kind == "laplace":
        _check_keys(rec, where, {"kind"})
        return LaplaceOp()
    if kind == "fixed":
        _check_keys(rec, where, {"kind", "A"}, {"ellipticity"})
        A = np.asarray(rec["A"], dtype=float)
        if A.shape != (2, 2) or not np.allclose(A, A.T):
            raise ConfigError(f"{where}.A: expected a symmetric 2x2 matrix")
        E = (ellipticity_from_config(rec["ellipticity"], where + ".ellipticity")
             if "ellipticity" in rec else None)
        return FixedOp(A=lambda x, _A=A: _A, E=E)
    if kind in ("pucci_minus", "pucci_plus"):
        _check_keys(rec, where, {"kind", "ellipticity"})
        E = ellipticity_from_config(rec["ellipticity"], where + ".ellipticity")
        return PucciOp(E, "minus" if kind == "pucci_minus" else "plus")
    raise ConfigError(f"{where}.kind: unknown operator kind {kind!r}")


def data_from_config(rec, where: str = "data"):
    """Boundary/forcing data as a callable on (m, n) point arrays.

    Forms: {"name": "zero"}, {"name": "constant", "value": v},
    {"name": "linear", "coeffs": [...], "offset": c} meaning
    offset + coeffs . x (length n, so x_n data is coeffs=[0,1]).
    """
    name = rec.get("name") if isinstance(rec, dict) else None
    if name == "zero":
        _check_keys(rec, where, {"name"})
        return lambda p: np.zeros(len(np.atleast_2d(p)))
    if name == "constant":
        _check_keys(rec, where, {"name", "value"})
        v = float(rec["value"])
        return lambda p: np.full(len(np.atleast_2d(p)), v)
    if name == "linear":
        _check_keys(rec, where, {"name", "coeffs"}, {"offset"})
        coeffs = np.asarray(rec["coeffs"], dtype=float)
        off = float(rec.get("offset", 0.0))
        return lambda p: off + np.atleast_2d(p) @ coeffs
    raise ConfigError(f"{where}.name: unknown data form {name!r}")
