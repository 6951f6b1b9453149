"""JSON schemas and (de)serialization for specs and reports.

Matrices are arrays of [re, im] pairs in row-major order; weights, q-weight
maps and corner specs follow the layouts documented in docs/schemas.md.
Input validation rejects unknown fields.  Reports are written with sorted
keys so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .corners import CornerData
from .errors import InputError
from .profiles import (GridSampledProfile, Profile, PowerTerm,
                       power_exp, powers_canonical)
from .qweight import (AssembledQWeight, QWeightMap, RankOneQWeight,
                      RankTwoQWeight, TGrid)
from .weights import BoundaryWeight, WeightAtom

SCHEMA_VERSION = 1

_complex = {"type": "array", "minItems": 2, "maxItems": 2,
            "items": {"type": "number"}}
_matrix = {"type": "array", "items": {"type": "array", "items": _complex}}
_vector = {"type": "array", "items": _complex}

_power_term = {
    "type": "object",
    "properties": {"amplitude": _complex, "p": {"type": "number"},
                   "s": {"type": "number", "exclusiveMinimum": 0}},
    "required": ["amplitude", "p", "s"],
    "additionalProperties": False,
}

_profile = {
    "oneOf": [
        {"type": "object",
         "properties": {"kind": {"const": "powers_canonical"}},
         "required": ["kind"], "additionalProperties": False},
        {"type": "object",
         "properties": {"kind": {"const": "power_exp"}, "amplitude": _complex,
                        "p": {"type": "number"},
                        "s": {"type": "number", "exclusiveMinimum": 0}},
         "required": ["kind", "amplitude", "p", "s"],
         "additionalProperties": False},
        {"type": "object",
         "properties": {"kind": {"const": "poly_exp"},
                        "canonical_amplitude": _complex,
                        "terms": {"type": "array", "items": _power_term}},
         "required": ["kind", "terms"], "additionalProperties": False},
        {"type": "object",
         "properties": {"kind": {"const": "grid_sampled"},
                        "knots": {"type": "array",
                                  "items": {"type": "number"}},
                        "values": _vector},
         "required": ["kind", "knots", "values"],
         "additionalProperties": False},
    ]
}

_weight_term = {
    "type": "object",
    "properties": {"lambda": {"type": "number", "exclusiveMinimum": 0},
                   "vector": _vector, "profile": _profile},
    "required": ["lambda", "vector", "profile"],
    "additionalProperties": False,
}

_weight = {
    "type": "object",
    "properties": {"dim_k": {"type": "integer", "minimum": 1},
                   "terms": {"type": "array", "items": _weight_term}},
    "required": ["dim_k", "terms"],
    "additionalProperties": False,
}

_rank_one = {
    "type": "object",
    "properties": {"kind": {"const": "rank_one"}, "T": _matrix, "mu": _weight},
    "required": ["kind", "T", "mu"],
    "additionalProperties": False,
}

_rank_two = {
    "type": "object",
    "properties": {"kind": {"const": "rank_two"}, "e1": _matrix, "e2": _matrix,
                   "mu1": _weight, "mu2": _weight},
    "required": ["kind", "e1", "e2", "mu1", "mu2"],
    "additionalProperties": False,
}

_corner_atom = {
    "type": "object",
    "properties": {"coefficient": _complex, "vector": _vector,
                   "profile": _profile},
    "required": ["coefficient", "vector", "profile"],
    "additionalProperties": False,
}

_corner_spec = {
    "oneOf": [
        {"type": "object",
         "properties": {"U": _matrix, "z": {"type": "number",
                                            "exclusiveMinimum": 0},
                        "h_atoms": {"type": "array",
                                    "items": {"oneOf": [{"type": "null"},
                                                        _corner_atom]}}},
         "required": ["U", "z"], "additionalProperties": False},
        {"type": "object",
         "properties": {"Q": _matrix,
                        "tau": {"type": "object",
                                "properties": {"pairs": {
                                    "type": "array",
                                    "items": {"type": "object",
                                              "properties": {
                                                  "coefficient": _complex,
                                                  "bra": _corner_atom,
                                                  "ket": _corner_atom},
                                              "required": ["coefficient",
                                                           "bra", "ket"],
                                              "additionalProperties": False}}},
                                "required": ["pairs"],
                                "additionalProperties": False},
                        "lambda": {"type": "number", "exclusiveMinimum": 0}},
         "required": ["Q", "tau", "lambda"], "additionalProperties": False},
    ]
}

_assembled = {
    "type": "object",
    "properties": {"kind": {"const": "assembled"},
                   "omega1": _rank_one, "omega2": _rank_one,
                   "corner": {"oneOf": [{"type": "null"}, _corner_spec]}},
    "required": ["kind", "omega1", "omega2"],
    "additionalProperties": False,
}

QWEIGHT_SCHEMA = {"oneOf": [_rank_one, _rank_two, _assembled]}

INPUT_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "qweight": QWEIGHT_SCHEMA,
        "omega": QWEIGHT_SCHEMA,
        "eta": QWEIGHT_SCHEMA,
        "corner": _corner_spec,
        "flowsim": {"type": "object",
                    "properties": {"m": {"type": "integer", "minimum": 8},
                                   "horizon": {"type": "number",
                                               "exclusiveMinimum": 0},
                                   "x": {"type": "number", "minimum": 0}},
                    "additionalProperties": False},
    },
    "required": ["schema_version"],
    "additionalProperties": False,
}


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------

def _c(pair) -> complex:
    return complex(pair[0], pair[1])


def _decode_matrix(rows) -> np.ndarray:
    return np.array([[_c(z) for z in row] for row in rows], dtype=complex)


def _decode_profile(obj) -> Profile | GridSampledProfile:
    kind = obj["kind"]
    if kind == "powers_canonical":
        return powers_canonical()
    if kind == "power_exp":
        return power_exp(_c(obj["amplitude"]), obj["p"], obj["s"])
    if kind == "poly_exp":
        terms = tuple(PowerTerm(_c(t["amplitude"]), t["p"], t["s"])
                      for t in obj["terms"])
        can = _c(obj.get("canonical_amplitude", [0.0, 0.0]))
        return Profile(can, terms)
    if kind == "grid_sampled":
        return GridSampledProfile(tuple(obj["knots"]),
                                  tuple(_c(v) for v in obj["values"]))
    raise InputError(f"unknown profile kind {kind}")


def decode_weight(obj) -> BoundaryWeight:
    terms = [(t["lambda"], tuple(_c(z) for z in t["vector"]),
              _decode_profile(t["profile"])) for t in obj["terms"]]
    return BoundaryWeight.from_terms(obj["dim_k"], terms)


def decode_qweight(obj) -> QWeightMap:
    kind = obj["kind"]
    if kind == "rank_one":
        return RankOneQWeight(_decode_matrix(obj["T"]), decode_weight(obj["mu"]))
    if kind == "rank_two":
        return RankTwoQWeight(_decode_matrix(obj["e1"]), _decode_matrix(obj["e2"]),
                              decode_weight(obj["mu1"]), decode_weight(obj["mu2"]))
    if kind == "assembled":
        omega1 = decode_qweight(obj["omega1"])
        omega2 = decode_qweight(obj["omega2"])
        corner = None
        if obj.get("corner") is not None:
            corner = decode_corner(obj["corner"], omega1, omega2)
        return AssembledQWeight(omega1, omega2, corner)
    raise InputError(f"unknown q-weight kind {kind}")


def _decode_corner_atom(obj) -> tuple[complex, WeightAtom]:
    vector = tuple(_c(z) for z in obj["vector"])
    return (_c(obj["coefficient"]), WeightAtom(vector, _decode_profile(obj["profile"])))


def decode_corner(obj, omega1: RankOneQWeight,
                  omega2: RankOneQWeight) -> CornerData:
    from .corners import corner_candidate

    if "U" in obj:
        h_atoms = None
        if "h_atoms" in obj:
            h_atoms = [None if entry is None else _decode_corner_atom(entry)
                       for entry in obj["h_atoms"]]
        return corner_candidate(omega1, omega2, _decode_matrix(obj["U"]),
                                obj["z"], h_atoms)
    pairs = [(_c(p["coefficient"]), _decode_corner_atom(p["bra"])[1],
              _decode_corner_atom(p["ket"])[1]) for p in obj["tau"]["pairs"]]
    return CornerData(_decode_matrix(obj["Q"]), pairs, obj["lambda"])


def load_input(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    try:
        jsonschema.validate(data, INPUT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InputError(f"schema violation in {path}: {exc.message}") from exc
    return data


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

def _enc_c(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_matrix(M: np.ndarray) -> list:
    return [[_enc_c(z) for z in row] for row in np.asarray(M, dtype=complex)]


def encode_profile(profile) -> dict:
    if isinstance(profile, GridSampledProfile):
        return {"kind": "grid_sampled", "knots": list(profile.knots),
                "values": [_enc_c(v) for v in profile.values]}
    if abs(profile.canonical_amp - 1.0) < 1e-15 and not profile.terms:
        return {"kind": "powers_canonical"}
    if abs(profile.canonical_amp) < 1e-15 and len(profile.terms) == 1:
        t = profile.terms[0]
        return {"kind": "power_exp", "amplitude": _enc_c(t.amp),
                "p": t.p, "s": t.s}
    return {"kind": "poly_exp", "canonical_amplitude": _enc_c(profile.canonical_amp),
            "terms": [{"amplitude": _enc_c(t.amp), "p": t.p, "s": t.s}
                      for t in profile.terms]}


def encode_weight(mu: BoundaryWeight) -> dict:
    return {"dim_k": mu.dim_k,
            "terms": [{"lambda": float(lam),
                       "vector": [_enc_c(z) for z in atom.vector],
                       "profile": encode_profile(atom.profile)}
                      for lam, atom in mu.terms]}


def encode_qweight(qw: QWeightMap) -> dict:
    if isinstance(qw, RankOneQWeight):
        return {"kind": "rank_one", "T": encode_matrix(qw.T),
                "mu": encode_weight(qw.mu)}
    if isinstance(qw, RankTwoQWeight):
        return {"kind": "rank_two", "e1": encode_matrix(qw.e1),
                "e2": encode_matrix(qw.e2), "mu1": encode_weight(qw.mu1),
                "mu2": encode_weight(qw.mu2)}
    out = {"kind": "assembled", "omega1": encode_qweight(qw.omega1),
           "omega2": encode_qweight(qw.omega2)}
    if qw.corner is not None:
        out["corner"] = encode_corner(qw.corner)
    else:
        out["corner"] = None
    return out


def encode_corner(corner: CornerData) -> dict:
    return {"Q": encode_matrix(corner.Q), "lambda": float(corner.scale),
            "tau": {"pairs": [
                {"coefficient": _enc_c(coef),
                 "bra": {"coefficient": _enc_c(1.0),
                         "vector": [_enc_c(z) for z in bra.vector],
                         "profile": encode_profile(bra.profile)},
                 "ket": {"coefficient": _enc_c(1.0),
                         "vector": [_enc_c(z) for z in ket.vector],
                         "profile": encode_profile(ket.profile)}}
                for coef, bra, ket in corner.tau_pairs]}}


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _jsonable(value: Any) -> Any:
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return "inf" if math.isinf(v) else v
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, complex):
        return _enc_c(value)
    if isinstance(value, np.ndarray):
        return encode_matrix(value) if value.ndim == 2 else \
            [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_report(path: str | Path, payload: dict) -> None:
    body = {"schema_version": SCHEMA_VERSION, **payload}
    Path(path).write_text(json.dumps(_jsonable(body), indent=2,
                                     sort_keys=True) + "\n")


def write_curve_csv(path: str | Path, rows: list[tuple[float, float]],
                    header: tuple[str, str] = ("t", "value")) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, v in rows:
            writer.writerow([f"{t:.12g}", f"{v:.12g}"])


def write_table_csv(path: str | Path, header: list[str],
                    rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def grid_from_args(t_min: float, t_max: float, points: int) -> TGrid:
    try:
        return TGrid(t_min, t_max, points)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def shipped_spec_path(name: str) -> Path:
    """Path of a spec file bundled with the package."""
    from importlib import resources

    root = resources.files("qweights").joinpath("data/specs")
    path = Path(str(root)) / name
    if not path.exists():
        raise InputError(f"no shipped spec named {name}")
    return path


def shipped_spec_names() -> list[str]:
    from importlib import resources

    root = Path(str(resources.files("qweights").joinpath("data/specs")))
    return sorted(p.name for p in root.glob("*.json"))
