#!/usr/bin/env python3
"""Regenerate the shipped spec fixtures under src/qweights/data/specs."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from qweights.io_schemas import SCHEMA_VERSION, encode_qweight
from qweights.profiles import (Kernel, pair_profiles, power_exp,
                               powers_canonical)
from qweights.qweight import (RankOneQWeight, RankTwoQWeight,
                              validate_rank_one, validate_rank_two)
from qweights.weights import BoundaryWeight

OUT = Path(__file__).resolve().parents[1] / "src" / "qweights" / "data" / "specs"

CAN = powers_canonical()


def norm_one_minus(profile) -> float:
    return float(np.real(pair_profiles(profile, profile, Kernel.ONE_MINUS_EXP,
                                       0.0, math.inf, same_atom=True)))


def save(name: str, payload: dict) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    body = {"schema_version": SCHEMA_VERSION, **payload}
    (OUT / name).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    print("wrote", name)


def rank_one_specs() -> list[tuple[str, RankOneQWeight]]:
    specs = []
    # 01: canonical over C^1, unital
    mu0 = BoundaryWeight.from_terms(1, [(1.0, (1.0,), CAN)])
    specs.append(("rank_one_01_canonical", RankOneQWeight(np.eye(1), mu0)))
    # 02: canonical over C^2, unital
    mu = BoundaryWeight.from_terms(2, [(0.5, (1, 0), CAN), (0.5, (0, 1), CAN)])
    specs.append(("rank_one_02_canonical_c2", RankOneQWeight(np.eye(2), mu)))
    # 03: rank-one projection with canonical divergence inside its range
    mu = BoundaryWeight.from_terms(2, [(0.9, (1, 0), CAN)])
    specs.append(("rank_one_03_projection", RankOneQWeight(np.diag([1.0, 0.0]), mu)))
    # 04: non-unital T = I over C^2
    mu = BoundaryWeight.from_terms(2, [(0.4, (1, 0), CAN), (0.3, (0, 1), CAN)])
    specs.append(("rank_one_04_nonunital", RankOneQWeight(np.eye(2), mu)))
    # 05: power-exponential singular atom p = -1/2
    prof = power_exp(1.0, -0.5, 1.0)
    lam = 0.8 / norm_one_minus(prof)
    mu = BoundaryWeight.from_terms(1, [(lam, (1.0,), prof)])
    specs.append(("rank_one_05_powerexp_half", RankOneQWeight(np.eye(1), mu)))
    # 06: deeper singularity p = -3/4
    prof = power_exp(1.0, -0.75, 1.5)
    lam = 0.7 / norm_one_minus(prof)
    mu = BoundaryWeight.from_terms(1, [(lam, (1.0,), prof)])
    specs.append(("rank_one_06_powerexp_deep", RankOneQWeight(np.eye(1), mu)))
    # 07: mixed canonical and power-exp divergence over C^2
    prof = power_exp(1.0, -0.75, 1.0)
    lam = 0.3 / norm_one_minus(prof)
    mu = BoundaryWeight.from_terms(2, [(0.6, (1, 0), CAN),
                                       (lam, (0, 1), prof)])
    specs.append(("rank_one_07_mixed", RankOneQWeight(np.eye(2), mu)))
    # 08: rotated rank-one projection
    th = 0.6
    u = (math.cos(th), math.sin(th))
    T = np.outer(u, u)
    mu = BoundaryWeight.from_terms(2, [(0.85, u, CAN)])
    specs.append(("rank_one_08_rotated", RankOneQWeight(T, mu)))
    # 09: rank-two projection over C^3
    T = np.diag([1.0, 1.0, 0.0])
    mu = BoundaryWeight.from_terms(3, [(0.45, (1, 0, 0), CAN),
                                       (0.45, (0, 1, 0), CAN)])
    specs.append(("rank_one_09_c3", RankOneQWeight(T, mu)))
    # 10: canonical plus a bounded atom
    bounded = power_exp(1.0, 0.0, 2.0)
    lam_b = 0.15 / norm_one_minus(bounded)
    mu = BoundaryWeight.from_terms(1, [(0.8, (1.0,), CAN),
                                       (lam_b, (1.0,), bounded)])
    specs.append(("rank_one_10_mixed_bounded", RankOneQWeight(np.eye(1), mu)))
    return specs


def rank_two_specs() -> list[tuple[str, RankTwoQWeight]]:
    e1 = np.diag([1.0, 0.0])
    e2 = np.diag([0.0, 1.0])

    def shared(al, be, ga, de, u1=(1, 0), u2=(0, 1), f1=None, f2=None):
        f1 = np.outer(u1, np.conjugate(u1)) if f1 is None else f1
        f2 = np.outer(u2, np.conjugate(u2)) if f2 is None else f2
        terms1 = [(al, u1, CAN)] + ([(be, u2, CAN)] if be > 0 else [])
        terms2 = [(de, u2, CAN)] + ([(ga, u1, CAN)] if ga > 0 else [])
        mu1 = BoundaryWeight.from_terms(len(u1), terms1)
        mu2 = BoundaryWeight.from_terms(len(u1), terms2)
        return RankTwoQWeight(f1, f2, mu1, mu2)

    th = 0.8
    u1 = (math.cos(th), math.sin(th))
    u2 = (-math.sin(th), math.cos(th))
    specs = [
        ("rank_two_01_generic", shared(0.5, 0.1, 0.2, 0.4)),
        ("rank_two_02_orthogonal", shared(0.6, 0.0, 0.0, 0.55)),
        ("rank_two_03_rotated", shared(0.45, 0.2, 0.1, 0.5, u1, u2)),
        ("rank_two_04_tight", shared(0.3, 0.24, 0.18, 0.3)),
        ("rank_two_05_c3", None),  # filled below
    ]
    # over C^3 with a spare direction
    e1c = np.diag([1.0, 0.0, 0.0])
    e2c = np.diag([0.0, 1.0, 0.0])
    mu1 = BoundaryWeight.from_terms(3, [(0.5, (1, 0, 0), CAN),
                                        (0.1, (0, 1, 0), CAN)])
    mu2 = BoundaryWeight.from_terms(3, [(0.2, (1, 0, 0), CAN),
                                        (0.4, (0, 1, 0), CAN)])
    specs[-1] = ("rank_two_05_c3", RankTwoQWeight(e1c, e2c, mu1, mu2))
    return specs


def main() -> None:
    for name, qw in rank_one_specs():
        rep = validate_rank_one(qw.T, qw.mu)
        assert rep.valid, (name, rep.reasons)
        save(name + ".json", {"qweight": encode_qweight(qw)})

    rng = np.random.default_rng(0xC0FFEE)
    for name, qw in rank_two_specs():
        rep = validate_rank_two(qw, rng=rng)
        assert rep.valid, (name, rep.reasons)
        save(name + ".json", {"qweight": encode_qweight(qw)})

    # an intentionally invalid rank-two map: (x, y) outside the box
    e1 = np.diag([1.0, 0.0])
    e2 = np.diag([0.0, 1.0])
    mu1 = BoundaryWeight.from_terms(2, [(0.9, (1, 0), CAN), (0.35, (0, 1), CAN)])
    mu2 = BoundaryWeight.from_terms(2, [(0.2, (1, 0), CAN), (0.5, (0, 1), CAN)])
    bad = RankTwoQWeight(e1, e2, mu1, mu2)
    rep = validate_rank_two(bad, rng=rng)
    assert not rep.valid, "expected the box violation to be caught"
    save("rank_two_invalid_box.json", {"qweight": encode_qweight(bad)})

    # classify demo: T = diag(1, 1/2) with a small bounded weight
    T = np.diag([1.0, 0.5])
    v = (1 / math.sqrt(2), 1 / math.sqrt(2))
    mu = BoundaryWeight.from_terms(2, [(1.0, v, power_exp(1.0, 0.0, 1.0))])
    save("classify_diag_T.json",
         {"qweight": encode_qweight(RankOneQWeight(T, mu))})

    # corner spec: canonical blocks with U = 1, z = 1
    mu0 = BoundaryWeight.from_terms(1, [(1.0, (1.0,), CAN)])
    omega = encode_qweight(RankOneQWeight(np.eye(1), mu0))
    save("corner_canonical.json",
         {"omega": omega, "eta": omega,
          "corner": {"U": [[[1.0, 0.0]]], "z": 1.0}})

    # flowsim inputs
    save("flowsim_canonical.json",
         {"qweight": omega, "flowsim": {"m": 2000, "horizon": 20.0, "x": 1.0}})
    bounded = power_exp(1.0, 0.0, 1.0)
    mub = BoundaryWeight.from_terms(1, [(0.5, (1.0,), bounded)])
    save("flowsim_bounded.json",
         {"qweight": encode_qweight(RankOneQWeight(np.eye(1), mub)),
          "flowsim": {"m": 2000, "horizon": 20.0, "x": 1.0}})


if __name__ == "__main__":
    main()
