"""Command-line front end: validate specs, classify, verify corners,
compute expectations, run the discretized-half-line checks, export curves.

Exit codes: 0 = verdict positive, 1 = verdict negative (witness attached
where applicable), 2 = undecided/unsupported, 3 = malformed input.  A JSON
report is written for exits 0-2; curve commands also write CSV files and
PNG figures rendered from the same data.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .corners import verify_corner
from .errors import (InputError, NotTrivialSpineError, QWeightsError,
                     UnsupportedProfileError, UnsupportedWeightComparisonError)
from .expectation import boundary_expectation, range_rank_trichotomy
from .figures import render_curves, render_recovery
from .flowsim import DiscretizedH, recover_omega
from .generate import generate_qweight
from .io_schemas import (decode_qweight, encode_qweight, grid_from_args,
                         load_input, write_curve_csv, write_report,
                         write_table_csv)
from .purity import classify_rank_one
from .qweight import (AssembledQWeight, RankOneQWeight, RankTwoQWeight,
                      gbr_cp_norm, normal_spine_trivial, obs_lambda,
                      truncated, validate_rank_one, validate_rank_two)
from .weights import obs_id

DEFAULT_SEED = 0xC0FFEE

EXIT_POSITIVE = 0
EXIT_NEGATIVE = 1
EXIT_UNDECIDED = 2
EXIT_INPUT = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qweights",
        description="boundary weights and q-weight maps: checks and reports")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_input: bool = True) -> None:
        if needs_input:
            p.add_argument("input", help="path to the spec JSON file")
        p.add_argument("--grid-min", type=float, default=1e-6)
        p.add_argument("--grid-max", type=float, default=10.0)
        p.add_argument("--grid-points", type=int, default=24)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", default="qweights_out",
                       help="output directory for reports")

    common(sub.add_parser("check", help="validate a q-weight spec"))
    common(sub.add_parser("classify", help="q-purity of a rank-one spec"))
    common(sub.add_parser("corner", help="verify a q-corner spec"))
    common(sub.add_parser("expectation", help="boundary expectation"))
    rank = sub.add_parser("ranktheorem", help="range-rank trichotomy over C^2")
    common(rank, needs_input=False)
    rank.add_argument("input", nargs="?", help="spec file (omit with --generate)")
    rank.add_argument("--generate", type=int, default=0,
                      help="generate N random valid maps instead of reading input")
    common(sub.add_parser("flowsim", help="discretized half-line recovery"))
    common(sub.add_parser("curves", help="export diagnostic curves"))
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    grid = None
    out_dir = None
    try:
        grid = grid_from_args(args.grid_min, args.grid_max, args.grid_points)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        handler = {
            "check": cmd_check, "classify": cmd_classify, "corner": cmd_corner,
            "expectation": cmd_expectation, "ranktheorem": cmd_ranktheorem,
            "flowsim": cmd_flowsim, "curves": cmd_curves,
        }[args.command]
        return handler(args, grid, out_dir)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (UnsupportedProfileError, UnsupportedWeightComparisonError) as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        _error_report(args, grid, out_dir, "unsupported", str(exc))
        return EXIT_UNDECIDED
    except QWeightsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _error_report(args, grid, out_dir, "negative", str(exc))
        return EXIT_NEGATIVE


def _error_report(args, grid, out_dir, verdict: str, message: str) -> None:
    """A report is written for every exit in 0-2, including error verdicts."""
    if grid is None or out_dir is None:
        return
    report = _base(args, grid)
    report.update({"verdict": verdict, "error": message})
    write_report(out_dir / "report.json", report)


def _base(args, grid) -> dict:
    return {"command": args.command, "seed": args.seed,
            "grid": grid.describe(),
            "input": Path(args.input).name if getattr(args, "input", None) else None,
            "tolerance": args.tol}


def _load_qweight(args):
    data = load_input(args.input)
    if "qweight" not in data:
        raise InputError("spec file lacks a 'qweight' entry")
    return decode_qweight(data["qweight"])


def cmd_check(args, grid, out_dir: Path) -> int:
    qw = _load_qweight(args)
    rng = np.random.default_rng(args.seed)
    report = _base(args, grid)
    if isinstance(qw, RankOneQWeight):
        rep = validate_rank_one(qw.T, qw.mu, args.tol)
        contraction = [(float(t), gbr_cp_norm(qw, t)) for t in grid.values()]
        ok = rep.valid and all(v <= 1 + 1e-9 for _, v in contraction)
        report.update({"kind": "rank_one", "valid": ok, "unital": rep.unital,
                       "normalization": rep.normalization,
                       "reasons": rep.reasons,
                       "gbr_norm_curve": contraction,
                       "spine_trivial": normal_spine_trivial(qw, grid).trivial})
    elif isinstance(qw, RankTwoQWeight):
        rep = validate_rank_two(qw, grid, rng, args.tol)
        ok = rep.valid
        report.update({"kind": "rank_two", "valid": rep.valid,
                       "kappa1": rep.kappa1, "kappa2": rep.kappa2,
                       "kappa_errors": [rep.kappa1_error, rep.kappa2_error],
                       "point_xy": list(rep.point_xy),
                       "in_parallelogram": rep.in_parallelogram,
                       "weight_inequalities": rep.weight_inequalities,
                       "reasons": rep.reasons,
                       "h1_curve": rep.h1_curve, "h2_curve": rep.h2_curve,
                       "det_curve": rep.det_curve})
    else:
        from .corners import assemble_theta

        _, theta_rep = assemble_theta(qw.omega1, qw.omega2, qw.corner, grid)
        ok = theta_rep.valid
        report.update({"kind": "assembled", "valid": ok,
                       "reasons": theta_rep.reasons,
                       "cp_curve": theta_rep.cp_curve,
                       "norm_curve": theta_rep.norm_curve,
                       "spine_trivial": normal_spine_trivial(qw, grid).trivial})
    write_report(out_dir / "report.json", report)
    return EXIT_POSITIVE if ok else EXIT_NEGATIVE


def cmd_classify(args, grid, out_dir: Path) -> int:
    qw = _load_qweight(args)
    if not isinstance(qw, RankOneQWeight):
        raise InputError("classify applies to rank-one specs")
    verdict = classify_rank_one(qw, grid)
    report = _base(args, grid)
    report.update({"verdict": verdict.verdict,
                   "failed_condition": verdict.failed_condition,
                   "notes": verdict.notes})
    if verdict.witness is not None:
        witness_path = out_dir / "witness.json"
        write_report(witness_path,
                     {"qweight": encode_qweight(verdict.witness)})
        report["witness"] = encode_qweight(verdict.witness)
        report["witness_file"] = witness_path.name
        report["witness_subordination_holds"] = \
            verdict.witness_subordination.holds
        report["certificates"] = [
            {"t": t, "observable": "block functional matrix over the atom basis",
             "min_eigenvalue": m}
            for t, m in verdict.witness_subordination.min_eigenvalues]
    write_report(out_dir / "report.json", report)
    if verdict.verdict == "QPure":
        return EXIT_POSITIVE
    if verdict.verdict == "NotQPure":
        return EXIT_NEGATIVE
    return EXIT_UNDECIDED


def cmd_corner(args, grid, out_dir: Path) -> int:
    data = load_input(args.input)
    for key in ("omega", "eta", "corner"):
        if key not in data:
            raise InputError(f"corner spec lacks '{key}'")
    from .io_schemas import decode_corner

    omega = decode_qweight(data["omega"])
    eta = decode_qweight(data["eta"])
    if not isinstance(omega, RankOneQWeight) or not isinstance(eta, RankOneQWeight):
        raise InputError("corner verification needs rank-one blocks")
    corner = decode_corner(data["corner"], omega, eta)
    rng = np.random.default_rng(args.seed)
    rep = verify_corner(omega, eta, corner, grid, rng)
    report = _base(args, grid)
    report.update({"is_q_corner": rep.is_q_corner, "kappa": rep.kappa,
                   "kappa_error": rep.h_curve.kappa_error,
                   "trivially_maximal": rep.trivially_maximal,
                   "reasons": rep.reasons,
                   "scale": corner.scale,
                   "diagnostics": {k: v for k, v in corner.diagnostics.items()
                                   if k != "zeta_pairs"}})
    h_rows = rep.h_curve.moduli()
    write_curve_csv(out_dir / "h_curve.csv", h_rows, ("t", "abs_h"))
    render_curves({"|h(t)|": h_rows}, out_dir / "h_curve.png",
                  "corner h-curve", ylabel="|h(t)|")
    report["h_curve_csv"] = "h_curve.csv"
    write_report(out_dir / "report.json", report)
    return EXIT_POSITIVE if rep.is_q_corner else EXIT_NEGATIVE


def cmd_expectation(args, grid, out_dir: Path) -> int:
    qw = _load_qweight(args)
    report = _base(args, grid)
    try:
        result = boundary_expectation(qw)
    except NotTrivialSpineError as exc:
        report.update({"converged": False, "error": str(exc)})
        write_report(out_dir / "report.json", report)
        return EXIT_NEGATIVE
    k = qw.dim_k
    L_matrix = result.L.map_matrix()
    report.update({"converged": result.converged,
                   "extrapolation_error": result.extrapolation_error,
                   "axioms": result.axioms,
                   "L_matrix": L_matrix,
                   "dim_k": k})
    write_curve_csv(out_dir / "residuals.csv", result.residual_curve,
                    ("t", "residual"))
    render_curves({"residual": result.residual_curve},
                  out_dir / "residuals.png",
                  "boundary expectation residuals", ylabel="||L_t - L||",
                  logy=True)
    report["residual_csv"] = "residuals.csv"
    write_report(out_dir / "report.json", report)
    if not result.converged:
        return EXIT_UNDECIDED
    ok = all(result.axioms[key] for key in
             ("cp", "fixes_range", "range_equality", "idempotent_norm_one"))
    return EXIT_POSITIVE if ok else EXIT_NEGATIVE


def cmd_ranktheorem(args, grid, out_dir: Path) -> int:
    rng = np.random.default_rng(args.seed)
    report = _base(args, grid)
    if args.generate > 0:
        rows = []
        all_ok = True
        for i in range(args.generate):
            qw = generate_qweight(rng)
            tri = range_rank_trichotomy(qw, rng)
            rows.append({"index": i, "kind": type(qw).__name__,
                         "rank": tri.rank, "consistent": tri.consistent})
            all_ok = all_ok and tri.consistent
        report.update({"generated": args.generate, "results": rows,
                       "all_consistent": all_ok})
        write_report(out_dir / "report.json", report)
        return EXIT_POSITIVE if all_ok else EXIT_NEGATIVE
    if not args.input:
        raise InputError("ranktheorem needs a spec file or --generate N")
    qw = _load_qweight(args)
    tri = range_rank_trichotomy(qw, rng)
    report.update({"rank": tri.rank, "consistent": tri.consistent,
                   "q_pure_possible": tri.q_pure_possible})
    write_report(out_dir / "report.json", report)
    return EXIT_POSITIVE if tri.consistent else EXIT_NEGATIVE


def cmd_flowsim(args, grid, out_dir: Path) -> int:
    data = load_input(args.input)
    if "qweight" not in data:
        raise InputError("spec file lacks a 'qweight' entry")
    qw = decode_qweight(data["qweight"])
    if isinstance(qw, AssembledQWeight):
        raise InputError("flowsim supports rank-one and rank-two specs")
    cfg = data.get("flowsim", {})
    m = int(cfg.get("m", 2000))
    horizon = float(cfg.get("horizon", 20.0))
    x = float(cfg.get("x", 1.0))
    observables = [obs_id(qw.dim_k, (x, math.inf)),
                   obs_lambda(np.eye(qw.dim_k), (x, math.inf))]
    rows_m = recover_omega(qw, observables, DiscretizedH(qw.dim_k, m, horizon))
    rows_2m = recover_omega(qw, observables,
                            DiscretizedH(qw.dim_k, 2 * m, horizon))
    table = []
    ok = True
    for r1, r2 in zip(rows_m, rows_2m):
        improvement = r1.rel_err / max(r2.rel_err, 1e-300)
        table.append([m, r1.observable, f"{r1.direct:.12g}",
                      f"{r1.recovered:.12g}", f"{r1.rel_err:.6g}"])
        table.append([2 * m, r2.observable, f"{r2.direct:.12g}",
                      f"{r2.recovered:.12g}", f"{r2.rel_err:.6g}"])
        ok = ok and r1.rel_err <= 0.02 and improvement >= 1.5
    write_table_csv(out_dir / "recovery.csv",
                    ["m", "observable", "direct", "recovered", "rel_err"],
                    table)
    render_recovery(rows_m + rows_2m, out_dir / "recovery.png",
                    f"recovery at m = {m} and {2 * m}")
    report = _base(args, grid)
    report.update({"m": m, "horizon": horizon, "x": x, "passes": ok,
                   "rows": [asdict(r) for r in rows_m + rows_2m],
                   "recovery_csv": "recovery.csv"})
    write_report(out_dir / "report.json", report)
    return EXIT_POSITIVE if ok else EXIT_NEGATIVE


def cmd_curves(args, grid, out_dir: Path) -> int:
    qw = _load_qweight(args)
    rng = np.random.default_rng(args.seed)
    report = _base(args, grid)
    files = []
    if isinstance(qw, RankTwoQWeight):
        rep = validate_rank_two(qw, grid, rng, args.tol)
        for name, curve in (("h1", rep.h1_curve), ("h2", rep.h2_curve),
                            ("det", rep.det_curve)):
            write_curve_csv(out_dir / f"{name}.csv", curve)
            files.append(f"{name}.csv")
        render_curves({"h1": rep.h1_curve, "h2": rep.h2_curve},
                      out_dir / "h_curves.png", "rank-two h functions")
        render_curves({"det(I+X)": rep.det_curve}, out_dir / "det.png",
                      "determinant curve")
        files.extend(["h_curves.png", "det.png"])
    elif isinstance(qw, RankOneQWeight):
        curve = [(float(t), 1.0 / (1.0 + truncated(qw.mu, obs_lambda(qw.T), t)))
                 for t in grid.values()]
        write_curve_csv(out_dir / "coefficient.csv", curve, ("t", "c"))
        render_curves({"c(t)": curve}, out_dir / "coefficient.png",
                      "rank-one GBR coefficient")
        files.extend(["coefficient.csv", "coefficient.png"])
    else:
        curve = [(float(t), gbr_cp_norm(qw, t)) for t in grid.values()]
        write_curve_csv(out_dir / "theta_norm.csv", curve, ("t", "norm"))
        render_curves({"||Pi_t(I)||": curve}, out_dir / "theta_norm.png",
                      "assembled GBR norm")
        files.extend(["theta_norm.csv", "theta_norm.png"])
    report["files"] = files
    write_report(out_dir / "report.json", report)
    return EXIT_POSITIVE


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
