"""Command-line entry point wiring generation, evolution, and analysis.

Subcommands: gen, evolve, score, scan, classify, paraproduct, lemmas,
report.  Exit codes: 0 ok, 1 check failure, 2 usage or malformed input,
3 numeric fault.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .biotsavart import lifted_velocity_from_g
from .errors import FormatError, NumericFault, SwirllabError
from .extraction import sup_scan
from .fitting import calibrate_constants
from .grid import get_grid
from .lemmas import SuiteConfig, run_suite
from .packets import ClassifyParams, centered_window, classify, detect_packets, window_cover
from .paraproduct import decompose_nonlinearity
from .solver import SolverConfig, initial_data, run
from .spectral import DyadicPartition
from .swrlio import (make_check, make_report, read_fields, write_csv,
                     write_fields, write_json)

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _emit(args, report: dict, name: str) -> None:
    path = _out_path(args, name)
    write_json(path, report)
    if args.json:
        json.dump(report, sys.stdout, indent=2, default=str)
        sys.stdout.write("\n")
    else:
        print(f"wrote {path}")


def cmd_gen(args) -> int:
    grid = get_grid(args.nr, args.nz, args.r_max, args.l_z)
    kw = {"amplitude": args.amplitude, "ratio": args.ratio,
          "shells": args.shells}
    if args.sigma is not None:
        kw["sigma"] = args.sigma
    gamma, g = initial_data(args.recipe, grid, seed=args.seed, **kw)
    out = args.field_out or _out_path(args, f"{args.recipe}.swrl")
    write_fields(out, grid, {"gamma": gamma, "g": g}, time=0.0)
    meta = make_report("gen", {"recipe": args.recipe, "seed": args.seed,
                               "nr": args.nr, "nz": args.nz,
                               "r_max": args.r_max, "l_z": args.l_z,
                               "amplitude": args.amplitude,
                               "ratio": args.ratio, "shells": args.shells},
                       [], field_file=os.path.basename(out))
    _emit(args, meta, os.path.basename(out) + ".json")
    return EXIT_OK


def cmd_evolve(args) -> int:
    if args.config:
        with open(args.config) as fh:
            cfg = SolverConfig.from_text(fh.read())
    else:
        cfg = SolverConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    snapshots_meta = []

    def on_snapshot(state):
        name = f"snap_{len(snapshots_meta):04d}.swrl"
        write_fields(_out_path(args, name), state.grid,
                     {"gamma": state.gamma, "g": state.g}, time=state.time)
        entry = {"time": state.time, "file": name, "energy": state.energy,
                 "dissipation": state.dissipation, "gamma_max": state.gamma_max}
        try:
            scan = sup_scan(state.g, (4.5 * state.grid.dr_max,
                                      state.grid.r_max / 2.0))
            entry["q_star"] = scan.q_star
        except SwirllabError:
            entry["q_star"] = None
        snapshots_meta.append(entry)

    result = run(cfg, on_snapshot=on_snapshot)
    checks = []
    energies = [s["energy"] for s in snapshots_meta]
    if len(energies) >= 2:
        checks.append(make_check("energy_nonincreasing",
                                 max(np.diff(energies)), 1e-9,
                                 bool(max(np.diff(energies)) <= 1e-9)))
    gmax = [s["gamma_max"] for s in snapshots_meta]
    if len(gmax) >= 2:
        checks.append(make_check("gamma_max_nonincreasing",
                                 max(np.diff(gmax)), 1e-6,
                                 bool(max(np.diff(gmax)) <= 1e-6)))
    rep = make_report("evolve", vars(cfg) | {"config_path": args.config},
                      checks, snapshots=snapshots_meta, error=result.error)
    _emit(args, rep, "run_log.json")
    if result.error:
        return EXIT_NUMERIC
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_CHECK


def _load_g(args):
    data = read_fields(args.infile)
    name = args.field
    if name not in data.fields:
        raise FormatError(f"field {name!r} not present in {args.infile}")
    return data.grid, data.fields[name]


def cmd_score(args) -> int:
    grid, g = _load_g(args)
    lam_lo = args.lambda_min or 4.5 * grid.dr_max
    lam_hi = args.lambda_max or min(grid.r_max, grid.l_z) / 2.0
    scan = sup_scan(g, (lam_lo, lam_hi))
    checks = [make_check("q_star_finite", scan.q_star, "finite",
                         bool(np.isfinite(scan.q_star)))]
    rep = make_report("score", {"file": os.path.basename(args.infile),
                                "field": args.field,
                                "lambda_range": [lam_lo, lam_hi]},
                      checks,
                      scan={"q_star": scan.q_star,
                            "lambda_star": scan.lambda_star,
                            "z0_star": scan.z0_star,
                            "net_ratio": scan.net_ratio,
                            "z_stride_factor": scan.z_stride_factor})
    if args.csv:
        write_csv(_out_path(args, "scores.csv"), ["lambda", "z0", "Q"],
                  scan.csv_rows())
    _emit(args, rep, "score.json")
    return EXIT_OK


def cmd_classify(args) -> int:
    grid, g = _load_g(args)
    params = ClassifyParams(eta=args.eta, c0=args.c0, aspect_max=args.aspect_max,
                            k=args.k)
    packets = detect_packets(g, args.threshold)
    rows = []
    cover_info = None
    for p in packets:
        label = classify(p, g, params)
        rows.append({"center": [p.center_r, p.center_z], "lambda": p.lambda_n,
                     "mass": p.mass, "label": label,
                     "eta_measured": p.eta_measured})
        if cover_info is None and label == "admissible_proximal":
            try:
                cov = window_cover(p, args.k, n0=args.n0)
                cover_info = {"k": cov.k, "J": list(cov.indices)}
            except SwirllabError:
                cover_info = None
    rep = make_report("classify",
                      {"file": os.path.basename(args.infile),
                       "field": args.field, "k": args.k, "eta": args.eta,
                       "threshold": args.threshold},
                      [make_check("n_packets", len(rows), ">=0", True)],
                      packets=rows, cover=cover_info)
    _emit(args, rep, "classify.json")
    return EXIT_OK


def cmd_paraproduct(args) -> int:
    grid, g = _load_g(args)
    partition = DyadicPartition(args.k_min - 1, args.k_max + 2)
    sing = list(range(args.k_min, args.k_max + 1))
    consts = calibrate_constants(grid, partition, sing, seed=args.seed or 1234)
    U = lifted_velocity_from_g(g)
    packets = detect_packets(g, args.threshold)
    cover = {}
    for k in sing:
        cov = None
        for p in packets:
            try:
                cov = list(window_cover(p, k, n0=args.n0).balls)
                break
            except SwirllabError:
                continue
        if cov is None:
            center = packets[0].center_z if packets else 0.0
            cov = centered_window(center, k, args.n0)
        cover[k] = cov
    rep_pp = decompose_nonlinearity(g, U, sing, cover, partition,
                                    fitted_c=consts.c_audit, n0=args.n0)
    checks = [make_check("audit_bound", abs(rep_pp.N_total),
                         rep_pp.psi * rep_pp.D_crit + rep_pp.fitted_C * rep_pp.R_low,
                         rep_pp.bound_pass)]
    rep = make_report("paraproduct",
                      {"file": os.path.basename(args.infile),
                       "field": args.field, "k_min": args.k_min,
                       "k_max": args.k_max, "N0": args.n0,
                       "threshold": args.threshold},
                      checks, paraproduct=rep_pp.to_json(),
                      fitted_constants=consts.to_json())
    write_csv(_out_path(args, "paraproduct.csv"),
              ["k", "D_k", "I_LH", "I_HL", "I_HH"], rep_pp.csv_rows())
    _emit(args, rep, "paraproduct.json")
    return EXIT_OK if rep_pp.bound_pass else EXIT_CHECK


def cmd_lemmas(args) -> int:
    maker = SuiteConfig.quick if args.quick else SuiteConfig
    cfg = maker(seed=args.seed if args.seed is not None else 42,
                k_shift=args.k_shift,
                corrupt_partition=args.corrupt_partition)
    if args.nr:
        cfg.nr = args.nr
    if args.nz:
        cfg.nz = args.nz
    results, ok = run_suite(cfg)
    checks = [make_check(r.lemma_id, r.measured, r.bounds,
                         r.passed if r.mode != "report_only" else True,
                         mode=r.mode, note=r.note)
              for r in results]
    rep = make_report("lemmas", vars(cfg), checks,
                      results=[r.to_json() for r in results])
    if not args.json:
        width = max(len(r.name) for r in results)
        for r in results:
            print(f"{r.lemma_id:<10} {r.name:<{width}}  [{r.mode:<13}] {r.status}")
        print(f"overall: {'pass' if ok else 'FAIL'}")
    _emit(args, rep, "lemmas.json")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_report(args) -> int:
    from .report import merge_reports, write_bundle

    bundle = merge_reports(args.inputs)
    written = write_bundle(bundle, args.out, render=not args.no_plots)
    if args.json:
        json.dump({"written": written}, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        for name in written:
            print(f"wrote {os.path.join(args.out, name)}")
    return EXIT_OK


def _add_global_flags(parser, suppress: bool) -> None:
    # defined on the main parser with real defaults and on every subparser
    # with SUPPRESS so the flags are accepted in either position
    d = (lambda v: argparse.SUPPRESS if suppress else v)
    parser.add_argument("--out", default=d("out"), help="output directory")
    parser.add_argument("--seed", type=int, default=d(None))
    parser.add_argument("--threads", type=int, default=d(None),
                        help="advisory thread count for BLAS-style backends")
    parser.add_argument("--json", action="store_true", default=d(False),
                        help="print the JSON report to stdout")
    parser.add_argument("--config", default=d(None),
                        help="config file (key = value)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="swirllab",
        description="lifted 5D analysis laboratory for axisymmetric swirl flows")
    _add_global_flags(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an initial-data field file")
    _add_global_flags(p, suppress=True)
    p.add_argument("--recipe", required=True,
                   choices=["gaussian", "rings", "diffuse", "thinring"])
    p.add_argument("--nr", type=int, default=96)
    p.add_argument("--nz", type=int, default=128)
    p.add_argument("--r-max", dest="r_max", type=float, default=3.0)
    p.add_argument("--l-z", dest="l_z", type=float, default=3.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=None,
                   help="recipe length scale override")
    p.add_argument("--ratio", type=float, default=0.05)
    p.add_argument("--shells", type=int, default=4)
    p.add_argument("--field-out", default=None, help="output .swrl path")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("evolve", help="run the desk-scale solver")
    _add_global_flags(p, suppress=True)
    p.set_defaults(fn=cmd_evolve)

    for name in ("score", "scan"):
        p = sub.add_parser(name, help="extraction score scan")
        _add_global_flags(p, suppress=True)
        p.add_argument("infile")
        p.add_argument("--field", default="g")
        p.add_argument("--lambda-min", dest="lambda_min", type=float)
        p.add_argument("--lambda-max", dest="lambda_max", type=float)
        p.add_argument("--csv", action="store_true",
                       help="also write the score matrix CSV")
        p.set_defaults(fn=cmd_score)

    p = sub.add_parser("classify", help="detect and classify packets")
    _add_global_flags(p, suppress=True)
    p.add_argument("infile")
    p.add_argument("--field", default="g")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--eta", type=float, default=0.4)
    p.add_argument("--c0", type=float, default=4.0)
    p.add_argument("--aspect-max", dest="aspect_max", type=float, default=20.0)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--n0", type=int, default=8)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("paraproduct", help="shell interaction audit")
    _add_global_flags(p, suppress=True)
    p.add_argument("infile")
    p.add_argument("--field", default="g")
    p.add_argument("--k-min", dest="k_min", type=int, default=1)
    p.add_argument("--k-max", dest="k_max", type=int, default=3)
    p.add_argument("--n0", type=int, default=8)
    p.add_argument("--threshold", type=float, default=0.9)
    p.set_defaults(fn=cmd_paraproduct)

    p = sub.add_parser("lemmas", help="run the quantitative lemma suite")
    _add_global_flags(p, suppress=True)
    p.add_argument("--quick", action="store_true",
                   help="reduced sample counts for smoke runs")
    p.add_argument("--nr", type=int, default=None)
    p.add_argument("--nz", type=int, default=None)
    p.add_argument("--k-shift", dest="k_shift", type=int, default=0)
    p.add_argument("--corrupt-partition", action="store_true",
                   help=argparse.SUPPRESS)  # fault injection for tests
    p.set_defaults(fn=cmd_lemmas)

    p = sub.add_parser("report", help="merge JSON outputs into one bundle")
    _add_global_flags(p, suppress=True)
    p.add_argument("inputs", nargs="*")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except NumericFault as exc:
        print(f"numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as exc:
        print(f"numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SwirllabError as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
