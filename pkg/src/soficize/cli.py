"""Command line entry point.

Exit codes: 0 certificate pass, 2 certified failure, 3 declined or search
failure, 1 usage error. ``SOFICIZE_THREADS`` caps BLAS threads.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from .abelian import abelian_oracle
from .errors import ConfigError, SoficizeError
from .group import symmetric_interval
from .harness import RunConfig, generate_test_approx, run
from .linalg import haar_unitary
from .sofication.approx import HyperlinearApprox, validate_hyperlinear
from .sofication.io import dump_json, jsonable, save_beta, write_steps_csv
from .spectra import ds_power_trace_bound
from .sphere import GridConfig, concentration_grid

EXIT_PASS, EXIT_USAGE, EXIT_FAIL, EXIT_DECLINED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _input_flags(p, seed_required=True):
    p.add_argument("--gen", default="perturbed-shift",
                   choices=["exact-shift", "perturbed-shift", "haar-noise", "sofic-seeded", "file"])
    p.add_argument("--manifest", help="input manifest for --gen file")
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--dim", type=int, default=512)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--e-radius", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--seed", type=int, required=seed_required)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="soficize", description="Sofic approximations from hyperlinear ones for Z^r.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sofify", help="run the block recursion and certify the result")
    _input_flags(p)
    p.add_argument("--schedule", help="schedule JSON file (overrides the desk schedule)")
    p.add_argument("--out", default="soficize-out")
    p.add_argument("--kappa", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--max-radius", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--slack", type=float)
    p.add_argument("--search-mode", choices=["best", "first"])
    p.add_argument("--text-matrices", action="store_true", help="write matrices as JSON entries, not sidecars")

    p = sub.add_parser("validate", help="defect table of an input approximation")
    _input_flags(p)
    p.add_argument("--radius", type=int, help="check on the box of this radius (default: e-radius)")
    p.add_argument("--out")

    p = sub.add_parser("oracle", help="eigenvalue rounding baseline")
    _input_flags(p)
    p.add_argument("--out")

    p = sub.add_parser("concentration", help="sphere concentration grid")
    p.add_argument("--dims", type=int, nargs="+", default=[64, 256, 1024])
    p.add_argument("--cs", type=float, nargs="+", default=[0.1, 0.3, 0.5])
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--mode", choices=["trace", "norm"], default="trace")
    p.add_argument("--config", help="grid JSON file (overrides the flags)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("measures", help="disuniformity of Haar eigenvalues against the power-trace bound")
    p.add_argument("--dim", type=int, default=1024)
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    return ap


def _emit(obj, path=None):
    text = json.dumps(jsonable(obj), indent=1, sort_keys=True)
    print(text)
    if path:
        dump_json(path, obj)


def _config(args):
    over = {}
    for k in ("kappa", "delta", "max_radius", "budget", "slack", "search_mode"):
        v = getattr(args, k, None)
        if v is not None:
            over[k] = v
    return RunConfig(kind=args.gen, rank=args.rank, dim=args.dim, noise=args.noise, e_radius=args.e_radius,
                     epsilon=args.epsilon, seed=args.seed, schedule_overrides=over,
                     schedule_file=getattr(args, "schedule", None), manifest=args.manifest,
                     out_dir=getattr(args, "out", None))


def cmd_sofify(args) -> int:
    cfg = _config(args)
    log = logging.getLogger("soficize")

    def progress(e):
        log.info("step %d: tr_p=%d nu=%.4g kappa=%.4g draws=%d", e["step"], e["tr_p"], e["nu_achieved"],
                 e["kappa_achieved"], e["search_draws"])

    rep = run(cfg, progress=progress)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        fh.write(rep.to_json())
    write_steps_csv(os.path.join(args.out, "steps.csv"), rep.to_dict()["per_step"])
    dump_json(os.path.join(args.out, "timing.json"), {"wall_clock_seconds": rep.wall_clock})
    if rep.beta is not None:
        save_beta(args.out, rep.beta, binary=not args.text_matrices)
    d = rep.to_dict()
    print(f"certificate: {rep.certificate}")
    if "max_distance" in d:
        print(f"max |a(g) - b(g)|_HS^2 / d = {d['max_distance']:.6g} (target {cfg.epsilon**2:.6g})")
    if rep.failure:
        print(f"failure: {rep.failure}")
    print(f"outputs in {args.out}")
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(rep.certificate, EXIT_DECLINED)


def cmd_validate(args) -> int:
    cfg = _config(args)
    alpha = generate_test_approx(cfg)
    F = symmetric_interval(alpha.rank, args.radius or args.e_radius)
    rep = validate_hyperlinear(alpha, F, args.epsilon)
    d = rep.to_dict()
    _emit({k: d[k] for k in ("eps", "max_composition", "max_trace", "passed")})
    if args.out:
        dump_json(args.out, d)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_oracle(args) -> int:
    cfg = _config(args)
    alpha = generate_test_approx(cfg)
    if not isinstance(alpha, HyperlinearApprox):
        _emit({"status": "declined", "reason": "input is already sofic-induced"}, args.out)
        return EXIT_DECLINED
    out = abelian_oracle(alpha, cfg.E, cfg.epsilon)
    out.pop("beta", None)
    _emit(out, args.out)
    if out["status"] == "declined":
        return EXIT_DECLINED
    return EXIT_PASS if out["passed"] else EXIT_FAIL


def cmd_concentration(args) -> int:
    if args.config:
        with open(args.config) as fh:
            cfg = GridConfig.from_json(fh.read())
    else:
        cfg = GridConfig(args.dims, args.cs, args.samples, args.seed, args.mode)
    reps = concentration_grid(cfg)
    rows = [dict(r.to_dict(), passes=r.passes()) for r in reps]
    _emit(rows, args.out)
    return EXIT_PASS if all(r["passes"] for r in rows) else EXIT_FAIL


def cmd_measures(args) -> int:
    rows = []
    for t in range(args.trials):
        u = haar_unitary(args.dim, np.random.default_rng([args.seed, t]))
        ds, et = ds_power_trace_bound(u, args.M, args.N)
        rows.append({"trial": t, "d": args.dim, "N": args.N, "M": args.M, "ds_exact": ds, "et_bound": et,
                     "holds": ds <= et})
    _emit(rows, args.out)
    return EXIT_PASS if all(r["holds"] for r in rows) else EXIT_FAIL


COMMANDS = {
    "sofify": cmd_sofify,
    "validate": cmd_validate,
    "oracle": cmd_oracle,
    "concentration": cmd_concentration,
    "measures": cmd_measures,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = os.environ.get("SOFICIZE_THREADS")
    try:
        limit = int(threads) if threads else None
    except ValueError:
        print(f"SOFICIZE_THREADS must be an integer, got {threads!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        with threadpool_limits(limits=limit):
            return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SoficizeError as exc:
        print(f"declined: {exc}", file=sys.stderr)
        return EXIT_DECLINED


if __name__ == "__main__":
    sys.exit(main())
