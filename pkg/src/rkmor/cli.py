"""Command-line interface.

Exit codes: 0 success, 1 runtime/pipeline error, 2 configuration error,
3 interpolation hypotheses not verifiable (rank or observability).
"""

import argparse
import logging
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from rkmor import io as rio
from rkmor.analysis import (adi_iteration, check_composite_hypothesis,
                            relative_product_difference, verify_interpolation)
from rkmor.balancing import Truncation, approximate_balance, realify
from rkmor.benchmarks import bundled
from rkmor.exceptions import (InvalidStepSize, InvalidTableau, RankDeficient,
                              RkmorError, UnstableSystem)
from rkmor.quadrature import log_schedule, run_quadrature
from rkmor.system import GramianKind, transfer_function
from rkmor.tableau import (assemble_composite, dirk_from_adi_params,
                           predict_expansion_points)

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_HYPOTHESIS = 0, 1, 2, 3
ADI_TOL = 1e-9
LOG_ENV = "RKMOR_LOG_LEVEL"

logger = logging.getLogger("rkmor")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    system_paths: tuple = None
    bundled: str = None
    tableau_c: object = "backward_euler"
    tableau_o: object = None
    steps_c: np.ndarray = None
    steps_o: np.ndarray = None
    truncation: Truncation = field(default_factory=Truncation)
    tol: float = 1e-6
    out: str = None
    seed: int = 0
    realify: bool = False
    dump_z: bool = False
    alphas: np.ndarray = None

    def load_system(self):
        if self.bundled:
            return bundled(self.bundled)
        return rio.load_system(*self.system_paths)


def parse_steps(text):
    try:
        vals = np.array([float(x) for x in str(text).replace(";", ",").split(",") if x.strip()])
    except ValueError as exc:
        raise ConfigError(f"cannot parse step sizes {text!r}") from exc
    if vals.size == 0 or np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise ConfigError("step sizes must be positive")
    return vals


def parse_schedule(text):
    """``"n=20,min=1e-2,max=1e2,spacing=log"``; missing keys take the defaults."""
    opts = {"n": "20", "min": "1e-2", "max": "1e2", "spacing": "log"}
    for part in str(text).split(","):
        if not part.strip():
            continue
        key, sep, value = part.partition("=")
        if not sep or key.strip() not in opts:
            raise ConfigError(f"bad schedule entry {part!r}")
        opts[key.strip()] = value.strip()
    try:
        n = int(opts["n"])
        lo, hi = float(opts["min"]), float(opts["max"])
    except ValueError as exc:
        raise ConfigError(f"bad schedule {text!r}") from exc
    if n < 1 or not 0 < lo <= hi or opts["spacing"] not in ("log", "linear"):
        raise ConfigError(f"bad schedule {text!r}")
    return log_schedule(n, lo, hi, opts["spacing"])


def parse_complex_list(text):
    try:
        return np.array([complex(x.strip().replace(" ", "")) for x in str(text).split(",")
                         if x.strip()])
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex list {text!r}") from exc


def config_from_args(args):
    cfg = RunConfig()
    paths = (args.system_a, args.system_b, args.system_c)
    if getattr(args, "bundled", None):
        cfg.bundled = args.bundled
    elif any(paths):
        if not all(paths):
            raise ConfigError("--system-a, --system-b and --system-c go together")
        for p in paths:
            if not os.path.isfile(p):
                raise ConfigError(f"input file not found: {p}")
        cfg.system_paths = paths
    cfg.tableau_c = args.tableau_c
    cfg.tableau_o = args.tableau_o
    schedule = parse_schedule(args.schedule) if args.schedule else None
    cfg.steps_c = parse_steps(args.steps_c) if args.steps_c else schedule
    cfg.steps_o = parse_steps(args.steps_o) if args.steps_o else (
        schedule if schedule is not None else cfg.steps_c)
    if cfg.steps_c is None:
        cfg.steps_c = log_schedule()
        if cfg.steps_o is None:
            cfg.steps_o = cfg.steps_c
    try:
        cfg.truncation = Truncation.parse(args.truncation)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not args.tol > 0:
        raise ConfigError("--tol must be positive")
    cfg.tol = args.tol
    cfg.out = args.out
    cfg.seed = args.seed
    cfg.realify = args.realify
    cfg.dump_z = args.dump_z
    if getattr(args, "alphas", None) is not None:
        cfg.alphas = parse_complex_list(args.alphas)
    return cfg


def _tableaus(cfg):
    try:
        tc = rio.load_tableau(cfg.tableau_c)
        to = tc if cfg.tableau_o is None else rio.load_tableau(cfg.tableau_o)
    except InvalidTableau as exc:
        raise ConfigError(str(exc)) from exc
    return tc, to


def _dump_callback(cfg, tag):
    if not (cfg.dump_z and cfg.out):
        return None
    directory = os.path.join(cfg.out, "factors")
    os.makedirs(directory, exist_ok=True)

    def cb(state):
        np.save(os.path.join(directory, f"{tag}_step{state.step_index:03d}.npy"), state.z.z)
    return cb


def _pipeline(cfg):
    """Shared front half of ``reduce`` and ``verify``."""
    tc, to = _tableaus(cfg)
    try:
        sys_ = cfg.load_system()
    except (KeyError, FileNotFoundError) as exc:
        raise ConfigError(str(exc)) from exc
    sys_.assert_stable()
    zc = run_quadrature(sys_, GramianKind.CONTROLLABILITY, tc, cfg.steps_c,
                        callback=_dump_callback(cfg, "zc"))
    zo = run_quadrature(sys_, GramianKind.OBSERVABILITY, to, cfg.steps_o,
                        callback=_dump_callback(cfg, "zo"))
    points = predict_expansion_points(tc, cfg.steps_c, to, cfg.steps_o)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        result = approximate_balance(sys_, zc, zo, cfg.truncation)
    if cfg.realify:
        result = realify(result)
    hyp = {check_composite_hypothesis(assemble_composite(t, s))
           for t, s in ((tc, cfg.steps_c), (to, cfg.steps_o))}
    hypothesis = "failed" if "failed" in hyp else (
        "unverified" if "unverified" in hyp else "verified")
    if np.any(tc.beta_tilde <= 0) or np.any(to.beta_tilde <= 0):
        hypothesis = "failed"
    return sys_, tc, to, points, result, hypothesis


def _metadata(cfg, sys_, tc, to, points, result, hypothesis):
    rng = np.random.default_rng(cfg.seed)
    freqs = np.sort(10.0 ** rng.uniform(-2, 4, 16))
    errs = [abs(transfer_function(sys_, 1j * w) - transfer_function(result.reduced, 1j * w))
            for w in freqs]
    return {
        "n": sys_.n,
        "tableau_c": rio.tableau_to_dict(tc),
        "tableau_o": rio.tableau_to_dict(to),
        "steps_c": [float(x) for x in cfg.steps_c],
        "steps_o": [float(x) for x in cfg.steps_o],
        "expansion_points": rio.points_to_list(points),
        "finite_expansion_points": sum(p.multiplicity for p in points.finite()),
        "hypothesis": hypothesis,
        "seed": cfg.seed,
        "sampled_max_abs_error": max(errs),
    }


def cmd_reduce(cfg, stdout=sys.stdout):
    sys_, tc, to, points, result, hyp = _pipeline(cfg)
    meta = _metadata(cfg, sys_, tc, to, points, result, hyp)
    if cfg.out:
        meta = rio.write_reduced(result, cfg.out, meta)
    print(f"reduced order r={result.r} ({result.truncation}), "
          f"{meta['finite_expansion_points']} finite expansion points", file=stdout)
    if not result.within_guarantees:
        print("note: truncated projection, outside the interpolation guarantees", file=stdout)
    return EXIT_OK


def cmd_verify(cfg, stdout=sys.stdout):
    try:
        sys_, tc, to, points, result, hyp = _pipeline(cfg)
    except RankDeficient as exc:
        print(f"hypothesis not met: {exc}", file=stdout)
        return EXIT_HYPOTHESIS
    report = verify_interpolation(sys_, result, points, cfg.tol, hypothesis=hyp)
    print(report.to_table(), file=stdout)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        rio.dump_json(report.to_dict(), os.path.join(cfg.out, "report.json"))
    if result.within_guarantees and hyp != "verified":
        return EXIT_HYPOTHESIS
    return EXIT_OK if report.passed else EXIT_RUNTIME


def cmd_expansion_points(cfg, stdout=sys.stdout):
    tc, to = _tableaus(cfg)
    points = predict_expansion_points(tc, cfg.steps_c, to, cfg.steps_o)
    if cfg.out:
        parent = os.path.dirname(os.path.abspath(cfg.out))
        os.makedirs(parent, exist_ok=True)
        rio.write_points_csv(points, cfg.out)
    else:
        rio.write_points_csv(points, stdout)
    return EXIT_OK


def cmd_compare_adi(cfg, stdout=sys.stdout):
    alphas = cfg.alphas
    if alphas is None or alphas.size == 0:
        raise ConfigError("--alphas is required")
    if np.any(alphas.real >= 0):
        raise ConfigError("ADI shifts need a negative real part")
    try:
        sys_ = cfg.load_system()
    except (KeyError, FileNotFoundError) as exc:
        raise ConfigError(str(exc)) from exc
    z_adi = adi_iteration(sys_, GramianKind.CONTROLLABILITY, alphas)
    z_rk = run_quadrature(sys_, GramianKind.CONTROLLABILITY, dirk_from_adi_params(-1.0 / alphas),
                          [1.0])
    diff = relative_product_difference(z_adi, z_rk)
    print(f"relative difference ||Z_adi Z_adi^H - Z_rk Z_rk^H||_F / ||Z_rk Z_rk^H||_F = {diff:.3e}",
          file=stdout)
    return EXIT_OK if diff <= ADI_TOL else EXIT_RUNTIME


def cmd_export_system(args, stdout=sys.stdout):
    try:
        sys_ = bundled(args.name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    paths = rio.save_system(sys_, args.out)
    print("\n".join(paths), file=stdout)
    return EXIT_OK


def _add_common(p, system=True):
    if system:
        g = p.add_argument_group("system")
        g.add_argument("--system-a", help="Matrix Market file with A (n x n)")
        g.add_argument("--system-b", help="Matrix Market file with B (n x 1)")
        g.add_argument("--system-c", help="Matrix Market file with C (1 x n)")
        g.add_argument("--bundled", help="bundled system, e.g. diffusion100 or diagonal20")
    else:
        p.set_defaults(system_a=None, system_b=None, system_c=None, bundled=None)
    p.add_argument("--tableau-c", default="backward_euler",
                   help="controllability tableau: built-in name or JSON file")
    p.add_argument("--tableau-o", default=None,
                   help="observability tableau (default: same as --tableau-c)")
    p.add_argument("--steps-c", help="comma separated step sizes for the controllability run")
    p.add_argument("--steps-o", help="comma separated step sizes (default: --steps-c)")
    p.add_argument("--schedule", help="step schedule 'n=20,min=1e-2,max=1e2,spacing=log'")
    p.add_argument("--truncation", default="full",
                   help="full | threshold:<tau> | order:<r> (default: full)")
    p.add_argument("--tol", type=float, default=1e-6, help="interpolation tolerance")
    p.add_argument("--out", help="output directory (file for expansion-points)")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled diagnostics")
    p.add_argument("--realify", action="store_true", help="use real projection bases")
    p.add_argument("--dump-z", action="store_true", help="save Z after every step under --out")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rkmor",
        description="Runge-Kutta gramian quadrature and approximate balancing. "
                    f"Log level via ${LOG_ENV}.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("reduce", help="reduce a system and write A_hat, B_hat, C_hat + metadata")
    _add_common(p)
    p = sub.add_parser("verify", help="reduce and check interpolation at the predicted points")
    _add_common(p)
    p = sub.add_parser("expansion-points", help="predicted interpolation points as CSV")
    _add_common(p, system=False)
    p = sub.add_parser("compare-adi", help="compare the DIRK quadrature with low-rank ADI")
    _add_common(p)
    p.add_argument("--alphas", required=True, help="comma separated ADI shifts, e.g. -1,-2+1j")
    p = sub.add_parser("export-system", help="write a bundled system as Matrix Market files")
    p.add_argument("name")
    p.add_argument("--out", required=True)
    return parser


COMMANDS = {
    "reduce": cmd_reduce,
    "verify": cmd_verify,
    "expansion-points": cmd_expansion_points,
    "compare-adi": cmd_compare_adi,
}


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "export-system":
            return cmd_export_system(args, stdout)
        cfg = config_from_args(args)
        if args.command in ("reduce", "verify", "compare-adi") and not (
                cfg.bundled or cfg.system_paths):
            raise ConfigError("a system is required (--system-a/-b/-c or --bundled)")
        return COMMANDS[args.command](cfg, stdout)
    except (ConfigError, InvalidStepSize) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableSystem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (RkmorError, ArithmeticError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
