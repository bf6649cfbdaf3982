"""Acceptance criteria, one test per criterion.

Every test prints a single ``[PASS]``/``[FAIL]`` line with the measured
quantity; the lines are repeated in the pytest terminal summary.
"""

import csv
import io
import itertools
import math
import time

import numpy as np
import pytest

from rkmor.analysis import (adi_iteration, bpod_embedding, bpod_trajectory, principal_angles,
                            relative_product_difference, verify_interpolation, verify_span)
from rkmor.balancing import approximate_balance, realify
from rkmor.benchmarks import bundled, random_stable_system
from rkmor.cli import main as cli_main
from rkmor.quadrature import log_schedule, run_quadrature, stage_solve_kron, stage_solve_schur
from rkmor.system import (GramianKind, hankel_singular_values, markov_parameters,
                          similarity_transform, solve_lyapunov_dense)
from rkmor.tableau import (BUILTIN_NAMES, ButcherTableau, assemble_composite, builtin,
                           dirk_from_adi_params, predict_expansion_points)

RESULTS = []

STEPS_GRID = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
STEPS_C = [1e-3, 1e-2, 1e-1, 1.0]
STEPS_O = [2e-3, 2e-2, 2e-1, 2.0]


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def relerr(x, ref):
    return float(np.linalg.norm(np.asarray(x) - np.asarray(ref))
                 / max(np.linalg.norm(np.asarray(ref)), np.finfo(float).tiny))


def plain_relative(report):
    return max(abs(e.original - e.reduced) / abs(e.original) for e in report.entries)


def reduce_pair(sys, tc, sc, to, so):
    zc = run_quadrature(sys, GramianKind.CONTROLLABILITY, tc, sc)
    zo = run_quadrature(sys, GramianKind.OBSERVABILITY, to, so)
    return zc, zo, approximate_balance(sys, zc, zo)


def test_c01_expansion_points():
    argv = ["expansion-points", "--tableau-c", "gauss_legendre2", "--tableau-o", "radau_ia2",
            "--steps-c", ",".join(map(str, STEPS_GRID))]
    out = io.StringIO()
    t0 = time.perf_counter()
    code = cli_main(argv, stdout=out)
    elapsed = time.perf_counter() - t0
    rows = list(csv.DictReader(io.StringIO(out.getvalue())))
    got = {side: [complex(float(r["re"]), float(r["im"])) for r in rows if r["side"] == side]
           for side in ("input", "output")}
    expect = {
        "input": [(3 + sg * math.sqrt(3) * 1j) / w for w in STEPS_GRID for sg in (-1, 1)],
        "output": [(2 + sg * math.sqrt(2) * 1j) / w for w in STEPS_GRID for sg in (-1, 1)],
    }
    worst = 0.0
    ok = code == 0 and all(r["multiplicity"] == "1" for r in rows)
    for side in expect:
        ok &= len(got[side]) == len(expect[side])
        pending = list(got[side])
        for z in expect[side]:
            if not pending:
                ok = False
                break
            d = [abs(z - y) for y in pending]
            i = int(np.argmin(d))
            worst = max(worst, d[i])
            pending.pop(i)
    ok &= worst <= 1e-12 and elapsed < 1.0
    record(1, "expansion points of GL2 / RadauIA2", ok,
           f"{len(rows)} rows, max abs deviation {worst:.1e}, {elapsed:.3f} s")


def test_c02_interpolation():
    sys = bundled("diffusion100")
    t = builtin("backward_euler")
    t0 = time.perf_counter()
    sys.assert_stable()
    _, _, res = reduce_pair(sys, t, STEPS_C, t, STEPS_O)
    pts = predict_expansion_points(t, STEPS_C, t, STEPS_O)
    report = verify_interpolation(sys, res, pts, tol=1e-6)
    elapsed = time.perf_counter() - t0
    n_points = len(pts.combined())
    coinciding = [loc for loc, mi, mo in pts.combined() if mi and mo]
    plain = plain_relative(report)
    ok = report.passed and plain <= 1e-6 and n_points == 8 and elapsed < 10.0
    record(2, "interpolation at 8 predicted points, diffusion n=100", ok,
           f"max rel. error {report.max_relative_error:.1e} (plain {plain:.1e}), {n_points} points, "
           f"{len(coinciding)} coinciding, {elapsed:.2f} s")


def test_c03_two_sided_doubling():
    sys = bundled("diffusion100")
    t = builtin("backward_euler")
    _, _, res = reduce_pair(sys, t, STEPS_C, t, STEPS_C)
    pts = predict_expansion_points(t, STEPS_C, t, STEPS_C)
    report = verify_interpolation(sys, res, pts, tol=1e-6)
    orders = {}
    for e in report.entries:
        orders.setdefault(e.point, set()).add(e.order)
    plain = plain_relative(report)
    ok = (report.passed and plain <= 1e-6 and len(orders) == 4
          and all(o == {0, 1} for o in orders.values()))
    record(3, "first and second moments at shared points", ok,
           f"max rel. error {report.max_relative_error:.1e} (plain {plain:.1e}) "
           f"over {len(report.entries)} conditions")


def test_c04_markov_parameters():
    sys = bundled("diffusion20")
    t = builtin("explicit_euler")
    steps = [1e-3, 2e-3]
    _, _, res = reduce_pair(sys, t, steps, t, steps)
    ref = np.array(markov_parameters(sys, 4))
    red = np.array(markov_parameters(res.reduced, 4))
    err = float(np.max(np.abs(ref - red) / np.abs(ref)))
    record(4, "Markov parameters j=1..4, explicit Euler N=2, n=20", err <= 1e-7,
           f"max rel. error {err:.1e}")


def test_c05_span_property():
    failures, worst, runs = 0, 0.0, 0
    for seed in range(20):
        sys = random_stable_system(50, seed=1000 + seed)
        for name in BUILTIN_NAMES:
            t = builtin(name)
            for steps in ([1.0], [0.5, 1.0, 2.0]):
                z = run_quadrature(sys, GramianKind.CONTROLLABILITY, t, steps)
                rep = verify_span(z, sys, t, steps)
                runs += 1
                worst = max(worst, rep.angle)
                failures += not (rep.angle <= 1e-8 and rep.dimension_match
                                 and rep.hypothesis == "verified")
    record(5, "span equals rational Krylov space", failures == 0,
           f"{runs} runs, {failures} failures, max angle {worst:.1e}")


def test_c06_composite_equivalence():
    worst, cases = 0.0, 0
    rng = np.random.default_rng(6)
    for name in BUILTIN_NAMES:
        t = builtin(name)
        for n_steps in range(1, 5):
            sys = random_stable_system(30, rng=rng)
            steps = rng.uniform(0.05, 2.0, n_steps)
            multi = run_quadrature(sys, "c", t, steps)
            single = run_quadrature(sys, "c", assemble_composite(t, steps).as_tableau(), [1.0])
            worst = max(worst, relative_product_difference(single, multi))
            cases += 1
    record(6, "N-step run equals one composite step", worst <= 1e-10,
           f"{cases} cases, max rel. difference {worst:.1e}")


def _random_tableau(rng, s):
    lam = rng.uniform(-0.5, 0.5, (s, s)) + np.diag(rng.uniform(0.5, 1.5, s))
    if rng.random() < 0.3:
        lam = lam + 1j * rng.uniform(-0.5, 0.5, (s, s))
        return ButcherTableau(lam, rng.uniform(0.1, 1.0, s) + 0j, rng.uniform(0.1, 1.0, s))
    return ButcherTableau(lam, rng.uniform(0.1, 1.0, s))


def test_c07_schur_vs_kron():
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(50):
        s = int(rng.integers(1, 4))
        if trial % 2:
            t = builtin(BUILTIN_NAMES[trial % len(BUILTIN_NAMES)])
            s = t.s
        else:
            t = _random_tableau(rng, s)
        n = int(rng.integers(5, 500 // s + 1))
        a = random_stable_system(n, rng=rng).dense_a()
        h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w = float(10 ** rng.uniform(-2, 1))
        worst = max(worst, relerr(stage_solve_schur(a, h, t, w), stage_solve_kron(a, h, t, w)))
    record(7, "Schur and Kronecker stage solves agree", worst <= 1e-10,
           f"50 triples, max rel. difference {worst:.1e}")


def test_c08_adi_equivalence():
    rng = np.random.default_rng(8)
    worst, cases = 0.0, 0
    for k in range(1, 5):
        for with_pair in (False, True):
            if with_pair and k < 2:
                continue
            for _ in range(3):
                sys = random_stable_system(int(rng.integers(5, 31)), rng=rng)
                alphas = list(-rng.uniform(0.1, 5.0, k).astype(complex))
                if with_pair:
                    z = complex(-rng.uniform(0.1, 5.0), rng.uniform(0.1, 3.0))
                    alphas[-2:] = [z, z.conjugate()]
                alphas = np.array(alphas)
                for kind in GramianKind:
                    adi = adi_iteration(sys, kind, alphas)
                    rk = run_quadrature(sys, kind, dirk_from_adi_params(-1.0 / alphas), [1.0])
                    worst = max(worst, relative_product_difference(adi, rk))
                    cases += 1
    record(8, "DIRK quadrature equals low-rank ADI", worst <= 1e-9,
           f"{cases} cases, max rel. difference {worst:.1e}")


def test_c09_bpod_embedding():
    rng = np.random.default_rng(9)
    worst = 0.0
    for name in ("backward_euler", "gauss_legendre2"):
        for _ in range(5):
            sys = random_stable_system(20, rng=rng)
            steps = rng.uniform(0.01, 0.5, 6)
            deltas = rng.uniform(0.0, 1.0, 6)
            for kind in GramianKind:
                emb = bpod_embedding(sys, kind, builtin(name), steps, deltas)
                direct = bpod_trajectory(sys, kind, builtin(name), steps, deltas)
                worst = max(worst, relative_product_difference(emb, direct))
    record(9, "balanced POD embedding equals snapshot sum", worst <= 1e-10,
           f"max rel. difference {worst:.1e}")


def test_c10_gramian_convergence():
    sys = bundled("diagonal20")
    t = builtin("implicit_midpoint")
    t0 = time.perf_counter()
    p = solve_lyapunov_dense(sys)
    errs = {}
    for n_steps in (25, 50, 100):
        z = run_quadrature(sys, "c", t, log_schedule(n_steps))
        errs[n_steps] = relerr(z.gramian(), p)
    elapsed = time.perf_counter() - t0
    ok = errs[50] <= 1e-2 and errs[25] >= errs[50] >= errs[100] and elapsed < 5.0
    record(10, "implicit midpoint gramian convergence, diagonal n=20", ok,
           ", ".join(f"N={k}: {v:.1e}" for k, v in errs.items()) + f", {elapsed:.2f} s")


def test_c11_structural_invariants():
    rng = np.random.default_rng(11)
    worst = {"psd": 0.0, "biorth": 0.0, "realify": 0.0, "hsv": 0.0}
    configs = itertools.product(("backward_euler", "gauss_legendre2", "radau_ia2",
                                 "implicit_midpoint"), range(5))
    for name, _ in configs:
        sys = random_stable_system(int(rng.integers(12, 31)), rng=rng)
        t = builtin(name)
        steps = np.sort(rng.uniform(0.1, 3.0, 2))
        zc, zo, res = reduce_pair(sys, t, steps, t, steps)
        for f in (zc, zo):
            g = f.gramian()
            g = 0.5 * (g + g.conj().T)
            worst["psd"] = max(worst["psd"], -np.linalg.eigvalsh(g).min() / np.linalg.norm(g))
        worst["biorth"] = max(worst["biorth"], res.biorthogonality_error())
        real = realify(res)
        worst["realify"] = max(worst["realify"], float(principal_angles(real.v, res.v).max()),
                               float(principal_angles(real.w, res.w).max()))
        q, _ = np.linalg.qr(rng.standard_normal((sys.n, sys.n)))
        tr = q * rng.uniform(0.5, 2.0, sys.n)
        worst["hsv"] = max(worst["hsv"], relerr(hankel_singular_values(similarity_transform(sys, tr)),
                                                hankel_singular_values(sys)))
    ok = (worst["psd"] <= 1e-10 and worst["biorth"] <= 1e-8 and worst["realify"] <= 1e-8
          and worst["hsv"] <= 1e-8)
    record(11, "structural invariants on 20 random systems", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
