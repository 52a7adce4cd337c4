"""Acceptance criteria 1-10.

Each test prints one ``CRITERION n: PASS|FAIL ...`` line; the lines are also
repeated in the terminal summary.  Run alone with
``python3 -m pytest tests/test_acceptance.py -v -s``.
"""

import json
import math
import time

import numpy as np
import pytest

from frozen_rde import rtp_sim as R
from frozen_rde._grid import default_K
from frozen_rde.bivariate import (apply_F_operator, diagonal_measure, from_signature,
                                  marginal_error, product_measure, signature_of)
from frozen_rde.cli import main
from frozen_rde.critical import c_upper_bound, find_c_hat
from frozen_rde.dynamics import apply_T2, endogeny_probe, iterate
from frozen_rde.measures import make_rho_theta, rde_residual, solve_rde_finite_xi
from frozen_rde.signature import (bivariate_rde_residual_f, check_signature_conditions,
                                  compute_signature, constant_signature)

import oracles

pytestmark = pytest.mark.acceptance
RESULTS = {}


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} | {detail}"
    RESULTS[n] = line
    print("\n" + line)
    return ok


def cli_json(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    assert code == 0, err
    return json.loads(out)


def test_criterion_01_theta_star(capsys):
    t0 = time.perf_counter()
    d = cli_json(capsys, "theta-star", "--tol", "1e-4")
    dt = time.perf_counter() - t0
    ok = abs(d["theta_star"] - 0.636) <= 1e-3 and dt < 1.0
    assert report(1, ok, f"theta_star={d['theta_star']:.6f} (target 0.636 +- 0.001), {dt:.2f}s (< 1s)")


def test_criterion_02_c_hat_limit():
    t0 = time.perf_counter()
    r = find_c_hat(0.999)
    dt = time.perf_counter() - t0
    ok = abs(r.value - 0.01770838) < 0.002 and dt < 10.0
    assert report(2, ok, f"c_hat(0.999)={r.value:.8f} (target 0.01770838 +- 0.002), {dt:.2f}s (< 10s)")


def test_criterion_03_sweep(capsys):
    step = 0.005
    t0 = time.perf_counter()
    d = cli_json(capsys, "sweep-chat", "--theta-min", "0.61", "--theta-max", "0.99",
                 "--step", str(step), "--format", "json")
    dt = time.perf_counter() - t0
    ts = d["theta_star"]
    rows = d["rows"]
    zero_ok = all(r["c_hat"] == 0 for r in rows if r["theta"] <= ts - step)
    pos_ok = all(r["c_hat"] > 0 for r in rows if r["theta"] >= ts + step)
    bound_ok = all(r["c_hat"] <= c_upper_bound(r["theta"]) + 1e-9 for r in rows if r["c_hat"] > 0)
    ok = zero_ok and pos_ok and bound_ok and dt < 60.0
    assert report(3, ok, f"{len(rows)} points, zero below={zero_ok}, positive above={pos_ok}, "
                         f"bound={bound_ok}, c_hat(0.99)={rows[-1]['c_hat']:.6f}, {dt:.2f}s (< 60s)")


def test_criterion_04_profile(capsys):
    t0 = time.perf_counter()
    d = cli_json(capsys, "profile-finf", "--theta", "0.85", "--format", "json")
    dt = time.perf_counter() - t0
    s = d["summary"]
    f0_err = abs(d["f_inf"][0] - 20 / 37)
    ok = f0_err <= 1e-10 and s["dips_below"] and s["upcrossings"] == 1 and dt < 30.0
    assert report(4, ok, f"|f_inf(0)-20/37|={f0_err:.1e}, dips below={s['dips_below']}, "
                         f"upcrossings={s['upcrossings']} (min h {s['min_h']:.4f}), {dt:.2f}s (< 30s)")


def test_criterion_05_nondiagonal_solution():
    th = 0.85
    c = find_c_hat(th).value
    K = default_K(th)
    sig = compute_signature(th, c, 2 * K + 20)
    cond = check_signature_conditions(sig)
    raw = from_signature(sig, K=K, check=False)
    m = from_signature(sig, K=K)
    min_mass = float(raw.table.min())
    marg = marginal_error(m)
    inv = float(np.abs(apply_T2(m).table - m.table).max())
    res = max(abs(bivariate_rde_residual_f(sig, None, c, n)) for n in range(51))
    ok = (cond.all_passed and min_mass >= -1e-9 and marg <= 1e-9 + m.trunc_mass
          and inv <= 1e-10 and res < 1e-8)
    assert report(5, ok, f"c_hat={c:.12f}, conditions={cond.all_passed}, min mass={min_mass:.1e}, "
                         f"marginal err={marg:.1e}, invariance={inv:.1e}, max residual={res:.1e}")


def test_criterion_06_diagonal_fixed_point():
    worst_t2, worst_res = 0.0, 0.0
    ok = True
    for th in (0.3, 0.5, 0.7, 0.9):
        m = diagonal_measure(th, default_K(th))
        gap = float(np.abs(apply_T2(m).table - m.table).max())
        worst_t2 = max(worst_t2, gap)
        ok &= gap <= 1e-10 + m.trunc_mass
        s = constant_signature(th, 400)
        r = max(abs(bivariate_rde_residual_f(s, None, 0.0, n)) for n in range(60))
        worst_res = max(worst_res, r)
        ok &= r <= 1e-12
    assert report(6, ok, f"max |T2(diag)-diag|={worst_t2:.1e}, max constant residual={worst_res:.1e}")


@pytest.mark.slow
def test_criterion_07_endogeny_dichotomy():
    t0 = time.perf_counter()
    low = endogeny_probe(0.5, max_steps=10_000, record_every=1000)
    low_ok = low.final_off_diag < 1e-6
    high = endogeny_probe(0.9, max_steps=300_000, record_every=1000)
    high_ok = high.final_tv < 1e-9 and high.final_off_diag > 0.01
    depth, n = 16, 100_000
    tr = iterate(product_measure(0.9, default_K(0.9)), depth)
    y, y2 = R.sample_bivariate_many(0.9, depth, n, 2024)
    s = R.summarize_difference(y, y2, depth)
    mc_ok = abs(s.p_diff - tr.off_diag[-1]) < 3 * s.std_err
    dt = time.perf_counter() - t0
    ok = low_ok and high_ok and mc_ok and dt < 300
    assert report(7, ok,
                  f"theta=0.5 off-diag after {low.steps} steps={low.final_off_diag:.3e} (< 1e-6: {low_ok}); "
                  f"theta=0.9 off-diag={high.final_off_diag:.4f} at tv={high.final_tv:.1e} after "
                  f"{high.steps} steps ({high_ok}); MC depth 16 p_diff={s.p_diff:.4f} vs iterate "
                  f"{tr.off_diag[-1]:.4f}, 3 SE={3 * s.std_err:.4f} ({mc_ok}); {dt:.0f}s (< 300s)")


def test_criterion_08_rde_suite():
    rng = np.random.default_rng(8)
    worst_res, worst_half = 0.0, math.inf
    for _ in range(100):
        k = int(rng.integers(1, 40))
        times = np.sort(rng.choice(np.linspace(1e-4, 1.0, 100_000), size=k, replace=False))
        m = solve_rde_finite_xi(times)
        for t in m.support_points():
            worst_res = max(worst_res, abs(rde_residual(m, t)))
        for t in times:
            worst_half = min(worst_half, m.cdf(t) - t / 2)
    for th in rng.uniform(0.02, 0.98, size=20):
        m = make_rho_theta(th, default_K(th))
        for t in m.support_points():
            worst_res = max(worst_res, abs(rde_residual(m, t)))
            worst_half = min(worst_half, m.cdf(t) - t / 2)
    ok = worst_res <= 1e-10 and worst_half >= -1e-12
    assert report(8, ok, f"max |residual|={worst_res:.1e}, min F(t)-t/2={worst_half:.3e}")


def test_criterion_09_route_equivalence():
    rng = np.random.default_rng(9)
    worst, worst_excess = 0.0, -math.inf
    for _ in range(25):
        th = float(rng.uniform(0.1, 0.95))
        K = default_K(th)
        sig = oracles.random_admissible_signature(rng, th, N=2 * K + 20)
        m = from_signature(sig, K=K)
        atom = signature_of(apply_T2(m))
        f_route = np.array([apply_F_operator(sig, None, n) for n in range(K)])
        gap = float(np.abs(atom[:K] - f_route).max())
        worst = max(worst, gap)
        worst_excess = max(worst_excess, gap - (1e-9 + m.trunc_mass))
    ok = worst_excess <= 0
    assert report(9, ok, f"25 signatures, max route gap={worst:.1e} (budget 1e-9 + truncation)")


@pytest.mark.slow
def test_criterion_10_frozen_sandwich():
    t0 = time.perf_counter()
    incl_ok = True
    for th in (0.4, 0.6):
        for seed in range(100):
            r = R.frozen_iteration(th, 16, seed, 6)
            incl_ok &= all(r.inclusions_ok.values()) and r.sandwich_ok
    window = 3
    freq, whole = {}, {}
    for D in (10, 18):
        res = [R.frozen_iteration(0.6, D, seed, 6) for seed in range(200)]
        freq[D] = float(np.mean([r.nonempty_within(2, window) for r in res]))
        whole[D] = float(np.mean([r.frozen_set_sizes[2] > 0 for r in res]))
    dt = time.perf_counter() - t0
    ok = incl_ok and freq[18] < freq[10] and dt < 300
    assert report(10, ok, f"200 instances inclusions+sandwich={incl_ok}; theta=0.6 F_2 nonempty in top "
                          f"{window} levels: depth 10 -> {freq[10]:.3f}, depth 18 -> {freq[18]:.3f} "
                          f"(whole tree {whole[10]:.2f} -> {whole[18]:.2f}); {dt:.0f}s (< 300s)")
