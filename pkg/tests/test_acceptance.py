"""Acceptance criteria 1-9, each at its stated tolerance and scale.

Every test records one ``CRITERION k: PASS|FAIL ...`` line; the lines are
printed together in the terminal summary.  Criterion 8 runs the full lattice
protocol (R up to 1024, 10^5 trials per R) and takes over an hour on one core.
"""
import io
import json
import math
import time

import numpy as np
import pytest
from scipy import stats

from clesim import cli, formulas
from clesim import fragmentation as fr
from clesim import lattice as lat
from clesim import looptree as lt
from clesim import stable_levy as sl

from conftest import ACCEPTANCE_LINES, KAPPA_PRIMES


def record(k, ok, detail, seconds):
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} ({seconds:.1f}s) {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    return ok


def test_criterion_1_formula_identities():
    t0 = time.perf_counter()
    res = {"q(16/3)": abs(formulas.q_of_kappa_prime(16 / 3) - 2.0)}
    worst_rho = worst_sym = 0.0
    for kp in KAPPA_PRIMES:
        cp = formulas.couplings(kp)
        worst_rho = max(worst_rho, abs(formulas.rho_from_p(0.5, cp) - (cp.kappa - 6) / 2))
        for p in np.linspace(0.0, 1.0, 101):
            s = formulas.rho_from_p(p, cp) + formulas.rho_from_p(1 - p, cp) - (cp.kappa - 6)
            worst_sym = max(worst_sym, abs(s))
    res["rho(1/2)"] = worst_rho
    res["rho symmetry"] = worst_sym
    c6, c163 = formulas.couplings(6.0), formulas.couplings(16 / 3)
    grid = np.linspace(0.01, 0.99, 99)
    res["percolation form"] = max(abs(formulas.arm_exponent_closed_form(p, "percolation")
                                      - formulas.arm_exponent(p, c6)) for p in grid)
    res["FK2 form"] = max(abs(formulas.arm_exponent_closed_form(p, "fk2")
                              - formulas.arm_exponent(p, c163)) for p in grid)
    dt = time.perf_counter() - t0
    worst = max(res.values())
    ok = worst < 1e-10 and dt < 1.0
    record(1, ok, f"max residual {worst:.2e} (< 1e-10), runtime < 1 s", dt)
    assert worst < 1e-10, res
    assert dt < 1.0


def test_criterion_2_jump_ratio_ladder_consistency():
    t0 = time.perf_counter()
    worst = 0.0
    for kp in KAPPA_PRIMES:
        cp = formulas.couplings(kp)
        a1 = cp.alpha_prime
        for p in np.linspace(0.005, 0.995, 100):
            rho = formulas.rho_from_p(p, cp)
            u_l, u_r = formulas.jump_ratios(rho, cp)
            a2 = 2 + rho / 2 - a1
            assert formulas.ladder_index(rho, cp) == a2
            lhs = math.sin(math.pi * (a1 - a2)) / math.sin(math.pi * a2)
            worst = max(worst, abs(lhs - u_r), abs((u_l + u_r) / 2 + math.cos(math.pi * a1)))
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and dt < 1.0
    record(2, ok, f"max residual {worst:.2e} on a 100-point p grid per kappa'", dt)
    assert worst < 1e-10
    assert dt < 1.0


def test_criterion_3_identity_root():
    t0 = time.perf_counter()
    errs = {a: abs(fr.identity_root(a) + math.cos(math.pi * a)) for a in (0.55, 2 / 3, 0.75, 0.9)}
    dt = time.perf_counter() - t0
    worst = max(errs.values())
    ok = worst < 1e-6 and dt < 10.0
    record(3, ok, f"max |root + cos(pi a')| = {worst:.2e} (< 1e-6)", dt)
    assert worst < 1e-6
    assert dt < 10.0


def test_criterion_4_stable_positivity():
    t0 = time.perf_counter()
    zs = {}
    for kp in (16 / 3, 6.0):
        cp = formulas.couplings(kp)
        for p in (0.25, 0.5, 0.75):
            est = sl.estimate_positivity(sl.ladder_spec(p, kp), 100_000, seed=1000 + int(100 * p))
            target = formulas.ladder_index(formulas.rho_from_p(p, cp), cp)
            zs[(p, round(kp, 3))] = (est.alpha_second_hat - target) / est.alpha_second_stderr
    dt = time.perf_counter() - t0
    worst = max(abs(z) for z in zs.values())
    ok = worst < 3.0 and dt < 300.0
    record(4, ok, f"max |z| = {worst:.2f} over 6 (p, kappa') points, 1e5 samples each", dt)
    assert worst < 3.0, zs
    assert dt < 300.0


def test_criterion_5_looptree_rerooting_and_tail():
    t0 = time.perf_counter()
    n, samples = 2**12, 10_000
    base, _ = lt.ensemble_statistics(1.5, n, samples, seed=0)
    rer, _ = lt.ensemble_statistics(1.5, n, samples, seed=samples, rerooted=True)
    pval = stats.ks_2samp(base, rer).pvalue
    _, per = lt.ensemble_statistics(1.5, 2**16, 16, seed=10**6, keep_perimeters=True)
    slope, se = lt.perimeter_tail_fit(per, 10, 1000)
    dt = time.perf_counter() - t0
    ok = pval > 0.01 and abs(slope + 1.5) < 0.1 and dt < 600.0
    record(5, ok, f"KS p = {pval:.3f} (> 0.01); tail slope {slope:.3f} +- {se:.3f} vs -1.5 (+-0.1)", dt)
    assert pval > 0.01
    assert abs(slope + 1.5) < 0.1
    assert dt < 600.0


def test_criterion_6_fragmentation_martingale():
    t0 = time.perf_counter()
    worst = 0.0
    for kp in (16 / 3, 6.0):
        k = fr.FragKernel.from_ledger(kp, 0.5, 1e-3)
        M = fr.martingale_ensemble(1.0, k, [0.1, 0.5, 1.0], 10_000, seed=int(kp * 1000))
        m0 = 1.0  # M(0) = initial**(2a') exactly
        se = M.std(axis=0, ddof=1) / math.sqrt(len(M))
        worst = max(worst, float(np.max(np.abs(M.mean(axis=0) - m0) / se)))
    dt = time.perf_counter() - t0
    ok = worst < 3.0 and dt < 600.0
    record(6, ok, f"max |mean M(t) - M(0)| / stderr = {worst:.2f} (< 3) at 3 checkpoints", dt)
    assert worst < 3.0
    assert dt < 600.0


def test_criterion_7_gasket_counting():
    t0 = time.perf_counter()
    k = fr.FragKernel.from_ledger(6.0, 0.5, 1e-3)
    trees = [fr.simulate_frag_tree(1.0, k, 2e-4, seed=s) for s in range(30)]
    fit = fr.gasket_counting(trees, np.geomspace(1e-3, 10**-1.5, 7))
    dt = time.perf_counter() - t0
    target = -(k.alpha_prime + 0.5)
    ok = abs(fit.slope - target) < 0.1 and fit.counts.min() >= 50 and dt < 1200.0
    record(7, ok, f"slope {fit.slope:.3f} +- {fit.stderr:.3f} vs {target:.4f} (+-0.1); "
                  f"min bin count {int(fit.counts.min())}", dt)
    assert fit.counts.min() >= 50
    assert abs(fit.slope - target) < 0.1
    assert dt < 1200.0


@pytest.mark.slow
def test_criterion_8_lattice_divide_and_color():
    t0 = time.perf_counter()
    radii = [32, 64, 128, 256, 512, 1024]
    cfg = lat.LatticeConfig(lat.SQUARE_BOND, trials=100_000, seed=2024)
    cal = lat.calibrate_one_arm(cfg, radii)
    arm = lat.estimate_arm(cfg, radii)
    dt = time.perf_counter() - t0
    cal_ok = abs(cal.fitted_exponent - 1 / 3) < 0.03
    arm_ok = abs(arm.fitted_exponent - 0.125) < 0.03
    detail = (f"one-arm {cal.fitted_exponent:.4f} +- {cal.fit_stderr:.4f} vs 1/3 (+-0.03); "
              f"red-arm p=1/2 {arm.fitted_exponent:.4f} +- {arm.fit_stderr:.4f} vs 0.125 (+-0.03); "
              f"R = {radii[0]}..{radii[-1]}, 1e5 trials")
    if cal_ok and not arm_ok:
        detail += "; DISCREPANCY: calibration passes but the red-arm window is missed"
    record(8, cal_ok and arm_ok, detail, dt)
    assert cal_ok, detail
    assert arm_ok, detail


def test_criterion_9_engineering_invariants(tmp_path):
    t0 = time.perf_counter()
    # union-find against flood fill on lattices of at most 10^3 sites
    mismatches = 0
    for name, R in ((lat.SQUARE_BOND, 21), (lat.TRIANGULAR_SITE, 18)):
        assert lat.make_box(name, R).n_sites <= 1000
        cfg = lat.LatticeConfig(name, R=R, seed=9)
        for trial in range(50):
            mismatches += not np.array_equal(lat.label_clusters(cfg, trial).labels,
                                             lat.flood_fill_labels(cfg, trial))
    # worker-count invariance of every Monte Carlo count
    cfg = lat.LatticeConfig(lat.SQUARE_BOND, R=64, trials=4000, seed=3)
    lat_inv = np.array_equal(lat.reach_distances(cfg, workers=1), lat.reach_distances(cfg, workers=2))
    spec = sl.ladder_spec(0.5, 6.0)
    levy_inv = (sl.estimate_positivity(spec, 20_000, 4, workers=1)
                == sl.estimate_positivity(spec, 20_000, 4, workers=2))
    lt_inv = np.array_equal(lt.ensemble_statistics(1.5, 512, 400, 5, workers=1)[0],
                            lt.ensemble_statistics(1.5, 512, 400, 5, workers=2)[0])
    k = fr.FragKernel.from_ledger(6.0, 0.5, 1e-3)
    fr_inv = np.array_equal(fr.martingale_ensemble(1.0, k, [0.5], 4000, 6, workers=1),
                            fr.martingale_ensemble(1.0, k, [0.5], 4000, 6, workers=2))
    # byte-identical reruns
    argvs = [["lattice", "--R", "8,16,32", "--trials", "2000"],
             ["levy", "--kappa-prime", "16/3", "--samples", "2000"],
             ["looptree", "--alpha", "1.5", "--n", "512", "--samples", "200"],
             ["fragmentation", "--kappa-prime", "6", "--samples", "500", "--trees", "2",
              "--ell-min", "1e-3"]]
    identical = True
    for i, argv in enumerate(argvs):
        blobs = []
        for rep in range(2):
            d = tmp_path / f"{i}_{rep}"
            d.mkdir()
            assert cli.main(argv + ["--seed", "77", "--out", str(d / "r.json")], stdout=io.StringIO()) == 0
            doc = json.loads((d / "r.json").read_text())
            blobs.append([(d / t).read_bytes() for t in doc["tables"]])
        identical &= blobs[0] == blobs[1] and len(blobs[0]) > 0
    dt = time.perf_counter() - t0
    inv = lat_inv and levy_inv and lt_inv and fr_inv
    ok = mismatches == 0 and inv and identical
    record(9, ok, f"flood-fill mismatches {mismatches}; worker invariance {inv}; "
                  f"byte-identical CSV reruns {identical}", dt)
    assert mismatches == 0
    assert inv
    assert identical
