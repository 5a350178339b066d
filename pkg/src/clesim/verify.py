"""Quick invariant suites behind ``clesim verify``.

Each check returns ``{"name", "value", "threshold", "passed"}``.  The suites
are smoke-scale versions of the test-suite checks (seconds, not minutes).
"""
from __future__ import annotations

import math

import numpy as np

from . import formulas

SUITES = ("identities", "levy", "looptree", "fragmentation", "lattice")
KAPPA_PRIMES = (4.2, 4.8, 16.0 / 3.0, 6.0, 7.5)


def _check(name, value, threshold, passed):
    return {"name": name, "value": float(value), "threshold": float(threshold), "passed": bool(passed)}


def identities(seed=0, workers=1):
    out = []
    grid = np.linspace(0.01, 0.99, 99)
    for kp in KAPPA_PRIMES:
        cp = formulas.couplings(kp)
        worst = max(max(formulas.identity_residuals(float(p), cp).values()) for p in grid)
        out.append(_check(f"residuals kappa'={kp:.4g}", worst, 1e-10, worst < 1e-10))
    q = formulas.q_of_kappa_prime(16.0 / 3.0)
    out.append(_check("q(16/3) = 2", abs(q - 2.0), 1e-10, abs(q - 2.0) < 1e-10))
    return out


def levy(seed=0, workers=1):
    from . import stable_levy as sl

    cp = formulas.couplings(6.0)
    spec = sl.ladder_spec(0.5, 6.0)
    est = sl.estimate_positivity(spec, 20_000, seed, workers)
    target = formulas.ladder_index(formulas.rho_from_p(0.5, cp), cp)
    z = abs(est.alpha_second_hat - target) / est.alpha_second_stderr
    return [_check("ladder index |z| at (p=1/2, kappa'=6)", z, 3.0, z < 3.0)]


def looptree(seed=0, workers=1):
    from scipy import stats

    from . import looptree as lt

    a, _ = lt.ensemble_statistics(1.5, 1024, 500, seed, workers=workers)
    b, _ = lt.ensemble_statistics(1.5, 1024, 500, seed + 500, rerooted=True, workers=workers)
    p = stats.ks_2samp(a, b).pvalue
    return [_check("reroot max-perimeter KS p-value", p, 0.01, p > 0.01)]


def fragmentation(seed=0, workers=1):
    from . import fragmentation as fr

    a = 2.0 / 3.0
    root = fr.identity_root(a)
    out = [_check("identity root at alpha'=2/3", abs(root - 0.5), 1e-6, abs(root - 0.5) < 1e-6)]
    k = fr.FragKernel.from_ledger(6.0, 0.5, 1e-3)
    M = fr.martingale_ensemble(1.0, k, [0.1, 0.5, 1.0], 4000, seed, workers)
    z = np.abs(M.mean(0) - 1.0) / (M.std(0, ddof=1) / math.sqrt(len(M)))
    out.append(_check("martingale max |z|", z.max(), 3.0, z.max() < 3.0))
    return out


def lattice(seed=0, workers=1):
    from . import lattice as lat

    out = []
    for name in (lat.SQUARE_BOND, lat.TRIANGULAR_SITE):
        cfg = lat.LatticeConfig(name, R=12, seed=seed)
        bad = sum(not np.array_equal(lat.label_clusters(cfg, t).labels, lat.flood_fill_labels(cfg, t))
                  for t in range(5))
        out.append(_check(f"union-find vs flood fill ({name})", bad, 0, bad == 0))
    return out


def run_suite(name: str, seed: int = 0, workers: int = 1) -> list[dict]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}")
    checks = globals()[name](seed=seed, workers=workers)
    for c in checks:
        c["suite"] = name
    return checks
