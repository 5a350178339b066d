"""Command-line front end: ``clesim <subcommand> [options]``.

Every run prints (or writes to ``--out``) a JSON envelope
``{"manifest", "summary", "tables"}``.  Tables are CSV files written next to
the JSON file; without ``--out`` they go to ``$CLESIM_OUT_DIR`` when set and
are skipped otherwise.

Exit codes: 0 success, 2 domain or validation error, 3 an ``--assert`` check
failed, 4 budget exhausted or result truncated, 64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from importlib import metadata, resources

import numpy as np

from . import formulas
from .rng import default_workers

EXIT_OK, EXIT_DOMAIN, EXIT_ASSERT, EXIT_BUDGET, EXIT_USAGE = 0, 2, 3, 4, 64
SCHEMA_VERSION = 1
OUT_DIR_ENV = "CLESIM_OUT_DIR"


class BudgetError(RuntimeError):
    pass


class UsageError(Exception):
    pass


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def load_schema(name: str) -> dict:
    """JSON schema shipped with the package: ``envelope`` or a subcommand summary."""
    text = resources.files("clesim").joinpath("schemas", f"{name}.v{SCHEMA_VERSION}.json").read_text("utf-8")
    return json.loads(text)


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    master_seed: int
    workers: int
    tool_version: str = field(default_factory=tool_version)
    started: str = ""
    finished: str = ""
    schema_version: int = SCHEMA_VERSION


@dataclass
class ResultEnvelope:
    manifest: RunManifest
    summary: dict
    tables: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"manifest": asdict(self.manifest), "summary": _clean(self.summary),
                           "tables": self.tables}, indent=2, sort_keys=True)


def _clean(x, round_floats=True):
    """JSON-safe copy: numpy scalars to Python, floats to 15 significant digits.

    Manifests keep exact floats (``round_floats=False``) so they reproduce the run.
    """
    if isinstance(x, dict):
        return {str(k): _clean(v, round_floats) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v, round_floats) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.15g}") if round_floats else x
    return x


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ------------------------------------------------------------------ parsing

def _real(text: str) -> float:
    """Accept decimals and fractions such as ``16/3``."""
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _real_list(text: str) -> list[float]:
    return [_real(v) for v in text.split(",") if v]


_ASSERT_RE = re.compile(r"^([A-Za-z_][\w.]*)=([^±+]+)(?:±|\+-|\+/-)(.+)$")


def parse_assertion(text: str) -> tuple[str, float, float]:
    """``key=value±tol`` (``+-`` is accepted for ``±``)."""
    m = _ASSERT_RE.match(text.strip())
    if not m:
        raise argparse.ArgumentTypeError(f"assertion must look like key=value±tol, got {text!r}")
    return m.group(1), _real(m.group(2)), _real(m.group(3))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    p.add_argument("--workers", "--threads", type=int, default=None,
                   help=f"worker processes (default: ${'CLESIM_WORKERS'} or CPU count)")
    p.add_argument("--out", default=None, help="JSON output path; CSV tables go next to it")
    p.add_argument("--assert", dest="assertions", action="append", type=parse_assertion,
                   default=[], metavar="KEY=VALUE±TOL", help="check a summary field")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="clesim", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="subcommand", parser_class=_Parser)
    sub.required = True

    f = sub.add_parser("formulas", help="closed-form parameter relations")
    f.add_argument("--kappa-prime", type=_real, required=True)
    f.add_argument("--p", type=_real, default=None, help="coloring probability")
    for flag in ("q", "couplings", "rho", "arm", "ladder", "rates", "residuals"):
        f.add_argument(f"--{flag}", action="store_true")
    _common(f)

    lv = sub.add_parser("levy", help="stable-process positivity and ladder index")
    lv.add_argument("--kappa-prime", type=_real, required=True)
    lv.add_argument("--p", type=_real, default=0.5)
    lv.add_argument("--side", choices=("R", "L"), default="R")
    lv.add_argument("--samples", type=int, default=100_000)
    lv.add_argument("--cutoff", type=_real, default=1e-4)
    lv.add_argument("--horizon", type=_real, default=1.0)
    lv.add_argument("--no-drift-correction", action="store_true")
    _common(lv)

    lt = sub.add_parser("looptree", help="stable looptrees and rerooting")
    g = lt.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha", type=_real)
    g.add_argument("--kappa-prime", type=_real)
    lt.add_argument("--n", type=int, default=4096)
    lt.add_argument("--samples", type=int, default=1000)
    lt.add_argument("--tail-window", type=_real_list, default=[4.0, 400.0])
    _common(lt)

    fr = sub.add_parser("fragmentation", help="boundary-length process and gasket tree")
    g = fr.add_mutually_exclusive_group(required=True)
    g.add_argument("--kappa-prime", type=_real)
    g.add_argument("--alpha-prime", type=_real)
    fr.add_argument("--p", type=_real, default=0.5)
    fr.add_argument("--initial", type=_real, default=1.0)
    fr.add_argument("--rel-cutoff", type=_real, default=1e-3)
    fr.add_argument("--ell-min", type=_real, default=2e-4)
    fr.add_argument("--samples", type=int, default=10_000, help="martingale trajectories")
    fr.add_argument("--trees", type=int, default=30)
    fr.add_argument("--eps", type=_real_list, default=None, help="counting grid")
    fr.add_argument("--nested", action="store_true")
    fr.add_argument("--max-nodes", type=int, default=10_000_000)
    _common(fr)

    la = sub.add_parser("lattice", help="divide-and-color arm exponents")
    la.add_argument("--lattice", choices=("square_bond", "triangular_site"), default="square_bond")
    la.add_argument("--R", type=_int_list, required=True)
    la.add_argument("--p", type=_real, default=0.5, help="coloring probability p_color")
    la.add_argument("--p-perc", type=_real, default=None)
    la.add_argument("--trials", type=int, default=10_000)
    la.add_argument("--event", choices=("red-arm", "one-arm"), default="red-arm")
    la.add_argument("--width-factor", type=_real, default=1.0)
    _common(la)

    v = sub.add_parser("verify", help="run module invariant suites")
    v.add_argument("--suite", choices=("identities", "levy", "looptree", "fragmentation",
                                       "lattice", "all"), default="identities")
    _common(v)
    return top


# ------------------------------------------------------------- subcommands

def _workers(args) -> int:
    return default_workers() if args.workers is None else max(1, args.workers)


def run_formulas(args, workers):
    cp = formulas.couplings(args.kappa_prime)
    wants = {k: getattr(args, k) for k in ("q", "couplings", "rho", "arm", "ladder", "rates",
                                           "residuals")}
    if not any(wants.values()):
        wants = dict.fromkeys(wants, True)
    needs_p = any(wants[k] for k in ("rho", "arm", "ladder", "rates", "residuals"))
    if needs_p and args.p is None:
        if any(getattr(args, k) for k in ("rho", "arm", "ladder", "rates", "residuals")):
            raise formulas.DomainError("--p is required for the requested quantities")
        for k in ("rho", "arm", "ladder", "rates", "residuals"):
            wants[k] = False
    out = {}
    if wants["q"]:
        out["q"] = formulas.q_of_kappa_prime(args.kappa_prime)
    if wants["couplings"]:
        out["couplings"] = asdict(cp)
    if wants["rho"]:
        out["rho"] = formulas.rho_from_p(args.p, cp)
    if wants["arm"]:
        a = formulas.arm_exponent(args.p, cp)
        out["arm_exponent"] = float(a)
        out["arm_exponent_is_limit"] = bool(getattr(a, "is_limit", False))
    if wants["ladder"] or wants["rates"] or wants["residuals"]:
        if not 0.0 < args.p < 1.0:
            raise formulas.DomainError("ladder, rates and residuals need p in (0, 1)")
        rho = formulas.rho_from_p(args.p, cp)
        if wants["ladder"]:
            out["ladder_index_R"] = formulas.ladder_index(rho, cp, "R")
            out["ladder_index_L"] = formulas.ladder_index(rho, cp, "L")
        if wants["rates"]:
            out["rates"] = asdict(formulas.jump_rate_ledger(args.p, cp))
        if wants["residuals"]:
            out["residuals"] = formulas.identity_residuals(args.p, cp)
    return out, []


def run_levy(args, workers):
    from . import stable_levy as sl

    cp = formulas.couplings(args.kappa_prime)
    spec = sl.ladder_spec(args.p, args.kappa_prime, args.side, args.horizon, args.cutoff)
    est = sl.estimate_positivity(spec, args.samples, args.seed, workers,
                                 drift_correction=not args.no_drift_correction)
    rho = formulas.rho_from_p(args.p, cp)
    target = formulas.ladder_index(rho, cp, args.side)
    se = est.alpha_second_stderr
    summary = {
        "alpha_second_hat": est.alpha_second_hat, "alpha_second_stderr": se,
        "positivity": est.positivity, "positivity_stderr": est.stderr,
        "alpha_second_target": target,
        "z_score": (est.alpha_second_hat - target) / se if se > 0 else 0.0,
        "n_samples": est.n_samples, "expected_jumps_per_path": sl.expected_jump_count(spec),
    }
    vals = sl.terminal_values(spec, args.samples, args.seed, workers,
                              drift_correction=not args.no_drift_correction)
    return summary, [("terminal_values", ["sample", "value"], enumerate(vals.tolist()))]


def run_looptree(args, workers):
    from scipy import stats

    from . import looptree as lt

    alpha = args.alpha if args.alpha is not None else formulas.couplings(args.kappa_prime).alpha
    base, per = lt.ensemble_statistics(alpha, args.n, args.samples, args.seed,
                                       keep_perimeters=True, workers=workers)
    rer, _ = lt.ensemble_statistics(alpha, args.n, args.samples, args.seed + args.samples,
                                    rerooted=True, workers=workers)
    ks = stats.ks_2samp(base, rer)
    lo, hi = args.tail_window
    slope, se = lt.perimeter_tail_fit(per, lo, hi)
    summary = {
        "alpha": alpha, "n": args.n, "samples": args.samples,
        "tail_slope": slope, "tail_slope_stderr": se, "tail_slope_target": -alpha,
        "ks_statistic": ks.statistic, "ks_pvalue": ks.pvalue,
        "max_perimeter_mean": float(base.mean()),
        "max_perimeter_stderr": float(base.std(ddof=1) / math.sqrt(len(base))),
    }
    vals, counts = np.unique(per, return_counts=True)
    return summary, [("perimeters", ["perimeter", "count"], zip(vals.tolist(), counts.tolist())),
                     ("max_perimeter", ["sample", "original", "rerooted"],
                      zip(range(len(base)), base.tolist(), rer.tolist()))]


def run_fragmentation(args, workers):
    from . import fragmentation as fr

    if args.kappa_prime is not None:
        k = fr.FragKernel.from_ledger(args.kappa_prime, args.p, args.rel_cutoff)
    else:
        a = args.alpha_prime
        k = fr.FragKernel(a, -math.cos(math.pi * a), 1.0, args.rel_cutoff)
    a = k.alpha_prime
    cps = np.array([0.0, 0.1, 0.5, 1.0]) * args.initial ** a
    M = fr.martingale_ensemble(args.initial, k, cps, args.samples, args.seed, workers)
    mean, se = M.mean(axis=0), M.std(axis=0, ddof=1) / math.sqrt(len(M))
    m0 = args.initial ** (2 * a)
    z = np.where(se > 0, (mean - m0) / np.where(se > 0, se, 1.0), 0.0)
    trees = [fr.simulate_frag_tree(args.initial, k, args.ell_min, args.seed + 1 + i,
                                   nested=args.nested, max_nodes=args.max_nodes)
             for i in range(args.trees)]
    truncated = any(t.truncated for t in trees)
    if truncated:
        raise BudgetError(json.dumps(_clean({"alpha_prime": a, "truncated": True,
                                             "max_nodes": args.max_nodes})))
    eps = np.asarray(args.eps) if args.eps else np.geomspace(5 * args.ell_min, 5 * args.ell_min * 10 ** 1.5, 7)
    fit = fr.gasket_counting(trees, eps)
    target = fr.malthusian_exponent(k, loops_are_cells=args.nested)
    summary = {
        "alpha_prime": a, "A_plus": k.A_plus, "A_minus": k.A_minus,
        "martingale_series": {"t": cps, "mean": mean, "stderr": se, "z": z},
        "martingale_max_abs_z": float(np.max(np.abs(z))),
        "identity_root": fr.identity_root(a), "identity_root_target": -math.cos(math.pi * a),
        "counting_fit": {"slope": fit.slope, "stderr": fit.stderr, "low_statistics": fit.low_statistics,
                         "target": -(a + 0.5) if not args.nested else -target},
        "counting_slope": fit.slope,
        "truncated": False,
    }
    rows = zip(fit.eps.tolist(), fit.counts.tolist(), fit.normalized(a).tolist())
    return summary, [("loop_counts", ["eps", "count", "normalized"], rows)]


def run_lattice(args, workers):
    from . import lattice as lat

    radii = sorted(set(args.R))
    if len(radii) < 2:
        raise formulas.DomainError("--R needs at least two radii")
    cfg = lat.LatticeConfig(args.lattice, max(radii), args.p_perc, args.p, args.trials, args.seed,
                            args.width_factor)
    fn = lat.calibrate_one_arm if args.event == "one-arm" else lat.estimate_arm
    est = fn(cfg, radii, workers=workers)
    if args.event == "one-arm":
        target = 1.0 / 3.0
    else:
        target = formulas.arm_exponent(args.p, formulas.couplings(6.0)) if args.p < 1 else 0.0
    summary = {
        "lattice": args.lattice, "event": args.event, "p_color": args.p, "trials": args.trials,
        "radii": est.radii, "probabilities": est.probabilities, "stderrs": est.stderrs,
        "exponent": est.fitted_exponent, "exponent_stderr": est.fit_stderr,
        "exponent_target": float(target), "dropped_radii": list(est.dropped),
    }
    rows = zip(est.radii.astype(int).tolist(), est.successes.tolist(), [est.trials] * len(est.radii))
    return summary, [("arm", ["R", "successes", "trials"], rows)]


def run_verify(args, workers):
    from . import verify

    suites = verify.SUITES if args.suite == "all" else (args.suite,)
    checks = []
    for s in suites:
        checks.extend(verify.run_suite(s, seed=args.seed, workers=workers))
    passed = all(c["passed"] for c in checks)
    return {"suite": args.suite, "passed": passed, "checks": checks}, []


RUNNERS = {
    "formulas": run_formulas, "levy": run_levy, "looptree": run_looptree,
    "fragmentation": run_fragmentation, "lattice": run_lattice, "verify": run_verify,
}


# ------------------------------------------------------------------ output

def _lookup(summary: dict, key: str):
    cur = summary
    for part in key.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise KeyError(key)
        cur = cur[part]
    return cur


def check_assertions(summary, assertions):
    results = []
    for key, value, tol in assertions:
        try:
            got = float(_lookup(summary, key))
        except (KeyError, TypeError, ValueError):
            raise formulas.DomainError(f"--assert refers to unknown numeric field {key!r}")
        results.append({"key": key, "value": got, "expected": value, "tolerance": tol,
                        "passed": abs(got - value) <= tol})
    return results


def _write_outputs(envelope: ResultEnvelope, tables, out: str | None, stdout):
    if out:
        base_dir = os.path.dirname(os.path.abspath(out))
        stem = os.path.splitext(os.path.basename(out))[0]
    elif os.environ.get(OUT_DIR_ENV):
        base_dir = os.environ[OUT_DIR_ENV]
        stem = envelope.manifest.subcommand
    else:
        base_dir = stem = None
    if base_dir is not None:
        os.makedirs(base_dir, exist_ok=True)
        for name, header, rows in tables:
            path = os.path.join(base_dir, f"{stem}_{name}.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(csv_text(header, rows))
            envelope.tables.append(os.path.basename(path))
    text = envelope.to_json() + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    elif base_dir is not None:
        with open(os.path.join(base_dir, f"{stem}.json"), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        stdout.write(text)
    else:
        stdout.write(text)


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    workers = _workers(args)
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("subcommand", "seed", "workers", "out", "assertions")}
    manifest = RunManifest(args.subcommand, _clean(params, round_floats=False), int(args.seed) & ((1 << 64) - 1),
                           workers, started=_now())
    code = EXIT_OK
    try:
        summary, tables = RUNNERS[args.subcommand](args, workers)
    except (formulas.DomainError, ValueError) as e:
        print(f"clesim: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except BudgetError as e:
        summary, tables, code = json.loads(str(e)), [], EXIT_BUDGET
        print("clesim: budget exhausted, result truncated", file=sys.stderr)
    except RuntimeError as e:
        if "budget" in str(e):
            print(f"clesim: {e}", file=sys.stderr)
            return EXIT_BUDGET
        raise
    if args.assertions:
        try:
            res = check_assertions(summary, args.assertions)
        except formulas.DomainError as e:
            print(f"clesim: {e}", file=sys.stderr)
            return EXIT_DOMAIN
        summary["assertions"] = res
        if code == EXIT_OK and not all(r["passed"] for r in res):
            code = EXIT_ASSERT
    if args.subcommand == "verify" and code == EXIT_OK and not summary["passed"]:
        code = EXIT_ASSERT
    manifest.finished = _now()
    _write_outputs(ResultEnvelope(manifest, summary), tables, args.out, stdout)
    return code


def entry_point():  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    entry_point()
