"""Truncated alpha'-stable pure-jump processes.

For alpha' in (1/2, 1) the jumps are absolutely summable, so a process with
jump intensity ``rate_plus * l**(-1-alpha') dl`` upward and
``rate_minus * l**(-1-alpha') dl`` downward is simulated as a finite sum of
the jumps whose size exceeds ``cutoff``.  No compensator is required.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import formulas
from .rng import chunk_bounds, parallel_map, stream

__all__ = [
    "JumpSpec",
    "JumpPath",
    "LadderEstimate",
    "sample_jump_path",
    "path_value",
    "running_infimum_times",
    "sample_terminal_values",
    "estimate_positivity",
    "terminal_values",
    "ladder_spec",
    "ladder_tail_index",
    "expected_jump_count",
    "truncation_bias_bound",
]


@dataclass(frozen=True)
class JumpSpec:
    alpha_prime: float
    rate_plus: float
    rate_minus: float
    horizon: float = 1.0
    cutoff: float = 1e-4

    def __post_init__(self):
        if not 0.5 < self.alpha_prime < 1.0:
            raise formulas.DomainError("alpha_prime must lie in (1/2, 1)")
        if self.rate_plus < 0 or self.rate_minus < 0:
            raise formulas.DomainError("jump rates must be non-negative")
        if self.horizon < 0:
            raise formulas.DomainError("horizon must be non-negative")
        if not self.cutoff > 0:
            raise formulas.DomainError("cutoff must be positive")

    @property
    def total_rate(self) -> float:
        return self.rate_plus + self.rate_minus

    def rescaled(self, c: float) -> "JumpSpec":
        """Same process observed on ``c`` times the horizon, lengths scaled by ``c**(1/alpha')``."""
        return JumpSpec(self.alpha_prime, self.rate_plus, self.rate_minus,
                        self.horizon * c, self.cutoff * c ** (1.0 / self.alpha_prime))


@dataclass
class JumpPath:
    times: np.ndarray
    sizes: np.ndarray
    initial: float = 0.0
    horizon: float = 1.0
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.sizes = np.asarray(self.sizes, dtype=float)
        self._cum = np.concatenate(([0.0], np.cumsum(self.sizes)))

    def __len__(self):
        return len(self.times)

    def values(self) -> np.ndarray:
        """Path value immediately after each jump."""
        return self.initial + self._cum[1:]


@dataclass(frozen=True)
class LadderEstimate:
    positivity: float
    alpha_second_hat: float
    stderr: float
    n_samples: int

    @property
    def alpha_second_stderr(self) -> float:
        return self.stderr * self.alpha_second_hat / self.positivity if self.positivity > 0 else 0.0


def expected_jump_count(spec: JumpSpec) -> float:
    a = spec.alpha_prime
    return spec.horizon * spec.total_rate * spec.cutoff ** (-a) / a


def truncation_bias_bound(spec: JumpSpec) -> float:
    """Bound on the absolute mean contribution of the jumps below ``cutoff``."""
    a = spec.alpha_prime
    return spec.horizon * spec.total_rate * spec.cutoff ** (1.0 - a) / (1.0 - a)


def _small_jump_mean(spec: JumpSpec) -> float:
    a = spec.alpha_prime
    return spec.horizon * (spec.rate_plus - spec.rate_minus) * spec.cutoff ** (1.0 - a) / (1.0 - a)


def _pareto(rng, cutoff, a, size):
    # 1 - U lies in (0, 1], so no division by zero
    return cutoff * (1.0 - rng.random(size)) ** (-1.0 / a)


def sample_jump_path(spec: JumpSpec, seed: int, initial: float = 0.0) -> JumpPath:
    """Draw the jumps of size at least ``cutoff`` on ``[0, horizon]``."""
    rng = stream(seed, 0)
    if spec.horizon == 0 or spec.total_rate == 0:
        return JumpPath(np.empty(0), np.empty(0), initial, spec.horizon)
    n = rng.poisson(expected_jump_count(spec))
    times = np.sort(rng.uniform(0.0, spec.horizon, n))
    mags = _pareto(rng, spec.cutoff, spec.alpha_prime, n)
    up = rng.random(n) < spec.rate_plus / spec.total_rate
    return JumpPath(times, np.where(up, mags, -mags), initial, spec.horizon)


def path_value(path: JumpPath, t: float) -> float:
    """Right-continuous value of the path at time ``t``."""
    if not 0.0 <= t <= path.horizon:
        raise formulas.DomainError(f"t={t!r} outside [0, {path.horizon!r}]")
    k = np.searchsorted(path.times, t, side="right")
    return float(path.initial + path._cum[k])


def running_infimum_times(path: JumpPath) -> list[tuple[float, float]]:
    """Times and values at which the path reaches a new strict minimum."""
    out = [(0.0, float(path.initial))]
    if len(path) == 0:
        return out
    vals = path.values()
    prev_min = np.minimum.accumulate(np.concatenate(([path.initial], vals)))[:-1]
    idx = np.flatnonzero(vals < prev_min)
    out.extend((float(path.times[i]), float(vals[i])) for i in idx)
    return out


def sample_terminal_values(spec: JumpSpec, n: int, rng: np.random.Generator,
                           drift_correction: bool = False) -> np.ndarray:
    """``n`` independent copies of the path value at ``horizon`` (initial 0).

    With ``drift_correction`` the exact mean of the discarded jumps below
    ``cutoff`` is added, which removes the first-order truncation bias.
    """
    if spec.horizon == 0 or spec.total_rate == 0:
        return np.zeros(n)
    counts = rng.poisson(expected_jump_count(spec), size=n)
    total = int(counts.sum())
    mags = _pareto(rng, spec.cutoff, spec.alpha_prime, total)
    up = rng.random(total) < spec.rate_plus / spec.total_rate
    owner = np.repeat(np.arange(n), counts)
    out = np.bincount(owner, weights=np.where(up, mags, -mags), minlength=n)
    if drift_correction:
        out += _small_jump_mean(spec)
    return out


def _positive_count(args):
    spec, seed, chunk, lo, hi, drift = args
    vals = sample_terminal_values(spec, hi - lo, stream(seed, 1, chunk), drift)
    return int(np.count_nonzero(vals > 0))


def estimate_positivity(spec: JumpSpec, n_samples: int, seed: int, workers: int = 1,
                        chunk_size: int = 5000, drift_correction: bool = True) -> LadderEstimate:
    """Estimate ``P(X_horizon > 0)`` and the ladder index ``alpha' * P(X > 0)``.

    To get the ladder index of R pass the spec of ``-R`` (see :func:`ladder_spec`).
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    if spec.rate_minus == 0 and spec.rate_plus > 0:
        return LadderEstimate(1.0, spec.alpha_prime, 0.0, n_samples)
    bounds = chunk_bounds(n_samples, chunk_size)
    items = [(spec, seed, i, lo, hi, drift_correction) for i, (lo, hi) in enumerate(bounds)]
    k = sum(parallel_map(_positive_count, items, workers))
    pos = k / n_samples
    se = math.sqrt(pos * (1.0 - pos) / n_samples)
    return LadderEstimate(pos, spec.alpha_prime * pos, se, n_samples)


def _terminal_chunk(args):
    spec, seed, chunk, lo, hi, drift = args
    return sample_terminal_values(spec, hi - lo, stream(seed, 1, chunk), drift)


def terminal_values(spec: JumpSpec, n_samples: int, seed: int, workers: int = 1,
                    chunk_size: int = 5000, drift_correction: bool = True) -> np.ndarray:
    """The terminal values behind :func:`estimate_positivity` (same streams and chunks)."""
    bounds = chunk_bounds(n_samples, chunk_size)
    items = [(spec, seed, i, lo, hi, drift_correction) for i, (lo, hi) in enumerate(bounds)]
    return np.concatenate(parallel_map(_terminal_chunk, items, workers))


def ladder_spec(p: float, kappa_prime: float, side: str = "R", horizon: float = 1.0,
                cutoff: float = 1e-4, normalization: float = 1.0) -> JumpSpec:
    """Spec of ``-R`` (or ``-L``) with rates taken from the jump-rate ledger.

    Its positivity times alpha' is the ladder index of R (resp. L).
    """
    cp = formulas.couplings(kappa_prime)
    led = formulas.jump_rate_ledger(p, cp, normalization)
    if side == "R":
        up, down = led.A_plus_R, led.A_minus_R
    elif side == "L":
        up, down = led.A_plus_L, led.A_minus_L
    else:
        raise ValueError(f"side must be 'R' or 'L', got {side!r}")
    return JumpSpec(cp.alpha_prime, rate_plus=down, rate_minus=up, horizon=horizon, cutoff=cutoff)


def ladder_tail_index(spec: JumpSpec, seed: int, k: int = 200) -> float:
    """Hill estimate of ``alpha' * P(X > 0)`` from the ladder heights of one long path.

    Cross-check only.  The strict increments of the running supremum are the
    jumps of a stable subordinator whose index is ``alpha'`` times the
    positivity, so the same quantity as :func:`estimate_positivity` is
    estimated from the ``k`` largest increments.
    """
    path = sample_jump_path(spec, seed)
    mirror = JumpPath(path.times, -path.sizes, -path.initial, path.horizon)
    vals = np.array([v for _, v in running_infimum_times(mirror)])
    inc = np.sort(-np.diff(vals))[::-1]
    if len(inc) <= k:
        raise ValueError(f"only {len(inc)} ladder increments, need more than k={k}")
    return float(1.0 / np.mean(np.log(inc[:k] / inc[k])))
