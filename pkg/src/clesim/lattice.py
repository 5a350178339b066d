"""Divide-and-color percolation in a half-plane box.

Every random bit is a counter hash of ``(trial seed, key)``: the state of an
edge (square bond) or site (triangular site) and the color of a cluster
(keyed by its smallest site index).  A trial therefore has the same outcome
whether clusters are found by full union-find labelling
(:func:`label_clusters`) or by the lazy exploration from the origin used in
the Monte Carlo loops, and reusing seeds couples runs at different
``p_color``.

A trial is run once in the box of the largest radius and reports the largest
distance reached by the origin's red component (or by its own cluster, for
the one-arm event), which decides the event for every smaller radius.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from . import formulas
from .rng import chunk_bounds, parallel_map

__all__ = [
    "LatticeConfig",
    "ClusterField",
    "ArmEstimate",
    "Box",
    "make_box",
    "label_clusters",
    "flood_fill_labels",
    "run_trial",
    "reach_distances",
    "estimate_arm",
    "calibrate_one_arm",
    "fit_arm_exponent",
]

SQUARE_BOND, TRIANGULAR_SITE = "square_bond", "triangular_site"
RED_ARM, ONE_ARM = "red-arm", "one-arm"
_CRITICAL = {SQUARE_BOND: 0.5, TRIANGULAR_SITE: 0.5}
_COLOR_TAG = np.uint64(1) << np.uint64(48)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class LatticeConfig:
    lattice: str = SQUARE_BOND
    R: int = 64
    p_perc: float | None = None
    p_color: float = 0.5
    trials: int = 10_000
    seed: int = 0
    width_factor: float = 1.0  # box half-width is width_factor * R

    def __post_init__(self):
        if self.lattice not in _CRITICAL:
            raise ValueError(f"unknown lattice {self.lattice!r}")
        if int(self.R) != self.R or self.R < 1:
            raise formulas.DomainError("R must be a positive integer")
        if self.p_perc is not None and not 0.0 < self.p_perc < 1.0:
            raise formulas.DomainError("p_perc must lie in (0, 1)")
        if not 0.0 < self.p_color <= 1.0:
            raise formulas.DomainError("p_color must lie in (0, 1]")
        if self.trials < 1:
            raise formulas.DomainError("trials must be positive")
        if self.width_factor < 1.0:
            raise formulas.DomainError("width_factor must be at least 1")

    @property
    def perc(self) -> float:
        return _CRITICAL[self.lattice] if self.p_perc is None else float(self.p_perc)


@dataclass
class ClusterField:
    labels: np.ndarray  # per site, -1 outside the box
    colors: np.ndarray  # per cluster, True for red
    box: "Box" = field(repr=False)


@dataclass(frozen=True)
class ArmEstimate:
    radii: np.ndarray
    successes: np.ndarray
    trials: int
    probabilities: np.ndarray
    stderrs: np.ndarray
    fitted_exponent: float
    fit_stderr: float
    dropped: tuple = ()


# ------------------------------------------------------------------ geometry

@dataclass(frozen=True)
class Box:
    """Sites of one lattice inside ``{|x| <= W, 0 <= y <= R}``, stored row-major."""

    lattice: str
    nx: int
    ny: int
    inbox: np.ndarray  # uint8, nx * ny
    dist2: np.ndarray  # squared Euclidean distance to the origin
    origin: int
    dx: np.ndarray
    dy: np.ndarray

    @property
    def n_sites(self) -> int:
        return int(self.inbox.sum())


def make_box(lattice: str, R: int, width_factor: float = 1.0) -> Box:
    W = width_factor * R
    if lattice == SQUARE_BOND:
        w = int(math.floor(W))
        nx, ny = 2 * w + 1, R + 1
        xs = np.arange(nx, dtype=float) - w
        ys = np.arange(ny, dtype=float)
        X, Y = np.meshgrid(xs, ys)
        inbox = np.ones((ny, nx), dtype=np.uint8)
        origin = w
        dx = np.array([1, -1, 0, 0], dtype=np.int64)
        dy = np.array([0, 0, 1, -1], dtype=np.int64)
    elif lattice == TRIANGULAR_SITE:
        # skew coordinates (i, j) at position (i + j/2, j sqrt(3)/2)
        ny = int(math.floor(2.0 * R / math.sqrt(3.0) + 1e-12)) + 1
        shift = (ny - 1 + 1) // 2 + int(math.floor(W))
        nx = shift + int(math.floor(W)) + 1
        i = np.arange(nx, dtype=float) - shift
        j = np.arange(ny, dtype=float)
        I, J = np.meshgrid(i, j)
        X, Y = I + J / 2.0, J * math.sqrt(3.0) / 2.0
        inbox = (np.abs(X) <= W + 1e-9).astype(np.uint8)
        origin = shift
        dx = np.array([1, -1, 0, 0, 1, -1], dtype=np.int64)
        dy = np.array([0, 0, 1, -1, -1, 1], dtype=np.int64)
    else:
        raise ValueError(f"unknown lattice {lattice!r}")
    return Box(lattice, nx, ny, inbox.ravel(), (X * X + Y * Y).ravel(), origin, dx, dy)


# -------------------------------------------------------------- hashing

@nb.njit(cache=True)
def _mix(z):
    z = (z + np.uint64(0x9E3779B97F4A7C15))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def _uniform(seed, key):
    return float(_mix(seed ^ _mix(np.uint64(key))) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@nb.njit(cache=True)
def _trial_seed(master, trial):
    return _mix(master ^ _mix(np.uint64(trial) + np.uint64(0x632BE59BD9B4E019)))


@nb.njit(cache=True)
def _neighbor(s, k, nx, ny, dx, dy, inbox):
    x = s % nx + dx[k]
    y = s // nx + dy[k]
    if x < 0 or x >= nx or y < 0 or y >= ny:
        return -1
    t = y * nx + x
    if inbox[t] == 0:
        return -1
    return t


@nb.njit(cache=True)
def _linked(s, t, mode, seed, p_perc, nx):
    """Whether neighbors s, t lie in the same cluster by their local state."""
    if mode == 0:
        a = min(s, t)
        key = 2 * a + (0 if abs(t - s) == 1 else 1)
        return _uniform(seed, key) < p_perc
    return (_uniform(seed, s) < p_perc) == (_uniform(seed, t) < p_perc)


@nb.njit(cache=True)
def _is_red(seed, min_site, p_color):
    return _uniform(seed, np.uint64(min_site) + _COLOR_TAG) < p_color


# ------------------------------------------------------------ full labelling

@nb.njit(cache=True)
def _find(parent, s):
    while parent[s] != s:
        parent[s] = parent[parent[s]]  # path halving
        s = parent[s]
    return s


@nb.njit(cache=True)
def _union_find_labels(nx, ny, inbox, dx, dy, mode, seed, p_perc):
    n = nx * ny
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for s in range(n):
        if inbox[s] == 0:
            continue
        for k in range(dx.size):
            t = _neighbor(s, k, nx, ny, dx, dy, inbox)
            if t <= s or not _linked(s, t, mode, seed, p_perc, nx):
                continue
            a, b = _find(parent, s), _find(parent, t)
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
    # label = smallest site index of the cluster
    labels = np.full(n, -1, dtype=np.int64)
    root_min = np.full(n, n, dtype=np.int64)
    for s in range(n):
        if inbox[s]:
            r = _find(parent, s)
            if s < root_min[r]:
                root_min[r] = s
    for s in range(n):
        if inbox[s]:
            labels[s] = root_min[_find(parent, s)]
    return labels


def _mode(lattice):
    return 0 if lattice == SQUARE_BOND else 1


def label_clusters(cfg: LatticeConfig, trial: int = 0, box: Box | None = None) -> ClusterField:
    """Union-find cluster labels and colors for one trial (labels are smallest member sites)."""
    box = box or make_box(cfg.lattice, cfg.R, cfg.width_factor)
    seed = np.uint64(_trial_seed(np.uint64(cfg.seed & _MASK64), np.uint64(trial)))
    labels = _union_find_labels(box.nx, box.ny, box.inbox, box.dx, box.dy, _mode(cfg.lattice),
                                seed, cfg.perc)
    roots = np.unique(labels[labels >= 0])
    colors = np.zeros(box.nx * box.ny, dtype=bool)
    for r in roots:
        colors[r] = _is_red(seed, r, cfg.p_color)
    return ClusterField(labels, colors, box)


def flood_fill_labels(cfg: LatticeConfig, trial: int = 0, box: Box | None = None) -> np.ndarray:
    """Reference labelling by breadth-first flood fill (pure Python, small boxes only)."""
    from collections import deque

    box = box or make_box(cfg.lattice, cfg.R, cfg.width_factor)
    seed = np.uint64(_trial_seed(np.uint64(cfg.seed & _MASK64), np.uint64(trial)))
    mode = _mode(cfg.lattice)
    n = box.nx * box.ny
    labels = np.full(n, -1, dtype=np.int64)
    for s in range(n):
        if not box.inbox[s] or labels[s] >= 0:
            continue
        labels[s] = s  # first unvisited site in index order is the cluster minimum
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for k in range(box.dx.size):
                t = _neighbor(v, k, box.nx, box.ny, box.dx, box.dy, box.inbox)
                if t >= 0 and labels[t] < 0 and _linked(v, t, mode, seed, cfg.perc, box.nx):
                    labels[t] = s
                    queue.append(t)
    return labels


# ---------------------------------------------------------- lazy exploration

@nb.njit(cache=True)
def _explore_cluster(s, label, order, n_order, nx, ny, inbox, dx, dy, mode, seed, p_perc):
    """Label the cluster of s; its sites are appended to ``order``. Returns (new n_order, min site)."""
    start = n_order
    label[s] = s
    order[n_order] = s
    n_order += 1
    lo = s
    head = start
    while head < n_order:
        v = order[head]
        head += 1
        for k in range(dx.size):
            t = _neighbor(v, k, nx, ny, dx, dy, inbox)
            if t >= 0 and label[t] < 0 and _linked(v, t, mode, seed, p_perc, nx):
                label[t] = s
                order[n_order] = t
                n_order += 1
                if t < lo:
                    lo = t
    for i in range(start, n_order):
        label[order[i]] = lo
    return n_order, lo


@nb.njit(cache=True)
def _reach_one(seed, event, nx, ny, inbox, dist2, origin, dx, dy, mode, p_perc, p_color,
               target2, label, order, red, queue):
    """Largest squared distance reached; -1 if the origin is not red (red-arm event)."""
    n_order, lo = _explore_cluster(origin, label, order, 0, nx, ny, inbox, dx, dy, mode,
                                   seed, p_perc)
    best = 0.0
    if event == 1:
        for i in range(n_order):
            d = dist2[order[i]]
            if d > best:
                best = d
    elif _is_red(seed, lo, p_color):
        nq = 0
        for i in range(n_order):
            red[order[i]] = 1
            queue[nq] = order[i]
            nq += 1
        head = 0
        while head < nq and best < target2:
            v = queue[head]
            head += 1
            if dist2[v] > best:
                best = dist2[v]
            for k in range(dx.size):
                t = _neighbor(v, k, nx, ny, dx, dy, inbox)
                if t < 0 or label[t] >= 0:
                    continue
                start = n_order
                n_order, lo = _explore_cluster(t, label, order, n_order, nx, ny, inbox, dx, dy,
                                               mode, seed, p_perc)
                if _is_red(seed, lo, p_color):
                    for i in range(start, n_order):
                        red[order[i]] = 1
                        queue[nq] = order[i]
                        nq += 1
    else:
        best = -1.0
    for i in range(n_order):
        label[order[i]] = -1
        red[order[i]] = 0
    return best


@nb.njit(cache=True)
def _reach_range(master, lo, hi, event, nx, ny, inbox, dist2, origin, dx, dy, mode,
                 p_perc, p_color, target2):
    n = nx * ny
    label = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    red = np.zeros(n, dtype=np.uint8)
    queue = np.empty(n, dtype=np.int64)
    out = np.empty(hi - lo)
    for tr in range(lo, hi):
        seed = _trial_seed(master, np.uint64(tr))
        out[tr - lo] = _reach_one(seed, event, nx, ny, inbox, dist2, origin, dx, dy, mode,
                                  p_perc, p_color, target2, label, order, red, queue)
    return out


def _reach_chunk(args):
    cfg, event, lo, hi = args
    box = make_box(cfg.lattice, cfg.R, cfg.width_factor)
    return _reach_range(np.uint64(cfg.seed & _MASK64), lo, hi, 1 if event == ONE_ARM else 0,
                        box.nx, box.ny, box.inbox, box.dist2, box.origin, box.dx, box.dy,
                        _mode(cfg.lattice), cfg.perc, cfg.p_color, float(cfg.R) ** 2)


def reach_distances(cfg: LatticeConfig, event: str = RED_ARM, workers: int = 1,
                    chunk_size: int = 1000) -> np.ndarray:
    """Per trial, the largest distance reached (capped once it passes ``cfg.R``).

    Negative entries mark trials in which the origin is blue.
    """
    if event not in (RED_ARM, ONE_ARM):
        raise ValueError(f"event must be {RED_ARM!r} or {ONE_ARM!r}")
    items = [(cfg, event, lo, hi) for lo, hi in chunk_bounds(cfg.trials, chunk_size)]
    d2 = np.concatenate(parallel_map(_reach_chunk, items, workers))
    return np.where(d2 < 0, -1.0, np.sqrt(np.maximum(d2, 0.0)))


def run_trial(cfg: LatticeConfig, trial_seed: int, event: str = RED_ARM) -> bool:
    """Whether the event at radius ``cfg.R`` occurs in trial number ``trial_seed``."""
    one = LatticeConfig(cfg.lattice, cfg.R, cfg.p_perc, cfg.p_color, 1, cfg.seed, cfg.width_factor)
    box = make_box(cfg.lattice, cfg.R, cfg.width_factor)
    d2 = _reach_range(np.uint64(one.seed & _MASK64), trial_seed, trial_seed + 1,
                      1 if event == ONE_ARM else 0, box.nx, box.ny, box.inbox, box.dist2,
                      box.origin, box.dx, box.dy, _mode(cfg.lattice), cfg.perc, cfg.p_color,
                      float(cfg.R) ** 2)[0]
    return bool(d2 >= cfg.R ** 2 - 1e-9)


# ------------------------------------------------------------------ fitting

def fit_arm_exponent(radii, successes, trials: int) -> ArmEstimate:
    """Weighted least squares of ``log P`` on ``log R`` with binomial error bars."""
    radii = np.asarray(radii, dtype=float)
    successes = np.asarray(successes, dtype=np.int64)
    prob = successes / trials
    se = np.sqrt(prob * (1.0 - prob) / trials)
    keep = successes > 0
    dropped = tuple(int(r) for r in radii[~keep])
    if dropped:
        warnings.warn(f"no successes at R={dropped}; dropped from the fit", RuntimeWarning)
    if keep.sum() < 2:
        raise ValueError("need at least two radii with successes")
    sig = np.sqrt((1.0 - prob[keep]) / (prob[keep] * trials))  # delta-method sd of log P
    sig = np.where(sig > 0, sig, 1.0 / math.sqrt(trials))
    coef, cov = np.polyfit(np.log(radii[keep]), np.log(prob[keep]), 1, w=1.0 / sig,
                           cov="unscaled")
    return ArmEstimate(radii, successes, trials, prob, se, float(-coef[0]),
                       float(math.sqrt(cov[0, 0])), dropped)


def _arm(cfg: LatticeConfig, radii, event, workers, chunk_size):
    radii = np.asarray(sorted(int(r) for r in radii))
    if radii[0] < 1:
        raise formulas.DomainError("radii must be positive")
    big = LatticeConfig(cfg.lattice, int(radii[-1]), cfg.p_perc, cfg.p_color, cfg.trials,
                        cfg.seed, cfg.width_factor)
    reach = reach_distances(big, event, workers, chunk_size)
    succ = np.array([(reach >= r - 1e-9).sum() for r in radii])
    return fit_arm_exponent(radii, succ, cfg.trials)


def estimate_arm(cfg: LatticeConfig, radii, workers: int = 1, chunk_size: int = 1000) -> ArmEstimate:
    """Red one-arm probabilities over ``radii`` and the fitted exponent ``-slope``."""
    return _arm(cfg, radii, RED_ARM, workers, chunk_size)


def calibrate_one_arm(cfg: LatticeConfig, radii, workers: int = 1, chunk_size: int = 1000,
                      half_plane: bool = True) -> ArmEstimate:
    """Boundary one-arm exponent of the origin's own cluster (expected 1/3)."""
    if not half_plane:
        raise ValueError("only the half-plane (boundary) one-arm event is supported")
    return _arm(cfg, radii, ONE_ARM, workers, chunk_size)
