"""Boundary-length process of a generalized disk and its fragmentation tree.

At state ``ell`` the process jumps to ``ell + l`` at rate ``nu_plus(ell, l)``
(a loop of length ``l`` is discovered) and to ``ell - l`` at rate
``nu_minus(ell, l)`` for ``l < ell / 2`` (a piece of length ``l`` is cut
out).  Jumps are simulated in the relative size ``u = l / ell``; those with
``u < rel_cutoff`` are dropped and, unless ``compensate=False``, replaced by
their mean, a deterministic drift ``ell' = D ell**(1 - alpha')``.  The drift
keeps the truncated process self-similar and removes the first-order bias.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, optimize

from . import formulas
from .rng import parallel_map, stream

__all__ = [
    "FragKernel",
    "LambdaTrajectory",
    "FragTree",
    "TargetedState",
    "CountingFit",
    "QuadratureError",
    "nu_plus",
    "nu_minus",
    "simulate_lambda",
    "martingale_ensemble",
    "simulate_frag_tree",
    "area_martingale",
    "identity_integrals",
    "integral_identity_residual",
    "identity_root",
    "malthusian_exponent",
    "gasket_counting",
    "nu_targeted",
    "targeted_rate_excess",
    "radon_nikodym_weight",
]


EXTINCTION_FLOOR = 1e-12


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class FragKernel:
    alpha_prime: float
    A_plus: float
    A_minus: float
    rel_cutoff: float = 1e-4

    def __post_init__(self):
        if not 0.5 < self.alpha_prime < 1.0:
            raise formulas.DomainError("alpha_prime must lie in (1/2, 1)")
        if not 0.0 < self.rel_cutoff < 0.5:
            raise formulas.DomainError("rel_cutoff must lie in (0, 1/2)")
        if self.A_plus <= 0 or self.A_minus <= 0:
            raise formulas.DomainError("jump rates must be positive")

    @classmethod
    def from_ledger(cls, kappa_prime: float, p: float = 0.5, rel_cutoff: float = 1e-4,
                    normalization: float = 1.0) -> "FragKernel":
        cp = formulas.couplings(kappa_prime)
        led = formulas.jump_rate_ledger(p, cp, normalization)
        return cls(cp.alpha_prime, led.A_plus, led.A_minus, rel_cutoff)

    @cached_property
    def rates(self) -> tuple[float, float, float]:
        """``(I_plus, I_minus, D)``: truncated u-rates of each sign and the drift coefficient."""
        a, d = self.alpha_prime, self.rel_cutoff
        i_plus = integrate.quad(lambda u: u ** (-a - 1) * (1 + u) ** (-a - 1), d, 1.0)[0]
        i_plus += integrate.quad(lambda u: u ** (-a - 1) * (1 + u) ** (-a - 1), 1.0, np.inf)[0]
        i_minus = integrate.quad(lambda u: u ** (-a - 1) * (1 - u) ** (-a - 1), d, 0.5)[0]
        # mean of the dropped jumps; u**(-a) singularity handled by the algebraic weight
        up = integrate.quad(lambda u: (1 + u) ** (-a - 1), 0.0, d, weight="alg", wvar=(-a, 0.0))[0]
        down = integrate.quad(lambda u: (1 - u) ** (-a - 1), 0.0, d, weight="alg", wvar=(-a, 0.0))[0]
        return self.A_plus * i_plus, self.A_minus * i_minus, self.A_plus * up - self.A_minus * down


def _check_pos(**kw):
    for name, val in kw.items():
        if not val > 0:
            raise formulas.DomainError(f"{name} must be positive, got {val!r}")


def nu_plus(ell: float, l: float, k: FragKernel) -> float:
    """Rate density of a jump from ``ell`` to ``ell + l``."""
    _check_pos(ell=ell, l=l)
    a1 = k.alpha_prime + 1.0
    return k.A_plus * ell ** a1 / (l ** a1 * (ell + l) ** a1)


def nu_minus(ell: float, l: float, k: FragKernel) -> float:
    """Rate density of a jump from ``ell`` to ``ell - l`` (zero unless ``l < ell/2``)."""
    _check_pos(ell=ell, l=l)
    if not l < ell / 2.0:
        return 0.0
    a1 = k.alpha_prime + 1.0
    return k.A_minus * ell ** a1 / (l ** a1 * (ell - l) ** a1)


# ------------------------------------------------------------------ sampling

def _sample_u(rng, k: FragKernel, n: int):
    """Relative jump sizes and signs (+1 loop, -1 cut) for ``n`` events."""
    a, d = k.alpha_prime, k.rel_cutoff
    i_plus, i_minus, _ = k.rates
    sign = np.where(rng.random(n) < i_plus / (i_plus + i_minus), 1, -1)
    u = np.empty(n)
    todo = np.arange(n)
    # envelope u**(-a-1) on [d, inf) or [d, 1/2], then accept
    low_mass = 1.0 - (d / 0.5) ** a
    while todo.size:
        s = sign[todo]
        v = rng.random(todo.size)
        cand = np.where(s > 0, d * (1.0 - v) ** (-1.0 / a), d * (1.0 - v * low_mass) ** (-1.0 / a))
        acc = np.where(s > 0, 1.0 + cand, 2.0 * (1.0 - np.minimum(cand, 0.5))) ** (-a - 1.0)
        ok = rng.random(todo.size) < acc
        u[todo[ok]] = cand[ok]
        todo = todo[~ok]
    return u, sign


def _waiting_time(rng, ell, k: FragKernel, compensate: bool, size=None):
    a = k.alpha_prime
    i_plus, i_minus, drift = k.rates
    tot = i_plus + i_minus
    e = rng.exponential(size=size)
    base = ell ** a
    if not compensate or drift == 0.0:
        return e * base / tot
    b = a * drift
    return base * np.expm1(e * b / tot) / b


def _drift_state(ell, dt, k: FragKernel, compensate: bool):
    if not compensate:
        return ell
    a = k.alpha_prime
    x = ell ** a + a * k.rates[2] * dt
    return np.maximum(x, 0.0) ** (1.0 / a)


# ------------------------------------------------------------ trajectories

LOOP, CUT = 1, -1


@dataclass
class LambdaTrajectory:
    times: np.ndarray
    kinds: np.ndarray  # +1 loop, -1 cut
    jumps: np.ndarray
    states_after: np.ndarray
    initial: float
    kernel: FragKernel
    compensate: bool = True
    end_time: float = math.inf
    stopped_at_floor: bool = False

    def __len__(self):
        return len(self.times)

    def states_before(self) -> np.ndarray:
        return self.states_after - self.jumps

    def state(self, t: float) -> float:
        """Right-continuous value at time ``t`` (frozen after ``end_time``)."""
        t = min(t, self.end_time)
        i = int(np.searchsorted(self.times, t, side="right"))
        t0, x0 = (0.0, self.initial) if i == 0 else (self.times[i - 1], self.states_after[i - 1])
        return float(_drift_state(x0, t - t0, self.kernel, self.compensate))


def simulate_lambda(initial: float, k: FragKernel, seed: int, T: float | None = None,
                    ell_min: float | None = None, compensate: bool = True,
                    max_events: int = 10_000_000) -> LambdaTrajectory:
    """Event-driven simulation up to time ``T`` or until the state drops below ``ell_min``.

    Without ``ell_min`` the floor is ``EXTINCTION_FLOOR * initial``, which
    stands in for absorption at 0.
    """
    _check_pos(initial=initial)
    if T is None and ell_min is None:
        raise ValueError("give a stopping time T, a floor ell_min, or both")
    # the truncated process is absorbed at 0 in finite time, so there is always a floor
    floor = ell_min if ell_min is not None else EXTINCTION_FLOOR * initial
    horizon = T if T is not None else math.inf
    rng = stream(seed, 3)
    a = k.alpha_prime
    times, kinds, jumps, after = [], [], [], []
    t, ell = 0.0, float(initial)
    stopped = False
    end = horizon
    while True:
        if len(times) >= max_events:
            raise RuntimeError(f"event budget {max_events} exhausted")
        dt = float(_waiting_time(rng, ell, k, compensate))
        if compensate and floor > 0 and k.rates[2] < 0:
            t_floor = (floor ** a - ell ** a) / (a * k.rates[2])
            if t_floor < dt and t + t_floor <= horizon:
                end, stopped = t + t_floor, True
                break
        if t + dt > horizon:
            break
        t += dt
        pre = float(_drift_state(ell, dt, k, compensate))
        u, s = _sample_u(rng, k, 1)
        jump = float(s[0] * u[0] * pre)
        ell = pre + jump
        times.append(t)
        kinds.append(int(s[0]))
        jumps.append(jump)
        after.append(ell)
        if ell < floor:
            end, stopped = t, True
            break
    return LambdaTrajectory(np.array(times), np.array(kinds, dtype=np.int64), np.array(jumps),
                            np.array(after), float(initial), k, compensate, end, stopped)


def area_martingale(traj: LambdaTrajectory, t: float) -> float:
    """``Lambda_t**(2a') + sum over jumps up to t of |jump|**(2a')``."""
    if t < 0:
        raise formulas.DomainError("t must be non-negative")
    two_a = 2.0 * traj.kernel.alpha_prime
    te = min(t, traj.end_time)
    i = int(np.searchsorted(traj.times, te, side="right"))
    return traj.state(t) ** two_a + float(np.sum(np.abs(traj.jumps[:i]) ** two_a))


def _martingale_chunk(args):
    initial, k, checkpoints, n, seed, chunk, compensate, floor_frac = args
    rng = stream(seed, 4, chunk)
    a = k.alpha_prime
    two_a = 2.0 * a
    checkpoints = np.asarray(checkpoints, dtype=float)
    out = np.empty((n, len(checkpoints)))
    ell = np.full(n, float(initial))
    t = np.zeros(n)
    acc = np.zeros(n)
    floor = floor_frac * initial
    active = np.arange(n)
    next_cp = np.zeros(n, dtype=np.int64)
    while active.size:
        dt = _waiting_time(rng, ell[active], k, compensate, size=active.size)
        t_new = t[active] + dt
        # record every checkpoint passed before the next event
        while True:
            cp_idx = next_cp[active]
            has = cp_idx < len(checkpoints)
            cp_t = np.where(has, checkpoints[np.minimum(cp_idx, len(checkpoints) - 1)], np.inf)
            hit = has & (cp_t < t_new)
            if not hit.any():
                break
            ids = active[hit]
            x = _drift_state(ell[ids], cp_t[hit] - t[ids], k, compensate)
            out[ids, next_cp[ids]] = x ** two_a + acc[ids]
            next_cp[ids] += 1
        done = next_cp[active] >= len(checkpoints)
        live = ~done
        ids = active[live]
        pre = _drift_state(ell[ids], dt[live], k, compensate)
        u, s = _sample_u(rng, k, ids.size)
        jump = u * pre
        acc[ids] += jump ** two_a
        ell[ids] = pre + s * jump
        t[ids] = t_new[live]
        low = ell[ids] < floor
        if low.any():
            # stopped below the floor: the functional is frozen from here on
            fid = ids[low]
            for j in fid:
                out[j, next_cp[j]:] = ell[j] ** two_a + acc[j]
                next_cp[j] = len(checkpoints)
        active = ids[next_cp[ids] < len(checkpoints)]
    return out


def martingale_ensemble(initial: float, k: FragKernel, checkpoints, n: int, seed: int,
                        workers: int = 1, chunk_size: int = 2000, compensate: bool = True,
                        floor_frac: float = 1e-6) -> np.ndarray:
    """Area functional at each checkpoint for ``n`` independent trajectories.

    Returns an ``(n, len(checkpoints))`` array.  Trajectories that fall below
    ``floor_frac * initial`` are stopped (optional stopping keeps the mean).
    """
    items = []
    for c, lo in enumerate(range(0, n, chunk_size)):
        items.append((initial, k, tuple(checkpoints), min(chunk_size, n - lo), seed, c,
                      compensate, floor_frac))
    return np.vstack(parallel_map(_martingale_chunk, items, workers))


# -------------------------------------------------------------------- trees

ORIGIN_ROOT, ORIGIN_CUT, ORIGIN_LOOP = 0, 1, 2


@dataclass
class FragTree:
    """Exploration tree: one node per explored generalized disk.

    ``loop_node``/``loop_length`` record every discovered loop; with
    ``nested=True`` loops above ``ell_min`` are also explored as nodes
    (origin ``ORIGIN_LOOP``).  ``leaf_lengths`` are cut pieces below the floor.
    """

    boundary_length: np.ndarray
    parent: np.ndarray
    origin: np.ndarray
    loop_node: np.ndarray
    loop_length: np.ndarray
    leaf_lengths: np.ndarray
    ell_min: float
    truncated: bool = False
    spawn_state: np.ndarray = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.boundary_length)


def simulate_frag_tree(initial: float, k: FragKernel, ell_min: float, seed: int,
                       nested: bool = False, max_nodes: int = 10_000_000,
                       compensate: bool = True) -> FragTree:
    """Explore all nodes of the tree at once, one event per active node per round.

    Each node follows the boundary-length process and keeps the larger
    piece at every cut; the cut-out piece becomes a child node when it is at
    least ``ell_min``.  A node stops once its length falls below ``ell_min``.
    """
    _check_pos(initial=initial, ell_min=ell_min)
    rng = stream(seed, 5)
    bl, par, orig, spawn = [float(initial)], [-1], [ORIGIN_ROOT], [math.nan]
    loops_n, loops_l, leaves = [], [], []
    node = np.array([0], dtype=np.int64)
    ell = np.array([float(initial)])
    truncated = False
    while node.size:
        dt = _waiting_time(rng, ell, k, compensate, size=node.size)
        pre = _drift_state(ell, dt, k, compensate)
        u, s = _sample_u(rng, k, node.size)
        piece = u * pre
        new_ell = pre + s * piece
        is_loop = s > 0
        loops_n.append(node[is_loop])
        loops_l.append(piece[is_loop])
        spawn_mask = ~is_loop & (piece >= ell_min)
        if nested:
            spawn_mask |= is_loop & (piece >= ell_min)
        small_cut = ~is_loop & (piece < ell_min)
        leaves.append(piece[small_cut])
        new_nodes = node[spawn_mask]
        start = len(bl)
        if start + new_nodes.size > max_nodes:
            truncated = True
            new_nodes = new_nodes[: max(0, max_nodes - start)]
            spawn_mask = np.zeros_like(spawn_mask)
        bl.extend(piece[spawn_mask].tolist())
        par.extend(node[spawn_mask].tolist())
        orig.extend(np.where(is_loop[spawn_mask], ORIGIN_LOOP, ORIGIN_CUT).tolist())
        spawn.extend(pre[spawn_mask].tolist())
        keep = new_ell >= ell_min
        node = np.concatenate((node[keep], np.arange(start, start + int(spawn_mask.sum()))))
        ell = np.concatenate((new_ell[keep], piece[spawn_mask]))
        if truncated:
            break
    return FragTree(
        boundary_length=np.array(bl), parent=np.array(par, dtype=np.int64),
        origin=np.array(orig, dtype=np.int64),
        loop_node=np.concatenate(loops_n) if loops_n else np.empty(0, dtype=np.int64),
        loop_length=np.concatenate(loops_l) if loops_l else np.empty(0),
        leaf_lengths=np.concatenate(leaves) if leaves else np.empty(0),
        ell_min=float(ell_min), truncated=truncated, spawn_state=np.array(spawn),
    )


# --------------------------------------------------------------- identities

def _identity_pieces(a: float, tol: float):
    def quad(f, lo, hi, **kw):
        val, err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=500, **kw)
        if not np.isfinite(val) or err > 10 * max(tol, tol * abs(val)):
            raise QuadratureError(f"quadrature did not converge (err={err:.2e})")
        return val

    two_a = 2.0 * a

    # [(1+l)^{2a} - 1] / l through expm1/log1p; the l^{-a} factor is the algebraic weight
    def g_plus(l):
        return two_a if l == 0 else math.expm1(two_a * math.log1p(l)) * (1 + l) ** (-a - 1) / l

    def g_minus(l):
        return -two_a if l == 0 else math.expm1(two_a * math.log1p(-l)) * (1 - l) ** (-a - 1) / l

    i_plus = quad(g_plus, 0.0, 1.0, weight="alg", wvar=(-a, 0.0))
    # l > 1 mapped to v = 1/l in (0, 1)
    i_plus += quad(lambda v: ((1 + v) ** two_a - v ** two_a) * (1 + v) ** (-a - 1), 0.0, 1.0)
    i_plus += quad(lambda l: (1 + l) ** (-a - 1), 0.0, 1.0, weight="alg", wvar=(a - 1.0, 0.0))
    i_plus += quad(lambda v: (1 + v) ** (-a - 1), 0.0, 1.0)
    i_minus = quad(g_minus, 0.0, 0.5, weight="alg", wvar=(-a, 0.0))
    i_minus += quad(lambda l: (1 - l) ** (-a - 1), 0.0, 0.5, weight="alg", wvar=(a - 1.0, 0.0))
    return i_plus, i_minus


def identity_integrals(alpha_prime: float, tol: float = 1e-11) -> tuple[float, float]:
    """The positive-jump and negative-jump integrals of the area-variation identity."""
    if not 0.5 < alpha_prime < 1.0:
        raise formulas.DomainError("alpha_prime must lie in (1/2, 1)")
    return _identity_pieces(float(alpha_prime), tol)


def integral_identity_residual(alpha_prime: float, ratio: float, tol: float = 1e-11) -> float:
    """``ratio * I_plus + I_minus``; vanishes when ratio = A_plus / A_minus."""
    i_plus, i_minus = identity_integrals(alpha_prime, tol)
    return ratio * i_plus + i_minus


def identity_root(alpha_prime: float, tol: float = 1e-11) -> float:
    """Root in ``ratio`` of :func:`integral_identity_residual` (Brent's method)."""
    f = lambda r: integral_identity_residual(alpha_prime, r, tol)
    return optimize.brentq(f, 1e-9, 10.0, xtol=1e-14)


def malthusian_exponent(k: FragKernel, loops_are_cells: bool = False) -> float:
    """Smaller root ``q`` of the cumulant of the untruncated cell system (quadrature).

    With ``loops_are_cells=False`` loops are terminal (gasket tree); the root
    governs the number of loops of length about ``eps`` (``eps**-q``).
    """
    a = k.alpha_prime

    def cumulant(q):
        def quad(f, lo, hi, w=None):
            kw = {} if w is None else {"weight": "alg", "wvar": (w, 0.0)}
            return integrate.quad(f, lo, hi, limit=500, **kw)[0]

        def em_up(u):
            return q if u == 0 else math.expm1(q * math.log1p(u)) * (1 + u) ** (-a - 1) / u

        def em_down(u):
            return -q if u == 0 else math.expm1(q * math.log1p(-u)) * (1 - u) ** (-a - 1) / u

        # u > 1 is mapped to v = 1/u, which leaves powers v**(2a' - q) and v**(2a')
        up = quad(em_up, 0, 1, -a)
        up += quad(lambda v: (1 + v) ** (q - a - 1), 0, 1, 2 * a - q)
        up -= quad(lambda v: (1 + v) ** (-a - 1), 0, 1, 2 * a)
        if loops_are_cells:
            up += quad(lambda u: (1 + u) ** (-a - 1), 0, 1, q - 1 - a)
            up += quad(lambda v: (1 + v) ** (-a - 1), 0, 1, 2 * a - q)
        down = quad(em_down, 0, 0.5, -a) + quad(lambda u: (1 - u) ** (-a - 1), 0, 0.5, q - 1 - a)
        return k.A_plus * up + k.A_minus * down

    # the cumulant is convex on (a', 2a' + 1) with two roots; a' + 1 separates them
    return optimize.brentq(cumulant, a + 1e-6, a + 1.0, xtol=1e-12)


# ---------------------------------------------------------------- counting

@dataclass(frozen=True)
class CountingFit:
    eps: np.ndarray
    counts: np.ndarray
    slope: float
    stderr: float
    low_statistics: bool

    def normalized(self, alpha_prime: float) -> np.ndarray:
        """``eps**(alpha' + 1/2) * N_eps``."""
        return self.eps ** (alpha_prime + 0.5) * self.counts


def gasket_counting(trees, eps, min_count: int = 50) -> CountingFit:
    """Count loops with length in ``[eps, 2 eps]`` and fit ``log N`` against ``log eps``."""
    trees = list(trees)
    eps = np.asarray(eps, dtype=float)
    ell_min = max(t.ell_min for t in trees)
    if np.any(eps < 2 * ell_min):
        raise ValueError("every eps must be at least 2 * ell_min")
    if np.log10(eps.max() / eps.min()) < 1.5 - 1e-9:
        raise ValueError("eps grid must span at least 1.5 decades")
    lengths = np.sort(np.concatenate([t.loop_length for t in trees]))
    counts = (np.searchsorted(lengths, 2 * eps, side="right")
              - np.searchsorted(lengths, eps, side="left")).astype(float)
    low = bool(np.any(counts < min_count))
    keep = counts > 0
    if keep.sum() < 3:
        # too few occupied bins for a slope with an error bar
        return CountingFit(eps, counts, math.nan, math.nan, True)
    lx, ly = np.log(eps[keep]), np.log(counts[keep])
    coef, cov = np.polyfit(lx, ly, 1, w=np.sqrt(counts[keep]), cov="unscaled")
    return CountingFit(eps, counts, float(coef[0]), float(math.sqrt(cov[0, 0])), low)


# ------------------------------------------------------------- targeted

@dataclass(frozen=True)
class TargetedState:
    r: float
    l: float

    def __post_init__(self):
        if self.r < 0 or self.l < 0 or self.r + self.l <= 0:
            raise formulas.DomainError("need r, l >= 0 and r + l > 0")

    @property
    def total(self) -> float:
        return self.r + self.l


def nu_targeted(state: TargetedState, side: str, h: float, rates: formulas.JumpRates,
                alpha_prime: float) -> float:
    """Rate density of the targeted exploration for a jump of ``side`` ('r' or 'l').

    ``h > 0`` is an upward jump of that side, ``h < 0`` a downward jump of size ``|h|``.
    """
    if h == 0:
        raise formulas.DomainError("jump size must be nonzero")
    if side not in ("r", "l"):
        raise ValueError("side must be 'r' or 'l'")
    a1 = alpha_prime + 1.0
    tot = state.total
    size = abs(h)
    if h > 0:
        amp = rates.A_plus_R if side == "r" else rates.A_plus_L
        return amp * tot ** a1 / (size ** a1 * (tot + size) ** a1)
    limit = state.r if side == "r" else state.l
    if not size < limit:
        return 0.0
    amp = rates.A_minus_R if side == "r" else rates.A_minus_L
    return amp * tot ** a1 / (size ** a1 * (tot - size) ** a1)


def targeted_rate_excess(state: TargetedState, rates: formulas.JumpRates, alpha_prime: float,
                         cutoff: float = 0.0) -> float:
    """Total jump rate of the targeted process minus that of the half-plane pair.

    Jumps of size below ``cutoff`` are ignored in both.  The weight
    ``(ell_0 / ell_t)**(alpha'+1)`` is a Radon-Nikodym derivative of the targeted
    law with respect to the killed half-plane law exactly when this excess
    tends to 0 with the cutoff.
    """
    if cutoff < 0:
        raise formulas.DomainError("cutoff must be non-negative")
    a = alpha_prime
    a1 = a + 1.0
    tot = state.total

    # [h(new)/h(old) - 1] / h with its limit at 0; the h^{-a} factor is the algebraic weight
    def ratio_up(h):
        return -a1 / tot if h == 0 else math.expm1(-a1 * math.log1p(h / tot)) / h

    def ratio_down(h):
        return a1 / tot if h == 0 else math.expm1(-a1 * math.log1p(-h / tot)) / h

    def quad_w(f, lo, hi):
        if lo >= hi:
            return 0.0
        if lo == 0:
            return integrate.quad(f, 0.0, hi, weight="alg", wvar=(-a, 0.0), limit=200)[0]
        return integrate.quad(lambda h: f(h) * h ** (-a), lo, hi, limit=200)[0]

    def up_term(amp):
        head = quad_w(ratio_up, cutoff, tot)
        tail = integrate.quad(lambda h: ratio_up(h) * h ** (-a), max(tot, cutoff), np.inf,
                              limit=200)[0]
        return amp * (head + tail)

    def down_term(amp, x):
        # jumps of size at least x kill the half-plane pair
        if x <= cutoff and cutoff == 0:
            return -math.inf
        kept = quad_w(ratio_down, cutoff, x)
        return amp * (kept - max(x, cutoff) ** (-a) / a)

    return (up_term(rates.A_plus_R) + up_term(rates.A_plus_L)
            + down_term(rates.A_minus_R, state.r) + down_term(rates.A_minus_L, state.l))


def radon_nikodym_weight(ell0: float, ell_t: float, alpha_prime: float) -> float:
    """``(ell0 / ell_t)**(alpha' + 1)``."""
    _check_pos(ell0=ell0, ell_t=ell_t)
    return (ell0 / ell_t) ** (alpha_prime + 1.0)
