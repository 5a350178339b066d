"""Discrete alpha-stable looptrees.

A looptree is coded by a downward-skip-free walk (steps >= -1) that starts
and ends at 0 and stays non-negative.  Every up-step of size k opens a loop
of perimeter k.  Positions on a loop are offsets 0..k-1 measured from the
point where the loop is attached to its parent; walk level ``b + j`` on a
loop with base level ``b`` is offset ``j mod k``.  A point at offset 0 is the
attachment point and is always reported on the parent (canonical form), so
attach offsets of non-root loops are never 0.

Boundary index ``s`` (0 <= s < n) is the point visited by the walk at time
``s``; the image of the counting measure on ``[0, n)`` is the boundary-length
measure, of total mass ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np
from scipy import special

from . import formulas
from .rng import chunk_bounds, parallel_map, stream

__all__ = [
    "SamplingError",
    "StructureError",
    "DiscreteExcursion",
    "Looptree",
    "step_law",
    "sample_walk",
    "sample_excursion",
    "build_looptree",
    "boundary_measure_total",
    "loop_chain",
    "reroot",
    "root_position_of",
    "perimeter_tail_fit",
    "ensemble_statistics",
]

ROOT = -1


class SamplingError(RuntimeError):
    def __init__(self, msg, retries=0):
        super().__init__(msg)
        self.retries = retries


class StructureError(ValueError):
    """The step sequence is not a valid excursion."""


@dataclass(frozen=True)
class DiscreteExcursion:
    steps: np.ndarray

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.int64)
        object.__setattr__(self, "steps", steps)

    @property
    def n(self) -> int:
        return len(self.steps)

    def levels(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.steps)))


@dataclass
class Looptree:
    """Loops with parent pointers, plus the boundary parameterization.

    ``perimeter[i]``, ``parent[i]`` (``-1`` for the root point) and
    ``attach[i]`` describe loop ``i``.  ``contour_loop[s]`` and
    ``contour_offset[s]`` give the canonical point of boundary index ``s``.
    ``excursion`` is a coding walk of this rooted looptree and ``order[j]`` is
    the loop opened by its ``j``-th up-step.  ``frame[i]`` is the offset, in
    the coordinates of the tree this one was rerooted from (cumulatively),
    of loop ``i``'s current attachment point.
    """

    perimeter: np.ndarray
    parent: np.ndarray
    attach: np.ndarray
    excursion: DiscreteExcursion
    order: np.ndarray
    contour_loop: np.ndarray = field(repr=False)
    contour_offset: np.ndarray = field(repr=False)
    jump_time: np.ndarray = field(repr=False)
    close_time: np.ndarray = field(repr=False)
    frame: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.frame is None:
            self.frame = np.zeros(len(self.perimeter), dtype=np.int64)

    @property
    def n(self) -> int:
        return self.excursion.n

    @property
    def n_loops(self) -> int:
        return len(self.perimeter)

    def same_structure(self, other: "Looptree") -> bool:
        return (np.array_equal(self.perimeter, other.perimeter)
                and np.array_equal(self.parent, other.parent)
                and np.array_equal(self.attach, other.attach))

    def point(self, s: int) -> tuple[int, int]:
        if not 0 <= s < self.n:
            raise IndexError(f"boundary index {s} outside [0, {self.n})")
        return int(self.contour_loop[s]), int(self.contour_offset[s])

    def depth(self) -> np.ndarray:
        d = np.zeros(self.n_loops, dtype=np.int64)
        for i in self._topological():
            par = self.parent[i]
            d[i] = 0 if par == ROOT else d[par] + 1
        return d

    def _topological(self):
        # parents before children
        kids = [[] for _ in range(self.n_loops)]
        roots = []
        for i, par in enumerate(self.parent):
            (roots if par == ROOT else kids[par]).append(i)
        out, stack = [], roots[::-1]
        while stack:
            i = stack.pop()
            out.append(i)
            stack.extend(kids[i][::-1])
        return out


# ---------------------------------------------------------------- step law

def step_law(alpha: float) -> tuple[float, float]:
    """Return ``(c, q)``: ``P(step=k) = c k**(-alpha-1)`` for k >= 1, ``P(step=-1) = q``.

    ``q`` makes the mean step zero.
    """
    if not 1.0 < alpha < 2.0:
        raise formulas.DomainError("alpha must lie in (1, 2)")
    z_tail, z_mean = special.zeta(alpha + 1.0), special.zeta(alpha)
    c = 1.0 / (z_tail + z_mean)
    return c, c * z_mean


def sample_walk(alpha: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` unconditioned i.i.d. steps of the zero-mean law."""
    c, q = step_law(alpha)
    down = rng.random(n) < q
    ups = rng.zipf(alpha + 1.0, n)
    return np.where(down, -1, ups).astype(np.int64)


@lru_cache(maxsize=16)
def _partial_sum_tables(alpha: float, total: int):
    """pmfs of sums of r shifted steps ``Y = step + 1`` truncated to [0, total].

    Only the block sizes met by halving ``total`` steps are tabulated.
    """
    c, q = step_law(alpha)
    size = total + 1
    pmf = np.zeros(size)
    pmf[0] = q
    k = np.arange(1, size - 1, dtype=float)
    pmf[2:] = c * k ** (-alpha - 1.0)

    sizes = set()
    todo = [total]
    while todo:
        r = todo.pop()
        if r in sizes:
            continue
        sizes.add(r)
        if r > 1:
            todo += [r // 2, r - r // 2]
    nfft = 1 << int(np.ceil(np.log2(2 * size)))

    def mul(a, b):
        out = np.fft.irfft(np.fft.rfft(a, nfft) * np.fft.rfft(b, nfft), nfft)[:size]
        return np.clip(out, 0.0, None)

    cache = {1: pmf}

    def power(r):
        if r in cache:
            return cache[r]
        half = power(r // 2)
        res = mul(half, half)
        if r % 2:
            res = mul(res, pmf)
        cache[r] = res
        return res

    ordered = sorted(sizes)
    index = np.full(total + 1, -1, dtype=np.int64)
    table = np.empty((len(ordered), size))
    for i, r in enumerate(ordered):
        table[i] = power(r)
        index[r] = i
    return table, index


@numba.njit(cache=True)
def _split_fill(table, index, total_steps, target, uniforms):
    # fill Y[0:total_steps] with sum == target by exact recursive halving
    out = np.zeros(total_steps, dtype=np.int64)
    st_start = np.empty(4 * 64, dtype=np.int64)
    st_len = np.empty(4 * 64, dtype=np.int64)
    st_tgt = np.empty(4 * 64, dtype=np.int64)
    sp = 0
    st_start[0] = 0
    st_len[0] = total_steps
    st_tgt[0] = target
    sp = 1
    u_i = 0
    while sp > 0:
        sp -= 1
        start = st_start[sp]
        r = st_len[sp]
        t = st_tgt[sp]
        if r == 1:
            out[start] = t
            continue
        r1 = r // 2
        r2 = r - r1
        a = table[index[r1]]
        b = table[index[r2]]
        tot = 0.0
        for s in range(t + 1):
            tot += a[s] * b[t - s]
        if tot <= 0.0:
            return out, False
        u = uniforms[u_i] * tot
        u_i += 1
        acc = 0.0
        pick = t
        for s in range(t + 1):
            acc += a[s] * b[t - s]
            if acc >= u:
                pick = s
                break
        st_start[sp] = start
        st_len[sp] = r1
        st_tgt[sp] = pick
        sp += 1
        st_start[sp] = start + r1
        st_len[sp] = r2
        st_tgt[sp] = t - pick
        sp += 1
    return out, True


def _cycle_rotate(steps: np.ndarray) -> np.ndarray:
    """Unique rotation of a sum ``-1`` sequence that first hits -1 at the end."""
    levels = np.cumsum(steps)
    k = int(np.argmin(levels))  # first index of the minimum
    return np.roll(steps, -(k + 1))


def sample_excursion(alpha: float, n: int, seed: int) -> DiscreteExcursion:
    """Excursion of length ``n`` of the zero-mean walk, conditioned exactly.

    ``n + 1`` steps are drawn conditioned on total sum ``-1`` (a bridge), the
    cycle lemma rotates them into a first-passage path, and the final ``-1``
    is dropped.
    """
    if n < 2:
        raise formulas.DomainError("n must be at least 2")
    step_law(alpha)
    total = n + 1
    table, index = _partial_sum_tables(float(alpha), total)
    rng = stream(seed, 2)
    # target for Y = step + 1: sum of Y over n+1 steps equals n
    y, ok = _split_fill(table, index, total, n, rng.random(2 * total))
    if not ok:
        raise SamplingError(f"bridge weights vanished for alpha={alpha}, n={n}", retries=1)
    steps = _cycle_rotate(y - 1)
    return DiscreteExcursion(steps[:-1])


# ------------------------------------------------------------ construction

def _validate(exc: DiscreteExcursion):
    steps = exc.steps
    if np.any(steps < -1) or np.any(steps == 0):
        raise StructureError("steps must be -1 or positive")
    lv = exc.levels()
    if np.any(lv[:-1] < 0) or lv[-1] != 0:
        raise StructureError("partial sums must stay >= 0 and end at 0")


def _canonical(stack_loops, stack_base, perim, depth_idx, level):
    """Canonical (loop, offset) of a walk level given the open-loop stack."""
    i = depth_idx
    while i >= 0:
        lp = stack_loops[i]
        off = (level - stack_base[i]) % perim[lp]
        if off != 0:
            return lp, off
        level = stack_base[i]
        i -= 1
    return ROOT, 0


def build_looptree(exc: DiscreteExcursion) -> Looptree:
    """Single stack pass over the walk; linear in ``n``."""
    _validate(exc)
    steps = exc.steps.tolist()
    n = len(steps)
    n_loops = sum(1 for s in steps if s > 0)
    perim = [0] * n_loops
    parent = [ROOT] * n_loops
    attach = [0] * n_loops
    jump_time = [0] * n_loops
    close_time = [n] * n_loops
    c_loop = [ROOT] * n
    c_off = [0] * n

    stack_loops: list[int] = []
    stack_base: list[int] = []
    level = 0
    nxt = 0
    for s, st in enumerate(steps):
        lp, off = _canonical(stack_loops, stack_base, perim, len(stack_loops) - 1, level)
        c_loop[s] = lp
        c_off[s] = off
        if st > 0:
            perim[nxt] = st
            parent[nxt] = lp
            attach[nxt] = off
            jump_time[nxt] = s
            stack_loops.append(nxt)
            stack_base.append(level)
            nxt += 1
            level += st
        else:
            level -= 1
            while stack_loops and stack_base[-1] >= level:
                close_time[stack_loops.pop()] = s + 1
                stack_base.pop()
    return Looptree(
        perimeter=np.array(perim, dtype=np.int64),
        parent=np.array(parent, dtype=np.int64),
        attach=np.array(attach, dtype=np.int64),
        excursion=exc,
        order=np.arange(n_loops, dtype=np.int64),
        contour_loop=np.array(c_loop, dtype=np.int64),
        contour_offset=np.array(c_off, dtype=np.int64),
        jump_time=np.array(jump_time, dtype=np.int64),
        close_time=np.array(close_time, dtype=np.int64),
    )


def boundary_measure_total(lt: Looptree) -> int:
    """Total generalized boundary length; equals the excursion length."""
    return int(len(lt.contour_loop))


# ---------------------------------------------------------------- metric

def _up_path(lt, loop, off):
    path = []
    while loop != ROOT:
        path.append((loop, off))
        off = int(lt.attach[loop])
        loop = int(lt.parent[loop])
    return path


def _arc(off_a, off_b, k):
    d = abs(off_a - off_b) % k
    return min(d, k - d)


def loop_chain(lt: Looptree, a: int, b: int) -> tuple[list[int], int]:
    """Chain of loops joining boundary points ``a`` and ``b`` and their distance.

    The distance adds, over every loop of the chain, the shorter of the two
    arcs between the entry and exit points.
    """
    pa = _up_path(lt, *lt.point(a))
    pb = _up_path(lt, *lt.point(b))
    loops_a = {lp: i for i, (lp, _) in enumerate(pa)}
    join_b = next((j for j, (lp, _) in enumerate(pb) if lp in loops_a), None)
    dist = 0
    chain_a, chain_b = [], []
    if join_b is None:
        ia, ib = len(pa), len(pb)
        meet = []
    else:
        ia, ib = loops_a[pb[join_b][0]], join_b
        lp = pa[ia][0]
        d = _arc(pa[ia][1], pb[ib][1], int(lt.perimeter[lp]))
        meet = [lp] if d > 0 else []
        dist += d
    for lp, off in pa[:ia]:
        chain_a.append(lp)
        dist += _arc(off, 0, int(lt.perimeter[lp]))
    for lp, off in pb[:ib]:
        chain_b.append(lp)
        dist += _arc(off, 0, int(lt.perimeter[lp]))
    return chain_a + meet + chain_b[::-1], dist


# ---------------------------------------------------------------- rerooting

def _canonicalize(lt, loop, off):
    while loop != ROOT and off == 0:
        off = int(lt.attach[loop])
        loop = int(lt.parent[loop])
    return loop, off


def root_position_of(lt: Looptree, rerooted: Looptree) -> int:
    """Boundary index of ``rerooted`` that lies at the root point of ``lt``.

    ``rerooted`` must come from ``lt`` through :func:`reroot` (shared labels).
    """
    first = int(np.flatnonzero(lt.parent == ROOT)[0])
    k = int(lt.perimeter[first])
    rel = int(rerooted.frame[first] - lt.frame[first])
    target = _canonicalize(rerooted, first, (0 - rel) % k)
    hits = np.flatnonzero((rerooted.contour_loop == target[0])
                          & (rerooted.contour_offset == target[1]))
    return int(hits[0])


def _encode(perim, parent, attach, key, n):
    """Coding walk of a rooted looptree; children at a point sorted by ``key``."""
    n_loops = len(perim)
    at_point: dict[tuple[int, int], list[int]] = {}
    for i in range(n_loops):
        at_point.setdefault((int(parent[i]), int(attach[i])), []).append(i)
    for lst in at_point.values():
        lst.sort(key=lambda i: key[i])
    steps: list[int] = []
    order: list[int] = []
    # frames: (loop, next offset to visit); offsets run k-1 .. 1 then close
    work = [("kids", ROOT, 0)]
    while work:
        kind, lp, off = work.pop()
        if kind == "kids":
            for c in reversed(at_point.get((lp, off), [])):
                work.append(("loop", c, 0))
        elif kind == "loop":
            k = int(perim[lp])
            steps.append(k)
            order.append(lp)
            work.append(("down", lp, k - 1))
        else:  # "down": descend one unit to offset ``off`` of ``lp``
            steps.append(-1)
            if off >= 1:
                work.append(("down", lp, off - 1))
                work.append(("kids", lp, off))
    if len(steps) != n:
        raise StructureError(f"encoding produced {len(steps)} steps, expected {n}")
    return np.array(steps, dtype=np.int64), np.array(order, dtype=np.int64)


def reroot(lt: Looptree, u: int) -> Looptree:
    """Re-anchor the looptree at boundary point ``u``.

    Loops keep their labels, perimeters and cyclic orientation; the chain from
    the new root to the old root is re-parented and each loop on it gets its
    offset frame shifted to its new attachment point.
    """
    loop_u, off_u = lt.point(u)
    perim = lt.perimeter
    parent = lt.parent.copy()
    attach = lt.attach.copy()
    frame = lt.frame.copy()
    if loop_u == ROOT:
        return _relabel(lt, perim, parent, attach, lt.jump_time.copy(), frame)

    shift = {}
    chain = []
    lp, off = loop_u, off_u
    while lp != ROOT:
        chain.append(lp)
        shift[lp] = off
        off = int(lt.attach[lp])
        lp = int(lt.parent[lp])
    # shift[L] is the old offset of L's new attachment point
    for lp in chain:
        frame[lp] = (frame[lp] + shift[lp]) % int(perim[lp])
    parent[chain[0]] = ROOT
    attach[chain[0]] = 0
    for below, above in zip(chain[:-1], chain[1:]):
        parent[above] = below
        attach[above] = (0 - shift[below]) % int(perim[below])
    last = chain[-1]
    in_chain = set(chain)
    for i in range(lt.n_loops):
        if i in in_chain:
            continue
        par = int(lt.parent[i])
        if par == ROOT:
            parent[i] = last
            attach[i] = (0 - shift[last]) % int(perim[last])
        elif par in in_chain:
            new_off = (int(lt.attach[i]) - shift[par]) % int(perim[par])
            if new_off == 0:
                parent[i] = parent[par]
                attach[i] = attach[par]
            else:
                attach[i] = new_off
    n = lt.n
    key = (lt.jump_time - u) % n
    for below, above in zip(chain[:-1], chain[1:]):
        key[above] = (lt.close_time[below] - u) % n
    return _relabel(lt, perim, parent, attach, key, frame)


def _relabel(lt, perim, parent, attach, key, frame):
    steps, order = _encode(perim, parent, attach, key, lt.n)
    fresh = build_looptree(DiscreteExcursion(steps))
    # ``fresh`` labels loops by jump order; map back to the stable labels
    lab = order
    c_loop = np.where(fresh.contour_loop == ROOT, ROOT, lab[np.maximum(fresh.contour_loop, 0)])
    jt = np.empty_like(fresh.jump_time)
    ct = np.empty_like(fresh.close_time)
    jt[lab] = fresh.jump_time
    ct[lab] = fresh.close_time
    new = Looptree(
        perimeter=perim.copy(),
        parent=parent,
        attach=attach,
        excursion=fresh.excursion,
        order=order,
        contour_loop=c_loop,
        contour_offset=fresh.contour_offset,
        jump_time=jt,
        close_time=ct,
        frame=frame,
    )
    # the fresh build must reproduce the requested structure
    fp = np.where(fresh.parent == ROOT, ROOT, lab[np.maximum(fresh.parent, 0)])
    check_parent = np.empty_like(fp)
    check_attach = np.empty_like(fresh.attach)
    check_parent[lab] = fp
    check_attach[lab] = fresh.attach
    if not (np.array_equal(check_parent, parent) and np.array_equal(check_attach, attach)):
        raise StructureError("re-encoded walk does not reproduce the rerooted structure")
    return new


# ---------------------------------------------------------------- statistics

def perimeter_tail_fit(perimeters, x_min: float, x_max: float, n_points: int = 12):
    """Least-squares slope of log P(perimeter >= x) against log x.

    Returns ``(slope, stderr)`` over log-spaced ``x`` in ``[x_min, x_max]``.
    """
    per = np.sort(np.asarray(perimeters))
    xs = np.unique(np.round(np.geomspace(x_min, x_max, n_points)).astype(np.int64))
    surv = 1.0 - np.searchsorted(per, xs, side="left") / len(per)
    counts = surv * len(per)
    keep = counts > 0
    lx, ly = np.log(xs[keep]), np.log(surv[keep])
    w = counts[keep]  # Poisson weights: var(log S) ~ 1 / count
    coef, cov = np.polyfit(lx, ly, 1, w=np.sqrt(w), cov="unscaled")
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def _ensemble_chunk(args):
    alpha, n, seed, lo, hi, rerooted, keep_perimeters = args
    max_per = np.empty(hi - lo, dtype=np.int64)
    pooled = []
    for i in range(lo, hi):
        lt = build_looptree(sample_excursion(alpha, n, seed + i))
        if rerooted:
            u = int(stream(seed + i, 7).integers(n))
            lt = reroot(lt, u)
        max_per[i - lo] = lt.perimeter.max() if lt.n_loops else 0
        if keep_perimeters:
            pooled.append(lt.perimeter)
    per = np.concatenate(pooled) if pooled else np.empty(0, dtype=np.int64)
    return max_per, per


def ensemble_statistics(alpha: float, n: int, samples: int, seed: int, rerooted: bool = False,
                        keep_perimeters: bool = False, workers: int = 1, chunk_size: int = 250):
    """Largest perimeter of each of ``samples`` looptrees (and optionally all perimeters).

    Sample ``i`` uses seed ``seed + i``; with ``rerooted`` each tree is first
    rerooted at a uniform boundary point.
    """
    items = [(alpha, n, seed, lo, hi, rerooted, keep_perimeters)
             for lo, hi in chunk_bounds(samples, chunk_size)]
    parts = parallel_map(_ensemble_chunk, items, workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
