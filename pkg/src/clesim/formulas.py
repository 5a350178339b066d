"""Closed-form parameter relations for non-simple CLE on LQG.

All functions are pure and operate on Python floats (IEEE double).  The
parameter triple is always derived from ``kappa_prime`` via :func:`couplings`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "DomainError",
    "CouplingParams",
    "JumpRates",
    "LimitValue",
    "couplings",
    "q_of_kappa_prime",
    "rho_from_p",
    "p_from_rho",
    "boundary_dimension",
    "arm_exponent",
    "arm_exponent_closed_form",
    "jump_ratios",
    "ladder_index",
    "jump_rate_ledger",
    "identity_residuals",
]


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a formula."""


class LimitValue(float):
    """A float that is reported as a one-sided limit rather than a value."""

    is_limit = True

    def __repr__(self):
        return f"LimitValue({float(self)!r})"


@dataclass(frozen=True)
class CouplingParams:
    kappa_prime: float
    kappa: float
    gamma: float
    alpha: float
    alpha_prime: float


@dataclass(frozen=True)
class JumpRates:
    """Jump intensities of the boundary-length processes R, L and R + L."""

    U_L: float
    U_R: float
    A_plus: float
    A_minus: float
    A_plus_L: float
    A_plus_R: float
    A_minus_L: float
    A_minus_R: float

    def swapped(self) -> "JumpRates":
        """Exchange the roles of L and R (the red/blue color swap)."""
        return JumpRates(self.U_R, self.U_L, self.A_plus, self.A_minus,
                         self.A_plus_R, self.A_plus_L,
                         self.A_minus_R, self.A_minus_L)


def _check_kappa_prime(kappa_prime):
    if not 4.0 < kappa_prime < 8.0:
        raise DomainError(f"kappa_prime={kappa_prime!r} must lie in the open interval (4, 8)")


def couplings(kappa_prime: float) -> CouplingParams:
    """Return ``(kappa', kappa, gamma, alpha, alpha')`` for ``kappa'`` in (4, 8).

    >>> cp = couplings(6)
    >>> round(cp.kappa, 12), cp.alpha, round(cp.alpha_prime, 12)
    (2.666666666667, 1.5, 0.666666666667)
    """
    kappa_prime = float(kappa_prime)
    _check_kappa_prime(kappa_prime)
    kappa = 16.0 / kappa_prime
    return CouplingParams(
        kappa_prime=kappa_prime,
        kappa=kappa,
        gamma=math.sqrt(kappa),
        alpha=4.0 / kappa,
        alpha_prime=4.0 / kappa_prime,
    )


def q_of_kappa_prime(kappa_prime: float) -> float:
    """FK/Potts parameter ``q = 4 cos^2(4 pi / kappa')``."""
    kappa_prime = float(kappa_prime)
    _check_kappa_prime(kappa_prime)
    return 4.0 * math.cos(4.0 * math.pi / kappa_prime) ** 2


def _check_p(p, lo_open=False, hi_open=False):
    ok = (0.0 < p if lo_open else 0.0 <= p) and (p < 1.0 if hi_open else p <= 1.0)
    if not ok:
        raise DomainError(f"p={p!r} outside its admissible range")


def rho_from_p(p: float, cp: CouplingParams) -> float:
    """Interface parameter rho in [-2, kappa - 4] for coloring probability p.

    The angle ``theta = pi (rho + 2) / 2`` is taken in (0, pi) through the
    two-argument arctangent, which keeps rho continuous in p even where the
    denominator of the single-argument form changes sign.
    """
    p = float(p)
    _check_p(p)
    if p == 0.0:
        return -2.0
    if p == 1.0:
        return cp.kappa - 4.0
    phi = math.pi * cp.kappa / 2.0
    theta = math.atan2(-math.sin(phi), -(1.0 + math.cos(phi) - 1.0 / p))
    return 2.0 * theta / math.pi - 2.0


def p_from_rho(rho: float, cp: CouplingParams) -> float:
    """Inverse of :func:`rho_from_p` (sine form)."""
    rho = float(rho)
    hi = cp.kappa - 4.0
    if not -2.0 <= rho <= hi:
        raise DomainError(f"rho={rho!r} outside [-2, kappa-4] = [-2, {hi!r}]")
    s_left = math.sin(math.pi * (rho + 2.0) / 2.0)
    s_right = math.sin(math.pi * (cp.kappa - 4.0 - rho) / 2.0)
    if rho == -2.0:
        return 0.0
    if rho == hi:
        return 1.0
    return s_left / (s_left + s_right)


def boundary_dimension(rho: float, cp: CouplingParams) -> float:
    """Dimension of the intersection of SLE_kappa(kappa - 6 - rho) with the boundary."""
    x = float(rho) + 2.0
    k = cp.kappa
    if not 0.0 < x < k - 2.0:
        raise DomainError(f"rho + 2 = {x!r} must lie in (0, kappa - 2) = (0, {k - 2.0!r})")
    return 1.0 - (k - 2.0 - x) * (k / 2.0 - x) / k


def arm_exponent(p: float, cp: CouplingParams) -> float:
    """Half-plane red one-arm exponent ``a(p) = 1 - d(kappa, rho(p))``.

    At ``p = 0`` the event is empty; the p -> 0+ limit ``kappa/2 - 1`` is
    returned as a :class:`LimitValue`.
    """
    p = float(p)
    _check_p(p)
    k = cp.kappa
    if p == 0.0:
        return LimitValue(k / 2.0 - 1.0)
    if p == 1.0:
        return 0.0
    return 1.0 - boundary_dimension(rho_from_p(p, cp), cp)


def arm_exponent_closed_form(p: float, model: str = "percolation") -> float:
    """Explicit arctan form of the arm exponent for percolation or FK_2."""
    p = float(p)
    _check_p(p, lo_open=True)
    if model == "percolation":
        t = (3.0 / math.pi) * math.atan(p * math.sqrt(3.0) / (2.0 - p))
        return (2.0 - t) * (1.0 - t) / 6.0
    if model == "fk2":
        # arctan(p / (1 - p)) -> pi/2 as p -> 1
        t = math.atan2(p, 1.0 - p) / math.pi
        return (1.0 - 2.0 * t) * (3.0 - 4.0 * t) / 6.0
    raise ValueError(f"unknown model {model!r}; expected 'percolation' or 'fk2'")


def _check_open_rho(rho, cp):
    if not -2.0 < rho < cp.kappa - 4.0:
        raise DomainError(f"rho={rho!r} must lie in the open interval (-2, {cp.kappa - 4.0!r})")


def jump_ratios(rho: float, cp: CouplingParams) -> tuple[float, float]:
    """Upward/downward jump-intensity ratios ``(U_L, U_R)`` of L and R."""
    rho = float(rho)
    _check_open_rho(rho, cp)
    a1 = cp.alpha_prime
    den = math.sin(math.pi * rho / 2.0 - math.pi * a1)
    u_l = math.sin(-math.pi * rho / 2.0) / den
    u_r = math.sin(2.0 * math.pi * a1 - math.pi * rho / 2.0) / den
    return u_l, u_r


def ladder_index(rho: float, cp: CouplingParams, side: str = "R") -> float:
    """Index alpha'' of the ladder-height subordinator of ``-R`` (or ``-L``).

    For ``side="L"`` the L-process is the R-process of the swapped interface,
    i.e. rho is replaced by ``kappa - 6 - rho``.
    """
    rho = float(rho)
    _check_open_rho(rho, cp)
    if side == "L":
        rho = cp.kappa - 6.0 - rho
    elif side != "R":
        raise ValueError(f"side must be 'R' or 'L', got {side!r}")
    return 2.0 + rho / 2.0 - cp.alpha_prime


def jump_rate_ledger(p: float, cp: CouplingParams, normalization: float = 1.0) -> JumpRates:
    """All jump rates at coloring probability p, with ``A_minus = normalization``."""
    p = float(p)
    _check_p(p, lo_open=True, hi_open=True)
    if not normalization > 0:
        raise DomainError("normalization must be positive")
    u_l, u_r = jump_ratios(rho_from_p(p, cp), cp)
    a_minus_side = normalization / 2.0
    a_plus_l = u_l * a_minus_side
    a_plus_r = u_r * a_minus_side
    return JumpRates(
        U_L=u_l,
        U_R=u_r,
        A_plus=a_plus_l + a_plus_r,
        A_minus=normalization,
        A_plus_L=a_plus_l,
        A_plus_R=a_plus_r,
        A_minus_L=a_minus_side,
        A_minus_R=a_minus_side,
    )


def identity_residuals(p: float, cp: CouplingParams) -> dict[str, float]:
    """Absolute residuals of every internal identity at ``(p, kappa')``.

    Only defined for p in (0, 1).
    """
    rho = rho_from_p(p, cp)
    u_l, u_r = jump_ratios(rho, cp)
    a2 = ladder_index(rho, cp)
    a1 = cp.alpha_prime
    led = jump_rate_ledger(p, cp)
    res = {
        "p_round_trip": abs(p_from_rho(rho, cp) - p),
        "rho_symmetry": abs(rho_from_p(1.0 - p, cp) - (cp.kappa - 6.0 - rho)),
        "arm_vs_dimension": abs(arm_exponent(p, cp) - (1.0 - boundary_dimension(rho, cp))),
        "ladder_U_R": abs(math.sin(math.pi * (a1 - a2)) / math.sin(math.pi * a2) - u_r),
        "mean_ratio": abs((u_l + u_r) / 2.0 + math.cos(math.pi * a1)),
        "U_ratio_vs_p": abs(u_l * (1.0 - p) - u_r * p),
        "ledger_plus_L": abs(led.A_plus_L - p * led.A_plus),
        "ledger_plus_R": abs(led.A_plus_R - (1.0 - p) * led.A_plus),
        "ledger_U_L": abs(led.A_plus_L / led.A_minus_L - led.U_L),
        "ledger_U_R": abs(led.A_plus_R / led.A_minus_R - led.U_R),
        "ledger_minus_sum": abs(led.A_minus_L + led.A_minus_R - led.A_minus),
        "ledger_ratio": abs(led.A_plus / led.A_minus + math.cos(math.pi * a1)),
    }
    if abs(cp.kappa_prime - 6.0) < 1e-15:
        res["closed_form_percolation"] = abs(arm_exponent_closed_form(p, "percolation") - arm_exponent(p, cp))
    if abs(cp.kappa_prime - 16.0 / 3.0) < 1e-15:
        res["closed_form_fk2"] = abs(arm_exponent_closed_form(p, "fk2") - arm_exponent(p, cp))
    return res
