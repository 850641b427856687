"""Wigner function of |r, m> after the thermal (amplitude-damping + noise) channel.

Time is the dimensionless decay time kt (kappa * t); ``nbar`` is the mean
photon number of the bath. The phase-space argument is alpha = (q + ip)/sqrt(2)
throughout, as in ``pasv_core``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError, ContractError, DomainError, LimitPathError
from .pasv_core import R_EPS, PasvParams, wigner
from .polymath import legendre, log_factorial, pairwise_sum, scaled_hermite
from .scan import FIGURE_GRID, GridSpec, evaluate_grid

DEFAULT_KT_RANGE = (1e-4, 2.0)


@dataclass(frozen=True)
class ChannelParams:
    kt: float
    nbar: float

    def __post_init__(self):
        if not (math.isfinite(self.kt) and self.kt >= 0):
            raise DomainError(f"decay time kt must be finite and >= 0, got {self.kt}")
        if not (math.isfinite(self.nbar) and self.nbar >= 0):
            raise DomainError(f"thermal nbar must be finite and >= 0, got {self.nbar}")


@dataclass(frozen=True)
class KrausCoefficients:
    T: float
    gamma_plus: float
    gamma_minus: float
    gamma_zero: float


@dataclass(frozen=True, eq=False)
class EvolutionCoefficients:
    A: float
    B: np.ndarray
    C: float
    D: np.ndarray
    E: np.ndarray
    F: float
    G: float


def kraus_coefficients(ch: ChannelParams) -> KrausCoefficients:
    t = -math.expm1(-2 * ch.kt)
    denom = ch.nbar * t + 1
    return KrausCoefficients(
        T=t,
        gamma_plus=ch.nbar * t / denom,
        gamma_minus=(ch.nbar + 1) * t / denom,
        gamma_zero=-ch.kt - math.log1p(ch.nbar * t),
    )


def _noise_width(ch: ChannelParams) -> float:
    # (2 nbar + 1) T
    return (2 * ch.nbar + 1) * -math.expm1(-2 * ch.kt)


def _alpha(q, p) -> np.ndarray:
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise DomainError("phase-space point must be finite")
    return (q + 1j * p) / math.sqrt(2)


def evolution_coefficients(s: PasvParams, ch: ChannelParams, q, p) -> EvolutionCoefficients:
    """A..G at the phase points (q, p); A, C, F, G do not depend on the point."""
    if ch.kt == 0:
        raise LimitPathError("kt = 0: T vanishes, use pasv_core.wigner")
    if s.r < R_EPS:
        raise DomainError(f"evolved closed form needs r > {R_EPS}")
    r = s.r
    sd = _noise_width(ch)
    x = math.exp(-2 * ch.kt) / sd
    ch2, sh2 = math.cosh(2 * r), math.sinh(2 * r)
    coth = 1 / math.tanh(r)
    a_ = 2 * x + 2 * ch2
    c_ = a_ * a_ - 4 * sh2 * sh2
    b_ = 2 * math.exp(-ch.kt) * _alpha(q, p) / sd
    d_ = math.sqrt(2 * coth) * 1j * (np.conj(b_) * math.sinh(r) - b_ * math.cosh(r))
    e_ = (a_ * d_ - 2 * np.conj(d_) * sh2) / c_
    f_ = 8 / c_ * (a_ * ch2 * coth - 4 * math.cosh(r) ** 2 * sh2)
    g_ = 1 - 16 / c_ * x * math.cosh(r) ** 2
    return EvolutionCoefficients(A=a_, B=b_, C=c_, D=d_, E=e_, F=f_, G=g_)


def _gaussian_exponent(s: PasvParams, ch: ChannelParams, co: EvolutionCoefficients, q, p):
    zeta_sq = (np.asarray(q, dtype=float) ** 2 + np.asarray(p, dtype=float) ** 2) / 2
    b_sq = co.B * co.B
    return (
        co.A / co.C * np.abs(co.B) ** 2
        + math.sinh(2 * s.r) / co.C * 2 * b_sq.real
        - 2 * zeta_sq / _noise_width(ch)
    )


def wigner_evolved(s: PasvParams, ch: ChannelParams, q, p):
    """W(q, p, kt) of |r, m> in the thermal channel, vectorised over (q, p).

    kt = 0 returns the ideal-state Wigner function. The Hermite factors use
    G^{n/2} H_n(E/sqrt(G)) as a polynomial in (E, G), which stays finite
    where G = 0 (this happens exactly at the m = 1 threshold time).
    """
    if ch.kt == 0:
        return wigner(s, q, p)
    co = evolution_coefficients(s, ch, q, p)
    m, r = s.m, s.r
    sd = _noise_width(ch)
    log_pref = (
        math.log(2)
        + m * math.log(math.sinh(r))
        + log_factorial(m)
        - math.log(math.pi)
        - 0.5 * math.log(co.C)
        - math.log(sd)
        - m * math.log(2)
        - math.log(float(legendre(m, s.zeta)))
    )
    log_ct = math.log(2 / math.tanh(r))
    terms = []
    for l in range(m + 1):
        for k in range(m - l + 1):
            j = m - l - k
            log_c = l * log_ct - log_factorial(l) - log_factorial(k) - 2 * log_factorial(j)
            coeff = (-1) ** l * math.exp(log_c) * co.F**k
            terms.append(coeff * np.abs(scaled_hermite(j, co.G, co.E)) ** 2)
    total = pairwise_sum(terms)
    return (np.exp(log_pref + _gaussian_exponent(s, ch, co, q, p)) * total)[()]


def wigner_evolved_m1(s: PasvParams, ch: ChannelParams, q, p):
    """Reduced single-photon-added form; must agree with ``wigner_evolved`` at m = 1."""
    if s.m != 1:
        raise ContractError(f"wigner_evolved_m1 needs m = 1, got m = {s.m}")
    if ch.kt == 0:
        raise LimitPathError("kt = 0: use pasv_core.wigner")
    co = evolution_coefficients(s, ch, q, p)
    coth = 1 / math.tanh(s.r)
    amp = (4 * np.abs(co.E) ** 2 + co.F - 2 * coth) / (math.pi * math.sqrt(co.C) * _noise_width(ch) * coth)
    return (amp * np.exp(_gaussian_exponent(s, ch, co, q, p)))[()]


def thermal_wigner(nbar: float, q, p):
    """Wigner function of the thermal state with mean photon number nbar."""
    w = 2 * nbar + 1
    q, p = np.asarray(q, dtype=float), np.asarray(p, dtype=float)
    return (np.exp(-(q * q + p * p) / w) / (math.pi * w))[()]


def threshold_time_m1(nbar: float) -> float:
    """kt_c = 1/2 ln[(2 nbar + 2)/(2 nbar + 1)]; past it W(m=1) is nonnegative."""
    if not (math.isfinite(nbar) and nbar >= 0):
        raise DomainError(f"nbar must be finite and >= 0, got {nbar}")
    return 0.5 * math.log1p(1 / (2 * nbar + 1))


def grid_minimum(s: PasvParams, ch: ChannelParams, spec: GridSpec = FIGURE_GRID) -> float:
    grid = evaluate_grid(lambda q, p: wigner_evolved(s, ch, q, p), spec)
    return float(grid.values.min())


def threshold_time_numeric(
    s: PasvParams,
    nbar: float,
    spec: GridSpec = FIGURE_GRID,
    kt_range: tuple[float, float] = DEFAULT_KT_RANGE,
    tol: float = 1e-8,
) -> float:
    """Decay time at which the grid minimum of W first stops being negative.

    Bisects on the sign of the minimum; for m = 1 the minimum sits at the
    origin (include it in ``spec``) and the result tracks ``threshold_time_m1``.
    """
    lo, hi = kt_range
    neg = lambda kt: grid_minimum(s, ChannelParams(kt, nbar), spec) < 0  # noqa: E731
    if not neg(lo):
        raise BracketError(f"W has no negative grid value at kt={lo}")
    if neg(hi):
        raise BracketError(f"W is still negative on the grid at kt={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if neg(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
