"""Closed-form properties of the photon-added squeezed vacuum |r, m>.

|r, m> = N a^dag^m S(r)|0> with S(r) = exp[r/2 (a^dag^2 - a^2)]. Phase-space
points use alpha = (q + ip)/sqrt(2); the name ``zeta`` is reserved for
cosh(r) and never means a phase-space point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import BracketError, DomainError, UndefinedValueError
from .polymath import hermite, legendre, log_factorial, pairwise_sum

MAX_PHOTONS = 32
# below this r the coth r in the Wigner sum is replaced by the number-state limit
R_EPS = 1e-8


@dataclass(frozen=True)
class PasvParams:
    r: float
    m: int

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise DomainError(f"squeezing r must be finite and >= 0, got {self.r}")
        if int(self.m) != self.m or not 0 <= self.m <= MAX_PHOTONS:
            raise DomainError(f"photon-added count m must be an integer in [0, {MAX_PHOTONS}], got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def zeta(self) -> float:
        return math.cosh(self.r)


@dataclass(frozen=True)
class PhasePoint:
    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise DomainError(f"phase point must be finite, got ({self.q}, {self.p})")

    @property
    def alpha(self) -> complex:
        return complex(self.q, self.p) / math.sqrt(2)


@dataclass(frozen=True)
class BetaPair:
    beta: complex
    beta_bar: complex


def beta_pair(r: float, q, p) -> BetaPair:
    """beta = alpha cosh r - alpha* sinh r and beta_bar = -i beta sqrt(2 coth r)."""
    if not r > 0:
        raise DomainError("beta_bar needs r > 0")
    beta = (np.asarray(q) * math.exp(-r) + 1j * np.asarray(p) * math.exp(r)) / math.sqrt(2)
    return BetaPair(beta, -1j * beta * math.sqrt(2 / math.tanh(r)))


def norm_factor_sq_inv(s: PasvParams) -> float:
    """1/N^2 = m! cosh^m(r) P_m(cosh r)."""
    return math.exp(log_factorial(s.m) + s.m * math.log(s.zeta)) * float(legendre(s.m, s.zeta))


def _legendre_ratio(s: PasvParams, j: int) -> float:
    return float(legendre(s.m + j, s.zeta) / legendre(s.m, s.zeta))


def mean_photon(s: PasvParams) -> float:
    z = s.zeta
    return (s.m + 1) * z * _legendre_ratio(s, 1) - 1


def second_factorial_moment(s: PasvParams) -> float:
    """<a^dag^2 a^2>."""
    z = s.zeta
    return (s.m + 1) * z * ((s.m + 2) * z * _legendre_ratio(s, 2) - 4 * _legendre_ratio(s, 1)) + 2


def mandel_q(s: PasvParams) -> float:
    if s.m == 0 and s.r == 0:
        raise UndefinedValueError("Mandel Q is 0/0 for the vacuum (m=0, r=0)")
    n = mean_photon(s)
    return second_factorial_moment(s) / n - n


def mandel_q_m1(r: float) -> float:
    """Single-photon-added Q in its reduced form, 3 sinh^2 2r / (3 cosh 2r - 1) - 1."""
    return 3 * math.sinh(2 * r) ** 2 / (3 * math.cosh(2 * r) - 1) - 1


def q_sign_change(m: int, bracket: tuple[float, float], func=None) -> float:
    """Squeezing r* in ``bracket`` where Mandel Q changes sign, by bisection.

    ``func`` overrides the Q(r) curve (used to bisect the reduced m = 1 form).
    """
    lo, hi = bracket
    f = func or (lambda r: mandel_q(PasvParams(r, m)))
    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise BracketError(f"Q has no sign change on [{lo}, {hi}] for m={m} ({f_lo:.3g}, {f_hi:.3g})")
    root = bisect(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(f(root)) >= 1e-10:
        raise BracketError(f"bisection stalled at r={root} with |Q|={abs(f(root)):.2e}")
    return root


def _wigner_series(s: PasvParams, q, p):
    """Complex-valued Hermite sum of the Wigner function, before projection.

    Uses H(beta_bar) * H(conj(beta_bar)) rather than |H|^2 so the imaginary
    residue can be inspected.
    """
    m, r = s.m, s.r
    bp = beta_pair(r, q, p)
    bb = bp.beta_bar
    log_base = m * math.log(math.sinh(r)) - m * math.log(2) - math.log(float(legendre(m, s.zeta)))
    log_ct = math.log(2 / math.tanh(r))
    terms = []
    for l in range(m + 1):
        log_c = log_base + log_factorial(m) - log_factorial(l) - 2 * log_factorial(m - l) + l * log_ct
        h = hermite(m - l, bb) * hermite(m - l, np.conj(bb))
        terms.append((-1) ** l * math.exp(log_c) * h)
    return np.exp(-2 * np.abs(bp.beta) ** 2) * pairwise_sum(terms) / math.pi


def wigner(s: PasvParams, q, p):
    """W(q, p) of |r, m>, vectorised over q and p."""
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise DomainError("phase-space point must be finite")
    if s.r < R_EPS:
        from .fock_oracle import number_state_wigner

        return number_state_wigner(s.m, q, p)
    return _wigner_series(s, q, p).real[()]


def wigner_at(s: PasvParams, pt: PhasePoint) -> float:
    return float(wigner(s, pt.q, pt.p))
