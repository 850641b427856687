"""Brute-force truncated Fock-space path used to certify the closed forms.

States are built by applying ladder operators to S(r)|0>, channels are applied
either through the Kraus family or by integrating the master equation, and
Wigner functions come from the displaced-parity trace

    W(q, p) = (1/pi) Tr[rho D(alpha) Pi D(alpha)^dag],  alpha = (q + ip)/sqrt(2),

normalised so that the integral over dq dp is one (vacuum peak 1/pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import CutoffError, DomainError, StepSizeError, TruncationError
from .thermal_channel import ChannelParams, kraus_coefficients

DEFAULT_CUTOFF = 64
CUTOFF_LADDER = (64, 128, 256, 512, 1024)
TAIL_MARGIN = 8
TAIL_TOL = 1e-20


@dataclass(frozen=True, eq=False)
class FockVector:
    amplitudes: np.ndarray

    @property
    def cutoff(self) -> int:
        return len(self.amplitudes)

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def tail_mass(self, margin: int = TAIL_MARGIN) -> float:
        """Fraction of the squared norm held by the top ``margin`` levels."""
        tail = self.amplitudes[-margin:]
        return float(np.vdot(tail, tail).real) / self.norm_sq()

    def density(self) -> "FockDensity":
        v = self.amplitudes / math.sqrt(self.norm_sq())
        return FockDensity(np.outer(v, v.conj()))


@dataclass(frozen=True, eq=False)
class FockDensity:
    matrix: np.ndarray

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).T.copy()


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float))


def squeezing_operator(r: float, dim: int) -> np.ndarray:
    """Truncated exp[r/2 (a^dag^2 - a^2)] by scaling-and-squaring."""
    a = annihilation(dim)
    ad = a.T
    return expm(0.5 * r * (ad @ ad - a @ a))


def displacement(alpha: complex, dim: int) -> np.ndarray:
    """Truncated exp(alpha a^dag - alpha* a) by scaling-and-squaring."""
    a = annihilation(dim)
    return expm(alpha * a.T - np.conj(alpha) * a)


# --------------------------------------------------------------------------
# states


def _squeezed_amplitudes(r: float, cutoff: int) -> np.ndarray:
    c = np.zeros(cutoff)
    c[0] = 1.0 / math.sqrt(math.cosh(r))
    t = math.tanh(r)
    for n in range(2, cutoff, 2):
        c[n] = c[n - 2] * t * math.sqrt((n - 1) / n)
    return c


def squeezed_vacuum(r: float, cutoff: int | None = None) -> FockVector:
    """S(r)|0> in the Fock basis, even amplitudes only.

    With ``cutoff=None`` the cutoff climbs ``CUTOFF_LADDER`` until the top
    ``TAIL_MARGIN`` levels hold less than ``TAIL_TOL`` of the mass.
    """
    if not (math.isfinite(r) and r >= 0):
        raise DomainError(f"squeezing r must be finite and >= 0, got {r}")
    ladder = CUTOFF_LADDER if cutoff is None else (cutoff,)
    for n_c in ladder:
        v = FockVector(_squeezed_amplitudes(r, n_c).astype(complex))
        if v.tail_mass() < TAIL_TOL:
            return v
    raise CutoffError(f"cutoff {ladder[-1]} too small for r={r} (tail {v.tail_mass():.2e})")


def add_photons(v: FockVector, m: int) -> tuple[FockVector, float]:
    """Apply a^dag m times; return the normalised state and its squared norm."""
    n_c = v.cutoff
    if m + TAIL_MARGIN >= n_c:
        raise CutoffError(f"cutoff {n_c} has no headroom for m={m}")
    head = v.amplitudes[n_c - m - TAIL_MARGIN :]
    if m and float(np.vdot(head, head).real) / v.norm_sq() > TAIL_TOL:
        raise CutoffError(f"cutoff {n_c}: amplitudes reach the top {m + TAIL_MARGIN} levels")
    w = np.zeros(n_c, dtype=complex)
    n = np.arange(n_c - m)
    # a^dag^m |n> = sqrt((n+m)!/n!) |n+m>
    w[m:] = v.amplitudes[: n_c - m] * np.exp(0.5 * (gammaln(n + m + 1) - gammaln(n + 1)))
    out = FockVector(w)
    norm_sq = out.norm_sq()
    return FockVector(w / math.sqrt(norm_sq)), norm_sq


def subtract_photons(v: FockVector, m: int) -> tuple[FockVector, float]:
    """Apply a m times; return the normalised state and its squared norm."""
    n_c = v.cutoff
    w = np.zeros(n_c, dtype=complex)
    n = np.arange(m, n_c)
    w[: n_c - m] = v.amplitudes[m:] * np.exp(0.5 * (gammaln(n + 1) - gammaln(n - m + 1)))
    out = FockVector(w)
    norm_sq = out.norm_sq()
    return FockVector(w / math.sqrt(norm_sq)), norm_sq


def pasv_state(r: float, m: int, cutoff: int | None = None) -> tuple[FockVector, float]:
    """Normalised a^dag^m S(r)|0> and the squared norm before normalisation.

    Auto-escalates the cutoff until the photon-added state itself passes the
    tail test; an explicit ``cutoff`` is used as-is or rejected.
    """
    ladder = CUTOFF_LADDER if cutoff is None else (cutoff,)
    last_err = None
    for n_c in ladder:
        try:
            vac = squeezed_vacuum(r, n_c)
            state, norm_sq = add_photons(vac, m)
        except CutoffError as err:
            last_err = err
            continue
        if state.tail_mass() < TAIL_TOL:
            return state, norm_sq
        last_err = CutoffError(f"cutoff {n_c}: photon-added tail {state.tail_mass():.2e}")
    raise last_err


def pasv_density(r: float, m: int, cutoff: int | None = None) -> FockDensity:
    return pasv_state(r, m, cutoff)[0].density()


def number_density(n: int, cutoff: int = DEFAULT_CUTOFF) -> FockDensity:
    rho = np.zeros((cutoff, cutoff), dtype=complex)
    rho[n, n] = 1.0
    return FockDensity(rho)


def thermal_density(nbar: float, cutoff: int = DEFAULT_CUTOFF) -> FockDensity:
    n = np.arange(cutoff)
    if nbar == 0:
        p = (n == 0).astype(float)
    else:
        p = np.exp(n * math.log(nbar) - (n + 1) * math.log1p(nbar))
    return FockDensity(np.diag(p).astype(complex))


# --------------------------------------------------------------------------
# thermal channel


def kraus_operator(k: int, l: int, ch: ChannelParams, cutoff: int) -> np.ndarray:
    """Dense M_{k,l} = e^{(kt+G0)/2} sqrt(G-^k G+^l e^{-2 l G0}/(k! l!)) e^{G0 n} a^dag^l a^k."""
    if k < 0 or l < 0:
        raise DomainError("Kraus indices must be nonnegative")
    if ch.kt <= 0:
        raise DomainError("Kraus operators need kt > 0")
    kc = kraus_coefficients(ch)
    a = annihilation(cutoff)
    ops = np.diag(np.exp(kc.gamma_zero * np.arange(cutoff)))
    ops = ops @ np.linalg.matrix_power(a.T, l) @ np.linalg.matrix_power(a, k)
    log_pref = 0.5 * (ch.kt + kc.gamma_zero) - 0.5 * (gammaln(k + 1) + gammaln(l + 1)) - l * kc.gamma_zero
    if k:
        log_pref += 0.5 * k * math.log(kc.gamma_minus)
    if l:
        if kc.gamma_plus == 0:
            return np.zeros((cutoff, cutoff))
        log_pref += 0.5 * l * math.log(kc.gamma_plus)
    return math.exp(log_pref) * ops


def _log_gamma_weight(gamma: float, j: int) -> float:
    # 0.5 log(gamma^j / j!), with gamma = 0 allowed only at j = 0
    if j == 0:
        return 0.0
    if gamma == 0:
        return -math.inf
    return 0.5 * (j * math.log(gamma) - math.lgamma(j + 1))


def evolve_kraus(
    rho: FockDensity,
    ch: ChannelParams,
    max_shell: int | None = None,
    shell_tol: float = 1e-12,
) -> FockDensity:
    """Apply the thermal channel as sum_{k,l} M_{k,l} rho M_{k,l}^dag.

    Uses the Kraus family exactly as written with the e^{(kt+G0)/2} factor
    inside each operator and no extra outer factor; that family is complete,
    so the trace is preserved up to truncation, and the result is rescaled to
    unit trace. Terms are summed in shells of constant k + l, using the
    reordering e^{G0 n} a^dag^l = a^dag^l e^{G0 (n+l)} so that every weight
    stays bounded, and applied through index shifts instead of dense products.
    """
    if ch.kt == 0:
        return FockDensity(rho.matrix.copy())
    n_c = rho.cutoff
    kc = kraus_coefficients(ch)
    r0 = rho.matrix
    idx = np.arange(n_c)
    max_shell = 2 * (n_c - 1) if max_shell is None else max_shell
    trace0 = rho.trace()

    loss_cache: dict[int, np.ndarray] = {}

    def loss(k: int) -> np.ndarray:
        # (G-^k/k!) e^{G0 n} a^k rho a^dag^k e^{G0 n}
        if k not in loss_cache:
            out = np.zeros_like(r0)
            i = idx[: n_c - k]
            w = np.exp(
                _log_gamma_weight(kc.gamma_minus, k)
                + 0.5 * (gammaln(i + k + 1) - gammaln(i + 1))
                + kc.gamma_zero * i
            )
            out[: n_c - k, : n_c - k] = np.outer(w, w) * r0[k:, k:]
            loss_cache[k] = out
        return loss_cache[k]

    def gain(x: np.ndarray, l: int) -> np.ndarray:
        # (G+^l/l!) a^dag^l x a^l
        if l == 0:
            return x
        out = np.zeros_like(x)
        i = idx[l:]
        w = np.exp(_log_gamma_weight(kc.gamma_plus, l) + 0.5 * (gammaln(i + 1) - gammaln(i - l + 1)))
        out[l:, l:] = np.outer(w, w) * x[: n_c - l, : n_c - l]
        return out

    pref_sq = math.exp(ch.kt + kc.gamma_zero)
    total = np.zeros_like(r0)
    cumulative = 0.0
    converged = False
    for s in range(max_shell + 1):
        shell = np.zeros_like(r0)
        for k in range(max(0, s - n_c + 1), min(s, n_c - 1) + 1):
            l = s - k
            if l > 0 and kc.gamma_plus == 0:
                continue
            shell += gain(loss(k), l)
        shell *= pref_sq
        total += shell
        shell_trace = abs(np.trace(shell).real)
        cumulative += np.trace(shell).real
        if shell_trace < shell_tol and cumulative >= trace0 * (1 - 1e-9):
            converged = True
            break
    else:
        converged = max_shell >= 2 * (n_c - 1)
    if not converged:
        raise TruncationError(
            f"Kraus shells did not converge by k+l={max_shell} (captured trace {cumulative:.3e})"
        )
    total = 0.5 * (total + total.conj().T)
    return FockDensity(total * (trace0 / np.trace(total).real))


def _lindblad_rhs(rho: np.ndarray, nbar: float, sq: np.ndarray, n: np.ndarray, n1: np.ndarray):
    # d rho / d(kappa t) for the thermal master equation, via index shifts;
    # n1 is diag(a a^dag) in the truncated space (last entry 0).
    out = -((nbar + 1) * (n[:, None] + n[None, :]) + nbar * (n1[:, None] + n1[None, :])) * rho
    out[:-1, :-1] += 2 * (nbar + 1) * np.outer(sq, sq) * rho[1:, 1:]
    if nbar:
        out[1:, 1:] += 2 * nbar * np.outer(sq, sq) * rho[:-1, :-1]
    return out


def _rk4(rho: np.ndarray, nbar: float, kt: float, steps: int) -> np.ndarray:
    n_c = rho.shape[0]
    n = np.arange(n_c, dtype=float)
    n1 = n + 1
    n1[-1] = 0.0
    sq = np.sqrt(np.arange(1, n_c, dtype=float))
    h = kt / steps
    for _ in range(steps):
        k1 = _lindblad_rhs(rho, nbar, sq, n, n1)
        k2 = _lindblad_rhs(rho + 0.5 * h * k1, nbar, sq, n, n1)
        k3 = _lindblad_rhs(rho + 0.5 * h * k2, nbar, sq, n, n1)
        k4 = _lindblad_rhs(rho + h * k3, nbar, sq, n, n1)
        rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def evolve_master(
    rho: FockDensity,
    ch: ChannelParams,
    steps_per_unit: int = 1000,
    certify: bool = True,
    certify_tol: float = 1e-9,
    max_doublings: int = 4,
) -> FockDensity:
    """Integrate the thermal master equation with classical RK4 in kt.

    The step count is raised if needed to keep h * (largest decay rate) below
    1.5, inside the RK4 stability interval. With ``certify`` the step is
    halved until two successive runs agree to ``certify_tol``.
    """
    if ch.kt == 0:
        return FockDensity(rho.matrix.copy())
    n_c = rho.cutoff
    rate = 2 * (2 * ch.nbar + 1) * n_c
    steps = max(1, math.ceil(steps_per_unit * ch.kt), math.ceil(rate * ch.kt / 1.5))
    start = rho.matrix.astype(complex)
    out = _rk4(start, ch.nbar, ch.kt, steps)
    if not certify:
        return FockDensity(out)
    for _ in range(max_doublings):
        steps *= 2
        fine = _rk4(start, ch.nbar, ch.kt, steps)
        diff = float(np.abs(fine - out).max())
        out = fine
        if diff <= certify_tol:
            return FockDensity(out)
    raise StepSizeError(f"halving the step still changed rho by {diff:.2e} (> {certify_tol:.0e}) at {steps} steps")


# --------------------------------------------------------------------------
# displaced parity


@lru_cache(maxsize=8)
def _generator_eig(dim: int) -> tuple[np.ndarray, np.ndarray]:
    # i (a^dag - a) = V diag(lam) V^dag, so exp(s (a^dag - a)) = V e^{-i s lam} V^dag
    a = annihilation(dim)
    return np.linalg.eigh(1j * (a.T - a))


def _padded_dim(cutoff: int, s_max: float) -> int:
    pad = max(64.0, 2 * s_max * math.sqrt(cutoff) + s_max * s_max)
    return int(16 * math.ceil((cutoff + pad) / 16))


def _check_points(q, p) -> tuple[np.ndarray, np.ndarray]:
    q, p = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(p, dtype=float))
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise DomainError("phase-space point must be finite")
    return q, p


def displaced_parity_blocks(alphas: np.ndarray, cutoff: int) -> np.ndarray:
    """Stack of D(alpha) Pi D(alpha)^dag = D(2 alpha) Pi restricted to the cutoff.

    The displacement is the truncated exponential of its generator, computed
    through one spectral decomposition in a padded space so the kept block
    matches the untruncated operator.
    """
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    s = 2 * np.abs(alphas)
    theta = np.angle(alphas)
    lam, vecs = _generator_eig(_padded_dim(cutoff, float(s.max(initial=0.0))))
    vn = vecs[:cutoff]
    idx = np.arange(cutoff)
    parity = (-1.0) ** idx
    out = np.empty((len(alphas), cutoff, cutoff), dtype=complex)
    for i, (si, th) in enumerate(zip(s, theta)):
        k = ((vn * np.exp(-1j * si * lam)) @ vn.conj().T).real
        phase = np.exp(1j * th * (idx[:, None] - idx[None, :]))
        out[i] = k * phase * parity[None, :]
    return out


_BLOCK_CACHE: dict[tuple, np.ndarray] = {}
_BLOCK_CACHE_POINTS = 2048


def _cached_blocks(alphas: np.ndarray, cutoff: int) -> np.ndarray:
    key = (alphas.tobytes(), cutoff)
    if key not in _BLOCK_CACHE:
        if len(_BLOCK_CACHE) >= 4:
            _BLOCK_CACHE.pop(next(iter(_BLOCK_CACHE)))
        _BLOCK_CACHE[key] = displaced_parity_blocks(alphas, cutoff)
    return _BLOCK_CACHE[key]


def wigner_fock(rho: FockDensity | np.ndarray, q, p):
    """Wigner function of a truncated density matrix at (q, p)."""
    mat = rho.matrix if isinstance(rho, FockDensity) else np.asarray(rho)
    q, p = _check_points(q, p)
    alphas = ((q + 1j * p) / math.sqrt(2)).ravel()
    n_c = mat.shape[0]
    values = np.empty(alphas.shape)
    if alphas.size <= _BLOCK_CACHE_POINTS:
        blocks = _cached_blocks(alphas, n_c)
        values[:] = np.einsum("ij,pji->p", mat, blocks).real
    else:
        for start in range(0, alphas.size, 256):
            chunk = alphas[start : start + 256]
            blocks = displaced_parity_blocks(chunk, n_c)
            values[start : start + 256] = np.einsum("ij,pji->p", mat, blocks).real
    return (values.reshape(q.shape) / math.pi)[()]


def number_state_wigner(n: int, q, p):
    """Wigner function of |n><n| through the displaced-parity trace.

    For a number state only the diagonal element (D(2 alpha))_{nn} survives,
    and it depends on |alpha| alone.
    """
    q, p = _check_points(q, p)
    s = np.sqrt(2.0) * np.hypot(q, p)  # 2 |alpha|
    lam, vecs = _generator_eig(_padded_dim(n + 1, float(s.max(initial=0.0))))
    weights = np.abs(vecs[n]) ** 2
    diag = (np.exp(-1j * np.multiply.outer(s, lam)) @ weights).real
    return ((-1) ** n * diag / math.pi)[()]
