"""Cross-validation suite shared by ``pasv-lab validate`` and the acceptance tests.

Each check returns a ``CheckResult`` carrying the worst measured deviation,
the tolerance it was held to and the wall time it took.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import fock_oracle as fo
from . import pasv_core as pc
from . import polymath as pm
from . import scan
from . import thermal_channel as tc
from .errors import PasvError

ORACLE_GRID = scan.GridSpec.square(3.0, 21)

DEFAULT_TOLERANCES = {
    "norm": 1e-10,
    "wigner": 1e-8,
    "fixed": 1e-14,
    "evolved": 1e-6,
    "channel": 1e-8,
    "threshold": 1e-5,
    "threshold_closed": 1e-12,
    "thermal_limit": 1e-10,
    "initial_limit": 1e-3,
    "legendre_forms": 1e-12,
    "generating": 1e-9,
    "gaussian_derivative": 1e-10,
    "integral": 1e-6,
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0
    failures: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: worst={self.value:.3e} tol={self.tolerance:.1e} ({self.seconds:.1f}s) {self.detail}"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SuiteConfig:
    quick: bool = False
    tolerances: tuple = ()

    def tol(self, key: str) -> float:
        return dict(self.tolerances).get(key, DEFAULT_TOLERANCES[key])

    def ms(self, values):
        return [m for m in values if m <= 2] if self.quick else list(values)

    def rs(self, values):
        return [0.3] if self.quick else list(values)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _timed(fn):
    def wrapper(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
        start = time.perf_counter()
        try:
            result = fn(cfg)
        except PasvError as err:
            name = (fn.__doc__ or fn.__name__).strip().splitlines()[0]
            result = CheckResult(fn.__name__, False, math.inf, 0.0, f"{type(err).__name__}: {err} ({name})")
        result.seconds = time.perf_counter() - start
        return result

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@lru_cache(maxsize=None)
def _pasv_density(r: float, m: int) -> fo.FockDensity:
    return fo.pasv_density(r, m)


@lru_cache(maxsize=None)
def _kraus_evolved(m: int, r: float, kt: float, nbar: float) -> fo.FockDensity:
    return fo.evolve_kraus(_pasv_density(r, m), tc.ChannelParams(kt, nbar))


CHANNEL_MS = (0, 1, 2)
CHANNEL_RS = (0.3, 0.7)
CHANNEL_KTS = (0.05, 0.1, 0.2, 0.5)
CHANNEL_NBARS = (0.0, 1.0, 2.0)


def _channel_tuples(cfg: SuiteConfig):
    rs = [0.3] if cfg.quick else CHANNEL_RS
    return list(itertools.product(cfg.ms(CHANNEL_MS), rs, CHANNEL_KTS, CHANNEL_NBARS))


@_timed
def criterion_1(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Fock-oracle norm of a^dag^m S(r)|0> equals m! cosh^m r P_m(cosh r)."""
    tol = cfg.tol("norm")
    worst, fails = 0.0, []
    start = time.perf_counter()
    for m in cfg.ms(range(7)):
        for r in cfg.rs((0.0, 0.25, 0.5, 1.0, 1.5)):
            _, norm_sq = fo.pasv_state(r, m)
            err = _rel(norm_sq, pc.norm_factor_sq_inv(pc.PasvParams(r, m)))
            worst = max(worst, err)
            if err >= tol:
                fails.append((m, r, err))
    elapsed = time.perf_counter() - start
    return CheckResult(
        "C1 normalization identity",
        not fails and elapsed < 5.0,
        worst,
        tol,
        f"runtime {elapsed:.2f}s (limit 5s)",
        failures=fails,
    )


@_timed
def criterion_2(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Sign change of Mandel Q: m=1 root in [0.45, 0.47], roots increase with m."""
    start = time.perf_counter()
    r1 = pc.q_sign_change(1, (0.3, 0.6), func=pc.mandel_q_m1)
    ms = cfg.ms((2, 3, 4))
    roots = [pc.q_sign_change(m, (0.3, 1.0)) for m in ms]
    elapsed = time.perf_counter() - start
    increasing = all(a < b for a, b in zip(roots, roots[1:]))
    in_window = 0.45 <= r1 <= 0.47
    detail = f"r*(m=1)={r1:.6f}; " + ", ".join(f"r*(m={m})={x:.6f}" for m, x in zip(ms, roots))
    return CheckResult(
        "C2 Mandel Q threshold",
        in_window and increasing and elapsed < 1.0,
        abs(r1 - 0.46),
        0.01,
        detail + f"; runtime {elapsed:.2f}s (limit 1s)",
    )


@_timed
def criterion_3(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Closed-form W vs displaced-parity oracle on the 21x21 grid."""
    tol = cfg.tol("wigner")
    q, p = ORACLE_GRID.mesh()
    worst, fails = 0.0, []
    start = time.perf_counter()
    for m in cfg.ms(range(4)):
        for r in cfg.rs((0.1, 0.3, 0.8)):
            s = pc.PasvParams(r, m)
            err = float(np.abs(pc.wigner(s, q, p) - fo.wigner_fock(_pasv_density(r, m), q, p)).max())
            worst = max(worst, err)
            if err >= tol:
                fails.append((m, r, err))
    elapsed = time.perf_counter() - start
    return CheckResult(
        "C3 Wigner closed form vs oracle",
        not fails and elapsed < 60.0,
        worst,
        tol,
        f"runtime {elapsed:.1f}s (limit 60s)",
        failures=fails,
    )


@_timed
def criterion_4(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """W(0,0) = 1/pi for m=0 and -1/pi for m=1."""
    tol = cfg.tol("fixed")
    worst, fails = 0.0, []
    for r in cfg.rs((0.0, 0.1, 0.3, 0.8, 1.5)):
        for m, expected in ((0, 1 / math.pi), (1, -1 / math.pi)):
            err = abs(float(pc.wigner(pc.PasvParams(r, m), 0.0, 0.0)) - expected)
            worst = max(worst, err)
            if err >= tol:
                fails.append((m, r, err))
    return CheckResult("C4 fixed origin values", not fails, worst, tol, failures=fails)


@_timed
def criterion_5(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Evolved closed form vs Wigner of the Kraus-evolved oracle state."""
    tol = cfg.tol("evolved")
    q, p = ORACLE_GRID.mesh()
    worst, fails = 0.0, []
    start = time.perf_counter()
    tuples = _channel_tuples(cfg)
    for m, r, kt, nbar in tuples:
        closed = tc.wigner_evolved(pc.PasvParams(r, m), tc.ChannelParams(kt, nbar), q, p)
        err = float(np.abs(closed - fo.wigner_fock(_kraus_evolved(m, r, kt, nbar), q, p)).max())
        worst = max(worst, err)
        if err >= tol:
            fails.append((m, r, kt, nbar, err))
    elapsed = time.perf_counter() - start
    return CheckResult(
        "C5 evolved Wigner vs channel oracle",
        not fails and elapsed < 600.0,
        worst,
        tol,
        f"{len(tuples)} tuples; runtime {elapsed:.1f}s (limit 600s)",
        failures=fails,
    )


@_timed
def criterion_6(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Kraus path vs RK4 master-equation path, max-abs in the density matrix."""
    tol = cfg.tol("channel")
    worst, fails = 0.0, []
    tuples = _channel_tuples(cfg)
    for m, r, kt, nbar in tuples:
        rho_m = fo.evolve_master(_pasv_density(r, m), tc.ChannelParams(kt, nbar))
        err = float(np.abs(rho_m.matrix - _kraus_evolved(m, r, kt, nbar).matrix).max())
        worst = max(worst, err)
        if err >= tol:
            fails.append((m, r, kt, nbar, err))
    return CheckResult(
        "C6 Kraus vs master equation", not fails, worst, tol, f"{len(tuples)} tuples", failures=fails
    )


@_timed
def criterion_7(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """m=1 threshold: closed form at nbar=0, grid scan agreement, r independence."""
    tol = cfg.tol("threshold")
    closed_err = abs(tc.threshold_time_m1(0.0) - 0.5 * math.log(2))
    worst, fails = 0.0, []
    rs = cfg.rs((0.3, 0.8, 1.5))
    for nbar in (0.0, 1.0, 5.0):
        exact = tc.threshold_time_m1(nbar)
        scans = [tc.threshold_time_numeric(pc.PasvParams(r, 1), nbar) for r in rs]
        for r, kt in zip(rs, scans):
            err = abs(kt - exact)
            worst = max(worst, err)
            if err >= tol:
                fails.append(("vs closed form", nbar, r, err))
        spread = max(scans) - min(scans)
        if spread >= tol:
            fails.append(("r spread", nbar, spread))
    closed_ok = closed_err < cfg.tol("threshold_closed")
    if not closed_ok:
        fails.append(("closed form nbar=0", closed_err))
    return CheckResult(
        "C7 threshold time",
        not fails,
        worst,
        tol,
        f"closed-form error at nbar=0: {closed_err:.1e}",
        failures=fails,
    )


@_timed
def criterion_8(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """kt=20 reaches the thermal state; kt=1e-5 stays on the ideal W."""
    tol_t, tol_0 = cfg.tol("thermal_limit"), cfg.tol("initial_limit")
    q, p = ORACLE_GRID.mesh()
    worst_t = worst_0 = 0.0
    fails = []
    for m in cfg.ms(range(4)):
        for r in cfg.rs((0.3, 0.7)):
            s = pc.PasvParams(r, m)
            for nbar in (0.0, 1.0, 2.0):
                w = tc.wigner_evolved(s, tc.ChannelParams(20.0, nbar), q, p)
                err = float(np.abs(w - tc.thermal_wigner(nbar, q, p)).max())
                worst_t = max(worst_t, err)
                if err >= tol_t:
                    fails.append(("kt=20", m, r, nbar, err))
            w = tc.wigner_evolved(s, tc.ChannelParams(1e-5, 1.0), q, p)
            err = float(np.abs(w - pc.wigner(s, q, p)).max())
            worst_0 = max(worst_0, err)
            if err >= tol_0:
                fails.append(("kt=1e-5", m, r, err))
    return CheckResult(
        "C8 long- and short-time limits",
        not fails,
        worst_t,
        tol_t,
        f"short-time worst {worst_0:.2e} (tol {tol_0:.0e})",
        failures=fails,
    )


@_timed
def criterion_9(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Polynomial identities: two Legendre forms, generating function, Gaussian derivative."""
    fails = []
    tol_a = cfg.tol("legendre_forms")
    worst_a = 0.0
    for n in range(11):
        for x in (1.0, 1.1, 1.5, 2.0, 5.0, 10.0):
            err = _rel(float(pm.legendre_product_form(n, x)), float(pm.legendre(n, x)))
            worst_a = max(worst_a, err)
            if err >= tol_a:
                fails.append(("A1/A2", n, x, err))
    tol_g = cfg.tol("generating")
    worst_g = 0.0
    for m in range(9):
        for r in (0.1, 0.5, 1.0, 2.0):
            x = math.cosh(r)
            c = x / math.sqrt(x * x - 1)
            series = pm.bivariate_series_derivative(m, c)
            closed = 2**m * math.factorial(m) * (x * x - 1) ** (-m / 2) * float(pm.legendre(m, x))
            err = _rel(series, closed)
            worst_g = max(worst_g, err)
            if err >= tol_g:
                fails.append(("generating", m, r, err))
    tol_b = cfg.tol("gaussian_derivative")
    worst_b = 0.0
    for m in range(7):
        for g in (0.5, 1.0, 2.0, 3.7):
            for e in (1 + 1j, -0.3 + 0.7j, 2.0, 0.25j):
                series = pm.gaussian_double_derivative(m, g, e)
                closed = g ** (m / 2) * complex(pm.hermite(m, e / math.sqrt(g)))
                err = abs(series - closed) / max(abs(closed), 1e-300)
                worst_b = max(worst_b, err)
                if err >= tol_b:
                    fails.append(("gaussian", m, g, e, err))
    return CheckResult(
        "C9 polynomial identities",
        not fails,
        worst_a,
        tol_a,
        f"generating worst {worst_g:.1e} (tol {tol_g:.0e}); gaussian-derivative worst {worst_b:.1e} (tol {tol_b:.0e})",
        failures=fails,
    )


def _negative_volume(s: pc.PasvParams, kt: float, nbar: float) -> float:
    ch = tc.ChannelParams(kt, nbar)
    grid = scan.evaluate_grid(lambda q, p: tc.wigner_evolved(s, ch, q, p), scan.FIGURE_GRID)
    return scan.negativity(grid).negative_volume


@_timed
def criterion_10(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Negative volume strictly decreases with kt and with nbar (m=1, r=0.3)."""
    s = pc.PasvParams(0.3, 1)
    by_kt = [_negative_volume(s, kt, 1.0) for kt in (0.05, 0.1, 0.2, 0.5)]
    by_nbar = [_negative_volume(s, 0.05, nb) for nb in (0.0, 1.0, 2.0, 5.0)]
    fails = []
    if not all(a > b for a, b in zip(by_kt, by_kt[1:])):
        fails.append(("kt", by_kt))
    if not all(a > b for a, b in zip(by_nbar, by_nbar[1:])):
        fails.append(("nbar", by_nbar))
    fmt = lambda xs: "[" + ", ".join(f"{x:.4g}" for x in xs) + "]"  # noqa: E731
    return CheckResult(
        "C10 monotone decoherence",
        not fails,
        0.0,
        0.0,
        f"by kt {fmt(by_kt)}; by nbar {fmt(by_nbar)}",
        failures=fails,
    )


def normalization_cases(cfg: SuiteConfig = SuiteConfig()):
    """Every Wigner grid the suite integrates: ideal states and the channel tuples."""
    ideal = [(m, r, None, None) for m in cfg.ms(range(5)) for r in cfg.rs((0.0, 0.3, 0.8, 1.2))]
    evolved = [(m, r, kt, nbar) for m, r, kt, nbar in _channel_tuples(cfg)]
    return ideal + evolved


def _state_function(m, r, kt, nbar):
    s = pc.PasvParams(r, m)
    if kt is None:
        return lambda q, p: pc.wigner(s, q, p)
    ch = tc.ChannelParams(kt, nbar)
    return lambda q, p: tc.wigner_evolved(s, ch, q, p)


@_timed
def criterion_11(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Every Wigner grid integrates to 1 on [-6, 6]^2 with 401^2 points."""
    tol = cfg.tol("integral")
    worst, fails = 0.0, []
    cases = normalization_cases(cfg)
    for case in cases:
        grid = scan.evaluate_grid(_state_function(*case), scan.NORM_GRID)
        err = abs(scan.integrate(grid) - 1)
        worst = max(worst, err)
        if err >= tol:
            fails.append((*case, err))
    return CheckResult(
        "C11 grid normalization",
        not fails,
        worst,
        tol,
        f"{len(cases) - len(fails)}/{len(cases)} grids within tolerance",
        failures=fails,
    )


CRITERIA = (
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
)


# --------------------------------------------------------------------------
# invariants that are not acceptance criteria


@_timed
def invariant_consecutive_norms(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """N^-2(m+1) / N^-2(m) = <n>(m) + 1."""
    worst = 0.0
    for m in cfg.ms(range(10)):
        for r in cfg.rs((0.0, 0.3, 0.8, 1.5)):
            s = pc.PasvParams(r, m)
            ratio = pc.norm_factor_sq_inv(pc.PasvParams(r, m + 1)) / pc.norm_factor_sq_inv(s)
            worst = max(worst, _rel(ratio, pc.mean_photon(s) + 1))
    return CheckResult("I consecutive-norm identity", worst < 1e-12, worst, 1e-12)


@_timed
def invariant_moments_oracle(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """<n> and <a^dag^2 a^2> against Fock-oracle expectation values."""
    worst = 0.0
    for m in cfg.ms(range(5)):
        for r in cfg.rs((0.3, 0.8)):
            rho = _pasv_density(r, m)
            n_c = rho.cutoff
            a = fo.annihilation(n_c)
            s = pc.PasvParams(r, m)
            n_exp = rho.expect(a.T @ a).real
            g2_exp = rho.expect(a.T @ a.T @ a @ a).real
            worst = max(worst, _rel(pc.mean_photon(s), n_exp))
            if g2_exp > 0:
                worst = max(worst, _rel(pc.second_factorial_moment(s), g2_exp))
    return CheckResult("I photon moments vs oracle", worst < 1e-10, worst, 1e-10)


@_timed
def invariant_convolution(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Grid convolution of the initial W reproduces the evolved closed form."""
    worst = 0.0
    src_spec = scan.GridSpec.square(10.0, 401)
    for m in (0, 1):
        s = pc.PasvParams(0.3, m)
        src = scan.evaluate_grid(lambda q, p: pc.wigner(s, q, p), src_spec)
        for kt in (0.05, 0.2):
            for nbar in (0.0, 1.0):
                ch = tc.ChannelParams(kt, nbar)
                out = scan.convolve_thermal(src, ch, ORACLE_GRID)
                q, p = ORACLE_GRID.mesh()
                worst = max(worst, float(np.abs(out.values - tc.wigner_evolved(s, ch, q, p)).max()))
    return CheckResult("I thermal convolution vs closed form", worst < 1e-10, worst, 1e-10)


@_timed
def invariant_threshold_sign(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """m=1: W(origin) < 0 just below kt_c and > 0 just above."""
    fails = []
    for r in cfg.rs((0.3, 0.8, 1.5)):
        s = pc.PasvParams(r, 1)
        for nbar in (0.0, 1.0, 2.0):
            kc = tc.threshold_time_m1(nbar)
            below = float(tc.wigner_evolved(s, tc.ChannelParams(kc - 1e-3, nbar), 0.0, 0.0))
            above = float(tc.wigner_evolved(s, tc.ChannelParams(kc + 1e-3, nbar), 0.0, 0.0))
            if not (below < 0 < above):
                fails.append((r, nbar, below, above))
    return CheckResult("I threshold sign structure", not fails, float(len(fails)), 0.0, failures=fails)


@_timed
def invariant_cutoff_robustness(cfg: SuiteConfig = SuiteConfig()) -> CheckResult:
    """Doubling the cutoff from 64 to 128 leaves oracle Wigner values unchanged."""
    q, p = ORACLE_GRID.mesh()
    worst = 0.0
    for m in cfg.ms(range(4)):
        r = 0.3
        w64 = fo.wigner_fock(fo.pasv_density(r, m, 64), q, p)
        w128 = fo.wigner_fock(fo.pasv_density(r, m, 128), q, p)
        worst = max(worst, float(np.abs(w64 - w128).max()))
    return CheckResult("I oracle cutoff robustness", worst < 1e-10, worst, 1e-10)


INVARIANTS = (
    invariant_consecutive_norms,
    invariant_moments_oracle,
    invariant_convolution,
    invariant_threshold_sign,
    invariant_cutoff_robustness,
)


def run_suite(cfg: SuiteConfig = SuiteConfig(), on_result=None) -> list[CheckResult]:
    results = []
    for check in CRITERIA + INVARIANTS:
        result = check(cfg)
        results.append(result)
        if on_result is not None:
            on_result(result)
    return results
