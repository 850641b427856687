"""Phase-space grids: evaluation, quadrature, negativity, convolution, export."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, ExportError, PaddingError

if TYPE_CHECKING:
    from .thermal_channel import ChannelParams

# fixed row blocks: results do not depend on how many workers share them
ROW_BLOCK = 8


@dataclass(frozen=True)
class GridSpec:
    q_min: float
    q_max: float
    p_min: float
    p_max: float
    nq: int
    n_p: int

    def __post_init__(self):
        if not (self.q_min < self.q_max and self.p_min < self.p_max):
            raise DomainError("grid bounds must satisfy min < max")
        if self.nq < 3 or self.n_p < 3:
            raise DomainError("grid needs at least 3 points per axis")

    @classmethod
    def square(cls, half_width: float, n: int) -> "GridSpec":
        return cls(-half_width, half_width, -half_width, half_width, n, n)

    @property
    def q_axis(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.nq)

    @property
    def p_axis(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / (self.nq - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q_axis, self.p_axis, indexing="ij")

    def to_dict(self) -> dict:
        return {
            "q_min": self.q_min,
            "q_max": self.q_max,
            "p_min": self.p_min,
            "p_max": self.p_max,
            "nq": self.nq,
            "np": self.n_p,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(d["q_min"], d["q_max"], d["p_min"], d["p_max"], d["nq"], d["np"])


FIGURE_GRID = GridSpec.square(4.0, 201)
NORM_GRID = GridSpec.square(6.0, 401)


@dataclass(frozen=True, eq=False)
class WignerGrid:
    spec: GridSpec
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def dq(self) -> float:
        return self.spec.dq

    @property
    def dp(self) -> float:
        return self.spec.dp


@dataclass(frozen=True)
class NegativityReport:
    min_value: float
    argmin_q: float
    argmin_p: float
    negative_volume: float
    total_integral: float

    @property
    def argmin(self):
        from .pasv_core import PhasePoint

        return PhasePoint(self.argmin_q, self.argmin_p)


def default_workers() -> int:
    env = os.environ.get("PASV_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def evaluate_grid(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    spec: GridSpec,
    workers: int | None = None,
    metadata: dict | None = None,
) -> WignerGrid:
    """Sample a vectorised point function f(q, p) on the grid.

    Rows are cut into fixed blocks of ``ROW_BLOCK`` and the blocks are shared
    among workers, so the output is bit-identical for any worker count.
    """
    q_mesh, p_mesh = spec.mesh()
    values = np.empty(q_mesh.shape)
    blocks = [slice(i, min(i + ROW_BLOCK, spec.nq)) for i in range(0, spec.nq, ROW_BLOCK)]

    def run(rows: slice) -> None:
        try:
            values[rows] = f(q_mesh[rows], p_mesh[rows])
        except DomainError as err:
            for q, p in zip(q_mesh[rows].ravel(), p_mesh[rows].ravel()):
                try:
                    f(np.array(q), np.array(p))
                except DomainError:
                    raise DomainError(f"{err} (at q={q}, p={p})") from err
            raise

    workers = workers or default_workers()
    if workers == 1:
        for rows in blocks:
            run(rows)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))
    if not np.all(np.isfinite(values)):
        i, j = np.argwhere(~np.isfinite(values))[0]
        raise DomainError(f"non-finite value at q={q_mesh[i, j]}, p={p_mesh[i, j]}")
    return WignerGrid(spec, values, dict(metadata or {}))


def integrate(grid: WignerGrid) -> float:
    """Trapezoid double integral over dq dp."""
    inner = trapezoid(grid.values, dx=grid.dp, axis=1)
    return float(trapezoid(inner, dx=grid.dq))


def negativity(grid: WignerGrid) -> NegativityReport:
    i, j = np.unravel_index(np.argmin(grid.values), grid.values.shape)
    neg = np.where(grid.values < 0, -grid.values, 0.0)
    return NegativityReport(
        min_value=float(grid.values[i, j]),
        argmin_q=float(grid.spec.q_axis[i]),
        argmin_p=float(grid.spec.p_axis[j]),
        negative_volume=integrate(WignerGrid(grid.spec, neg)),
        total_integral=integrate(grid),
    )


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def _edge_ratio(values: np.ndarray) -> float:
    # largest boundary magnitude relative to the peak
    rim = np.concatenate([values[0], values[-1], values[:, 0], values[:, -1]])
    return float(np.abs(rim).max() / np.abs(values).max())


def convolve_thermal(
    initial: WignerGrid,
    ch: "ChannelParams",
    out_spec: GridSpec | None = None,
    leak_tol: float = 1e-8,
) -> WignerGrid:
    """Evolve a sampled Wigner function through the thermal channel by quadrature.

    In (q, p) the channel kernel is separable:

        W_t(q', p') = 1/(pi s) * int dq dp W_0(q, p)
                      exp(-[(q' - q e^{-kt})^2 + (p' - p e^{-kt})^2] / s),

    with s = (2 nbar + 1)(1 - e^{-2 kt}). The input grid must hold W_0 (its
    edge values below ``leak_tol`` of the peak) and its spacing must resolve
    the kernel.
    """
    if ch.kt <= 0:
        raise DomainError("convolve_thermal needs kt > 0")
    out_spec = out_spec or initial.spec
    s = (2 * ch.nbar + 1) * -math.expm1(-2 * ch.kt)
    shrink = math.exp(-ch.kt)
    edge = _edge_ratio(initial.values)
    if edge > leak_tol:
        raise PaddingError(f"input grid edge reaches {edge:.2e} of the peak (tol {leak_tol:.0e}); widen it")
    # kernel width in the source variable
    sd_src = math.sqrt(s / 2) / shrink
    if sd_src < 2 * max(initial.spec.dq, initial.spec.dp):
        raise DomainError(f"kernel width {sd_src:.2e} is under two grid spacings; refine the input grid")
    src_q, src_p = initial.spec.q_axis, initial.spec.p_axis
    dst_q, dst_p = out_spec.q_axis, out_spec.p_axis
    kq = np.exp(-((dst_q[:, None] - shrink * src_q[None, :]) ** 2) / s)
    kp = np.exp(-((dst_p[:, None] - shrink * src_p[None, :]) ** 2) / s)
    wq = _trapezoid_weights(len(src_q), initial.spec.dq)
    wp = _trapezoid_weights(len(src_p), initial.spec.dp)
    weighted = initial.values * wq[:, None] * wp[None, :]
    values = kq @ weighted @ kp.T / (math.pi * s)
    meta = dict(initial.metadata)
    meta.update({"kt": ch.kt, "nbar": ch.nbar, "method": "convolution"})
    return WignerGrid(out_spec, values, meta)


# --------------------------------------------------------------------------
# export


def _infer_format(path: Path, fmt: str | None) -> str:
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in ("csv", "json"):
        raise ExportError(f"{path}: unknown export format {fmt!r} (use csv or json)")
    return fmt


def _grid_rows(grid: WignerGrid):
    qs, ps = grid.spec.q_axis, grid.spec.p_axis
    for i, q in enumerate(qs):
        for j, p in enumerate(ps):
            yield q, p, grid.values[i, j]


def export(obj: WignerGrid | NegativityReport, path, fmt: str | None = None) -> None:
    """Write a grid (CSV or JSON) or a negativity report (JSON).

    CSV rows are q-major with 17 significant digits; JSON floats use Python's
    shortest round-trip repr. Either format reloads bit-exactly.
    """
    path = Path(path)
    fmt = _infer_format(path, fmt)
    try:
        if isinstance(obj, NegativityReport):
            if fmt != "json":
                raise ExportError(f"{path}: negativity reports are exported as JSON only")
            path.write_text(json.dumps(asdict(obj), indent=2) + "\n")
        elif fmt == "csv":
            with path.open("w", newline="") as fh:
                fh.write("q,p,w\n")
                for q, p, w in _grid_rows(obj):
                    fh.write(f"{q:.17g},{p:.17g},{w:.17g}\n")
        else:
            payload = {
                "spec": obj.spec.to_dict(),
                "values": [float(v) for v in obj.values.ravel()],
                "metadata": obj.metadata,
            }
            path.write_text(json.dumps(payload) + "\n")
    except OSError as err:
        raise ExportError(f"{path}: {err}") from err


def load_grid(path, fmt: str | None = None) -> WignerGrid:
    """Read a grid written by ``export``."""
    path = Path(path)
    fmt = _infer_format(path, fmt)
    try:
        if fmt == "json":
            payload = json.loads(path.read_text())
            spec = GridSpec.from_dict(payload["spec"])
            values = np.array(payload["values"], dtype=float).reshape(spec.nq, spec.n_p)
            return WignerGrid(spec, values, payload.get("metadata", {}))
        with path.open(newline="") as fh:
            reader = csv.reader(row for row in fh if not row.startswith("#"))
            header = next(reader)
            if header != ["q", "p", "w"]:
                raise ExportError(f"{path}: unexpected header {header}")
            rows = np.array([[float(x) for x in row] for row in reader])
    except OSError as err:
        raise ExportError(f"{path}: {err}") from err
    qs = np.unique(rows[:, 0])
    ps = np.unique(rows[:, 1])
    spec = GridSpec(float(qs[0]), float(qs[-1]), float(ps[0]), float(ps[-1]), len(qs), len(ps))
    return WignerGrid(spec, rows[:, 2].reshape(len(qs), len(ps)))


def load_report(path) -> NegativityReport:
    try:
        return NegativityReport(**json.loads(Path(path).read_text()))
    except OSError as err:
        raise ExportError(f"{path}: {err}") from err
