import json
import math

import numpy as np
import pytest

from pasvlab import pasv_core as pc
from pasvlab import scan
from pasvlab import thermal_channel as tc
from pasvlab.errors import DomainError, ExportError, PaddingError

ORACLE_GRID = scan.GridSpec.square(3.0, 21)
WIDE_SOURCE = scan.GridSpec.square(10.0, 401)


def ideal(r, m):
    s = pc.PasvParams(r, m)
    return lambda q, p: pc.wigner(s, q, p)


def evolved(r, m, kt, nbar):
    s, c = pc.PasvParams(r, m), tc.ChannelParams(kt, nbar)
    return lambda q, p: tc.wigner_evolved(s, c, q, p)


# grid specs


def test_grid_spec_geometry():
    spec = scan.GridSpec(-1.0, 3.0, -2.0, 2.0, 5, 9)
    assert spec.dq == 1.0 and spec.dp == 0.5
    q, p = spec.mesh()
    assert q.shape == (5, 9)
    assert q[2, 0] == 1.0 and p[0, 4] == 0.0


@pytest.mark.parametrize(
    "args", [(1.0, 0.0, -1.0, 1.0, 5, 5), (-1.0, 1.0, -1.0, 1.0, 2, 5), (-1.0, 1.0, 1.0, 1.0, 5, 5)]
)
def test_grid_spec_rejects_bad_bounds(args):
    with pytest.raises(DomainError):
        scan.GridSpec(*args)


def test_grid_spec_dict_round_trip():
    spec = scan.GridSpec(-1.5, 2.0, -0.5, 0.5, 7, 11)
    assert scan.GridSpec.from_dict(spec.to_dict()) == spec


# evaluation


def test_constant_function():
    spec = scan.GridSpec(0.0, 1.0, 0.0, 1.0, 3, 3)
    grid = scan.evaluate_grid(lambda q, p: np.full(q.shape, 1 / math.pi), spec)
    assert np.all(grid.values == 1 / math.pi)


def test_single_photon_minimum_at_origin():
    report = scan.negativity(scan.evaluate_grid(ideal(0.3, 1), scan.FIGURE_GRID))
    assert report.min_value < 0
    assert (report.argmin_q, report.argmin_p) == (0.0, 0.0)


def test_three_photon_minimum_at_origin():
    report = scan.negativity(scan.evaluate_grid(ideal(0.3, 3), scan.FIGURE_GRID))
    assert (report.argmin_q, report.argmin_p) == (0.0, 0.0)


def test_two_photon_minimum_off_origin():
    report = scan.negativity(scan.evaluate_grid(ideal(0.3, 2), scan.FIGURE_GRID))
    assert report.min_value < 0
    assert math.hypot(report.argmin_q, report.argmin_p) > 0.5
    assert report.argmin.q == report.argmin_q


def test_parallel_evaluation_is_bit_identical():
    f = evolved(0.4, 3, 0.1, 1.0)
    one = scan.evaluate_grid(f, scan.FIGURE_GRID, workers=1)
    many = scan.evaluate_grid(f, scan.FIGURE_GRID, workers=4)
    assert np.array_equal(one.values, many.values)


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv("PASV_WORKERS", "3")
    assert scan.default_workers() == 3
    monkeypatch.delenv("PASV_WORKERS")
    assert scan.default_workers() >= 1


def test_domain_error_names_the_point():
    def f(q, p):
        if np.any((q == 1.0) & (p == 0.0)):
            raise DomainError("bad point")
        return q + p

    with pytest.raises(DomainError, match=r"q=1\.0, p=0\.0"):
        scan.evaluate_grid(f, scan.GridSpec.square(1.0, 5))


def test_non_finite_values_rejected():
    with pytest.raises(DomainError, match="non-finite"):
        scan.evaluate_grid(lambda q, p: np.where(q > 0, np.nan, 0.0), scan.GridSpec.square(1.0, 5))


# quadrature


def test_integrate_zero_grid():
    spec = scan.GridSpec.square(1.0, 11)
    assert scan.integrate(scan.WignerGrid(spec, np.zeros((11, 11)))) == 0.0


def test_squeezed_vacuum_integrates_to_one():
    r, core = 0.8, 7.0
    spec = scan.GridSpec(-core * math.exp(r), core * math.exp(r), -core * math.exp(-r), core * math.exp(-r), 401, 401)
    assert scan.integrate(scan.evaluate_grid(ideal(r, 0), spec)) == pytest.approx(1.0, abs=1e-6)


def test_three_photon_state_integrates_to_one():
    r, core = 0.3, 9.5
    spec = scan.GridSpec(-core * math.exp(r), core * math.exp(r), -core * math.exp(-r), core * math.exp(-r), 401, 401)
    assert scan.integrate(scan.evaluate_grid(ideal(r, 3), spec)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize(
    "f, spec",
    [
        (ideal(0.3, 0), scan.FIGURE_GRID),
        (ideal(0.3, 1), scan.NORM_GRID),
        (ideal(0.3, 2), scan.NORM_GRID),
        (evolved(0.3, 1, 0.1, 1.0), scan.NORM_GRID),
    ],
)
def test_quadrature_converges_under_halving(f, spec):
    fine = scan.GridSpec(spec.q_min, spec.q_max, spec.p_min, spec.p_max, 2 * spec.nq - 1, 2 * spec.n_p - 1)
    coarse_val = scan.integrate(scan.evaluate_grid(f, spec))
    fine_val = scan.integrate(scan.evaluate_grid(f, fine))
    assert abs(coarse_val - fine_val) < 1e-7


# negativity


@pytest.mark.parametrize("r", [0.0, 0.3, 0.8])
def test_squeezed_vacuum_has_no_negativity(r):
    report = scan.negativity(scan.evaluate_grid(ideal(r, 0), scan.FIGURE_GRID))
    assert report.min_value > 0
    assert report.negative_volume == 0.0


def test_single_photon_minimum_value():
    report = scan.negativity(scan.evaluate_grid(evolved(0.3, 1, 0.0, 1.0), scan.FIGURE_GRID))
    assert report.min_value == pytest.approx(-1 / math.pi, abs=1e-14)
    assert (report.argmin_q, report.argmin_p) == (0.0, 0.0)


def test_negative_volume_definition():
    spec = scan.GridSpec.square(1.0, 3)
    values = np.array([[1.0, -2.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    report = scan.negativity(scan.WignerGrid(spec, values))
    # trapezoid weight of an edge-midpoint is 1/2 * 1 = 0.5
    assert report.negative_volume == pytest.approx(1.0)
    assert report.total_integral == pytest.approx(0.25 - 1.0)


# convolution


@pytest.mark.parametrize("m", [0, 1])
@pytest.mark.parametrize("kt", [0.05, 0.2])
@pytest.mark.parametrize("nbar", [0.0, 1.0])
def test_convolution_matches_closed_form(m, kt, nbar):
    src = scan.evaluate_grid(ideal(0.3, m), WIDE_SOURCE)
    out = scan.convolve_thermal(src, tc.ChannelParams(kt, nbar), ORACLE_GRID)
    q, p = ORACLE_GRID.mesh()
    assert np.abs(out.values - evolved(0.3, m, kt, nbar)(q, p)).max() < 1e-4
    assert out.metadata["method"] == "convolution"


def test_convolution_of_narrow_peak_becomes_thermal():
    width = 0.05
    spec = scan.GridSpec.square(8.0, 801)
    q, p = spec.mesh()
    peak = np.exp(-(q**2 + p**2) / width**2) / (math.pi * width**2)
    nbar = 1.5
    out = scan.convolve_thermal(scan.WignerGrid(spec, peak), tc.ChannelParams(15.0, nbar), ORACLE_GRID)
    qo, po = ORACLE_GRID.mesh()
    assert np.abs(out.values - tc.thermal_wigner(nbar, qo, po)).max() < 1e-8


def test_convolution_requires_padding():
    src = scan.evaluate_grid(ideal(0.3, 1), scan.GridSpec.square(3.0, 61))
    with pytest.raises(PaddingError):
        scan.convolve_thermal(src, tc.ChannelParams(0.5, 2.0), ORACLE_GRID)


def test_convolution_requires_resolved_kernel():
    src = scan.evaluate_grid(ideal(0.3, 1), scan.GridSpec.square(8.0, 41))
    with pytest.raises(DomainError, match="grid spacings"):
        scan.convolve_thermal(src, tc.ChannelParams(1e-3, 0.0), ORACLE_GRID)


def test_convolution_requires_positive_time():
    src = scan.evaluate_grid(ideal(0.3, 1), ORACLE_GRID)
    with pytest.raises(DomainError):
        scan.convolve_thermal(src, tc.ChannelParams(0.0, 1.0))


# export


def test_csv_layout(tmp_path):
    spec = scan.GridSpec.square(1.0, 3)
    grid = scan.evaluate_grid(lambda q, p: q * 10 + p, spec)
    path = tmp_path / "g.csv"
    scan.export(grid, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "q,p,w"
    assert len(lines) == 10
    assert lines[1] == "-1,-1,-11"


def test_report_schema(tmp_path):
    report = scan.negativity(scan.evaluate_grid(ideal(0.3, 1), ORACLE_GRID))
    path = tmp_path / "r.json"
    scan.export(report, path)
    data = json.loads(path.read_text())
    assert set(data) == {"min_value", "argmin_q", "argmin_p", "negative_volume", "total_integral"}
    assert scan.load_report(path) == report


def test_figure_grid_csv_round_trip(tmp_path):
    grid = scan.evaluate_grid(ideal(0.3, 1), scan.FIGURE_GRID)
    path = tmp_path / "fig.csv"
    scan.export(grid, path)
    back = scan.load_grid(path)
    assert back.spec == grid.spec
    assert np.array_equal(back.values, grid.values)


def test_json_round_trip(tmp_path):
    grid = scan.evaluate_grid(evolved(0.3, 2, 0.1, 1.0), ORACLE_GRID, metadata={"m": 2})
    path = tmp_path / "g.json"
    scan.export(grid, path)
    back = scan.load_grid(path)
    assert back.spec == grid.spec
    assert np.array_equal(back.values, grid.values)
    assert back.metadata == {"m": 2}


def test_export_errors(tmp_path):
    grid = scan.evaluate_grid(ideal(0.3, 0), ORACLE_GRID)
    with pytest.raises(ExportError):
        scan.export(grid, tmp_path / "g.txt")
    with pytest.raises(ExportError):
        scan.export(grid, tmp_path / "missing" / "g.csv")
    with pytest.raises(ExportError):
        scan.export(scan.negativity(grid), tmp_path / "r.csv")
    with pytest.raises(ExportError):
        scan.load_grid(tmp_path / "absent.json")
