import csv
import io as _io

import numpy as np
import pytest

from fmlbr.bench import CSV_HEADER, BenchResult, Reference, error_norms, format_table, results_csv, run_case
from fmlbr.grid import DistanceField, MetricGrid
from fmlbr.io import read_field, render_levels, write_field, write_path_csv, write_pgm
from fmlbr.solver import solve_fmlbr
from fmlbr.tensor import SpdTensor

SQ = ((-0.5, 0.5), (-0.5, 0.5))


def _solved(n):
    metric = MetricGrid.constant(SpdTensor(2, (2.0, 0.5, 1.0)), (n, n), SQ)
    return metric, solve_fmlbr(metric, [((n // 2, n // 2), 0.0)])


def test_error_norms_zero_and_shift():
    metric, f = _solved(17)
    assert error_norms(f, metric, f, metric) == (0.0, 0.0)
    g = DistanceField(f.values + 0.03, f.dims, f.seeds)
    linf, l1 = error_norms(g, metric, Reference(f, metric, "fmlbr"))
    assert linf == pytest.approx(0.03, abs=1e-15) and l1 == pytest.approx(0.03, abs=1e-15)


def test_error_norms_interpolates_finer_reference():
    coarse, fc = _solved(9)
    fine, ff = _solved(33)
    # a linear function is reproduced exactly by bilinear interpolation
    lin = lambda m: np.stack(np.meshgrid(*m.axes(), indexing="ij"), -1).reshape(-1, 2) @ [1.0, 2.0]
    a = DistanceField(lin(coarse), coarse.dims, {})
    b = DistanceField(lin(fine), fine.dims, {})
    linf, l1 = error_norms(a, coarse, b, fine)
    assert linf < 1e-14 and l1 < 1e-14


def test_error_norms_skip_unreached():
    metric, f = _solved(9)
    g = DistanceField(f.values.copy(), f.dims, f.seeds)
    g.values[0] = np.inf
    assert error_norms(g, metric, f, metric) == (0.0, 0.0)


def test_error_norms_rejects_bad_reference():
    metric, f = _solved(17)
    coarse, fc = _solved(9)
    with pytest.raises(ValueError):
        error_norms(f, metric, fc, coarse)
    other = MetricGrid.constant(SpdTensor.identity(2), (17, 17), ((0, 1), (0, 1)))
    with pytest.raises(ValueError):
        error_norms(f, metric, f, other)


def test_field_round_trip(tmp_path):
    v = np.random.default_rng(0).uniform(size=(4, 6))
    v[1, 2] = np.inf
    write_field(tmp_path / "f.eik", v, SQ)
    r = read_field(tmp_path / "f.eik")
    assert r.dims == (4, 6) and r.bounds == SQ
    assert r.values.tobytes() == v.tobytes()


def test_field_3d_header(tmp_path):
    v = np.arange(24.0).reshape(2, 3, 4)
    write_field(tmp_path / "f.eik", v, ((0, 1), (0, 2), (0, 3)))
    with open(tmp_path / "f.eik", "rb") as fh:
        assert fh.readline().split()[:6] == [b"EIKFIELD", b"1", b"3", b"2", b"3", b"4"]
    assert np.array_equal(read_field(tmp_path / "f.eik").values, v)


def test_field_payload_mismatch(tmp_path):
    p = tmp_path / "f.eik"
    write_field(p, np.zeros((3, 3)), SQ)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError, match="f.eik"):
        read_field(p)
    p.write_bytes(b"NOTAFIELD 1 2\n")
    with pytest.raises(ValueError):
        read_field(p)


def test_levels_constant_and_unreached():
    img = render_levels(np.full((5, 5), 0.35), 0.1)
    assert np.all(img == img[0, 0])
    v = np.full((3, 3), 0.5)
    v[0, 0] = np.inf
    assert render_levels(v, 0.2)[0, 0] == 128
    with pytest.raises(ValueError):
        render_levels(np.zeros((2, 2, 2)), 1.0)


def test_levels_rings():
    x = np.linspace(-1, 1, 101)
    X, Y = np.meshgrid(x, x, indexing="ij")
    img = render_levels(np.hypot(X, Y), 0.25)
    # the pixel rule, and radial symmetry of the result
    frac = np.mod(np.hypot(X, Y) / 0.25, 1.0)
    assert np.array_equal(img == 255, frac < 0.1)
    assert np.array_equal(img, img.T) and np.array_equal(img, img[::-1])


def test_pgm_file(tmp_path):
    v = np.arange(12.0).reshape(4, 3)
    write_pgm(tmp_path / "a.pgm", v, band=5.0)
    data = (tmp_path / "a.pgm").read_bytes()
    head = b"P5\n4 3\n255\n"
    assert data.startswith(head) and len(data) == len(head) + 12


def test_path_csv(tmp_path):
    write_path_csv(tmp_path / "p.csv", [[0.0, 1.0], [0.5, 0.25]], values=[1.0, 0.0])
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["x", "y", "value"] and [float(c) for c in rows[2]] == [0.5, 0.25, 0.0]


def test_csv_schema_and_table():
    r = BenchResult("surface", "fmlbr", (292, 292), 0.5, 0.0289, 0.0086, 0)
    rows = list(csv.reader(_io.StringIO(results_csv([r]))))
    assert rows[0] == CSV_HEADER == ["case", "solver", "nx", "ny", "nz", "time_s", "linf", "l1", "unreached"]
    assert rows[1][:5] == ["surface", "fmlbr", "292", "292", "1"]
    assert "2.890" in format_table([r]) and "0.860" in format_table([r])


def test_run_case_deterministic():
    a = run_case("seismic", ("fmlbr", "fm8", "agsi"), dims=(33, 33), ref_dims=(65, 65))
    b = run_case("seismic", ("fmlbr", "fm8", "agsi"), dims=(33, 33), ref_dims=(65, 65))
    assert [(r.solver, r.linf, r.l1) for r in a] == [(r.solver, r.linf, r.l1) for r in b]
    assert all(r.linf >= r.l1 >= 0 for r in a)
