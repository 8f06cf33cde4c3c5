import numpy as np
import pytest

from fmlbr.cli import main
from fmlbr.io import read_field


def test_reduce(capsys):
    assert main(["reduce", "--tensor", "1,0.9,1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "index,u1,u2,norm"
    assert float(out[1].split(",")[-1]) == pytest.approx(0.2**0.5, rel=1e-12)


def test_validate_stencil(capsys):
    assert main(["validate-stencil", "--tensor", "2,0.3,0.1,1,0.2,3"]) == 0
    assert "simplices=24 vertices=14" in capsys.readouterr().out
    assert main(["validate-stencil", "--stencil", "fm4", "--tensor", "7,-5.196152422706632,13"]) == 1
    assert "(c) acute vertex pairs: FAIL" in capsys.readouterr().out


def test_solve_writes_field(tmp_path, capsys):
    out = tmp_path / "s.eik"
    pgm = tmp_path / "s.pgm"
    assert main(["solve", "--case", "seismic", "--n", "33", "--out", str(out), "--pgm", str(pgm)]) == 0
    assert "case=seismic solver=fmlbr dims=33x33" in capsys.readouterr().out
    f = read_field(out)
    assert f.dims == (33, 33) and np.isfinite(f.values).all()
    assert pgm.read_bytes().startswith(b"P5\n33 33\n255\n")


def test_geodesic_stdout(capsys):
    assert main(["geodesic", "--case", "constant", "--tensor", "1,0,1", "--n", "33", "--start", "0.4,0.1"]) == 0
    cap = capsys.readouterr()
    lines = cap.out.splitlines()
    assert lines[0] == "x,y"
    # last point is the seed node plus its residual offset
    assert np.hypot(*[float(c) for c in lines[-1].split(",")]) <= 1.0 / 32
    assert "points=" in cap.err


def test_bench_csv(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "--case", "surface", "--n", "33", "--ref-n", "65", "--solver", "fmlbr",
                 "--solver", "fm8", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "case,solver,nx,ny,nz,time_s,linf,l1,unreached"
    assert [r.split(",")[1] for r in rows[1:]] == ["fmlbr", "fm8"]


def test_python_backend_flag(capsys):
    assert main(["--backend", "python", "solve", "--case", "spiral2d", "--n", "21"]) == 0
    from fmlbr import _backend
    _backend.set_backend(_backend.available()[0])


def test_errors(capsys):
    assert main(["reduce", "--tensor", "1,2,1"]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["solve", "--case", "nope"])
