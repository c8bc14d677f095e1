import csv
import io
import json

import jsonschema
import pytest

from l4wb.cache import CacheError, cache_roundtrip, read_eigenforms, read_space, write_eigenforms
from l4wb.cli import dispatch
from l4wb.hecke import eigenforms, hecke_matrix, victor_miller_basis
from l4wb.report import Report, load_schema


def run(capsys, *argv):
    code = dispatch(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_kloosterman_json(capsys):
    code, out, _ = run(capsys, "kloosterman", "--n", "1", "--m", "1", "--c", "3")
    assert code == 0
    rep = json.loads(out)
    jsonschema.validate(rep, load_schema())
    assert rep["results"]["value"] == pytest.approx(-1, abs=1e-12)
    assert rep["results"]["weil_ok"] is True


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["kloosterman", "--n", "1", "--m", "1", "--c", "3", "--bogus"],
     ["kloosterman", "--n", "1", "--m", "1", "--c", "3", "--tol", "1"],
     ["kloosterman", "--n", "1", "--m", "1", "--c", "0"],
     ["eigen", "--weight", "12", "--threads", "0"]],
)
def test_invalid_input_exits_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert err


def test_budget_error_exits_3(capsys, tmp_path):
    # 3 coefficients are too few for T2 on S_24
    code, _, err = run(capsys, "basis", "--weight", "24", "--N", "3", "--cache-dir", str(tmp_path))
    assert code == 3 and "budget" in err


def test_help_and_version(capsys):
    assert run(capsys, "--version")[0] == 0
    assert run(capsys, "--help")[0] == 0


def _strip_runtime(text):
    d = json.loads(text)
    d["diagnostics"].pop("runtime_ms")
    return d


def test_deterministic_output(capsys):
    argv = ("bessel-avg", "--K", "60", "--x", "200", "465", "--y", "13", "465")
    a = _strip_runtime(run(capsys, *argv)[1])
    b = _strip_runtime(run(capsys, *argv, "--threads", "2")[1])
    assert a["results"] == b["results"]


def test_csv_matches_json(capsys):
    argv = ("bessel-avg", "--K", "60", "--x", "200", "--y", "13", "100")
    js = json.loads(run(capsys, *argv)[1])["results"]
    rows = list(csv.DictReader(io.StringIO(run(capsys, *argv, "--format", "csv")[1])))
    assert len(rows) == len(js)
    for row, ref in zip(rows, js):
        for key in ("re", "im", "abs_phase_removed"):
            assert f"{float(row[key]):.15g}" == f"{ref[key]:.15g}"


def test_output_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, stdout, _ = run(capsys, "kloosterman", "--n", "2", "--m", "3", "--c", "7", "--output", str(out))
    assert code == 0 and stdout == ""
    jsonschema.validate(json.loads(out.read_text()), load_schema())


@pytest.mark.parametrize(
    "argv",
    [("eigen", "--weight", "24"), ("lvalue", "--weight", "12", "--kind", "edge-sym2"),
     ("expsum-scan", "--c-max", "30", "--r-max", "2"), ("poisson-check",),
     ("trace-check", "--weight", "12", "14", "--n-max", "3")],
)
def test_reports_follow_schema(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    jsonschema.validate(json.loads(out), load_schema())


def test_watson_subcommand(capsys):
    code, out, _ = run(capsys, "watson", "--weight", "12", "--g-index", "1")
    assert code == 0
    assert json.loads(out)["results"]["rel_gap"] <= 1e-3


def test_report_roundtrip_and_version():
    rep = Report({"subcommand": "eigen"}, {"x": 1.5, "z": complex(1, 2)})
    back = Report.from_json(rep.to_json())
    assert back.results == {"x": 1.5, "z": {"re": 1.0, "im": 2.0}}
    bad = json.loads(rep.to_json())
    bad["schema_version"] = "l4wb/0"
    with pytest.raises(ValueError):
        Report.from_json(json.dumps(bad))


def test_basis_cache_roundtrip(tmp_path, capsys):
    space = victor_miller_basis(12, 40)
    back = cache_roundtrip(space, tmp_path)
    assert [back.basis[0][n] for n in range(1, 13)] == [1, -24, 252, -1472, 4830, -6048, -16744, 84480,
                                                          -113643, -115920, 534612, -370944]
    s24 = victor_miller_basis(24, 60)
    cache_roundtrip(s24, tmp_path)
    _, T2 = read_space(tmp_path / "S24_N60.qcache")
    assert T2 == hecke_matrix(s24, 2)
    args = ("basis", "--weight", "24", "--N", "60", "--cache-dir", str(tmp_path))
    rep = json.loads(run(capsys, *args)[1])
    assert rep["diagnostics"]["cache_hit"] is True
    assert rep["results"]["T2"] == [["0", "1"], ["20468736", "1080"]]


def test_cache_rejects_version_and_corruption(tmp_path):
    path = tmp_path / "S12_N20.qcache"
    cache_roundtrip(victor_miller_basis(12, 20), tmp_path)
    lines = path.read_text().splitlines()
    bad = list(lines)
    bad[0] = "L4WB-QCACHE v0"
    path.write_text("\n".join(bad) + "\n")
    with pytest.raises(CacheError, match=":1:"):
        read_space(path)
    bad = list(lines)
    bad[7] = "12x"
    path.write_text("\n".join(bad) + "\n")
    with pytest.raises(CacheError, match=":8:"):
        read_space(path)


def test_eigenform_cache_is_exact(tmp_path):
    fs = eigenforms(victor_miller_basis(24, 200), direct=200)
    path = tmp_path / "E24_N200.ecache"
    write_eigenforms(path, fs, 24, 200)
    N, back = read_eigenforms(path)
    assert N == 200 and back[0].weight == 24
    for f, g in zip(fs, back):
        assert all(f.lam(n) == g.lam(n) for n in range(1, 201))
