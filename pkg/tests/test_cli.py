import csv
import io

import numpy as np
import pytest
from scipy import stats

from ewishart import zonal
from ewishart.cli import main, parse_grid


@pytest.fixture(autouse=True)
def keep_store():
    # --zonal-cache swaps the process-wide store; put the session store back
    saved = zonal.get_store()
    yield
    zonal.set_store(saved)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_cdf_rank_one_gaussian(capsys):
    code, out, _ = run(capsys, "cdf", "--n", "1", "--sigma", "1,1,1", "--grid", "1,4,9", "--K", "100")
    assert code == 0
    table = rows(out)
    assert table[0] == ["x", "cdf", "raw", "tail_bound", "degrees_used"]
    got = [float(r[1]) for r in table[1:]]
    np.testing.assert_allclose(got, stats.chi2.cdf([1, 4, 9], 3), atol=1e-12)
    assert all(float(r[3]) < 1e-12 for r in table[1:])


def test_cdf_explicit_path_and_output_file(capsys, tmp_path):
    out_file = tmp_path / "cdf.csv"
    args = ["--n", "2", "--sigma", "3,2,1", "--model", "t:rho=7", "--grid", "1:10:4", "--K", "60"]
    assert main(["cdf", *args, "--path", "explicit", "-o", str(out_file)]) == 0
    assert main(["cdf", *args, "--no-tail"]) == 0
    generic = rows(capsys.readouterr()[0])
    explicit = rows(out_file.read_text())
    for a, b in zip(generic[1:], explicit[1:]):
        assert float(a[1]) == pytest.approx(float(b[1]), rel=1e-9)
        assert a[3] == ""


def test_quantile(capsys):
    code, out, _ = run(capsys, "quantile", "--n", "1", "--sigma", "1", "--p", "0.5,0.9", "--tol", "1e-9")
    assert code == 0
    q = [float(r[1]) for r in rows(out)[1:]]
    np.testing.assert_allclose(q, stats.chi2.ppf([0.5, 0.9], 1), rtol=1e-6)


def test_table_with_mc(capsys):
    code, out, _ = run(capsys, "table", "--n", "1", "--sigma", "1,1", "--alphas", "0.5,0.9",
                       "--with-mc", "--replications", "50000", "--seed", "3")
    assert code == 0
    table = rows(out)
    assert table[0] == ["alpha", "quantile_analytic", "quantile_mc"]
    for r in table[1:]:
        assert float(r[2]) == pytest.approx(float(r[1]), rel=0.03)


def test_simulate_is_reproducible(capsys):
    args = ["simulate", "--n", "2", "--sigma", "3,2,1", "--model", "kotz1:theta=0.5,q=2",
            "--grid", "5:40:8", "--replications", "20000", "--seed", "7"]
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args, "--workers", "3")
    assert first == second
    assert rows(first)[0] == ["x", "p_hat", "stderr"]


def test_sigma_from_file(capsys, tmp_path):
    path = tmp_path / "sigma.txt"
    path.write_text("2 0\n0 1\n")
    code, out, _ = run(capsys, "cdf", "--n", "2", "--sigma", str(path), "--grid", "3")
    assert code == 0 and len(rows(out)) == 2
    path.write_text("1 2\n2 1\n")
    code, _, err = run(capsys, "cdf", "--n", "2", "--sigma", str(path), "--grid", "3")
    assert code == 2 and "positive definite" in err


@pytest.mark.parametrize("argv", [
    ["cdf", "--n", "2", "--sigma", "1,1", "--grid", "3,1"],
    ["cdf", "--n", "2", "--sigma", "1,1", "--grid", "a:b:c"],
    ["cdf", "--n", "2", "--sigma", "1,1", "--m", "3"],
    ["cdf", "--n", "2", "--sigma", "1,1", "--model", "t:nu=3"],
    ["cdf", "--n", "2", "--sigma", "1,1", "--path", "explicit"],
    ["quantile", "--n", "2", "--sigma", "1,1", "--p", "1.5"],
    ["table", "--n", "2", "--sigma", "1,1", "--alphas", ""],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_numeric_failure_exit_code(capsys):
    code, _, err = run(capsys, "quantile", "--n", "2", "--sigma", "3,2,1", "--model", "t:rho=7",
                       "--K", "15", "--p", "0.99")
    assert code == 3 and "numerical failure" in err


def test_verify_single_suite(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "zonal", "--max-degree", "6")
    assert code == 0
    assert out.splitlines()[0].startswith("PASS zonal")
    assert "1/1 suites passed" in out


def test_cache_commands(capsys, tmp_path):
    cache = str(tmp_path / "cache")
    assert main(["--zonal-cache", cache, "cache", "build", "--max-degree", "8", "--max-length", "2"]) == 0
    code, out, _ = run(capsys, "--zonal-cache", cache, "cache", "info")
    assert code == 0 and "tables: 9" in out
    code, out, _ = run(capsys, "--zonal-cache", cache, "cache", "export", "--degree", "3")
    assert '"degree": 3' in out
    (tmp_path / "cache" / "keep.txt").write_text("x")
    code, out, _ = run(capsys, "--zonal-cache", cache, "cache", "clear")
    assert "removed 9 tables" in out
    assert [p.name for p in (tmp_path / "cache").iterdir()] == ["keep.txt"]


def test_verify_reports_rebuilt_tables(capsys, tmp_path):
    cache = tmp_path / "cache"
    main(["--zonal-cache", str(cache), "cache", "build", "--max-degree", "6", "--max-length", "5"])
    target = sorted(cache.glob("zonal-d005-*.bin"))[0]
    target.write_bytes(b"garbage")
    code, out, _ = run(capsys, "--zonal-cache", str(cache), "verify", "--suite", "zonal", "--max-degree", "6")
    assert code == 0
    assert "degree=5" in out and "rebuilt" in out


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("1:3:3"), [1, 2, 3])
    np.testing.assert_allclose(parse_grid("0.5, 2"), [0.5, 2])


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "ewishart", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "quantile" in proc.stdout
