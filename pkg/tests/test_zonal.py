import json
import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ewishart import _recurrence_py, kernels, zonal
from ewishart.partitions import Partition, enumerate_partitions

positive_eigs = st.lists(st.floats(0.01, 5.0), min_size=1, max_size=5)


def C2(y):
    y = np.asarray(y, dtype=float)
    t1, t2 = y.sum(), (y**2).sum()
    return (t1**2 + 2 * t2) / 3, 2 * (t1**2 - t2) / 3


def test_degree_one_is_trace():
    t = zonal.build_zonal_table(1)
    assert t.entries == {(1,): {(1,): 1.0}}
    assert zonal.zonal_eval((1,), [3, 2, 1]) == pytest.approx(6.0, rel=1e-15)


def test_degree_two_closed_forms():
    y = [1.3, 0.4, 2.2]
    c2, c11 = C2(y)
    assert zonal.zonal_eval((2,), y) == pytest.approx(c2, rel=1e-14)
    assert zonal.zonal_eval((1, 1), y) == pytest.approx(c11, rel=1e-14)
    assert zonal.zonal_eval((2,), [1, 1]) == pytest.approx(8 / 3, rel=1e-14)
    assert zonal.zonal_eval((1, 1), [1, 1]) == pytest.approx(4 / 3, rel=1e-14)


# coefficients of C_kappa in monomial symmetric functions (James' tables)
JAMES = {
    (3,): {(3,): 1, (2, 1): Fraction(3, 5), (1, 1, 1): Fraction(2, 5)},
    (2, 1): {(2, 1): Fraction(12, 5), (1, 1, 1): Fraction(18, 5)},
    (1, 1, 1): {(1, 1, 1): 2},
    (4,): {(4,): 1, (3, 1): Fraction(4, 7), (2, 2): Fraction(18, 35), (2, 1, 1): Fraction(12, 35),
           (1, 1, 1, 1): Fraction(8, 35)},
    (2, 2): {(2, 2): Fraction(16, 5), (2, 1, 1): Fraction(32, 15), (1, 1, 1, 1): Fraction(16, 5)},
}


@pytest.mark.parametrize("kappa", list(JAMES))
def test_published_coefficients(kappa):
    row = zonal.build_zonal_table(sum(kappa)).row(kappa)
    assert set(row) == set(JAMES[kappa])
    for lam, c in JAMES[kappa].items():
        assert row[lam] == pytest.approx(float(c), rel=1e-13)


def test_degree_three_identity_sum():
    vals = [zonal.zonal_eval(k, [1, 1]) for k in [(3,), (2, 1), (1, 1, 1)]]
    assert vals[2] == 0.0
    assert math.fsum(vals) == pytest.approx(8.0, rel=1e-14)


def test_rank_deficient_argument_kills_long_partitions():
    assert zonal.zonal_eval((2, 1), [1, 0, 0]) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(positive_eigs, st.integers(0, 12))
def test_sum_identity(eigs, k):
    _, vals, logscale = zonal.zonal_degree_values(k, np.array(eigs))
    total = math.fsum(vals.tolist()) * math.exp(logscale)
    assert total == pytest.approx(sum(eigs) ** k, rel=1e-11)


@settings(max_examples=30, deadline=None)
@given(positive_eigs, st.integers(1, 8), st.floats(0.1, 10.0))
def test_homogeneity(eigs, k, c):
    for kappa in enumerate_partitions(k, len(eigs)):
        a = zonal.zonal_eval(kappa, c * np.array(eigs))
        b = c**k * zonal.zonal_eval(kappa, eigs)
        assert a == pytest.approx(b, rel=1e-11)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.01, 5.0), min_size=2, max_size=4), st.integers(1, 7))
def test_permutation_invariance(eigs, k):
    kappas = enumerate_partitions(k, len(eigs))
    ref = [zonal.zonal_eval(kap, eigs) for kap in kappas]
    for perm in list(permutations(eigs))[:6]:
        got = [zonal.zonal_eval(kap, perm) for kap in kappas]
        np.testing.assert_allclose(got, ref, rtol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
@pytest.mark.parametrize("k", [0, 1, 4, 9])
def test_identity_closed_form(m, k):
    for kappa in enumerate_partitions(k, m):
        direct = zonal.zonal_eval(kappa, np.ones(m))
        assert zonal.zonal_identity_value(kappa, m) == pytest.approx(direct, rel=1e-11)
    assert zonal.zonal_identity_value((1,) * (m + 1), m) == 0.0


def test_identity_rows_match_scalar():
    from ewishart.partitions import partition_array

    parts = partition_array(12, 4)
    rows = zonal.log_zonal_identity_rows(parts, 4)
    scalar = [zonal.log_zonal_identity_value(Partition(r), 4) for r in parts.tolist()]
    np.testing.assert_allclose(rows, scalar, rtol=1e-13)


def test_high_degree_identity_sum_restricted_tables():
    # degree 120 with three eigenvalues: only length <= 3 partitions are built
    y = np.array([1.0, 0.5, 1 / 3])
    _, vals, logscale = zonal.zonal_degree_values(120, y)
    log_total = math.log(math.fsum(vals.tolist())) + logscale
    assert log_total == pytest.approx(120 * math.log(y.sum()), rel=1e-12)


@pytest.mark.parametrize("k", [2, 5, 8])
def test_exact_tables_match_floating(k):
    exact = zonal.build_zonal_table(k, exact=True)
    approx = zonal.build_zonal_table(k)
    np.testing.assert_allclose(approx.coefficients, exact.coefficients, rtol=1e-12, atol=1e-14)


def test_subtable_index_is_not_a_prefix():
    # length <= 2 partitions of 4 sit at positions 0, 1, 2 of the full list,
    # but for 6 the (4, 1, 1) entry separates them
    idx = zonal.subtable_index(6, 2, 3)
    full = enumerate_partitions(6, 3)
    assert [full[i] for i in idx] == enumerate_partitions(6, 2)
    assert idx.tolist() != list(range(len(idx)))


@pytest.mark.parametrize("k, p", [(6, 6), (20, 3), (35, 4)])
def test_compiled_kernel_matches_fallback(k, p):
    if kernels.BACKEND != "cython":
        pytest.skip("compiled kernel not built")
    graph = zonal.raising_graph(k, p)
    fast = kernels.fill_coefficients(*graph)
    slow = _recurrence_py.fill_coefficients(*graph)
    np.testing.assert_allclose(fast, slow, rtol=1e-13, atol=0)


def test_degree_limit():
    with pytest.raises(zonal.ZonalDegreeError):
        zonal.build_zonal_table(zonal.MAX_DEGREE + 1, 2)


def test_cache_roundtrip(tmp_path):
    table = zonal.build_zonal_table(9, 3)
    zonal.save_table(table, tmp_path)
    loaded = zonal.load_table(tmp_path, 9, 3)
    assert loaded.partitions == table.partitions
    np.testing.assert_array_equal(loaded.coefficients, table.coefficients)
    assert zonal.load_table(tmp_path, 10, 3) is None


def test_corrupted_cache_is_rebuilt(tmp_path, caplog):
    table = zonal.build_zonal_table(7, 3)
    path = zonal.save_table(table, tmp_path)
    raw = bytearray(path.read_bytes())
    raw[-5] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(zonal.CacheCorruption):
        zonal.load_table(tmp_path, 7, 3)
    store = zonal.ZonalStore(tmp_path)
    rebuilt = store.table(7, 3)
    assert (7, 3) in store.rebuilt
    np.testing.assert_array_equal(rebuilt.coefficients, table.coefficients)
    # the file was rewritten and loads cleanly now
    assert zonal.load_table(tmp_path, 7, 3) is not None


def test_truncated_cache_file_is_rebuilt(tmp_path):
    path = zonal.save_table(zonal.build_zonal_table(5, 2), tmp_path)
    path.write_bytes(path.read_bytes()[:10])
    store = zonal.ZonalStore(tmp_path)
    assert store.table(5, 2).degree == 5
    assert store.rebuilt == [(5, 2)]


def test_store_saves_only_slow_builds(tmp_path):
    store = zonal.ZonalStore(tmp_path, min_build_seconds=1e9)
    store.table(6, 3)
    assert list(tmp_path.iterdir()) == []
    eager = zonal.ZonalStore(tmp_path, min_build_seconds=0.0)
    eager.table(6, 3)
    assert len(list(tmp_path.iterdir())) == 1


def test_store_memory_budget():
    store = zonal.ZonalStore(None, memory_bytes=0)
    a = store.table(4, 2)
    b = store.table(4, 2)
    assert a is not b
    store = zonal.ZonalStore(None)
    assert store.table(4, 2) is store.table(4, 2)


def test_export_json():
    data = json.loads(zonal.export_table(zonal.build_zonal_table(2)))
    assert data["degree"] == 2
    text = json.dumps(data)
    assert "0.6666666666666666" in text or "0.66666666666666663" in text
