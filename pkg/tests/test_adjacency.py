import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from vxcomplexity.adjacency import (
    ExportMatrix,
    binarize,
    column_shares,
    rca,
    read_matrix,
    weighted_adjacency,
    write_adjacency,
)
from vxcomplexity.errors import EmptyMatrixError, NegativeEntryError, ValidationError
from vxcomplexity.iot import CountryRegistry, SectorRegistry
from vxcomplexity.vax import VaxMatrix

from oracles import rca_loops

nonneg = arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                elements=st.floats(0, 1e6, allow_subnormal=False))


def vax_matrix(values, countries=("AAA", "BBB"), sectors=("s1", "s2")):
    return VaxMatrix(2014, values, CountryRegistry(countries), SectorRegistry(sectors))


def test_rca_single_cell():
    assert rca([[7.0]])[0, 0] == 1.0


def test_rca_equal_to_world_share():
    E = np.array([[2.0, 6.0], [1.0, 3.0]])  # both rows proportional to world mix
    np.testing.assert_allclose(rca(E), 1.0, rtol=1e-15)


def test_rca_small_example_exact():
    # row sums 4, 6; column sums 5, 5; total 10
    R = rca(ExportMatrix([[4.0, 0.0], [1.0, 5.0]], CountryRegistry(("AAA", "BBB")), ("p1", "p2")))
    np.testing.assert_allclose(R, [[2.0, 0.0], [1 / 3, 5 / 3]], rtol=1e-15)
    np.testing.assert_allclose(R, rca_loops([[4, 0], [1, 5]]), rtol=1e-15)


def test_rca_zero_row_and_all_zero():
    R = rca([[0.0, 0.0], [1.0, 2.0]])
    np.testing.assert_array_equal(R[0], 0)
    with pytest.raises(EmptyMatrixError):
        rca(np.zeros((2, 2)))


def test_export_matrix_rejects_negative():
    with pytest.raises(NegativeEntryError):
        ExportMatrix([[-1.0]], CountryRegistry(("AAA",)), ("p",))


def test_binarize_threshold_inclusive():
    assert binarize([[1.0]]).M[0, 0] == 1
    assert binarize([[0.999999]]).M[0, 0] == 0
    with pytest.raises(ValidationError):
        binarize([[1.0]], threshold=0)


@settings(max_examples=50, deadline=None)
@given(nonneg, st.floats(0.1, 3.0))
def test_binarize_matches_indicator(E, threshold):
    if E.sum() == 0:
        return
    R = rca(E)
    M = binarize(R, threshold).M
    oracle = [[1.0 if R[c, p] >= threshold else 0.0 for p in range(R.shape[1])] for c in range(R.shape[0])]
    np.testing.assert_array_equal(M, oracle)


@settings(max_examples=50, deadline=None)
@given(nonneg, st.floats(1e-3, 1e3))
def test_rca_matches_loops_and_is_scale_free(E, lam):
    if E.sum() == 0:
        return
    np.testing.assert_allclose(rca(E), rca_loops(E), rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(rca(lam * E), rca(E), rtol=1e-12, atol=1e-300)


def test_weighted_single_country():
    w = weighted_adjacency(VaxMatrix(2014, [[3.0, 0.5]], CountryRegistry(("AAA",)), SectorRegistry(("s1", "s2"))))
    np.testing.assert_array_equal(w.W, [[1.0, 1.0]])


def test_weighted_example():
    w = weighted_adjacency(vax_matrix([[2.0, 1.0], [2.0, 3.0]]))
    np.testing.assert_array_equal(w.W, [[0.5, 0.25], [0.5, 0.75]])
    assert w.countries == ("AAA", "BBB") and w.activities == ("s1", "s2")


def test_weighted_drops_zero_columns(caplog):
    caplog.set_level("INFO")
    w = weighted_adjacency(vax_matrix([[2.0, 0.0, 1.0], [2.0, 0.0, 3.0]], sectors=("s1", "s2", "s3")))
    assert w.activities == ("s1", "s3") and w.dropped == ("s2",)
    assert "s2" in caplog.text
    with pytest.raises(EmptyMatrixError):
        weighted_adjacency(vax_matrix(np.zeros((2, 2))))


@settings(max_examples=50, deadline=None)
@given(nonneg, st.floats(1e-3, 1e3))
def test_weighted_column_stochastic_and_scale_free(V, lam):
    if V.sum() == 0:
        return
    W, keep, _ = column_shares(V)
    np.testing.assert_allclose(W.sum(axis=0), 1.0, atol=1e-12)
    assert np.all((W >= 0) & (W <= 1))
    W2, _, _ = column_shares(lam * V)
    np.testing.assert_allclose(W2, W, rtol=1e-12, atol=1e-300)


def test_permutation_equivariance():
    rng = np.random.default_rng(0)
    E = rng.random((5, 4))
    perm = rng.permutation(5)
    np.testing.assert_allclose(rca(E[perm]), rca(E)[perm], rtol=1e-14)
    np.testing.assert_allclose(column_shares(E[perm])[0], column_shares(E)[0][perm], rtol=1e-14)
    np.testing.assert_array_equal(binarize(rca(E[perm])).M, binarize(rca(E)).M[perm])


def test_csv_round_trip(tmp_path):
    M = np.array([[0.1, 0.2], [0.3, 0.4]])
    path = tmp_path / "m.csv"
    write_adjacency(M, ("BBB", "AAA"), ("x", "y"), path)
    back, countries, acts = read_matrix(path)
    assert countries.codes == ("AAA", "BBB") and acts == ("x", "y")
    np.testing.assert_array_equal(back, M[::-1])
