import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rmtgrid.errors import DegenerateRowError, NumericError, RangeError, ValidationError, CaseFormatError
from rmtgrid.indicators import msr
from rmtgrid.rmt import (
    DataWindow,
    VoltageTrace,
    assemble_window,
    covariance_m,
    haar_unitary,
    jitter,
    jitter_trace,
    normalize_rows,
    read_trace,
    ring_matrix,
    singular_value_equivalent,
    synth_matrix,
    write_trace,
)


def trace_of(values, t0=0):
    values = np.asarray(values, dtype=float)
    return VoltageTrace(values, tuple(range(1, values.shape[0] + 1)), t0=t0)


def norm(x, end=None):
    x = np.asarray(x, dtype=float)
    return normalize_rows(DataWindow(x, x.shape[1] - 1 if end is None else end))


# --- trace and windows -------------------------------------------------------


def test_trace_rejects_bad_shapes():
    with pytest.raises(ValidationError):
        trace_of(np.ones((1, 5)))
    with pytest.raises(ValidationError):
        trace_of(np.ones((3, 1)))
    with pytest.raises(NumericError):
        trace_of(np.array([[1.0, np.nan], [1.0, 1.0]]))
    with pytest.raises(ValidationError):
        VoltageTrace(np.ones((2, 3)), (1, 1))


def test_first_full_window(gauss):
    tr = trace_of(gauss(118, 1600))
    w = assemble_window(tr, 239, 240)
    assert w.values.shape == (118, 240)
    np.testing.assert_array_equal(w.values, tr.values[:, :240])
    assert w.start_time == 0


def test_window_ratio():
    w = DataWindow(np.zeros((118, 240)), 239)
    assert round(w.c, 4) == 0.4917


def test_insufficient_history_names_bound(gauss):
    tr = trace_of(gauss(4, 1600))
    with pytest.raises(RangeError, match="insufficient history"):
        assemble_window(tr, 100, 240)
    with pytest.raises(RangeError):
        assemble_window(tr, 1600, 240)
    with pytest.raises(RangeError):
        assemble_window(tr, 10, 1)


def test_time_labels_follow_t0(gauss):
    tr = trace_of(gauss(3, 50), t0=1)
    w = assemble_window(tr, 10, 10)
    np.testing.assert_array_equal(w.values, tr.values[:, :10])


# --- jitter ------------------------------------------------------------------


def test_jitter_zero_is_identity(gauss):
    w = DataWindow(gauss(5, 20), 19)
    assert jitter(w, 0.0, 1) is w


def test_jitter_constant_row_std():
    w = DataWindow(np.ones((3, 240)), 239)
    out = jitter(w, 0.002, 11)
    sd = out.values.std(axis=1)
    assert np.all(np.abs(sd / 0.002 - 1) < 0.2)


def test_jitter_deterministic_and_negative(gauss):
    w = DataWindow(gauss(5, 20), 19)
    np.testing.assert_array_equal(jitter(w, 0.1, 3).values, jitter(w, 0.1, 3).values)
    with pytest.raises(ValidationError):
        jitter(w, -0.1, 3)


def test_jitter_shared_columns_match(gauss):
    tr = trace_of(gauss(4, 100))
    a = jitter(assemble_window(tr, 59, 40), 0.01, 5)
    b = jitter(assemble_window(tr, 69, 40), 0.01, 5)
    np.testing.assert_array_equal(a.values[:, 10:], b.values[:, :30])
    full = jitter_trace(tr, 0.01, 5)
    np.testing.assert_array_equal(full.values[:, 20:60], a.values)


# --- normalization -----------------------------------------------------------


def test_normalize_three_points():
    z = norm([[1.0, 2.0, 3.0], [2.0, 4.0, 9.0]])
    np.testing.assert_allclose(z.values[0], [-1.2247449, 0.0, 1.2247449], atol=1e-6)
    assert z.row_stds[0] == pytest.approx(0.8164966, abs=1e-6)


def test_normalize_constant_row_names_bus():
    w = DataWindow(np.array([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]), 2, bus_ids=(10, 52))
    with pytest.raises(DegenerateRowError) as info:
        normalize_rows(w)
    assert info.value.bus_id == 52


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (4, 12), elements=st.floats(-1e3, 1e3)))
def test_normalize_properties(x):
    x = x + np.arange(12) * 1e-3  # keep rows non-constant
    z = norm(x)
    np.testing.assert_allclose(z.values.mean(axis=1), 0.0, atol=1e-10)
    np.testing.assert_allclose(z.values.std(axis=1), 1.0, atol=1e-8)
    again = normalize_rows(z.as_window())
    np.testing.assert_allclose(again.values, z.values, atol=1e-10)


# --- covariance --------------------------------------------------------------


def test_covariance_trace_identity(gauss):
    spec = covariance_m(norm(gauss()))
    assert spec.eigenvalues.sum() == pytest.approx(240, abs=1e-4)
    assert np.all(np.diff(spec.eigenvalues) >= 0)
    assert spec.source == "covariance_M"


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 20), st.integers(0, 10_000))
def test_trace_identity_property(N, extra, seed):
    T = N + extra
    z = norm(np.random.default_rng(seed).standard_normal((N, T)))
    lam = covariance_m(z).eigenvalues
    assert lam.sum() == pytest.approx(T, rel=1e-6)
    assert lam.min() >= -1e-10


def test_covariance_scalar_case():
    z = norm(np.random.default_rng(0).standard_normal((1, 30)))
    assert covariance_m(z).eigenvalues[0] == pytest.approx(30)


def test_covariance_s_scale(gauss):
    z = norm(gauss(20, 50))
    m, s = covariance_m(z), covariance_m(z, "S")
    np.testing.assert_allclose(s.eigenvalues, m.eigenvalues * 20 / 50)
    with pytest.raises(ValidationError):
        covariance_m(z, "Q")


# --- Haar and ring -----------------------------------------------------------


@pytest.mark.parametrize("n", [1, 3, 50])
def test_haar_unitary(n):
    u = haar_unitary(n, 2)
    assert np.max(np.abs(u @ u.conj().T - np.eye(n))) < 1e-10
    if n == 1:
        assert abs(abs(u[0, 0]) - 1) < 1e-12


def test_haar_trace_moment():
    g = np.random.default_rng(5)
    m = np.mean([abs(np.trace(haar_unitary(8, g))) ** 2 for _ in range(2000)])
    assert abs(m - 1) < 0.1


def test_haar_phases_uniform():
    # plain QR gives a biased diagonal phase; the corrected sampler does not
    g = np.random.default_rng(9)
    d = np.array([haar_unitary(4, g)[0, 0] for _ in range(3000)])
    assert abs(np.mean(d)) < 0.05


def test_singular_value_equivalent_preserves(gauss):
    z = norm(gauss(30, 60))
    xu = singular_value_equivalent(z, 1)
    s0 = np.linalg.svd(z.values, compute_uv=False)
    s1 = np.linalg.svd(xu, compute_uv=False)
    np.testing.assert_allclose(s1, s0, rtol=1e-8)
    assert np.linalg.norm(xu) == pytest.approx(np.linalg.norm(z.values), abs=1e-8)


def test_singular_value_equivalent_isotropic():
    T = 16
    q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((T, T)))
    x = np.sqrt(T) * q[:4]
    from rmtgrid.rmt import NormalizedWindow

    w = NormalizedWindow(x, np.zeros(4), np.ones(4), T - 1)
    u = haar_unitary(4, 3)
    np.testing.assert_allclose(singular_value_equivalent(w, 3), np.sqrt(T) * u, atol=1e-10)


def test_ring_support_and_mean(gauss):
    z = norm(gauss(seed=3))
    lam = ring_matrix(z, 1, 4)
    r = np.abs(lam.eigenvalues)
    assert lam.N == 118
    assert np.mean((r >= 0.663) & (r <= 1.05)) >= 0.97
    assert abs(msr(lam) - 0.8645) < 0.01


def test_ring_two_factors(gauss):
    ws = [norm(gauss(seed=s)) for s in (1, 2)]
    r = np.abs(ring_matrix(ws, 2, 0).eigenvalues)
    assert np.mean(r >= 0.45) >= 0.95


def test_ring_argument_errors(gauss):
    z = norm(gauss(10, 20))
    with pytest.raises(ValidationError):
        ring_matrix([z], 2, 0)
    with pytest.raises(ValidationError):
        ring_matrix([z, norm(gauss(11, 20))], 2, 0)


def test_ring_row_permutation_invariance():
    diffs = []
    for s in range(50):
        x = np.random.default_rng(s).standard_normal((40, 80))
        perm = np.random.default_rng(1000 + s).permutation(40)
        a = msr(ring_matrix(norm(x), 1, 2 * s))
        b = msr(ring_matrix(norm(x[perm]), 1, 2 * s + 1))
        diffs.append(a - b)
    diffs = np.array(diffs)
    assert abs(diffs.mean()) < 3 * diffs.std(ddof=1) / np.sqrt(len(diffs))


# --- synthetic matrices ------------------------------------------------------


@pytest.mark.parametrize("dist", ["gaussian", "uniform_standardized", "bernoulli_standardized"])
def test_synth_moments(dist):
    x = synth_matrix(dist, 118, 240, 8).values
    assert abs(x.mean()) < 3 / np.sqrt(x.size)
    assert abs(x.var() - 1) < 0.05
    if dist == "bernoulli_standardized":
        assert set(np.unique(x)) == {-1.0, 1.0}


def test_synth_unknown():
    with pytest.raises(ValidationError):
        synth_matrix("cauchy", 2, 2, 0)


# --- trace file --------------------------------------------------------------


def test_trace_csv_roundtrip(tmp_path, gauss):
    tr = VoltageTrace(1 + 0.01 * gauss(3, 6), (5, 7, 9), t0=1)
    p = tmp_path / "t.csv"
    write_trace(tr, p, {"seed": 3})
    text = p.read_text()
    assert text.startswith("# seed: 3\nbus_id,t1,t2")
    back = read_trace(p)
    np.testing.assert_array_equal(back.values, tr.values)
    assert back.bus_ids == (5, 7, 9) and back.t0 == 1


def test_trace_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("bus_id,t0,t1\n1,1.0,1.0\n2,1.0\n")
    with pytest.raises(CaseFormatError, match="line 3"):
        read_trace(p)
    p.write_text("")
    with pytest.raises(CaseFormatError):
        read_trace(p)
