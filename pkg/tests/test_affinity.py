import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixsense import (
    RngStream,
    construct_affinity,
    fixture_affinity_matrix,
    generate_raw_column,
    load_affinity,
    mutual_coherence,
    rescale_column,
    save_affinity,
)
from mixsense.errors import BadArity, CoherenceBudgetExhausted, ParseError, ZeroVector


def coherence_oracle(a, b):
    """Plain-Python recomputation of |a.b| / (||a|| ||b||)."""
    dot = math.fsum(x * y for x, y in zip(a, b))
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    return abs(dot) / (na * nb)


def test_self_coherence_is_one(rng):
    v = rng.normal(size=8)
    assert mutual_coherence(v, v) == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_coherence_is_zero():
    assert mutual_coherence([1.0, 0.0], [0.0, 2.0]) == 0.0


def test_zero_vector_rejected():
    with pytest.raises(ZeroVector):
        mutual_coherence([0.0, 0.0], [1.0, 1.0])


def test_reference_columns_q1_q2_coherence():
    A = fixture_affinity_matrix().entries
    expected = coherence_oracle(A[:, 0], A[:, 1])
    # frozen from the oracle on the 2-decimal reference entries
    assert expected == pytest.approx(0.18562, abs=1e-5)
    assert mutual_coherence(A[:, 0], A[:, 1]) == pytest.approx(expected, abs=1e-12)


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=30, deadline=None)
def test_coherence_matches_oracle(seed):
    g = np.random.default_rng(seed)
    a = g.normal(size=6)
    b = g.normal(size=6)
    assert mutual_coherence(a, b) == pytest.approx(coherence_oracle(a, b), abs=1e-12)


def test_raw_column_full_support(rng):
    col = generate_raw_column(6, 6, rng)
    assert np.all(col != 0)


def test_raw_column_minimal_support(rng):
    col = generate_raw_column(6, 1, rng)
    assert np.count_nonzero(col) == 1


def test_raw_column_bad_arity(rng):
    with pytest.raises(BadArity):
        generate_raw_column(4, 5, rng)


def test_raw_column_support_and_range_bulk():
    # 10^4 seeded draws: support size exactly 5, values in (0, 1]
    g = RngStream(421, 0).generator()
    for _ in range(10_000):
        col = generate_raw_column(10, 5, g)
        support = col[col != 0]
        assert support.size == 5
        assert np.all(support > 0.0) and np.all(support <= 1.0)


def test_rescale_worked_example():
    out = rescale_column(np.array([0.0, 0.5, 1.0, 0.0]), 0.3)
    assert out == pytest.approx([0.0, 0.35, 1.0, 0.0], abs=1e-15)


def test_rescale_zero_inhibition_collapses_to_normalization(rng):
    raw = np.array([0.2, 0.0, 0.8, 0.4])
    out = rescale_column(raw, 0.0)
    assert out == pytest.approx(raw / raw.max())


def test_rescale_peak_maps_to_one(rng):
    raw = np.abs(rng.normal(size=9)) + 1e-6
    out = rescale_column(raw, 0.3)
    assert out[np.argmax(raw)] == 1.0
    assert out.max() == 1.0


def test_rescale_zero_vector():
    with pytest.raises(ZeroVector):
        rescale_column(np.zeros(4), 0.3)


@given(
    scale=st.floats(min_value=1e-3, max_value=1e3),
    seed=st.integers(min_value=0, max_value=2**32),
    a_inh=st.floats(min_value=0.0, max_value=1.0),
)
@settings(max_examples=50, deadline=None)
def test_rescale_scale_invariance(scale, seed, a_inh):
    g = np.random.default_rng(seed)
    raw = np.zeros(8)
    raw[g.choice(8, size=4, replace=False)] = 1.0 - g.random(4)
    a = rescale_column(raw, a_inh)
    b = rescale_column(scale * raw, a_inh)
    assert a == pytest.approx(b, abs=1e-12)


def _check_invariants(matrix):
    e = matrix.entries
    assert np.all((e != 0).sum(axis=0) == matrix.r_act)
    assert np.all(e.max(axis=0) == 1.0)
    assert np.all(e >= -matrix.a_inh)
    norms = np.linalg.norm(e, axis=0)
    q = e.shape[1]
    for a in range(q):
        for b in range(a + 1, q):
            assert abs(e[:, a] @ e[:, b]) / (norms[a] * norms[b]) <= matrix.mu_thr + 1e-12


def test_construct_reference_parameters():
    matrix = construct_affinity(10, 20, 5, 0.3, 0.5, RngStream(3, 0).generator())
    assert matrix.entries.shape == (10, 20)
    _check_invariants(matrix)


def test_construct_single_column():
    matrix = construct_affinity(8, 1, 3, 0.3, 0.5, RngStream(1, 0).generator())
    assert matrix.entries.shape == (8, 1)
    assert np.count_nonzero(matrix.entries) == 3


def test_construct_mu_thr_one_never_stalls():
    # coherence can never exceed 1, so every first candidate is accepted and a
    # budget of one candidate per column suffices
    matrix = construct_affinity(6, 10, 3, 0.3, 1.0, RngStream(2, 0).generator(), max_attempts=1)
    assert matrix.entries.shape == (6, 10)


def test_construct_deterministic():
    a = construct_affinity(10, 20, 5, 0.3, 0.5, RngStream(11, 0).generator())
    b = construct_affinity(10, 20, 5, 0.3, 0.5, RngStream(11, 0).generator())
    assert np.array_equal(a.entries, b.entries)


def test_construct_budget_exhaustion_is_diagnosable():
    # full-support columns in a tiny space cannot reach coherence 0.01
    with pytest.raises(CoherenceBudgetExhausted):
        construct_affinity(4, 3, 4, 0.3, 0.01, RngStream(0, 0).generator(), max_attempts=500)


def test_reference_matrix_entries():
    A = fixture_affinity_matrix()
    assert A.entries.shape == (10, 20)
    assert A.entries[0, 6] == 1.0
    assert A.entries[6, 0] == -0.3
    assert A.entries[1, 0] == 0.0


def test_reference_matrix_column_bounds():
    e = fixture_affinity_matrix().entries
    assert np.all(e.max(axis=0) == 1.0)
    assert np.all(e.min(axis=0) >= -0.3)


def test_file_round_trip(tmp_path):
    matrix = construct_affinity(10, 20, 5, 0.3, 0.5, RngStream(4, 0).generator())
    path = tmp_path / "A.txt"
    save_affinity(path, matrix)
    loaded = load_affinity(path)
    assert np.array_equal(loaded.entries, matrix.entries)
    assert loaded.r_act == 5


def test_load_infers_mixed_support_as_unknown(tmp_path):
    path = tmp_path / "A.txt"
    save_affinity(path, fixture_affinity_matrix())
    loaded = load_affinity(path)
    # one reference column has 4 nonzeros, the rest 5
    assert loaded.r_act is None
    assert loaded.a_inh == pytest.approx(0.3)


def test_load_rejects_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 3\n1 2 3\n")
    with pytest.raises(ParseError):
        load_affinity(path)
    path.write_text("2 2\n1 2\n3 x\n")
    with pytest.raises(ParseError):
        load_affinity(path)
