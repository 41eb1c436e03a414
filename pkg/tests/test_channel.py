import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixsense import (
    AffinityMatrix,
    MixtureMatrix,
    RngStream,
    SystemConfig,
    activation_fn,
    one_hot_signal,
    propagate,
    receive,
    release,
    sample_poisson,
    simulate_snapshot,
)
from mixsense.errors import DimensionMismatch


def poisson_tail_above(mean, threshold):
    """P(Pois(mean) > threshold) by direct summation."""
    terms = [math.exp(-mean) * mean**k / math.factorial(k) for k in range(int(threshold) + 1)]
    return 1.0 - math.fsum(terms)


def _mix(entries):
    entries = np.asarray(entries, dtype=float)
    return MixtureMatrix(entries=entries, n_mix=int((entries[:, 0] != 0).sum()))


def test_release_worked_example():
    matrix = _mix([[0.5, 0.0], [0.5, 0.0], [0.0, 0.5], [0.0, 0.5]])
    u = release(one_hot_signal(0, 2), matrix, 5000)
    assert u == pytest.approx([2500.0, 2500.0, 0.0, 0.0])


def test_release_null_signal():
    matrix = _mix([[0.5, 0.0], [0.5, 0.0], [0.0, 0.5], [0.0, 0.5]])
    assert release(np.zeros(2), matrix, 5000) == pytest.approx([0.0] * 4)


def test_release_conserves_total(rng):
    from mixsense import build_mixture_matrix

    matrix = build_mixture_matrix(12, 6, 3, rng)
    for m in range(6):
        u = release(one_hot_signal(m, 6), matrix, 7000)
        assert u.sum() == pytest.approx(7000.0, rel=1e-12)


def test_release_scales_linearly_in_count():
    matrix = _mix([[0.5, 0.0], [0.5, 0.0], [0.0, 0.5], [0.0, 0.5]])
    s = one_hot_signal(1, 2)
    assert release(s, matrix, 8000) == pytest.approx(2.0 * release(s, matrix, 4000))


def test_release_dimension_mismatch():
    matrix = _mix([[1.0], [0.0]])
    with pytest.raises(DimensionMismatch):
        release(np.ones(3), matrix, 100)


def test_poisson_zero_mean_exact(rng):
    assert all(sample_poisson(0.0, rng) == 0 for _ in range(200))


def test_poisson_rejects_bad_mean(rng):
    with pytest.raises(ValueError):
        sample_poisson(-1.0, rng)
    with pytest.raises(ValueError):
        sample_poisson(float("nan"), rng)


def test_poisson_moments_mean_50():
    g = RngStream(2024, 0).generator()
    draws = np.array([sample_poisson(50.0, g) for _ in range(100_000)])
    assert abs(draws.mean() - 50.0) <= 3.0 * math.sqrt(50.0 / draws.size)
    assert 0.97 <= draws.var(ddof=1) / draws.mean() <= 1.03


def test_propagate_worked_example():
    u = np.array([2500.0, 2500.0] + [0.0] * 18)
    v = np.full(20, 0.01)
    g = RngStream(7, 0).generator()
    samples = np.array([propagate(u, v, g) for _ in range(10_000)])
    assert np.all(samples[:, 2:] == 0.0)
    sigma = math.sqrt(25.0 / samples.shape[0])
    assert abs(samples[:, 0].mean() - 25.0) <= 3 * sigma
    assert abs(samples[:, 1].mean() - 25.0) <= 3 * sigma


def test_propagate_dead_channel(rng):
    x = propagate(np.array([100.0, 100.0]), np.zeros(2), rng)
    assert np.all(x == 0.0)


def test_propagate_mean_matches_gain_times_release():
    u = np.array([400.0, 900.0, 100.0])
    v = np.array([0.05, 0.01, 0.5])
    g = RngStream(8, 0).generator()
    samples = np.array([propagate(u, v, g) for _ in range(10_000)])
    means = v * u
    for q in range(3):
        assert abs(samples[:, q].mean() - means[q]) <= 3 * math.sqrt(means[q] / samples.shape[0])


def test_propagate_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        propagate(np.ones(3), np.ones(2), rng)


def test_activation_examples():
    assert activation_fn(7.0, 5.0) == 2.0
    assert activation_fn(3.0, 5.0) == 0.0
    assert activation_fn(5.0, 5.0) == 0.0


@given(
    z=st.floats(min_value=-1e6, max_value=1e6),
    dz=st.floats(min_value=0.0, max_value=1e6),
    thr=st.floats(min_value=0.0, max_value=1e6),
)
@settings(max_examples=100, deadline=None)
def test_activation_properties(z, dz, thr):
    f0 = float(activation_fn(z, thr))
    f1 = float(activation_fn(z + dz, thr))
    slack = 1e-9 * max(1.0, abs(z), abs(z) + dz)  # float representation noise
    assert f0 >= 0.0
    assert f1 >= f0                   # nondecreasing
    assert f1 - f0 <= dz + slack      # 1-Lipschitz
    if z >= thr:
        assert f0 == pytest.approx(z - thr, rel=1e-12, abs=1e-12)


def test_receive_silent_channel(reference_affinity):
    g = RngStream(5, 0).generator()
    obs = receive(np.zeros(20), reference_affinity, 0.0, 5.0, g)
    assert np.all(obs.y == 0.0)
    assert obs.activated.size == 0
    assert obs.non_activated.size == 10


def test_receive_noise_only_activation_rate(reference_affinity):
    # with zero signal each receptor activates iff its Pois(10) noise exceeds 5
    expected = poisson_tail_above(10.0, 5)
    assert expected == pytest.approx(0.932914, abs=1e-6)
    g = RngStream(6, 0).generator()
    hits = total = 0
    for _ in range(10_000):
        obs = receive(np.zeros(20), reference_affinity, 10.0, 5.0, g)
        hits += obs.activated.size
        total += 10
    rate = hits / total
    sigma = math.sqrt(expected * (1 - expected) / total)
    assert abs(rate - expected) <= 3 * sigma


def test_receive_inhibition_clamped():
    entries = np.array([[-1.0], [1.0]])
    aff = AffinityMatrix(entries=entries, r_act=1, a_inh=1.0, mu_thr=1.0)
    g = RngStream(9, 0).generator()
    for _ in range(200):
        obs = receive(np.array([50.0]), aff, 1.0, 0.0, g)
        assert np.all(obs.y >= 0.0)


def test_receive_partition(reference_affinity):
    g = RngStream(10, 0).generator()
    obs = receive(np.full(20, 3.0), reference_affinity, 10.0, 5.0, g)
    together = np.sort(np.concatenate([obs.activated, obs.non_activated]))
    assert np.array_equal(together, np.arange(10))
    assert np.all(obs.y[obs.activated] > 0.0)
    assert np.all(obs.y[obs.non_activated] == 0.0)


def test_snapshot_reproducible(default_config, reference_affinity, alphabet16):
    a = simulate_snapshot(default_config, reference_affinity, alphabet16, 3, RngStream(1, 5).generator())
    b = simulate_snapshot(default_config, reference_affinity, alphabet16, 3, RngStream(1, 5).generator())
    assert np.array_equal(a.y, b.y)
    assert a.ground_truth_mixture == 3


def test_snapshot_seeds_differ(default_config, reference_affinity, alphabet16):
    a = simulate_snapshot(default_config, reference_affinity, alphabet16, 3, RngStream(1, 5).generator())
    b = simulate_snapshot(default_config, reference_affinity, alphabet16, 3, RngStream(1, 6).generator())
    assert not np.array_equal(a.y, b.y)


def test_snapshot_zero_release_is_noise_only(reference_affinity, alphabet16):
    cfg = SystemConfig(molecules_per_release=0)
    obs = simulate_snapshot(cfg, reference_affinity, alphabet16, 0, RngStream(2, 0).generator())
    assert np.all(obs.counts.released == 0.0)
    assert np.all(obs.counts.received == 0.0)
    # noise alone still activates receptors almost surely at these parameters
    assert obs.activated.size > 0
