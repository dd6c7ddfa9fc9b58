import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from seaadmm.netsim import (ConfigError, GeometryConfig, LargeScaleParams, dump_realization,
                            generate_network, load_channels, local_scattering_correlation,
                            pathloss_db, place_network, sample_channels, shadow_covariance,
                            wrap_distance)

coord = st.floats(0.0, 749.999, allow_nan=False)


def test_ap_grid_default_layout():
    aps, _ = place_network(GeometryConfig(), seed=0)
    assert aps.shape == (9, 2)
    assert np.allclose(aps[0], (125.0, 125.0))
    assert np.allclose(np.unique(aps[:, 0]), [125.0, 375.0, 625.0])


def test_single_ap_at_centre():
    aps, _ = place_network(GeometryConfig(num_aps=1), seed=0)
    assert np.allclose(aps, [[375.0, 375.0]])


def test_non_square_ap_count_rejected():
    with pytest.raises(ConfigError):
        place_network(GeometryConfig(num_aps=8), seed=0)


def test_placement_deterministic_and_prefix_stable():
    _, a = place_network(GeometryConfig(num_ues=10), seed=3)
    _, b = place_network(GeometryConfig(num_ues=10), seed=3)
    _, c = place_network(GeometryConfig(num_ues=12), seed=3)
    assert np.array_equal(a, b)
    # per-UE sub-streams: adding UEs leaves earlier draws untouched
    assert np.array_equal(a, c[:10])


@pytest.mark.parametrize("a, b, expected", [
    ((0, 0), (740, 0), 10.0),
    ((5, 5), (5, 5), 0.0),
    ((0, 0), (375, 375), 375 * math.sqrt(2)),
])
def test_wrap_distance_examples(a, b, expected):
    assert wrap_distance(a, b, 750.0) == pytest.approx(expected, abs=1e-9)


@given(coord, coord, coord, coord)
def test_wrap_distance_bounds(ax, ay, bx, by):
    d = wrap_distance((ax, ay), (bx, by), 750.0)
    assert d <= math.hypot(ax - bx, ay - by) + 1e-9
    assert d <= 750.0 / math.sqrt(2) + 1e-9
    assert d == pytest.approx(wrap_distance((bx, by), (ax, ay), 750.0), abs=1e-9)


@pytest.mark.parametrize("d, expected", [(1.0, -30.5), (10.0, -67.2), (100.0, -103.9)])
def test_pathloss_values(d, expected):
    assert pathloss_db(d) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("d", [0.0, -3.0])
def test_pathloss_domain(d):
    with pytest.raises(ValueError):
        pathloss_db(d)


def test_shadow_covariance_values():
    C = shadow_covariance(np.array([[0.0, 0.0], [9.0, 0.0]]), LargeScaleParams())
    assert C[0, 0] == pytest.approx(16.0)
    assert C[0, 1] == pytest.approx(8.0)


@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_shadow_covariance_psd(K, seed):
    ues = np.random.default_rng(seed).uniform(0, 750, size=(K, 2))
    C = shadow_covariance(ues, LargeScaleParams())
    assert np.allclose(C, C.T)
    assert np.linalg.eigvalsh(C).min() >= -1e-9 * np.trace(C)


def test_shadow_field_statistics():
    # independent per AP, target covariance across UEs
    geo = GeometryConfig(num_aps=1, num_ues=3)
    params = LargeScaleParams()
    draws = []
    for s in range(3000):
        net = generate_network(geo, params, s)
        draws.append(net.shadow_db[:, 0])
    draws = np.array(draws)
    assert abs(draws.std() - 4.0) < 0.15


def test_shadow_independent_across_aps():
    geo = GeometryConfig(num_aps=4, num_ues=1)
    x = np.array([generate_network(geo, LargeScaleParams(), s).shadow_db[0] for s in range(3000)])
    corr = np.corrcoef(x.T)
    assert np.max(np.abs(corr - np.eye(4))) < 0.08


@given(st.integers(1, 8), st.floats(-np.pi, np.pi), st.floats(0.01, 0.6))
def test_local_scattering_correlation_properties(N, angle, spread):
    R = local_scattering_correlation(N, angle, spread)
    assert np.allclose(R, R.conj().T, atol=1e-12)
    assert np.real(np.trace(R)) == pytest.approx(N)
    assert np.linalg.eigvalsh(R).min() >= -1e-10 * N


def test_sample_channels_zero_and_identity():
    zero = sample_channels(np.zeros((1, 1, 3, 3), complex), seed=1)
    assert np.all(zero == 0)
    R = np.broadcast_to(np.eye(2, dtype=complex), (1, 10_000, 2, 2)).copy()
    h = sample_channels(R, seed=2)[0]
    emp = h.T @ h.conj() / h.shape[0]
    assert np.linalg.norm(emp - np.eye(2)) / np.linalg.norm(np.eye(2)) < 0.05


def test_sample_channels_exponential_power():
    beta = 3e-9
    R = np.full((1, 10_000, 1, 1), beta, dtype=complex)
    p = np.abs(sample_channels(R, seed=5)[0, :, 0]) ** 2
    assert stats.kstest(p, "expon", args=(0, beta)).pvalue > 0.01


def test_sample_channels_rejects_indefinite():
    R = np.array([[[[1.0, 0.0], [0.0, -1.0]]]], dtype=complex)
    with pytest.raises(np.linalg.LinAlgError):
        sample_channels(R, seed=0)


def test_realization_invariants():
    net = generate_network(GeometryConfig(num_ues=6), LargeScaleParams(), 11)
    K, L, N = net.channels.shape
    assert (K, L, N) == (6, 9, 4)
    tr = np.real(np.einsum("klii->kl", net.correlation))
    assert np.allclose(tr / N, net.gains, rtol=1e-9)
    for k in range(K):
        for l in range(L):
            R = net.correlation[k, l]
            assert np.allclose(R, R.conj().T)
            assert np.linalg.eigvalsh(R).min() >= -1e-10 * np.trace(R).real
    assert np.all(net.distances > 0) and np.all(net.noise_variances > 0)
    assert net.noise_variances[0] == pytest.approx(10 ** (-12.4))


def test_realization_bit_identical():
    a = generate_network(GeometryConfig(), LargeScaleParams(), 21)
    b = generate_network(GeometryConfig(), LargeScaleParams(), 21)
    assert np.array_equal(a.channels, b.channels)
    assert np.array_equal(a.shadow_db, b.shadow_db)


def test_dump_roundtrip(tmp_path):
    net = generate_network(GeometryConfig(num_ues=3), LargeScaleParams(), 4)
    jpath, bpath = dump_realization(net, tmp_path / "drop")
    assert jpath.exists()
    h = load_channels(bpath, 3, 9, 4)
    assert np.array_equal(h, net.channels)
    assert bpath.stat().st_size == 3 * 9 * 4 * 16
