import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from pseudobench.errors import ConvergenceError, NumericError, ParameterError
from pseudobench.spd import (AugConfig, augmented_covariance, ar_features, csp_fit, csp_transform,
                             covariances, delay_embed, riemannian_distance, riemannian_mean,
                             sample_covariance, spd_expm, spd_logm, spd_sqrtm, tangent_space,
                             untangent_space)

from conftest import planted_csp_windows, random_spd

# scipy.linalg.logm (the oracle) warns about its own error estimate
pytestmark = pytest.mark.filterwarnings("ignore:logm result may be inaccurate")


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def distance_oracle(a, b):
    isq = linalg.inv(linalg.sqrtm(a))
    return np.linalg.norm(linalg.logm(isq @ b @ isq), "fro")


# ------------------------------------------------------------ covariance

def test_white_noise_covariance_near_identity():
    x = np.random.default_rng(0).standard_normal((4, 200_000))
    assert np.abs(sample_covariance(x) - np.eye(4)).max() < 0.02


def test_covariance_matches_numpy():
    x = np.random.default_rng(1).standard_normal((5, 3, 40))
    got = covariances(x)
    for i in range(5):
        ref = np.cov(x[i])
        assert np.abs(got[i] - ref).max() < 1e-9 * np.trace(ref)


def test_identical_channels_made_positive_definite():
    row = np.random.default_rng(2).standard_normal(100)
    s = sample_covariance(np.vstack([row, row]))
    assert np.linalg.eigvalsh(s).min() > 0
    np.testing.assert_allclose(s, s.T, atol=0)


def test_constant_window_still_spd():
    s = sample_covariance(np.ones((3, 50)))
    assert np.linalg.eigvalsh(s).min() > 0


def test_nonfinite_rejected():
    x = np.zeros((2, 10))
    x[0, 3] = np.nan
    with pytest.raises(NumericError):
        sample_covariance(x)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.integers(2, 30))
def test_covariance_is_spd(seed, c, w):
    s = sample_covariance(np.random.default_rng(seed).standard_normal((c, w)))
    assert np.array_equal(s, s.T)
    assert np.linalg.eigvalsh(s).min() > 0


def test_augmented_order_one_is_sample_covariance():
    x = np.random.default_rng(3).standard_normal((3, 64))
    np.testing.assert_array_equal(augmented_covariance(x, AugConfig(1, 5)), sample_covariance(x))


def test_augmented_block_structure():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((3, 80))
    order, lag = 3, 4
    s = augmented_covariance(x, AugConfig(order, lag))
    assert s.shape == (9, 9)
    n_keep = 80 - (order - 1) * lag
    # block (k, k) is the covariance of the channels shifted by k*lag on the common span
    for k in range(order):
        ref = sample_covariance(x[:, k * lag:k * lag + n_keep])
        blk = s[3 * k:3 * k + 3, 3 * k:3 * k + 3]
        np.testing.assert_allclose(blk, ref, atol=1e-12 * np.trace(s) + 1e-12)


def test_delay_embed_rows():
    x = np.arange(20.0).reshape(2, 10)
    e = delay_embed(x, AugConfig(2, 3))
    np.testing.assert_array_equal(e, [x[0, :7], x[1, :7], x[0, 3:], x[1, 3:]])


def test_augmented_span_too_long():
    with pytest.raises(ParameterError):
        augmented_covariance(np.zeros((2, 10)), AugConfig(4, 4))


# ------------------------------------------------------- matrix functions

def test_logm_identity_is_zero():
    np.testing.assert_array_equal(spd_logm(np.eye(4)), np.zeros((4, 4)))


def test_logm_diagonal():
    np.testing.assert_allclose(spd_logm(np.diag([np.e, np.e ** 2])), np.diag([1.0, 2.0]), atol=1e-14)


def test_matrix_functions_match_scipy():
    rng = np.random.default_rng(5)
    for _ in range(20):
        s = random_spd(rng, 5, cond=100)
        assert rel(spd_logm(s), linalg.logm(s).real) < 1e-9
        assert rel(spd_sqrtm(s), linalg.sqrtm(s).real) < 1e-9
        sym = spd_logm(s)
        assert rel(spd_expm(sym), linalg.expm(sym)) < 1e-9


def test_expm_logm_roundtrip():
    rng = np.random.default_rng(6)
    worst = max(rel(spd_expm(spd_logm(s)), s) for s in (random_spd(rng, 6, 1e3) for _ in range(100)))
    assert worst < 1e-9


def test_logm_rejects_indefinite():
    with pytest.raises(NumericError):
        spd_logm(np.diag([1.0, -1.0]))


# ------------------------------------------------------------- distance

def test_distance_anchor():
    assert riemannian_distance(np.eye(2), np.diag([np.e ** 2, 1.0])) == pytest.approx(2.0, abs=1e-12)


def test_distance_self_is_zero():
    s = random_spd(np.random.default_rng(7), 4)
    assert riemannian_distance(s, s) < 1e-7


def test_distance_matches_logm_formula():
    rng = np.random.default_rng(8)
    for _ in range(20):
        a, b = random_spd(rng, 4, 50), random_spd(rng, 4, 50)
        assert riemannian_distance(a, b) == pytest.approx(distance_oracle(a, b), rel=1e-8)


def test_distance_symmetric_and_congruence_invariant():
    rng = np.random.default_rng(9)
    for _ in range(50):
        a, b = random_spd(rng, 5, 20), random_spd(rng, 5, 20)
        g = rng.standard_normal((5, 5)) + 3 * np.eye(5)
        d = riemannian_distance(a, b)
        assert abs(riemannian_distance(b, a) - d) < 1e-8
        assert abs(riemannian_distance(g @ a @ g.T, g @ b @ g.T) - d) < 1e-8


def test_distance_stack():
    rng = np.random.default_rng(10)
    a = random_spd(rng, 3)
    bs = np.stack([random_spd(rng, 3) for _ in range(4)])
    np.testing.assert_allclose(riemannian_distance(a, bs), [riemannian_distance(a, b) for b in bs], rtol=1e-12)


def test_distance_shape_mismatch():
    with pytest.raises(ParameterError):
        riemannian_distance(np.eye(2), np.eye(3))


# ------------------------------------------------------------------ mean

def test_mean_of_one():
    a = random_spd(np.random.default_rng(11), 4)
    assert rel(riemannian_mean(a[None]), a) < 1e-9
    assert rel(riemannian_mean(np.stack([a, a])), a) < 1e-9


def test_mean_commuting_diagonals():
    g = riemannian_mean(np.stack([np.eye(2), np.diag([np.e ** 2, np.e ** 2])]))
    assert np.abs(g - np.diag([np.e, np.e])).max() < 1e-9
    h = riemannian_mean(np.stack([np.diag([1.0, 4.0]), np.diag([9.0, 1.0])]))
    assert np.abs(h - np.diag([3.0, 2.0])).max() < 1e-9


def test_mean_two_matrices_geodesic_midpoint():
    rng = np.random.default_rng(12)
    a, b = random_spd(rng, 4, 30), random_spd(rng, 4, 30)
    # closed form A # B = A^1/2 (A^-1/2 B A^-1/2)^1/2 A^1/2
    ah = linalg.sqrtm(a).real
    aih = linalg.inv(ah)
    mid = ah @ linalg.sqrtm(aih @ b @ aih).real @ ah
    assert rel(riemannian_mean(np.stack([a, b])), mid) < 1e-8


def test_mean_permutation_and_congruence():
    rng = np.random.default_rng(13)
    mats = np.stack([random_spd(rng, 4, 20) for _ in range(7)])
    g = riemannian_mean(mats)
    assert rel(riemannian_mean(mats[rng.permutation(7)]), g) < 1e-8
    w = rng.standard_normal((4, 4)) + 2 * np.eye(4)
    assert rel(riemannian_mean(w @ mats @ w.T), w @ g @ w.T) < 1e-6


def test_mean_convergence_error_carries_residual():
    rng = np.random.default_rng(14)
    mats = np.stack([random_spd(rng, 4, 1e4) for _ in range(5)])
    with pytest.raises(ConvergenceError) as info:
        riemannian_mean(mats, max_iter=1)
    assert info.value.residual > 0


# --------------------------------------------------------------- tangent

def test_tangent_vectors_center_at_mean():
    rng = np.random.default_rng(15)
    mats = np.stack([random_spd(rng, 4, 10) for _ in range(10)])
    v = tangent_space(mats, riemannian_mean(mats))
    assert v.shape == (10, 10)
    assert np.abs(v.mean(axis=0)).max() < 1e-6


def test_tangent_norm_is_distance():
    rng = np.random.default_rng(16)
    for _ in range(20):
        ref, s = random_spd(rng, 4, 20), random_spd(rng, 4, 20)
        assert np.linalg.norm(tangent_space(s, ref)) == pytest.approx(riemannian_distance(ref, s), rel=1e-9)


def test_untangent_inverts_tangent():
    rng = np.random.default_rng(17)
    ref, s = random_spd(rng, 3), random_spd(rng, 3)
    assert rel(untangent_space(tangent_space(s, ref), ref), s) < 1e-9


# ------------------------------------------------------------------- CSP

def test_csp_recovers_planted_direction():
    for seed in range(10):
        windows, labels, u = planted_csp_windows(np.random.default_rng(seed))
        f = csp_fit(windows, labels, n_filters=4)
        p = f.patterns[:, 0]
        assert abs(p @ u) / np.linalg.norm(p) >= 0.95


def test_csp_filters_composite_orthogonal():
    windows, labels, _ = planted_csp_windows(np.random.default_rng(20))
    f = csp_fit(windows, labels, n_filters=4)
    assert f.filters.shape == (4, 8)
    covs = covariances(windows)
    comp = covs[labels == "a"].mean(0) + covs[labels == "b"].mean(0)
    gram = f.filters @ comp @ f.filters.T
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() < 1e-8 * np.abs(np.diag(gram)).max()
    assert np.all(np.diff(f.eigenvalues[:2]) <= 0) and np.all(np.diff(f.eigenvalues[2:]) <= 0)


def test_csp_multiclass_shape():
    rng = np.random.default_rng(21)
    x = rng.standard_normal((30, 6, 100))
    labels = np.repeat(["a", "b", "c"], 10)
    f = csp_fit(x, labels, n_filters=2)
    assert f.filters.shape == (6, 6) and f.class_names == ("a", "b", "c")


def test_csp_rejects_bad_requests():
    x = np.random.default_rng(22).standard_normal((10, 4, 50))
    with pytest.raises(ParameterError):
        csp_fit(x, ["a"] * 10)
    with pytest.raises(ParameterError):
        csp_fit(x, ["a", "b"] * 5, n_filters=3)
    with pytest.raises(ParameterError):
        csp_fit(x, ["a", "b"] * 5, n_filters=6)


def test_log_variance_features():
    rng = np.random.default_rng(23)
    w = np.eye(3)[:2]
    x = rng.standard_normal((1, 3, 100_000))
    assert np.abs(csp_transform(w, x)).max() < 0.02
    np.testing.assert_allclose(csp_transform(w, 2 * x) - csp_transform(w, x), np.log(4.0), atol=1e-9)


def test_log_variance_floor():
    assert np.all(np.isfinite(csp_transform(np.eye(2), np.zeros((1, 2, 10)))))


# -------------------------------------------------------------------- AR

def _ar1(rng, a, n, c=1):
    e = rng.standard_normal((c, n))
    x = np.zeros((c, n))
    for t in range(1, n):
        x[:, t] = a * x[:, t - 1] + e[:, t]
    return x


def test_ar1_coefficient():
    coef = ar_features(_ar1(np.random.default_rng(24), 0.9, 20_000), 1)
    assert coef[0] == pytest.approx(0.9, abs=0.05)


def test_white_noise_ar_near_zero():
    coef = ar_features(np.random.default_rng(25).standard_normal((2, 20_000)), 4)
    assert np.abs(coef).max() < 0.05


def test_ar_matches_yule_walker_oracle():
    x = np.random.default_rng(26).standard_normal((3, 200))
    order = 3
    got = ar_features(x, order).reshape(3, order)
    for c in range(3):
        y = x[c] - x[c].mean()
        r = np.array([y[: y.size - k] @ y[k:] for k in range(order + 1)]) / y.size
        r0 = r.copy()
        r0[0] *= 1 + 1e-10
        ref = linalg.solve_toeplitz(r0[:order], r[1:])
        np.testing.assert_allclose(got[c], ref, rtol=1e-9)


def test_ar_shapes_and_errors():
    x = np.random.default_rng(27).standard_normal((5, 4, 60))
    assert ar_features(x, 3).shape == (5, 12)
    with pytest.raises(NumericError):
        ar_features(np.ones((2, 50)), 2)
    with pytest.raises(ParameterError):
        ar_features(x, 59)
