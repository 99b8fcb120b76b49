import itertools

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mocapvar import (
    CameraModel,
    MPolicy,
    fuse,
    fused_covariance,
    measurement_gaussian,
    overall_std,
    sigma_ellipse_slice,
    single_view_covariance,
    single_view_information,
)
from mocapvar.covariance import plane_basis_for_normal, sym_eig2
from mocapvar.errors import (
    BehindCamera,
    DegenerateSection,
    LimitModeHasNoCovariance,
    SingularInformation,
)

from conftest import random_cameras

S = 1e-5 * 10 / 0.01  # propagated std of the orthogonal-pair fixture


def ring_pair(theta, radius=10.0, f=0.01, sigma=1e-5):
    a = CameraModel.looking_at("a", [radius, 0, 0], [0, 0, 0], f, sigma)
    b = CameraModel.looking_at("b", [radius * np.cos(theta), radius * np.sin(theta), 0], [0, 0, 0], f, sigma)
    return a, b


# --- single view -----------------------------------------------------------


def test_single_view_on_axis(identity_camera):
    M = 1e6
    cov = single_view_covariance(identity_camera, [0, 0, 5], MPolicy.finite(M))
    np.testing.assert_allclose(cov, np.diag([2.5e-5, 2.5e-5, M]), rtol=1e-14, atol=0)


def test_single_view_lateral_variance_grows_with_depth(identity_camera):
    cov = single_view_covariance(identity_camera, [0, 0, 10], MPolicy.finite(1e6))
    assert cov[0, 0] == pytest.approx(1e-4, rel=1e-14)
    assert cov[1, 1] == pytest.approx(1e-4, rel=1e-14)


def test_single_view_off_axis_matches_dense_products(identity_camera):
    M = 1e4
    cov = single_view_covariance(identity_camera, [3, 0, 4], MPolicy.finite(M))
    psi = [0.6, 0.0, 0.8]
    basis = [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]
    s2 = (1e-5 * 4 / 0.01) ** 2
    oracle = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            oracle[i, j] = M * psi[i] * psi[j] + s2 * sum(basis[i][k] * basis[j][k] for k in range(2))
    np.testing.assert_allclose(cov, oracle, rtol=1e-12, atol=1e-12 * M)


def test_single_view_errors(identity_camera):
    with pytest.raises(BehindCamera):
        single_view_covariance(identity_camera, [0, 0, -2], MPolicy.finite(1.0))
    with pytest.raises(LimitModeHasNoCovariance):
        single_view_covariance(identity_camera, [0, 0, 2], MPolicy.limit())
    with pytest.raises(BehindCamera):
        single_view_information(identity_camera, [0, 0, -2])


def test_information_on_axis_diagonal(identity_camera):
    M = 1e6
    info = single_view_information(identity_camera, [0, 0, 5], MPolicy.finite(M))
    np.testing.assert_allclose(info.matrix, np.diag([1 / 2.5e-5, 1 / 2.5e-5, 1 / M]), rtol=1e-14)
    assert info.rank == 3


def test_information_limit_mode(identity_camera):
    s = 1e-5 * 5 / 0.01
    info = single_view_information(identity_camera, [0, 0, 5], MPolicy.limit())
    np.testing.assert_allclose(info.matrix, np.diag([1, 1, 0]) / s**2, rtol=1e-14, atol=0)
    assert info.rank == 2


def test_information_has_no_component_along_ray():
    rng = np.random.default_rng(3)
    for cam in random_cameras(rng, [0, 0, 0], 20):
        info = single_view_information(cam, [0.2, -0.1, 0.3], MPolicy.limit()).matrix
        psi = measurement_gaussian(cam, [0.2, -0.1, 0.3]).psi
        assert np.linalg.norm(info @ psi) < 1e-12 * np.linalg.norm(info)


def _mp_inverse_of_model(g, dps=50):
    """Invert M psi psi^T + s^2 Psi Psi^T in 50-digit arithmetic from the exact float inputs."""
    with mpmath.workdps(dps):
        psi = mpmath.matrix([mpmath.mpf(float(v)) for v in g.psi])
        B = mpmath.matrix([[mpmath.mpf(float(v)) for v in row] for row in g.plane_basis])
        s = mpmath.mpf(float(g.propagated_std))
        M = mpmath.mpf(float(g.m_policy.M))
        cov = M * psi * psi.T + s**2 * B * B.T
        return np.array((cov**-1).tolist(), dtype=float)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1e4, 1e6, 1e8, 1e10, 1e14]))
def test_finite_information_matches_high_precision_inverse(seed, M):
    rng = np.random.default_rng(seed)
    cam = random_cameras(rng, [0, 0, 0], 1)[0]
    g = measurement_gaussian(cam, [0.1, 0.2, -0.1], MPolicy.finite(M))
    info = g.information().matrix
    oracle = _mp_inverse_of_model(g)
    assert np.linalg.norm(info - oracle) <= 1e-10 * np.linalg.norm(oracle)


def relative_residual(info, cov):
    """Normwise relative residual ||info cov - I|| / (||info|| ||cov||)."""
    r = info @ cov - np.eye(3)
    return np.linalg.norm(r) / (np.linalg.norm(info) * np.linalg.norm(cov))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_information_times_covariance_is_identity(seed):
    rng = np.random.default_rng(seed)
    cam = random_cameras(rng, [0, 0, 0], 1)[0]
    pol = MPolicy.finite(float(10 ** rng.integers(2, 11)))
    p = rng.normal(size=3) * 0.2
    info = single_view_information(cam, p, pol).matrix
    cov = single_view_covariance(cam, p, pol)
    assert relative_residual(info, cov) < 1e-8


def test_information_times_covariance_well_conditioned(identity_camera):
    """Absolute identity check where M / s^2 is moderate."""
    pol = MPolicy.finite(1.0)
    cam = CameraModel("w", [0, 0, 0], np.eye(3), 0.01, 1e-3)
    for p in ([0, 0, 5], [1, -2, 4], [3, 0, 4]):
        info = single_view_information(cam, p, pol).matrix
        cov = single_view_covariance(cam, p, pol)
        np.testing.assert_allclose(info @ cov, np.eye(3), atol=1e-8)


# --- fusion -----------------------------------------------------------------


def _inverse_3x3_adjugate(a):
    """Cofactor inverse, independent of LAPACK."""
    a = np.asarray(a, float)
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(a, i, 0), j, 1)
            cof[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    det = sum(a[0, j] * cof[0, j] for j in range(3))
    return cof.T / det


def test_fuse_orthogonal_pair(orthogonal_pair, limit):
    infos = [single_view_information(c, [0, 0, 0], limit) for c in orthogonal_pair]
    total = infos[0].matrix + infos[1].matrix
    np.testing.assert_allclose(total, np.diag([1, 1, 2]) / S**2, rtol=1e-12, atol=1e-9 / S**2)
    cov = fuse(infos)
    np.testing.assert_allclose(cov, _inverse_3x3_adjugate(total), rtol=1e-12, atol=1e-24)
    np.testing.assert_allclose(cov, S**2 * np.diag([1, 1, 0.5]), rtol=1e-12, atol=1e-20)
    assert overall_std(cov) == pytest.approx(S * np.sqrt(2.5), rel=1e-12)


def test_fuse_single_limit_camera_is_singular(identity_camera, limit):
    with pytest.raises(SingularInformation):
        fuse([single_view_information(identity_camera, [0, 0, 5], limit)])


def test_fuse_parallel_rays_is_singular(identity_camera, limit):
    twin = CameraModel("twin", [0, 0, 0], np.eye(3), 0.01, 1e-5)
    infos = [single_view_information(c, [0, 0, 5], limit) for c in (identity_camera, twin)]
    with pytest.raises(SingularInformation):
        fuse(infos)


def test_fuse_empty():
    with pytest.raises(ValueError):
        fuse([])


@pytest.mark.parametrize("cov, expected", [(np.eye(3), np.sqrt(3)), (np.diag([4.0, 0, 0]), 2.0)])
def test_overall_std(cov, expected):
    assert overall_std(cov) == pytest.approx(expected, rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_fuse_permutation_invariant(seed, m):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=3) * 0.2
    infos = [single_view_information(c, p) for c in random_cameras(rng, [0, 0, 0], m)]
    ref = fuse(infos)
    for perm in itertools.islice(itertools.permutations(range(m)), 0, 24):
        out = fuse([infos[i] for i in perm])
        assert np.max(np.abs(out - ref)) <= 1e-12 * np.max(np.abs(ref))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_adding_a_camera_never_increases_std(seed, m):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=3) * 0.2
    cams = random_cameras(rng, [0, 0, 0], m + 1)
    try:
        base = overall_std(fused_covariance(cams[:m], p))
    except SingularInformation:
        return
    assert overall_std(fused_covariance(cams, p)) <= base + 1e-12


def _accurate_std_gap(cams, p, M):
    """sqrt(tr Sigma_inf) - sqrt(tr Sigma_M) without cancellation.

    Uses Sigma_inf - Sigma_M = Sigma_inf (I_M - I_inf) Sigma_M.
    """
    lim = fused_covariance(cams, p, MPolicy.limit())
    fin = fused_covariance(cams, p, MPolicy.finite(M))
    delta = sum(
        single_view_information(c, p, MPolicy.finite(M)).matrix - single_view_information(c, p).matrix
        for c in cams
    )
    dtrace = np.trace(lim @ delta @ fin)
    return dtrace / (overall_std(lim) + overall_std(fin)), overall_std(lim) - overall_std(fin)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_finite_converges_monotonically_to_limit(seed):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=3) * 0.2
    cams = random_cameras(rng, [0, 0, 0], 2)
    try:
        ref = overall_std(fused_covariance(cams, p))
    except SingularInformation:
        return
    gaps = [_accurate_std_gap(cams, p, M) for M in (1e4, 1e6, 1e8, 1e10)]
    accurate = [g[0] for g in gaps]
    api = [g[1] for g in gaps]
    assert all(g >= 0 for g in accurate)
    assert all(a > b for a, b in zip(accurate, accurate[1:]))
    # The public API difference is non-increasing down to double-precision rounding.
    floor = 4 * np.finfo(float).eps * ref
    assert all(b <= a + floor for a, b in zip(api, api[1:]))
    assert abs(api[-1]) <= abs(api[0]) + floor


# --- sections ---------------------------------------------------------------


def test_section_axis_aligned():
    sec = sigma_ellipse_slice(np.diag([4.0, 1.0, 9.0]), [0, 0, 1], [0, 0, 0])
    assert sec.axis_lengths == pytest.approx((2.0, 1.0), rel=1e-15)
    np.testing.assert_allclose(np.abs(sec.axis_directions), [[1, 0, 0], [0, 1, 0]], atol=1e-15)


@pytest.mark.parametrize("normal", [[0, 0, 1], [1, 2, 3], [0.3, -0.9, 0.1]])
def test_section_isotropic_is_circle(normal):
    s = 0.02
    sec = sigma_ellipse_slice(s**2 * np.eye(3), np.asarray(normal) / np.linalg.norm(normal))
    assert sec.axis_lengths == pytest.approx((s, s), rel=1e-12)


def test_section_degenerate():
    with pytest.raises(DegenerateSection):
        sigma_ellipse_slice(np.diag([1.0, 0.0, 1.0]), [0, 0, 1])


def test_section_directions_orthonormal_in_plane():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    n = np.array([1.0, -2.0, 0.5]) / np.linalg.norm([1.0, -2.0, 0.5])
    sec = sigma_ellipse_slice(A @ A.T, n)
    D = sec.axis_directions
    np.testing.assert_allclose(D @ D.T, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(D @ n, 0, atol=1e-12)
    assert sec.major >= sec.minor > 0


def test_plane_basis_for_z_normal_is_xy():
    np.testing.assert_array_equal(plane_basis_for_normal([0, 0, 1]), [[1, 0, 0], [0, 1, 0]])


def test_sym_eig2_matches_lapack():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a = rng.normal(size=(2, 2))
        a = a + a.T
        vals, vecs = sym_eig2(a)
        ref = np.linalg.eigvalsh(a)[::-1]
        np.testing.assert_allclose(vals, ref, atol=1e-12 * np.abs(ref).max())
        np.testing.assert_allclose(a @ vecs, vecs * vals, atol=1e-12 * np.abs(ref).max())
        assert vecs[0, 0] > 0 or (vecs[0, 0] == 0 and vecs[1, 0] > 0)


def _pair_section_oracle(theta, s):
    """Independent path: in-plane information of two rays, numeric inverse, LAPACK eigh."""
    dirs = [np.array([1.0, 0.0]), np.array([np.cos(theta), np.sin(theta)])]
    info = sum(np.eye(2) - np.outer(d, d) for d in dirs) / s**2
    return np.sqrt(np.linalg.eigh(np.linalg.inv(info))[0][::-1])


@pytest.mark.parametrize("theta", [np.pi / 8, np.pi / 4, 3 * np.pi / 8, np.pi / 2, 2.0])
def test_pair_section_matches_closed_form(theta):
    s = S
    cov = fused_covariance(ring_pair(theta), [0, 0, 0])
    sec = sigma_ellipse_slice(cov, [0, 0, 1])
    analytic = (s / np.sqrt(1 - abs(np.cos(theta))), s / np.sqrt(1 + abs(np.cos(theta))))
    assert sec.axis_lengths == pytest.approx(analytic, rel=1e-9)
    np.testing.assert_allclose(sec.axis_lengths, _pair_section_oracle(theta, s), rtol=1e-9)


def test_pair_section_pi_over_4_spot_values():
    sec = sigma_ellipse_slice(fused_covariance(ring_pair(np.pi / 4), [0, 0, 0]), [0, 0, 1])
    # frozen from _pair_section_oracle(pi/4, 1)
    assert sec.major / S == pytest.approx(1.84776, abs=1e-5)
    assert sec.minor / S == pytest.approx(0.76537, abs=1e-5)


def test_pair_major_axis_decreases_with_angle():
    majors, ratios = [], []
    for theta in (np.pi / 8, np.pi / 4, 3 * np.pi / 8, np.pi / 2):
        sec = sigma_ellipse_slice(fused_covariance(ring_pair(theta), [0, 0, 0]), [0, 0, 1])
        majors.append(sec.major)
        ratios.append(sec.major / sec.minor)
    assert all(a > b for a, b in zip(majors, majors[1:]))
    assert ratios[-1] == pytest.approx(1.0, abs=1e-9)


def test_ellipse_polyline_lies_on_level_curve():
    cov = fused_covariance(ring_pair(np.pi / 4), [0, 0, 0])
    sec = sigma_ellipse_slice(cov, [0, 0, 1], [1.0, 2.0, 0.0])
    pts = sec.polyline(64) - sec.center
    B = sec.plane_basis
    inv2 = np.linalg.inv(B @ cov @ B.T)
    q = np.einsum("ni,ij,nj->n", pts @ B.T, inv2, pts @ B.T)
    np.testing.assert_allclose(q, 1.0, rtol=1e-9)


def test_noiseless_fusion_is_zero(orthogonal_pair):
    quiet = [CameraModel(c.id, c.center, c.rotation, c.focal, 0.0) for c in orthogonal_pair]
    np.testing.assert_array_equal(fused_covariance(quiet, [0, 0, 0]), np.zeros((3, 3)))
    with pytest.raises(SingularInformation):
        fused_covariance(quiet[:1], [0, 0, 0])


def test_default_finite_policy():
    pol = MPolicy.default_finite(20.0, 16)
    assert pol.M == pytest.approx((1e3 * 20 * 16) ** 2)
    with pytest.raises(ValueError):
        MPolicy.finite(-1.0)
    with pytest.raises(ValueError):
        MPolicy("bogus")
