"""Per-camera reconstruction covariance, minimum-variance fusion and 1-sigma sections.

A single camera constrains a target only in the plane parallel to its image
plane. Its covariance is modelled as::

    Sigma_j = M * psi psi^T + s^2 * Psi Psi^T

with ``psi`` the unit viewing direction, ``Psi`` the (camera-fixed) image
plane basis and ``s = sigma * depth / f`` the lateral error propagated to the
target depth. ``M`` is a very large variance along the ray.

For a camera whose optical axis is ``n`` and for ``c = psi . n > 0`` the
inverse has the closed form::

    Sigma_j^-1 = (1/s^2) Q^T Q + 1/(M c^2) n n^T,    Q = Psi^T (I - psi n^T / c)

``Q`` is the oblique projection along the ray onto the image-plane
coordinates, so ``Q psi = 0``. Letting ``M -> inf`` gives the rank-2
*limit* information ``(1/s^2) Q^T Q``, which reduces to ``(1/s^2) Psi Psi^T``
on the optical axis. Both are evaluated without forming ``Sigma_j``, which
cannot be represented in double precision once ``M / s^2`` exceeds ~1e16.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    BehindCamera,
    DegenerateSection,
    InputError,
    LimitModeHasNoCovariance,
    SingularCovariance,
    SingularInformation,
)
from .geometry import CameraModel, as_point, depth, image_plane_basis, viewing_direction

FUSE_RCOND = 1e-12
SECTION_MIN_VARIANCE = 1e-18
DEFAULT_M_SAFETY = 1e3


@dataclass(frozen=True)
class MPolicy:
    """How the variance along a camera ray is treated.

    ``mode`` is ``"finite"`` (use the variance ``M`` in m^2) or ``"limit"``
    (the exact ``M -> inf`` information form).
    """

    mode: str = "limit"
    M: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("finite", "limit"):
            raise InputError(f"unknown M policy mode {self.mode!r}")
        if self.mode == "finite":
            if self.M is None or not np.isfinite(self.M) or self.M <= 0:
                raise InputError("finite M policy requires M > 0")
            object.__setattr__(self, "M", float(self.M))
        elif self.M is not None:
            raise InputError("limit M policy takes no M value")

    @classmethod
    def limit(cls) -> "MPolicy":
        return cls("limit")

    @classmethod
    def finite(cls, M: float) -> "MPolicy":
        return cls("finite", M)

    @classmethod
    def default_finite(cls, room_side: float, n_cameras: int) -> "MPolicy":
        """``M = (1e3 * L * m)^2``: the squared room-side-times-camera-count length, padded."""
        if room_side <= 0 or n_cameras < 1:
            raise InputError("room_side must be > 0 and n_cameras >= 1")
        return cls("finite", (DEFAULT_M_SAFETY * room_side * n_cameras) ** 2)

    @property
    def is_limit(self) -> bool:
        return self.mode == "limit"


@dataclass(frozen=True)
class Information3:
    """Symmetric PSD information matrix (m^-2) with its structural rank.

    ``source`` identifies the contributing camera and fixes the summation
    order in :func:`fuse`.
    """

    matrix: np.ndarray
    rank: int
    source: Hashable = None

    def __add__(self, other: "Information3") -> "Information3":
        m = self.matrix + other.matrix
        return Information3(m, numerical_rank(m), None)


@dataclass(frozen=True)
class MeasurementGaussian:
    """What one camera says about one target."""

    psi: np.ndarray
    plane_basis: np.ndarray
    propagated_std: float
    m_policy: MPolicy = field(default_factory=MPolicy.limit)
    source: Hashable = None

    @property
    def optical_axis(self) -> np.ndarray:
        return np.cross(self.plane_basis[:, 0], self.plane_basis[:, 1])

    def covariance(self) -> np.ndarray:
        if self.m_policy.is_limit:
            raise LimitModeHasNoCovariance("limit mode has no finite covariance")
        psi, B, s = self.psi, self.plane_basis, self.propagated_std
        return _symmetrize(self.m_policy.M * np.outer(psi, psi) + s**2 * (B @ B.T))

    def information(self) -> Information3:
        s = self.propagated_std
        if s <= 0:
            raise SingularCovariance("zero propagated noise: information is unbounded")
        n = self.optical_axis
        c = float(self.psi @ n)
        if c <= 0:
            raise BehindCamera("viewing direction is not in front of the image plane")
        Q = self.plane_basis.T - np.outer(self.plane_basis.T @ self.psi, n) / c
        info = (Q.T @ Q) / s**2
        rank = 2
        if not self.m_policy.is_limit:
            info = info + np.outer(n, n) / (self.m_policy.M * c**2)
            rank = 3
        return Information3(_symmetrize(info), rank, self.source)


def measurement_gaussian(camera: CameraModel, point, policy: MPolicy = None) -> MeasurementGaussian:
    point = as_point(point)
    d = depth(camera, point)
    if d <= 0:
        raise BehindCamera(f"point has depth {d} <= 0 for camera {camera.id!r}")
    s = camera.noise_std(point) * d / camera.focal
    return MeasurementGaussian(
        viewing_direction(camera, point),
        image_plane_basis(camera),
        s,
        policy if policy is not None else MPolicy.limit(),
        camera.id,
    )


def single_view_covariance(camera: CameraModel, point, policy: MPolicy) -> np.ndarray:
    return measurement_gaussian(camera, point, policy).covariance()


def single_view_information(camera: CameraModel, point, policy: MPolicy = None) -> Information3:
    return measurement_gaussian(camera, point, policy).information()


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def numerical_rank(a: np.ndarray, rtol: float = 1e-12) -> int:
    w = np.linalg.eigvalsh(_symmetrize(a))
    tr = float(np.trace(a))
    if tr <= 0:
        return 0
    return int(np.sum(w > rtol * tr))


def _sort_key(info: Information3):
    return (info.source is None, str(info.source))


def fuse(infos: Iterable[Information3]) -> np.ndarray:
    """Minimum-variance fused covariance: inverse of the summed information.

    Inputs are summed in order of their ``source`` so the result does not
    depend on caller ordering.
    """
    infos = sorted(infos, key=_sort_key)
    if not infos:
        raise InputError("fuse needs at least one information matrix")
    total = np.zeros((3, 3))
    for info in infos:
        total = total + info.matrix
    total = _symmetrize(total)
    w = np.linalg.eigvalsh(total)
    if w[-1] <= 0 or w[0] < FUSE_RCOND * w[-1]:
        raise SingularInformation(
            f"summed information is rank deficient (eigenvalues {w.tolist()})"
        )
    return _symmetrize(np.linalg.inv(total))


def overall_std(cov) -> float:
    """Scalar reconstruction quality: sqrt(trace(cov)), in meters."""
    return float(np.sqrt(max(float(np.trace(np.asarray(cov))), 0.0)))


def fused_covariance(cameras: Sequence[CameraModel], point, policy: MPolicy = None) -> np.ndarray:
    """Fuse the given cameras' information about ``point``.

    When every camera is noiseless the reconstruction is exact and a zero
    matrix is returned, provided the geometry itself is not degenerate.
    """
    point = as_point(point)
    noise = [c.noise_std(point) for c in cameras]
    if cameras and all(n == 0 for n in noise):
        unit = [
            measurement_gaussian(_with_unit_noise(c), point, policy).information()
            for c in cameras
        ]
        fuse(unit)
        return np.zeros((3, 3))
    if any(n == 0 for n in noise):
        raise InputError("cannot fuse a mix of noiseless and noisy cameras")
    return fuse(single_view_information(c, point, policy) for c in cameras)


def _with_unit_noise(camera: CameraModel) -> CameraModel:
    return CameraModel(camera.id, camera.center, camera.rotation, camera.focal, 1.0)


def limit_information_batch(cameras: Sequence[CameraModel], points: np.ndarray):
    """Limit-mode information of every camera about every point.

    Returns ``(info, visible)`` with shapes ``(P, m, 3, 3)`` and ``(P, m)``.
    Cameras with non-positive depth, or that coincide with a point, get a
    zero matrix and ``visible = False``. Noise overrides are not applied.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    centers = np.array([c.center for c in cameras])
    rots = np.array([c.rotation for c in cameras])
    focal = np.array([c.focal for c in cameras])
    sigma = np.array([c.pixel_noise_std for c in cameras])
    axis = rots[:, :, 2]
    basis = rots[:, :, :2]

    rel = points[:, None, :] - centers[None, :, :]
    dist = np.linalg.norm(rel, axis=-1)
    d = np.einsum("pmk,mk->pm", rel, axis)
    visible = (d > 0) & (dist > 1e-12)
    safe_dist = np.where(visible, dist, 1.0)
    psi = rel / safe_dist[..., None]
    c = np.where(visible, d / safe_dist, 1.0)
    s = sigma[None, :] * d / focal[None, :]
    g = np.einsum("mka,pmk->pma", basis, psi)
    Q = np.swapaxes(basis, -1, -2)[None] - (g / c[..., None])[..., :, None] * axis[None, :, None, :]
    with np.errstate(divide="ignore"):
        w = np.where(visible & (s > 0), 1.0 / np.where(s > 0, s, 1.0) ** 2, 0.0)
    info = np.einsum("pmak,pmal->pmkl", Q, Q) * w[..., None, None]
    return info, visible


def fuse_batch(info: np.ndarray):
    """Fuse along axis -3 of ``(..., m, 3, 3)``; returns ``(cov, ok)``.

    Entries whose summed information is rank deficient get NaN covariance.
    """
    total = _symmetrize(info.sum(axis=-3))
    w = np.linalg.eigvalsh(total)
    ok = (w[..., -1] > 0) & (w[..., 0] >= FUSE_RCOND * w[..., -1])
    safe = np.where(ok[..., None, None], total, np.eye(3))
    cov = _symmetrize(np.linalg.inv(safe))
    cov[~ok] = np.nan
    return cov, ok


# --- 1-sigma sections -------------------------------------------------------


@dataclass(frozen=True)
class EllipseSection:
    """1-sigma ellipse of a covariance within a plane.

    ``axis_directions`` rows are the major and minor axis unit vectors.
    ``angle`` is the major-axis orientation in radians, in ``[0, pi)``,
    measured from ``plane_basis[0]`` towards ``plane_basis[1]``.
    """

    center: np.ndarray
    axis_lengths: tuple
    axis_directions: np.ndarray
    plane_basis: np.ndarray
    angle: float

    @property
    def major(self) -> float:
        return self.axis_lengths[0]

    @property
    def minor(self) -> float:
        return self.axis_lengths[1]

    def polyline(self, n: int = 64) -> np.ndarray:
        """``n`` points of the closed 1-sigma curve in world coordinates."""
        t = 2 * np.pi * np.arange(n) / n
        a, b = self.axis_lengths
        return (
            self.center
            + np.outer(a * np.cos(t), self.axis_directions[0])
            + np.outer(b * np.sin(t), self.axis_directions[1])
        )


def plane_basis_for_normal(normal) -> np.ndarray:
    """Deterministic 2x3 orthonormal in-plane basis (rows) for a unit normal.

    Starts from the world axis least aligned with the normal (lowest index on
    ties), so the plane z = const gets the basis (x, y).
    """
    n = as_point(normal)
    n = n / np.linalg.norm(n)
    k = int(np.argmin(np.abs(n)))
    a = np.zeros(3)
    a[k] = 1.0
    e1 = a - (a @ n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return np.vstack([e1, e2])


def _orient(v: np.ndarray) -> np.ndarray:
    for x in v:
        if abs(x) > 1e-15:
            return v if x > 0 else -v
    return v


def sym_eig2(a: np.ndarray):
    """Closed-form eigen-decomposition of a symmetric 2x2 matrix.

    Eigenvalues descend. Each eigenvector has its first nonzero component
    positive; for a (near) multiple eigenvalue the basis vectors are returned.
    """
    p, q, r = float(a[0, 0]), float(0.5 * (a[0, 1] + a[1, 0])), float(a[1, 1])
    mid = 0.5 * (p + r)
    rad = float(np.hypot(0.5 * (p - r), q))
    l1, l2 = mid + rad, mid - rad
    if rad <= 1e-14 * max(abs(mid), 1e-300):
        return np.array([mid, mid]), np.eye(2)
    # Use the better conditioned of the two candidate eigenvectors.
    if p >= r:
        v = np.array([l1 - r, q])
    else:
        v = np.array([q, l1 - p])
    v = _orient(v / np.linalg.norm(v))
    w = _orient(np.array([-v[1], v[0]]))
    return np.array([l1, l2]), np.column_stack([v, w])


def sigma_ellipse_slice(cov, plane_normal, center=(0.0, 0.0, 0.0)) -> EllipseSection:
    """Project ``cov`` onto the plane through ``center`` with normal ``plane_normal``."""
    cov = np.asarray(cov, dtype=float)
    B = plane_basis_for_normal(plane_normal)
    section = _symmetrize(B @ cov @ B.T)
    vals, vecs = sym_eig2(section)
    if vals[1] < SECTION_MIN_VARIANCE:
        raise DegenerateSection(f"in-plane variance {vals[1]} is (near) zero")
    dirs = (B.T @ vecs).T
    angle = float(np.arctan2(vecs[1, 0], vecs[0, 0]) % np.pi)
    return EllipseSection(
        as_point(center),
        (float(np.sqrt(vals[0])), float(np.sqrt(vals[1]))),
        dirs,
        B,
        angle,
    )
