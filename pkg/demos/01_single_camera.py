"""One camera: what it measures and what it cannot.

A pinhole camera pins a target down in the two directions parallel to its
image plane. Along the viewing ray it carries no information at all, so the
limit-mode information matrix has rank 2 with its null vector along the ray.
The lateral std grows linearly with depth.
"""
import numpy as np

from mocapvar import CameraModel, MPolicy, single_view_covariance, single_view_information, viewing_direction

cam = CameraModel("cam", [0, 0, 0], np.eye(3), focal=0.01, pixel_noise_std=2.5e-7)

for z in (2.0, 5.0, 10.0):
    p = [0.3, -0.2, z]
    info = single_view_information(cam, p).matrix
    w, v = np.linalg.eigh(info)
    ray = viewing_direction(cam, p)
    print(f"depth {z:5.1f} m  lateral std {1 / np.sqrt(w[2]) * 1e3:.3f} mm  "
          f"null vector . ray = {abs(v[:, 0] @ ray):.6f}")

# A finite depth variance M turns the rank-2 information into a full covariance.
cov = single_view_covariance(cam, [0.3, -0.2, 10.0], MPolicy.finite(1e4))
print("finite-M std along the ray:", np.sqrt(np.linalg.eigvalsh(cov)[-1]), "m")
