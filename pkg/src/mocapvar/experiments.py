"""Closed form vs Monte Carlo experiments on camera rings.

``run_accuracy_sweep`` compares the two over random targets and random
camera subsets of a large ring. ``run_pair_angle_sweep`` compares the 1-sigma
ellipses of a camera pair at the ring center as the pair separation grows.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .covariance import EllipseSection, fused_covariance, sigma_ellipse_slice
from .errors import InputError, NumericalError
from .montecarlo import McConfig, mc_covariance, percent_std_difference
from .rng import CounterRNG
from .scenario import Scenario, ring_scenario, sample_interior_points

# Stream tags keep the draws of different purposes independent under one seed.
_POINTS, _SUBSET, _NOISE = 1, 2, 3


@dataclass(frozen=True)
class SweepRow:
    m: int
    mean_percent_diff: float
    stderr: float
    points_used: int
    percent_diffs: tuple = ()


def ring_radius(scenario: Scenario) -> float:
    return float(np.max(np.linalg.norm([c.center[:2] for c in scenario.cameras], axis=1)))


def sweep_point(scenario: Scenario, m: int, i: int, mc: McConfig) -> float:
    """Percent std difference for target ``i`` of camera-count ``m``; NaN if unusable."""
    seed = CounterRNG(scenario.seed)
    radius = ring_radius(scenario)
    z0 = scenario.center[2]
    z_half = 0.5 * (scenario.room_max[2] - scenario.room_min[2])
    point = sample_interior_points(
        seed.child(_POINTS, m, i), 1, radius, (z0 - z_half, z0 + z_half)
    )[0]
    order = np.argsort(seed.child(_SUBSET, m, i).uniform_block(len(scenario.cameras)), kind="stable")
    cams = [scenario.cameras[j] for j in sorted(order[:m])]
    try:
        theory = fused_covariance(cams, point, scenario.m_policy)
        sample = mc_covariance(cams, point, mc, stream=(_NOISE, m, i))
    except NumericalError:
        return float("nan")
    return percent_std_difference(sample, theory)


def run_accuracy_sweep(
    scenario: Scenario,
    m_values: Sequence[int],
    points_per_m: int,
    mc: McConfig,
    workers: int = 1,
) -> list:
    """Mean percent difference between Monte Carlo and closed-form std, per camera count.

    For each ``m``, ``points_per_m`` targets are drawn uniformly inside the
    ring and each gets its own random subset of ``m`` cameras. Targets where
    either side is numerically degenerate are dropped and not counted in
    ``points_used``.
    """
    n_cams = len(scenario.cameras)
    if not m_values:
        raise InputError("m_values is empty")
    for m in m_values:
        if not 2 <= m <= n_cams:
            raise InputError(f"m={m} outside [2, {n_cams}]")
    if points_per_m < 1:
        raise InputError("points_per_m must be >= 1")

    jobs = [(m, i) for m in m_values for i in range(points_per_m)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(lambda job: sweep_point(scenario, job[0], job[1], mc), jobs))
    else:
        values = [sweep_point(scenario, m, i, mc) for m, i in jobs]

    rows = []
    for k, m in enumerate(m_values):
        v = np.array(values[k * points_per_m : (k + 1) * points_per_m])
        v = v[np.isfinite(v)]
        n = len(v)
        mean = float(np.mean(v)) if n else float("nan")
        err = float(np.std(v, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
        rows.append(SweepRow(int(m), mean, err, n, tuple(v.tolist())))
    return rows


@dataclass(frozen=True)
class PairAngleRow:
    angle: float
    camera_ids: tuple
    theory: EllipseSection
    mc: EllipseSection
    theory_cov: np.ndarray
    mc_cov: np.ndarray


PAIR_ANGLES = (np.pi / 8, np.pi / 4, 3 * np.pi / 8, np.pi / 2)


def run_pair_angle_sweep(
    angles: Sequence[float] = PAIR_ANGLES,
    mc: McConfig = None,
    scenario: Scenario = None,
) -> list:
    """Theory and Monte Carlo 1-sigma ellipses at the ring center for camera pairs.

    Camera 0 is paired with the camera ``angle`` further round the ring; both
    ellipses are sliced in the ring plane.
    """
    scenario = scenario or ring_scenario(16)
    mc = mc or McConfig(100_000, scenario.seed)
    m = len(scenario.cameras)
    step = 2 * np.pi / m
    target = scenario.center
    rows = []
    for angle in angles:
        k = angle / step
        if abs(k - round(k)) > 1e-9 or not 1 <= round(k) < m:
            raise InputError(f"angle {angle} is not a multiple of the ring spacing {step}")
        k = int(round(k))
        pair = [scenario.cameras[0], scenario.cameras[k]]
        theory = fused_covariance(pair, target, scenario.m_policy)
        sample = mc_covariance(pair, target, mc, stream=(k,)).sample_cov
        rows.append(
            PairAngleRow(
                float(angle),
                (pair[0].id, pair[1].id),
                sigma_ellipse_slice(theory, (0, 0, 1), target),
                sigma_ellipse_slice(sample, (0, 0, 1), target),
                theory,
                sample,
            )
        )
    return rows
