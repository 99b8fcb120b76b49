"""Monte Carlo estimate of the reconstruction-error covariance.

Each trial perturbs every camera's noiseless projection with isotropic
Gaussian sensor noise, triangulates, and records the error
``estimate - truth``. The sample covariance is accumulated about zero with an
``N - 1`` denominator.

Noise for trial ``k`` and camera ``j`` is drawn from a :class:`CounterRNG`
stream at counters ``2*m*k + 2*j + {0, 1}``, so results do not depend on
chunking or worker count. Sums are formed with :func:`math.fsum`, which is
exactly rounded and therefore independent of summation order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BehindCamera, InputError, TooFewValidTrials, ZeroTheory
from .geometry import CameraModel, as_point, project
from .rng import CounterRNG
from .triangulation import DEFAULT_GLS_ITERATIONS, gls_batch, midpoint_batch, ray_directions

ESTIMATORS = ("gls", "midpoint")
MAX_EXCLUDED_FRACTION = 0.01
CHUNK = 4096
NOISELESS_STD = 1e-9


@dataclass(frozen=True)
class McConfig:
    trials: int = 10_000
    seed: int = 0
    estimator: str = "gls"
    gls_iterations: int = DEFAULT_GLS_ITERATIONS

    def __post_init__(self):
        if self.trials < 2:
            raise InputError("Monte Carlo needs at least 2 trials")
        if self.estimator not in ESTIMATORS:
            raise InputError(f"unknown estimator {self.estimator!r}; expected one of {ESTIMATORS}")


@dataclass(frozen=True)
class McResult:
    sample_cov: np.ndarray
    sample_mean_error: np.ndarray
    trials_used: int
    trials_excluded: int = 0

    def centered_cov(self) -> np.ndarray:
        """Covariance about the sample mean instead of about zero."""
        n = self.trials_used
        mu = self.sample_mean_error
        return self.sample_cov - np.outer(mu, mu) * n / (n - 1)


def sample_measurement(camera: CameraModel, point, rng: CounterRNG, trial: int = 0) -> np.ndarray:
    """Noisy sensor coordinates of ``point``: projection plus N(0, sigma^2 I)."""
    return sample_measurements(camera, point, rng, [trial])[0]


def sample_measurements(camera: CameraModel, point, rng: CounterRNG, trials) -> np.ndarray:
    """One noisy measurement per entry of ``trials`` (or ``range(trials)`` for an int)."""
    if np.isscalar(trials):
        trials = np.arange(int(trials))
    clean = project(camera, point)
    sigma = camera.noise_std(point)
    if sigma == 0:
        return np.broadcast_to(clean, (len(trials), 2)).copy()
    return clean + sigma * rng.trial_normals(trials, 2)


def _trial_errors(cameras, point, clean, sigma, rng, config, trials):
    noise = rng.trial_normals(trials, 2 * len(cameras)).reshape(len(trials), len(cameras), 2)
    pixels = clean[None] + sigma[None, :, None] * noise
    if config.estimator == "gls":
        x, ok = gls_batch(cameras, pixels, config.gls_iterations)
    else:
        centers = np.array([c.center for c in cameras])
        x, ok = midpoint_batch(centers, ray_directions(cameras, pixels))
    return x - point, ok


def mc_errors(
    cameras: Sequence[CameraModel],
    point,
    config: McConfig,
    stream: tuple = (),
    workers: int = 1,
):
    """Per-trial reconstruction errors ``(N, 3)`` and validity mask ``(N,)``."""
    point = as_point(point)
    if len(cameras) < 2:
        raise InputError("Monte Carlo triangulation needs at least 2 cameras")
    try:
        clean = np.array([project(c, point) for c in cameras])
    except BehindCamera as exc:
        raise BehindCamera(f"every camera must see the point: {exc}") from None
    sigma = np.array([c.noise_std(point) for c in cameras])
    rng = CounterRNG(config.seed).child(*stream)

    errors = np.empty((config.trials, 3))
    ok = np.empty(config.trials, dtype=bool)
    starts = range(0, config.trials, CHUNK)

    def run(start):
        trials = np.arange(start, min(start + CHUNK, config.trials))
        e, v = _trial_errors(cameras, point, clean, sigma, rng, config, trials)
        errors[trials] = e
        ok[trials] = v

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, starts))
    else:
        for start in starts:
            run(start)
    return errors, ok


def summarize_errors(errors: np.ndarray, ok: np.ndarray) -> McResult:
    n_total = len(ok)
    used = errors[ok]
    n = len(used)
    excluded = n_total - n
    if excluded > MAX_EXCLUDED_FRACTION * n_total or n < 2:
        raise TooFewValidTrials(f"{excluded} of {n_total} trials were degenerate")
    cov = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            cov[i, j] = cov[j, i] = math.fsum(used[:, i] * used[:, j]) / (n - 1)
    mean = np.array([math.fsum(used[:, i]) / n for i in range(3)])
    return McResult(cov, mean, n, excluded)


def mc_covariance(
    cameras: Sequence[CameraModel],
    point,
    config: McConfig,
    stream: tuple = (),
    workers: int = 1,
) -> McResult:
    """Sample covariance of the triangulation error about zero over ``config.trials`` trials.

    ``stream`` selects an independent noise stream under the same seed
    (experiments use the point index).
    """
    return summarize_errors(*mc_errors(cameras, point, config, stream, workers))


def percent_std_difference(mc: McResult, theory) -> float:
    """``100 * |sqrt(tr(sample)) - sqrt(tr(theory))| / sqrt(tr(theory))``.

    A zero theoretical covariance (noiseless cameras) agrees with a sample
    whose std is within triangulation round-off, ``NOISELESS_STD`` meters.
    """
    sample = mc.sample_cov if isinstance(mc, McResult) else np.asarray(mc)
    t_theory = float(np.trace(theory))
    t_sample = max(float(np.trace(sample)), 0.0)
    if t_theory <= 0:
        if math.sqrt(t_sample) <= NOISELESS_STD:
            return 0.0
        raise ZeroTheory("theoretical covariance has zero trace")
    return 100.0 * abs(math.sqrt(t_sample) - math.sqrt(t_theory)) / math.sqrt(t_theory)
