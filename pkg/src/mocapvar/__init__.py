"""Closed-form reconstruction-error covariance for multi-camera marker tracking.

A single camera constrains a marker only in the plane parallel to its image
plane; fusing the per-camera information of several cameras gives a cheap
approximation of the 3D triangulation error covariance. This package builds
those approximations, checks them against Monte Carlo triangulation, and
uses them to map reconstruction quality and to choose camera pairs.
"""

__version__ = "0.1.0"

from .covariance import (
    EllipseSection,
    Information3,
    MeasurementGaussian,
    MPolicy,
    fuse,
    fused_covariance,
    measurement_gaussian,
    overall_std,
    sigma_ellipse_slice,
    single_view_covariance,
    single_view_information,
)
from .errors import InputError, MocapError, NumericalError
from .geometry import (
    CameraModel,
    Ray,
    back_project,
    depth,
    image_plane_basis,
    look_at_rotation,
    project,
    viewing_direction,
)
from .montecarlo import McConfig, McResult, mc_covariance, percent_std_difference, sample_measurement
from .rng import CounterRNG
from .scenario import ErrorMap, FieldOfView, Scenario, error_map, ring_scenario
from .selection import greedy_select, rank_pairs
from .triangulation import reconstruction_error, triangulate_gls, triangulate_midpoint
