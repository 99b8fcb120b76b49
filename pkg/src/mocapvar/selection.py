"""Camera pair ranking and greedy subset selection for one target."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .covariance import MPolicy, fuse, overall_std, single_view_information
from .errors import InputError, NotEnoughCameras, NoVisiblePair, SingularInformation
from .scenario import Scenario

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PairScore:
    camera_a: object
    camera_b: object
    quality: float


@dataclass(frozen=True)
class Selection:
    camera_ids: tuple
    stds: tuple  # overall std after each addition, starting with the pair


def _visible_infos(scenario: Scenario, point):
    """(scenario index, camera, limit information) for cameras that see ``point``."""
    out = []
    for i, cam in enumerate(scenario.cameras):
        if scenario.sees(cam, point):
            out.append((i, cam, single_view_information(cam, point, MPolicy.limit())))
    return out


def _std(infos) -> float:
    return overall_std(fuse(infos))


def rank_pairs(scenario: Scenario, point) -> list:
    """All visible camera pairs ordered by the std of their fused reconstruction.

    Pairs that cannot triangulate the point (parallel rays) are left out.
    Equal qualities keep scenario order.
    """
    vis = _visible_infos(scenario, point)
    scored = []
    for (i, ca, ia), (j, cb, ib) in combinations(vis, 2):
        try:
            q = _std([ia, ib])
        except SingularInformation:
            continue
        scored.append((q, i, j, PairScore(ca.id, cb.id, q)))
    if not scored:
        raise NoVisiblePair("no pair of visible cameras can reconstruct the point")
    scored.sort(key=lambda t: t[:3])
    return [t[3] for t in scored]


def greedy_select(scenario: Scenario, point, k: int) -> Selection:
    """Grow the best pair greedily to ``k`` cameras, minimising the fused std at each step.

    Near-ties (relative ``1e-12``) go to the camera listed first in the scenario.
    """
    if k < 2:
        raise InputError("k must be >= 2")
    vis = _visible_infos(scenario, point)
    if len(vis) < k:
        raise NotEnoughCameras(f"{len(vis)} cameras see the point, {k} requested")
    best = rank_pairs(scenario, point)[0]
    chosen = [v for v in vis if v[1].id in (best.camera_a, best.camera_b)]
    stds = [best.quality]
    taken = {v[0] for v in chosen}
    remaining = [v for v in vis if v[0] not in taken]
    while len(chosen) < k:
        base = [v[2] for v in chosen]
        scores = np.array([_std(base + [v[2]]) for v in remaining])
        lowest = scores.min()
        pick = int(np.flatnonzero(scores <= lowest * (1 + TIE_RTOL))[0])
        chosen.append(remaining.pop(pick))
        stds.append(float(scores[pick]))
    return Selection(tuple(v[1].id for v in chosen), tuple(stds))
