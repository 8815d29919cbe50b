# File: pathcg/inference/compare.py
# Ranking of coarse-graining maps by their optimal fitted objective.

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..cg_maps.maps import PhaseCGMap
from ..metrics.norms import WeightedNorm
from ..models import FrictionOption, LangevinModel
from .langevin import fit_rer_stationary_langevin
from .normal_equations import FitResult, force_matching_ls

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MapCandidate:
    """ A CG map with the basis family fitted on it. """
    name: str
    cg_map: object
    family: object

    @property
    def m(self):
        return self.cg_map.m


@dataclass(frozen=True)
class RankedMap:
    """ Position of a candidate in the ranking, with the candidates it ties with. """
    rank: int
    name: str
    m: int
    fit: FitResult
    tied_with: Tuple[str, ...] = ()

    def to_text(self):
        ties = ','.join(self.tied_with) or '-'
        return (f"rank={self.rank} map={self.name} m={self.m} objective={self.fit.objective!r} "
                f"se={self.fit.objective_se!r} ties={ties}")


def _fit(candidate, samples, model, friction_option):
    if isinstance(model, LangevinModel):
        return fit_rer_stationary_langevin(samples, candidate.family, candidate.cg_map, friction_option, model)
    cg_map = candidate.cg_map.phase_map if isinstance(candidate.cg_map, PhaseCGMap) else candidate.cg_map
    weight = WeightedNorm.for_cg(model.diffusion, cg_map)
    return force_matching_ls(samples, model.drift_at, candidate.family, cg_map, weight)


def _tied(a, b):
    se = np.hypot(a.objective_se or 0.0, b.objective_se or 0.0)
    floor = 1e-12 * max(1.0, abs(a.objective), abs(b.objective))
    return abs(a.objective - b.objective) <= 3 * se + floor


def compare_cg_maps(candidates, samples, model, friction_option=FrictionOption.A):
    """Fit every candidate on the same samples and rank by the optimal RER.

    Candidates whose objectives lie within 3 combined SE form a tie cluster;
    inside a cluster the smaller CG dimension ranks first.
    """
    fits = [(c, _fit(c, samples, model, friction_option)) for c in candidates]
    fits.sort(key=lambda item: item[1].objective)
    clusters = []
    for item in fits:
        if clusters and _tied(clusters[-1][-1][1], item[1]):
            clusters[-1].append(item)
        else:
            clusters.append([item])
    ranked = []
    for cluster in clusters:
        names = [c.name for c, _ in cluster]
        for candidate, fit in sorted(cluster, key=lambda item: (item[0].m, item[1].objective)):
            ties = tuple(n for n in names if n != candidate.name)
            ranked.append(RankedMap(rank=len(ranked) + 1, name=candidate.name, m=candidate.m, fit=fit,
                                    tied_with=ties))
    logger.info("CG map ranking: " + ', '.join(f"{r.name}={r.fit.objective:.6g}" for r in ranked))
    return ranked
