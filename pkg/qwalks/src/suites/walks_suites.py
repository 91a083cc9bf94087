"""
Exact identities of the walk chain: stochasticity, the eigenfunction
relation, q^volume weights and the Karlin-McGregor limit.
"""
from __future__ import annotations

import itertools
from typing import Iterator

from qwalks.src.constants import Suite
from qwalks.src.suites.suite_base import Check, ValidationSuite
from qwalks.src.walks import (
    WalkConfig,
    admissible_targets,
    eigen_residual,
    enumerate_trajectories,
    h_eigen,
    km_limit,
    km_ratio,
    partition_function,
    trajectory_probability,
    transition_prob,
    volume,
    volume_partition_sum,
)

GRID_Q = (0.3, 0.6, 0.9)
GRID_MAX_M = 4
GRID_MAX_POSITION = 8


def configuration_grid(max_m: int = GRID_MAX_M, top: int = GRID_MAX_POSITION) -> Iterator[WalkConfig]:
    """Every configuration with at most max_m particles below top + 1"""
    for m in range(1, max_m + 1):
        for parts in itertools.combinations(range(top, -1, -1), m):
            yield WalkConfig(parts)


class StochasticitySuite(ValidationSuite):
    name = Suite.STOCHASTICITY

    def run_subclass(self) -> list[Check]:
        checks = []
        for q in GRID_Q:
            worst = 0.0
            for x in configuration_grid():
                total = sum(transition_prob(x, y, q) for y in admissible_targets(x))
                worst = max(worst, abs(total - 1.0))
            checks.append(Check(f"row sums q={q}", worst, 1e-12))
        return checks


class EigenfunctionSuite(ValidationSuite):
    """Residuals are relative to q^{m(m-1)/2} h(x), which spans many decades on the grid"""

    name = Suite.EIGENFUNCTION

    def run_subclass(self) -> list[Check]:
        checks = []
        for q in GRID_Q:
            worst = 0.0
            for x in configuration_grid():
                scale = q ** (x.m * (x.m - 1) // 2) * h_eigen(x, q)
                worst = max(worst, eigen_residual(x, q) / scale)
            checks.append(Check(f"eigen relation q={q}", worst, 1e-12))
        return checks


class GibbsSuite(ValidationSuite):
    name = Suite.GIBBS

    starts = ((3, 1), (4, 2, 1))
    qs = (0.4, 0.7)
    max_wait = 2

    def run_subclass(self) -> list[Check]:
        checks = []
        for parts, q in itertools.product(self.starts, self.qs):
            x = WalkConfig(parts)
            exact = partition_function(x, q)
            summed = volume_partition_sum(x, q)
            checks.append(Check(f"partition sum x={parts} q={q}", abs(summed - exact) / exact, 1e-10))
        for q in self.qs:
            x = WalkConfig((2, 0))
            Z = partition_function(x, q)
            worst = 0.0
            for trajectory in enumerate_trajectories(x, q, self.max_wait):
                weight = q ** volume(trajectory)
                worst = max(worst, abs(trajectory_probability(trajectory) * Z - weight))
            checks.append(Check(f"q^volume law x=(2, 0) q={q}", worst, 1e-10))
        return checks


class KarlinMcGregorSuite(ValidationSuite):
    """
    Errors reach roundoff long before T = 500; the monotonicity check allows
    increases at that level.
    """

    name = Suite.KARLIN_MCGREGOR

    cases = (((3, 1), (2, 1)), ((4, 2, 1), (3, 2, 0)))
    q = 0.5
    sweep = (50, 100, 200, 400)
    horizon = 500
    roundoff = 1e-12

    def run_subclass(self) -> list[Check]:
        checks = []
        for x, y in self.cases:
            target = km_limit(x, y, self.q)
            errors = [abs(km_ratio(x, y, T, self.q) - target) for T in self.sweep]
            self.logger.debug("Karlin-McGregor errors for x=%s: %s", x, errors)
            increase = max(later - earlier for earlier, later in zip(errors, errors[1:]))
            checks.append(Check(f"monotone decay x={x}", max(increase, 0.0), self.roundoff))
            final = abs(km_ratio(x, y, self.horizon, self.q) - target)
            checks.append(Check(f"T={self.horizon} x={x}", final, 1e-6))
        return checks
