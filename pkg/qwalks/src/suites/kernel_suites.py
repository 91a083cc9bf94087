"""
Kernel checks against exact oracles and sampling: joint occupation
probabilities of the walks, exhaustive tiling enumeration, the limit of the
lozenge kernel and the residue identity behind it.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from qwalks.src.constants import Method, Suite
from qwalks.src.kernel import (
    SpaceTimePoint,
    correlation_det,
    gauged_loz,
    kernel_loz,
    kernel_loz_lim,
    kernel_walks,
    loz_correlation_det,
    residue_closed_form,
    residue_identity_check,
)
from qwalks.src.suites.suite_base import Check, ValidationSuite
from qwalks.src.tilings import Partition, TilingEnsemble, row_particle_range, top_row
from qwalks.src.utils import trajectory_rng
from qwalks.src.walks import ReachableChain, WalkConfig

EXACT_TOL = 1e-11
QUADRATURE_TOL = 1e-10


class CorrelationsSuite(ValidationSuite):
    """
    Correlation determinants against the forward-propagated chain and
    against the frequencies of sampled runs.
    """

    name = Suite.CORRELATIONS
    slow = True

    x = (5, 3, 0)
    q = 0.6
    horizon = 4
    point_sets = 20
    samples = 10**6

    def choose_point_sets(self, chain: ReachableChain) -> list[list[SpaceTimePoint]]:
        rng = trajectory_rng(self.seed, 0)
        candidates = [
            SpaceTimePoint(y, t)
            for t in range(1, self.horizon + 1)
            for y in range(self.x[0] + 1)
            if chain.joint_occupation([(y, t)]) > 0.05
        ]
        chosen = []
        while len(chosen) < self.point_sets:
            size = int(rng.integers(1, 4))
            picks = rng.choice(len(candidates), size=size, replace=False)
            points = sorted(candidates[i] for i in picks)
            if points not in chosen:
                chosen.append(points)
        return chosen

    def run_subclass(self) -> list[Check]:
        x = WalkConfig(self.x)
        chain = ReachableChain(x, self.q)
        paths = chain.sample_paths(self.samples, self.horizon, trajectory_rng(self.seed, 1))
        checks = []
        for points in self.choose_point_sets(chain):
            determinant = correlation_det(
                points, x, self.q, self.threads, method=Method.RESIDUES, tol=EXACT_TOL
            )
            exact = chain.joint_occupation(points)
            empirical = chain.empirical_occupation(paths, points)
            p = min(max(determinant, 0.0), 1.0)
            sigma = max(math.sqrt(p * (1 - p) / self.samples), 1.0 / self.samples)
            label = " ".join(f"({y},{t})" for y, t in points)
            checks.append(Check(f"exact {label}", abs(determinant - exact), 1e-8))
            checks.append(Check(f"sampled sigmas {label}", abs(determinant - empirical) / sigma, 4.0))
        return checks


class LozengeSuite(ValidationSuite):
    name = Suite.LOZENGE

    lam = (2, 1, 0)
    q = 0.7

    def run_subclass(self) -> list[Check]:
        lam = Partition(self.lam)
        ensemble = TilingEnsemble(lam, self.q)
        points = [(p, n) for n in range(1, lam.N) for p in row_particle_range(lam, n)]
        kwargs = {"method": Method.RESIDUES, "tol": EXACT_TOL}
        one_point = max(
            abs(kernel_loz(point, point, lam, self.q, **kwargs).real - ensemble.correlation([point]))
            for point in points
        )
        two_point = max(
            abs(
                loz_correlation_det([a, b], lam, self.q, self.threads, **kwargs)
                - ensemble.correlation([a, b])
            )
            for a, b in itertools.combinations(points, 2)
        )
        quadrature = {"method": Method.QUADRATURE, "tol": QUADRATURE_TOL}
        by_quadrature = max(
            abs(
                kernel_loz(point, point, lam, self.q, **quadrature).real
                - kernel_loz(point, point, lam, self.q, **kwargs).real
            )
            for point in points
        )
        counts = max(
            abs(
                sum(
                    kernel_loz((p, n), (p, n), lam, self.q, **kwargs).real
                    for p in row_particle_range(lam, n)
                )
                - n
            )
            for n in range(1, lam.N)
        )
        return [
            Check("one-point vs enumeration", one_point, 1e-8),
            Check("two-point vs enumeration", two_point, 1e-8),
            Check("particles per row", counts, 1e-8),
            Check("one-point by quadrature", by_quadrature, 1e-8),
        ]


class KernelConvergenceSuite(ValidationSuite):
    """
    The gauged finite-N lozenge kernel approaches its limit geometrically;
    the check is the fitted per-row decay ratio.
    """

    name = Suite.KERNEL_CONVERGENCE

    x = (3, 1)
    q = 0.5
    sizes = (10, 20, 40)
    pairs = (((1, 0), (2, 1)), ((2, 1), (2, 1)), ((3, 2), (1, 1)))
    converged = 1e-11

    def run_subclass(self) -> list[Check]:
        x = WalkConfig(self.x)
        kwargs = {"method": Method.RESIDUES, "tol": 1e-13}
        checks = []
        for pt1, pt2 in self.pairs:
            limit = kernel_loz_lim(pt1, pt2, x, self.q, **kwargs)
            errors = [
                abs(gauged_loz(pt1, pt2, top_row(x, N), self.q, **kwargs) - limit)
                for N in self.sizes
            ]
            self.logger.debug("Errors for %s, %s over N=%s: %s", pt1, pt2, self.sizes, errors)
            if errors[0] < self.converged:
                ratio = 0.0
            else:
                slope = np.polyfit(self.sizes, np.log(np.maximum(errors, 1e-300)), 1)[0]
                ratio = math.exp(slope)
            checks.append(Check(f"decay ratio {pt1} {pt2}", ratio, 0.9))
        return checks


class ResidueSuite(ValidationSuite):
    """Laurent coefficient against its closed form, relative to max(1, |closed form|)"""

    name = Suite.RESIDUE

    cases = 100
    max_N = 12

    def run_subclass(self) -> list[Check]:
        rng = trajectory_rng(self.seed, 0)
        worst = 0.0
        for _ in range(self.cases):
            N = int(rng.integers(2, self.max_N + 1))
            t1 = int(rng.integers(0, N))
            t2 = int(rng.integers(1, N + 1))
            p1, p2 = (int(value) for value in rng.integers(-2, 4, size=2))
            q = float(rng.uniform(0.3, 0.8))
            scale = max(1.0, abs(residue_closed_form(p1, p2, t1, t2, N, q)))
            worst = max(worst, residue_identity_check(p1, p2, t1, t2, N, q) / scale)
        return [Check(f"{self.cases} random cases", worst, 1e-10)]


class ParticleCountSuite(ValidationSuite):
    name = Suite.PARTICLE_COUNT

    x = (5, 3, 0)
    q = 0.6
    times = range(1, 6)
    methods = {Method.RESIDUES: EXACT_TOL, Method.QUADRATURE: QUADRATURE_TOL}

    def run_subclass(self) -> list[Check]:
        x = WalkConfig(self.x)
        checks = []
        for (method, tol), t in itertools.product(self.methods.items(), self.times):
            total = sum(
                kernel_walks(
                    SpaceTimePoint(y, t), SpaceTimePoint(y, t), x, self.q, method=method, tol=tol
                ).real
                for y in range(x[0] + 1)
            )
            checks.append(Check(f"{method} t={t}", abs(total - x.m), 1e-8))
        return checks
