"""
Checks of the large-m layer: the incomplete beta kernel, the frozen
boundary and the bulk limit of the walk kernel.
"""
from __future__ import annotations

import cmath
import itertools
import math

from qwalks.src.asymptotics import (
    ClusterProfile,
    beta_residue_at_zero,
    boundary_at_tau,
    boundary_certificate,
    bulk_limit_compare,
    deepest_liquid_point,
    default_w_grid,
    frozen_boundary,
    incomplete_beta,
    incomplete_beta_path,
    scan_liquid_region,
)
from qwalks.src.constants import Suite
from qwalks.src.options import GridWindow
from qwalks.src.suites.suite_base import Check, ValidationSuite

# three unequal clusters and a fourth touching the top
CLUSTERS = {"a": [0.0, 0.1, 0.2, 0.6, 1.0], "C": [0.05, 0.45, 0.8, 1.0]}


class BetaSuite(ValidationSuite):
    name = Suite.BETA

    omegas = (0.3 + 0.4j, -0.5 + 0.6j, 0.8 + 1.5j, 2.0 + 0.5j, 0.5 + 0.3j)
    forward = ((0, 0), (1, 0), (2, 1), (1, 2), (3, -2))
    backward = ((-1, 0), (-2, 1), (-1, -1), (-3, 2), (-2, -2))
    path_tol = 1e-13

    def run_subclass(self) -> list[Check]:
        density = max(
            abs(incomplete_beta(omega, 0, 0) - cmath.phase(omega) / math.pi) for omega in self.omegas
        )
        height = max(abs(incomplete_beta(omega, 0, -1) - omega.imag / math.pi) for omega in self.omegas)
        independence = max(
            abs(
                incomplete_beta_path(omega, dt, dp, 0.3, self.path_tol)
                - incomplete_beta_path(omega, dt, dp, 0.7, self.path_tol)
            )
            for omega, (dt, dp) in itertools.product(self.omegas, self.forward)
        )
        complement = max(
            abs(
                incomplete_beta_path(omega, dt, dp, 0.5, self.path_tol)
                - incomplete_beta_path(omega, dt, dp, -1.0, self.path_tol)
                - beta_residue_at_zero(dt, dp)
            )
            for omega, (dt, dp) in itertools.product(self.omegas, self.backward)
        )
        return [
            Check("B(0,0) = Arg/pi", density, 1e-10),
            Check("B(0,-1) = Im/pi", height, 1e-10),
            Check("path independence", independence, 1e-12),
            Check("complement relation", complement, 1e-10),
        ]


class FrozenBoundarySuite(ValidationSuite):
    name = Suite.FROZEN_BOUNDARY

    gamma = 1.0
    far_tau = 20.0

    def run_subclass(self) -> list[Check]:
        profile = ClusterProfile(gamma=self.gamma, **CLUSTERS)
        points = frozen_boundary(profile, default_w_grid(profile))
        far = boundary_at_tau(profile, self.far_tau)
        worst = 0.0
        for w, tau, rho in points + far:
            worst = max(worst, *boundary_certificate(w, tau, rho, profile))
        self.logger.debug("Boundary points at tau=%g: %s", self.far_tau, far)
        asymptote = max((abs(rho - 1.0) for _, _, rho in far), default=math.inf)
        return [
            Check("emitted points", 0.0 if points else 1.0, 0.0),
            Check("double-root certificate", worst, 1e-8),
            Check(f"|rho - 1| at tau={self.far_tau}", asymptote, 0.05),
        ]


class BulkSuite(ValidationSuite):
    """
    Gauge-fixed walk kernel near the deepest liquid point of a single cluster
    against the incomplete beta kernel.
    """

    name = Suite.BULK
    slow = True

    profile = {"a": [0.0, 1.0], "C": [0.5], "gamma": 1.0}
    window = GridWindow(tau_min=0.05, tau_max=1.5, rho_min=0.02, rho_max=2.0, resolution=30)
    m = 200
    coarse_m = 50
    offsets = range(-2, 3)

    def run_subclass(self) -> list[Check]:
        profile = ClusterProfile(**self.profile)
        point = deepest_liquid_point(scan_liquid_region(profile, self.window, self.threads))
        self.logger.info("Comparing at tau=%.4g, rho=%.4g", point.tau, point.rho)
        errors = {
            (dt, dp): bulk_limit_compare(self.m, profile, point.tau, point.rho, dt, dp).abs_err
            for dt, dp in itertools.product(self.offsets, self.offsets)
        }
        worst, fine = max(errors.values()), errors[(0, 0)]
        coarse = bulk_limit_compare(self.coarse_m, profile, point.tau, point.rho, 0, 0).abs_err
        return [
            Check(f"max error m={self.m}", worst, 0.05),
            Check(f"origin error m={self.m} minus m={self.coarse_m}", fine - coarse, 0.0),
        ]
