import cmath
import math

import numpy as np
import pytest

from qwalks.src.asymptotics import (
    ClusterProfile,
    ComplexSlope,
    F_derivative,
    F_eval,
    beta_residue_at_zero,
    boundary_at_tau,
    boundary_certificate,
    bounding_polygon,
    bulk_limit_compare,
    complex_slope,
    critical_points,
    deepest_liquid_point,
    default_w_grid,
    frozen_boundary,
    incomplete_beta,
    incomplete_beta_path,
    liquid_membership,
    omega_to_w,
    realize_initial_config,
    scan_liquid_region,
)
from qwalks.src.errors import DomainError, PoleError
from qwalks.src.options import GridWindow

WINDOW = GridWindow(tau_min=0.05, tau_max=1.5, rho_min=0.02, rho_max=2.0, resolution=12)


@pytest.mark.parametrize(
    "a, C",
    [([0.0, 1.0], [0.0]), ([0.0, 0.5], [0.5]), ([0.0, 0.5, 1.0], [0.7, 0.3]), ([0.0, 1.0], [0.5, 0.6])],
)
def test_profile_validation(a, C):
    with pytest.raises(ValueError):
        ClusterProfile(a=a, C=C, gamma=1.0)


def test_realized_configuration(single_cluster):
    assert realize_initial_config(single_cluster, 4).parts == (6, 5, 4, 3)
    with pytest.raises(DomainError):
        realize_initial_config(single_cluster, 0)


def test_F_pole(single_cluster):
    with pytest.raises(PoleError):
        F_eval(1.0, single_cluster)


def test_F_derivative_matches_difference_quotient(single_cluster):
    w, h = 0.3 + 0.2j, 1e-6
    quotient = (F_eval(w + h, single_cluster) - F_eval(w - h, single_cluster)) / (2 * h)
    assert abs(F_derivative(w, single_cluster) - quotient) < 1e-6


def test_at_most_one_upper_critical_point(single_cluster):
    for tau, rho in [(0.3, 0.6), (1.0, 0.9), (0.7, 0.2)]:
        roots = critical_points(tau, rho, single_cluster)
        assert sum(multiplicity for root, multiplicity in roots if root.imag > 0) <= 1


def test_critical_points_domain(single_cluster):
    with pytest.raises(DomainError):
        critical_points(0.0, 0.5, single_cluster)


def test_outside_bounding_polygon_is_frozen(single_cluster):
    assert liquid_membership(0.2, 1.9, single_cluster) is None


def test_complex_slope_at_deepest_point(single_cluster):
    rows = scan_liquid_region(single_cluster, WINDOW)
    assert any(row.in_liquid for row in rows)
    point = deepest_liquid_point(rows)
    assert point.w_c.imag > 0
    slope = complex_slope(point, single_cluster)
    assert slope.omega.imag > 0
    assert 0 < slope.density < 1
    recovered = omega_to_w(slope.omega, point.tau, point.rho, single_cluster.gamma)
    assert abs(recovered - point.w_c) < 1e-8 * max(1.0, abs(point.w_c))


def test_rays_from_deepest_point_cross_boundary_once(single_cluster):
    point = deepest_liquid_point(scan_liquid_region(single_cluster, WINDOW))
    first, last = single_cluster.C[0], single_cluster.C[-1]
    bottom = max(first - point.tau, 0.0) + 1e-3
    top = (1.0 + last - point.tau if point.tau < last else 1.0) - 1e-3
    boundary = [rho for _, _, rho in boundary_at_tau(single_cluster, point.tau)]
    for end in (bottom, top):
        rhos = np.linspace(point.rho, end, 200)
        step = abs(rhos[1] - rhos[0])
        liquid = [liquid_membership(point.tau, rho, single_cluster) is not None for rho in rhos]
        assert liquid[0]
        flips = [i for i in range(1, len(liquid)) if liquid[i] != liquid[i - 1]]
        assert len(flips) == 1
        assert min(abs(rhos[flips[0]] - rho) for rho in boundary) <= 2 * step


def test_complex_slope_requires_upper_half_plane():
    with pytest.raises(DomainError):
        ComplexSlope(0.5 - 0.1j)


@pytest.mark.parametrize("omega", [0.3 + 0.4j, -0.5 + 0.6j, 2.0 + 0.5j])
def test_beta_special_values(omega):
    assert incomplete_beta(omega, 0, 0) == pytest.approx(cmath.phase(omega) / math.pi, abs=1e-10)
    assert incomplete_beta(omega, 0, -1) == pytest.approx(omega.imag / math.pi, abs=1e-10)


def test_beta_path_independence():
    omega = 0.8 + 1.5j
    first = incomplete_beta_path(omega, 2, 1, 0.3)
    second = incomplete_beta_path(omega, 2, 1, 0.7)
    assert abs(first - second) < 1e-12


@pytest.mark.parametrize("dt, dp", [(-1, 0), (-2, 1), (-3, 2), (-1, -1)])
def test_beta_complement_relation(dt, dp):
    omega = 0.3 + 0.4j
    difference = incomplete_beta_path(omega, dt, dp, 0.5) - incomplete_beta_path(omega, dt, dp, -1.0)
    assert abs(difference - beta_residue_at_zero(dt, dp)) < 1e-10


def test_beta_residue_at_zero():
    assert beta_residue_at_zero(3, 1) == -3.0
    assert beta_residue_at_zero(-2, 2) == 3.0
    assert beta_residue_at_zero(2, -1) == 0.0
    assert beta_residue_at_zero(-1, 0) == 1.0
    assert beta_residue_at_zero(-1, 3) == 1.0
    assert beta_residue_at_zero(-3, 2) == 6.0
    assert beta_residue_at_zero(2, 5) == 0.0


def test_beta_crossing_must_avoid_singularities():
    with pytest.raises(DomainError):
        incomplete_beta_path(0.5 + 0.5j, 0, 0, 1.0)


def test_frozen_boundary_certificates(single_cluster):
    points = frozen_boundary(single_cluster, default_w_grid(single_cluster))
    assert points
    for w, tau, rho in points:
        value, slope = boundary_certificate(w, tau, rho, single_cluster)
        assert value < 1e-8 and slope < 1e-8


def test_boundary_on_vertical_line(single_cluster):
    for w, tau, rho in boundary_at_tau(single_cluster, 5.0):
        assert tau == pytest.approx(5.0, abs=1e-6)
        assert max(boundary_certificate(w, tau, rho, single_cluster)) < 1e-8


def test_bounding_polygon(single_cluster):
    assert bounding_polygon(single_cluster, 3.0) == [
        (0.0, 0.5),
        (0.5, 0.0),
        (3.0, 0.0),
        (3.0, 1.0),
        (0.5, 1.0),
        (0.0, 1.5),
    ]


def test_bulk_comparison_needs_liquid_point(single_cluster):
    with pytest.raises(DomainError):
        bulk_limit_compare(50, single_cluster, 0.2, 1.9, 0, 0)


def test_boundary_certificates_far_from_origin(four_clusters):
    points = frozen_boundary(four_clusters, default_w_grid(four_clusters))
    assert any(abs(w) >= 1e3 for w, _, _ in points)
    for w, tau, rho in points:
        assert max(boundary_certificate(w, tau, rho, four_clusters)) < 1e-8


def test_boundary_approaches_top_wall_for_large_tau(four_clusters):
    far = boundary_at_tau(four_clusters, 20.0)
    assert far
    for w, tau, rho in far:
        assert abs(w) < 1e-3
        assert tau == pytest.approx(20.0, abs=1e-6)
        assert rho == pytest.approx(1.0, abs=1e-3)
