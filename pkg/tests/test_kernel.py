import cmath

import numpy as np
import pytest

from qwalks.src import kernel as kernel_module
from qwalks.src.constants import Method
from qwalks.src.errors import ContourError, DomainError
from qwalks.src.kernel import (
    ContourSpec,
    LozengePoint,
    SpaceTimePoint,
    classify_poles,
    complementation_gauge,
    correlation_det,
    gauge_transform,
    gauged_loz,
    kernel_loz,
    kernel_loz_lim,
    kernel_matrix,
    kernel_walks,
    loz_correlation_det,
    q_n_function,
    q_n_limit,
    residue_closed_form,
    residue_identity_check,
    walk_pole_sets,
)
from qwalks.src.tilings import Partition, TilingEnsemble, top_row
from qwalks.src.walks import ReachableChain, WalkConfig

RESIDUES = {"method": Method.RESIDUES, "tol": 1e-11}


def test_contour_spec_rejects_equal_radii():
    with pytest.raises(ContourError):
        ContourSpec(0.5, 0.5)


def test_walk_kernel_domain():
    x = WalkConfig((3, 1))
    with pytest.raises(DomainError):
        kernel_walks(SpaceTimePoint(1, 1), SpaceTimePoint(1, 0), x, 0.5)
    with pytest.raises(DomainError):
        kernel_walks(SpaceTimePoint(1, -1), SpaceTimePoint(1, 1), x, 0.5)


def test_pole_sets(two_walks):
    poles = walk_pole_sets(two_walks, SpaceTimePoint(2, 1), SpaceTimePoint(2, 2))
    assert poles.z_outside == [0, 2]
    assert poles.z_inside_from == 4
    assert poles.w_poles == [3]
    spec = classify_poles(two_walks, SpaceTimePoint(2, 1), SpaceTimePoint(2, 2), 0.5)
    assert spec.r_w < spec.r_z


def test_no_separating_annulus(two_walks):
    with pytest.raises(ContourError):
        classify_poles(two_walks, SpaceTimePoint(2, 1), SpaceTimePoint(2, 0), 0.5)


@pytest.mark.parametrize("w_factor, z_factor", [(0.9, 0.9), (1.1, 1.1), (0.9, 1.0), (1.0, 1.1), (0.9, 1.1)])
def test_quadrature_stable_under_moved_circles(two_walks, w_factor, z_factor):
    pt1, pt2 = SpaceTimePoint(2, 1), SpaceTimePoint(2, 2)
    default = kernel_walks(pt1, pt2, two_walks, 0.5, method=Method.QUADRATURE, tol=1e-11)
    contour = classify_poles(two_walks, pt1, pt2, 0.5).scaled(w_factor, z_factor)
    moved = kernel_walks(
        pt1, pt2, two_walks, 0.5, method=Method.QUADRATURE, tol=1e-11, contour=contour
    )
    assert abs(moved - default) < 1e-8


def test_particle_count(three_walks):
    for t in (1, 3, 5):
        total = sum(
            kernel_walks(SpaceTimePoint(y, t), SpaceTimePoint(y, t), three_walks, 0.6, **RESIDUES).real
            for y in range(6)
        )
        assert total == pytest.approx(3.0, abs=1e-8)


def test_methods_agree(two_walks):
    pt1, pt2 = SpaceTimePoint(2, 1), SpaceTimePoint(1, 3)
    by_residues = kernel_walks(pt1, pt2, two_walks, 0.5, **RESIDUES)
    by_quadrature = kernel_walks(pt1, pt2, two_walks, 0.5, method=Method.QUADRATURE, tol=1e-11)
    assert abs(by_residues - by_quadrature) < 1e-7


def test_correlations_match_exact_chain(three_walks):
    chain = ReachableChain(three_walks, 0.6)
    for points in ([(4, 1)], [(4, 1), (2, 3)], [(3, 2), (2, 2), (0, 4)]):
        determinant = correlation_det(points, three_walks, 0.6, **RESIDUES)
        assert determinant == pytest.approx(chain.joint_occupation(points), abs=1e-8)


def test_correlations_at_time_zero(two_walks):
    assert correlation_det([(3, 0)], two_walks, 0.5) == 1.0
    assert correlation_det([(2, 0), (1, 1)], two_walks, 0.5) == 0.0
    assert correlation_det([], two_walks, 0.5) == 1.0
    with pytest.raises(DomainError):
        correlation_det([(1, 1), (1, 1)], two_walks, 0.5)


def test_gauge_leaves_determinants_unchanged(two_walks):
    points = [SpaceTimePoint(2, 1), SpaceTimePoint(1, 2), SpaceTimePoint(0, 3)]
    matrix = kernel_matrix(points, two_walks, 0.5, **RESIDUES)
    gauged = gauge_transform(matrix, [2.0, 0.5j, -3.0])
    assert abs(np.linalg.det(gauged) - np.linalg.det(matrix)) < 1e-12


@pytest.mark.parametrize("pt1, pt2", [((2, 1), (2, 1)), ((1, 1), (2, 3)), ((3, 2), (1, 1))])
def test_complementation(two_walks, pt1, pt2):
    pt1, pt2 = SpaceTimePoint(*pt1), SpaceTimePoint(*pt2)
    walks = kernel_walks(pt1, pt2, two_walks, 0.5, **RESIDUES)
    limit = kernel_loz_lim((pt1.y + pt1.t, pt1.t), (pt2.y + pt2.t, pt2.t), two_walks, 0.5, **RESIDUES)
    expected = float(pt1 == pt2) - complementation_gauge(pt1, pt2, 0.5) * limit
    assert abs(walks - expected) < 1e-9


def test_lozenge_kernel_matches_enumeration():
    lam, q = Partition((2, 1, 0)), 0.7
    ensemble = TilingEnsemble(lam, q)
    for point in [(0, 1), (1, 1), (-1, 2), (0, 2)]:
        value = kernel_loz(LozengePoint(*point), LozengePoint(*point), lam, q, **RESIDUES)
        assert value.real == pytest.approx(ensemble.correlation([point]), abs=1e-8)
    pair = [(1, 1), (0, 2)]
    assert loz_correlation_det(pair, lam, q, **RESIDUES) == pytest.approx(ensemble.correlation(pair), abs=1e-8)


def test_lozenge_methods_agree():
    lam, q = Partition((3, 1, 0)), 0.6
    pt1, pt2 = LozengePoint(1, 2), LozengePoint(0, 1)
    by_residues = kernel_loz(pt1, pt2, lam, q, **RESIDUES)
    by_quadrature = kernel_loz(pt1, pt2, lam, q, method=Method.QUADRATURE, tol=1e-11)
    assert abs(by_residues - by_quadrature) < 1e-8


def test_lozenge_kernel_domain():
    with pytest.raises(ContourError):
        kernel_loz(LozengePoint(0, 1), LozengePoint(0, 3), Partition((2, 1, 0)), 0.5)


def test_gauged_kernel_converges(two_walks):
    pt1, pt2 = (1, 0), (2, 1)
    limit = kernel_loz_lim(pt1, pt2, two_walks, 0.5, **RESIDUES)
    errors = [abs(gauged_loz(pt1, pt2, top_row(two_walks, N), 0.5, **RESIDUES) - limit) for N in (10, 20, 40)]
    assert errors[-1] < 1e-6
    assert errors[-1] <= errors[0] + 1e-11


def test_q_n_function_limit():
    q, t1, p1 = 0.5, 1, 1
    w = 0.3 * q**p1 * cmath.exp(0.7j)
    limit = q_n_limit(w, t1, p1, q)
    assert abs(q_n_function(w, 60, t1, p1, q) - limit) < 1e-10 * abs(limit)


@pytest.mark.parametrize("p1, p2, t1, t2, N", [(0, 0, 0, 1, 3), (1, 2, 1, 3, 6), (-2, 1, 2, 5, 9), (3, -1, 4, 2, 12)])
def test_residue_identity(p1, p2, t1, t2, N):
    q = 0.55
    scale = max(1.0, abs(residue_closed_form(p1, p2, t1, t2, N, q)))
    assert residue_identity_check(p1, p2, t1, t2, N, q) / scale < 1e-10


def test_walk_kernel_passes_product_tolerance(monkeypatch, two_walks):
    seen = []
    original = kernel_module.qpoch_inf

    def recording(a, q, tol):
        seen.append(tol)
        return original(a, q, tol)

    monkeypatch.setattr(kernel_module, "qpoch_inf", recording)
    value = kernel_walks(SpaceTimePoint(2, 1), SpaceTimePoint(1, 2), two_walks, 0.5, qpoch_tol=1e-13)
    assert seen and set(seen) == {1e-13}
    monkeypatch.undo()
    reference = kernel_walks(SpaceTimePoint(2, 1), SpaceTimePoint(1, 2), two_walks, 0.5)
    assert abs(value - reference) < 1e-8
