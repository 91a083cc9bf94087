import numpy as np
import pytest

from qwalks.src.errors import NonConvergenceError
from qwalks.src.quadrature import cauchy_double_sum, circle_nodes, double_contour, segment_integral


def test_circle_rule_picks_up_simple_pole():
    nodes, weights = circle_nodes(0.7, 16)
    assert np.sum(weights / nodes) == pytest.approx(1.0, abs=1e-14)
    assert abs(np.sum(weights * nodes**3)) < 1e-14


def test_cauchy_double_sum_blocks():
    rng = np.random.default_rng(0)
    w = 2.0 * np.exp(1j * rng.uniform(0, 2 * np.pi, 3000))
    z = 0.5 * np.exp(1j * rng.uniform(0, 2 * np.pi, 40))
    a, b = rng.normal(size=3000), rng.normal(size=40)
    direct = np.sum(a[:, None] * b[None, :] / (w[:, None] - z[None, :]))
    assert abs(cauchy_double_sum(a, w, b, z) - direct) < 1e-10


def test_double_contour_constant_over_z():
    # the w-circle encloses z, so the w-integral of 1/(w - z) is one
    value = double_contour(np.ones_like, lambda z: 1 / z, 1.0, 0.5, 1e-12, 2**12)
    assert abs(value - 1.0) < 1e-12


def test_segment_integral_polynomial():
    end = 1 + 1j
    assert abs(segment_integral(lambda u: u**2, 0j, end, 1e-13) - end**3 / 3) < 1e-13


def test_segment_integral_reports_non_convergence():
    with pytest.raises(NonConvergenceError):
        segment_integral(lambda u: 1 / (u - 0.5 - 1e-9j), 0j, 1 + 0j, 1e-14, cap=4)
