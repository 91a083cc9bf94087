"""
Quadrature rules: periodic trapezoid sums on concentric circles for double
contour integrals, and Gauss-Legendre panels along straight segments.
"""
from __future__ import annotations

import functools
import logging
from typing import Callable

import numpy as np

from qwalks.src.utils import refine_until_converged

logger = logging.getLogger(__name__)

INITIAL_NODES = 32
INITIAL_PANELS = 2
GAUSS_ORDER = 20
CHUNK = 1024

ComplexFunction = Callable[[np.ndarray], np.ndarray]


def circle_nodes(radius: float, count: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Nodes on |u| = radius and weights with
    (1/2 pi i) oint h(u) du ~ sum(weights * h(nodes)).
    """
    angles = 2 * np.pi * (np.arange(count) + 0.5) / count
    nodes = radius * np.exp(1j * angles)
    return nodes, nodes / count


def cauchy_double_sum(a: np.ndarray, w: np.ndarray, b: np.ndarray, z: np.ndarray) -> complex:
    """sum_{l,k} a_l b_k / (w_l - z_k), in blocks of w nodes"""
    total = 0j
    for begin in range(0, len(w), CHUNK):
        block = slice(begin, begin + CHUNK)
        total += np.sum(a[block] * ((b[None, :] / (w[block, None] - z[None, :])).sum(axis=1)))
    return complex(total)


def double_contour(
    f_w: ComplexFunction,
    g_z: ComplexFunction,
    r_w: float,
    r_z: float,
    tol: float,
    cap: int,
    initial: int = INITIAL_NODES,
) -> complex:
    """
    (1/(2 pi i)^2) oint_z oint_w f(w) g(z) / (w - z) dw dz over the circles
    |w| = r_w and |z| = r_z. Node counts double independently in z (inner)
    and w (outer) until successive values agree within tol.
    """

    @functools.lru_cache(maxsize=None)
    def w_values(count: int) -> tuple[np.ndarray, np.ndarray]:
        nodes, weights = circle_nodes(r_w, count)
        return nodes, weights * f_w(nodes)

    @functools.lru_cache(maxsize=None)
    def z_values(count: int) -> tuple[np.ndarray, np.ndarray]:
        nodes, weights = circle_nodes(r_z, count)
        return nodes, weights * g_z(nodes)

    def evaluate(w_count: int, z_count: int) -> complex:
        w, a = w_values(w_count)
        z, b = z_values(z_count)
        return cauchy_double_sum(a, w, b, z)

    @refine_until_converged(initial, cap, tol, label="w-circle nodes")
    def over_w(w_count: int) -> complex:
        @refine_until_converged(initial, cap, tol, label="z-circle nodes")
        def over_z(z_count: int) -> complex:
            return evaluate(w_count, z_count)

        return over_z()

    value = over_w()
    logger.debug("Double contour on radii %.6g, %.6g gave %s", r_w, r_z, value)
    return value


def segment_integral(
    integrand: ComplexFunction,
    start: complex,
    end: complex,
    tol: float,
    cap: int = 2**14,
    order: int = GAUSS_ORDER,
) -> complex:
    """int of integrand along the straight segment start -> end, Gauss-Legendre panels"""
    points, weights = np.polynomial.legendre.leggauss(order)

    @refine_until_converged(INITIAL_PANELS, cap, tol, label="Gauss-Legendre panels")
    def panels(count: int) -> complex:
        edges = np.linspace(0.0, 1.0, count + 1)
        half = (edges[1:] - edges[:-1]) / 2
        middle = (edges[1:] + edges[:-1]) / 2
        s = (middle[:, None] + half[:, None] * points[None, :]).ravel()
        scaled = (half[:, None] * weights[None, :]).ravel()
        u = start + s * (end - start)
        return complex((end - start) * np.sum(scaled * integrand(u)))

    return panels()
