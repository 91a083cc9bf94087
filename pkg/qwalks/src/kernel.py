"""
Correlation kernels of the walks and of the lozenge tilings.

Every double contour integral can be evaluated two ways:
  - `Method.QUADRATURE`: periodic trapezoid sums on circles, double precision
  - `Method.RESIDUES`: a finite residue expansion summed with mpmath at a
    working precision that grows until the value settles
The second one is exact up to the requested tolerance for q close to 1,
where the integrands span hundreds of orders of magnitude.
"""
from __future__ import annotations

import logging
import math
from typing import NamedTuple, Optional, Sequence

import joblib
import mpmath as mp
import numpy as np

from qwalks.src.constants import Method
from qwalks.src.errors import ContourError, DomainError
from qwalks.src.qcalc import QPOCH_INF_TOL, check_q, qpoch, qpoch_inf
from qwalks.src.quadrature import INITIAL_NODES, double_contour
from qwalks.src.tilings import Partition
from qwalks.src.utils import refine_until_converged

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
NODE_CAP = 2**16
MP_DPS = 30
MP_DPS_CAP = 4000


class SpaceTimePoint(NamedTuple):
    """Position y of the walks at time t"""

    y: int
    t: int


class LozengePoint(NamedTuple):
    """Position p in row n of the particle array of a tiling"""

    p: int
    n: int


class ContourSpec:
    """Radii of the w- and z-circles and the starting node count"""

    def __init__(self, r_w: float, r_z: float, nodes: int = INITIAL_NODES):
        if not (r_w > 0 and r_z > 0) or math.isclose(r_w, r_z):
            raise ContourError(f"Invalid circles r_w={r_w}, r_z={r_z}")
        self.r_w = r_w
        self.r_z = r_z
        self.nodes = nodes

    def scaled(self, w_factor: float, z_factor: float) -> "ContourSpec":
        return ContourSpec(self.r_w * w_factor, self.r_z * z_factor, self.nodes)

    def __repr__(self) -> str:
        return f"ContourSpec(r_w={self.r_w:.6g}, r_z={self.r_z:.6g}, nodes={self.nodes})"


class PoleSets(NamedTuple):
    """
    Exponents j of the points q^j where the walk-kernel integrand is singular
    or where a pole has been cancelled.
    """

    z_outside: list[int]
    z_inside_from: int
    z_cancelled: list[int]
    w_poles: list[int]


def _check_walk_domain(pt1: SpaceTimePoint, pt2: SpaceTimePoint):
    if pt1.t < 0 or pt2.t < 1:
        raise ContourError(
            f"Walk kernel needs t1 >= 0 and t2 >= 1, got t1={pt1.t}, t2={pt2.t}"
        )


def walk_pole_sets(x: Sequence[int], pt1: SpaceTimePoint, pt2: SpaceTimePoint) -> PoleSets:
    """
    Pole bookkeeping in integer exponents. The z-poles q^j, j >= 0, of
    1/(z^{-1};q)_inf survive unless cancelled by a zero of the numerator
    (j = y2+1..y2+t2-1) or of the x-product (j = x_r); those with
    j >= y2+t2 sit inside the z-circle. The w-poles q^k, k = y1..y1+t1,
    survive when k is negative or k is one of the x_r.
    """
    _check_walk_domain(pt1, pt2)
    holes = set(x)
    numerator_zeros = set(range(pt2.y + 1, pt2.y + pt2.t))
    z_outside = [j for j in range(0, pt2.y + 1) if j not in holes]
    z_cancelled = sorted(
        j for j in holes | numerator_zeros if j >= 0 and j not in z_outside
    )
    w_poles = [k for k in range(pt1.y, pt1.y + pt1.t + 1) if k < 0 or k in holes]
    return PoleSets(z_outside, pt2.y + pt2.t, z_cancelled, w_poles)


def classify_poles(
    x: Sequence[int], pt1: SpaceTimePoint, pt2: SpaceTimePoint, q: float
) -> ContourSpec:
    """
    Circles for the walk kernel. All radii are q to a non-integer power so no
    quadrature node lands on a cancelled singularity.
    """
    check_q(q)
    poles = walk_pole_sets(x, pt1, pt2)
    inside = poles.z_inside_from
    if poles.z_outside:
        z_exponent = math.floor((inside + max(poles.z_outside)) / 2) + 0.5
    else:
        z_exponent = inside - 0.5
    w_exponent = max(pt1.y + pt1.t, max(x)) + 0.5
    if w_exponent <= z_exponent:
        w_exponent = z_exponent + 0.25
    spec = ContourSpec(q**w_exponent, q**z_exponent)
    logger.debug("Walk kernel circles for %s, %s: %s", pt1, pt2, spec)
    return spec


def _walk_integral_residues(
    y1: int, t1: int, y2: int, t2: int, x: Sequence[int], q: float, dps: int
) -> complex:
    """
    (1/(2 pi i)^2) oint oint of the walk-kernel integrand as a finite sum of
    residues outside the circles. The (q;q)_inf factors cancel between the
    z- and w-residues and are left out.
    """
    holes = sorted(set(x))
    with mp.workdps(dps):
        base = mp.mpf(q)

        def power(exponent: int):
            return base**exponent

        def holes_product(exponent: int):
            return mp.fprod(1 - power(r - exponent) for r in holes if r != exponent)

        def window_product(exponent: int):
            return mp.fprod(
                1 - power(exponent + i - y1 - t1)
                for i in range(t1 + 1)
                if i != y1 + t1 - exponent
            )

        def regular_tail(exponent: int):
            # (q^{-k};q)_inf / (q;q)_inf with the vanishing factor removed
            if exponent >= 0:
                return mp.qp(power(-exponent), base, exponent)
            return 1 / mp.qp(base, base, -exponent - 1)

        q_t1 = mp.qp(base, base, t1)
        q_t2 = mp.qp(base, base, t2 - 1)
        w_poles = [k for k in range(y1, y1 + t1 + 1) if k < 0 or k in holes]
        w_residues = {
            k: -power(k * (1 + t1)) * q_t1 * regular_tail(k) / (window_product(k) * holes_product(k))
            for k in w_poles
        }
        total = mp.mpf(0)
        for j in range(0, y2 + 1):
            if j in holes:
                continue
            z_residue = (
                power(j * (1 - t2))
                * mp.qp(power(j + 1 - y2 - t2), base, t2 - 1)
                / q_t2
                * holes_product(j)
                / mp.qp(power(-j), base, j)
            )
            inner = mp.fsum(w_residues[k] / (power(k) - power(j)) for k in w_poles)
            if y1 <= j <= y1 + t1:
                inner += (
                    -power(j * t1) * q_t1 * regular_tail(j) / (window_product(j) * holes_product(j))
                )
            total += z_residue * inner
        return complex(total)


def _walk_integrand(
    y1: int,
    t1: int,
    y2: int,
    t2: int,
    x: Sequence[int],
    q: float,
    qpoch_tol: float = QPOCH_INF_TOL,
) -> tuple:
    """f(w) and g(z) with the walk-kernel integrand equal to f(w) g(z) / (w - z)"""
    parts = np.array(sorted(x), dtype=float)
    q_t1 = qpoch(q, q, t1)
    q_t2 = qpoch(q, q, t2 - 1)

    def f_w(w: np.ndarray) -> np.ndarray:
        holes = np.prod(1 - q**parts[None, :] / w[:, None], axis=1)
        return (
            w**t1
            * q_t1
            / qpoch(w * q ** (-y1 - t1), q, t1 + 1)
            * qpoch_inf(1 / w, q, qpoch_tol)
            / holes
        )

    def g_z(z: np.ndarray) -> np.ndarray:
        holes = np.prod(1 - q**parts[None, :] / z[:, None], axis=1)
        return (
            z ** (-t2)
            * qpoch(z * q ** (1 - y2 - t2), q, t2 - 1)
            / q_t2
            * holes
            / qpoch_inf(1 / z, q, qpoch_tol)
        )

    return f_w, g_z


def _walk_integral(
    y1: int,
    t1: int,
    y2: int,
    t2: int,
    x: Sequence[int],
    q: float,
    tol: float,
    method: str,
    node_cap: int,
    contour: Optional[ContourSpec],
    dps: int,
    dps_cap: int,
    qpoch_tol: float = QPOCH_INF_TOL,
) -> complex:
    """The double contour integral shared by the walk kernel and the limit lozenge kernel"""
    if method == Method.RESIDUES:

        @refine_until_converged(dps, dps_cap, tol, label="residue working precision")
        def at_precision(digits: int) -> complex:
            return _walk_integral_residues(y1, t1, y2, t2, x, q, digits)

        return at_precision()
    if method != Method.QUADRATURE:
        raise DomainError(f"Unknown kernel method {method}")
    pt1, pt2 = SpaceTimePoint(y1, t1), SpaceTimePoint(y2, t2)
    contour = contour or classify_poles(x, pt1, pt2, q)
    f_w, g_z = _walk_integrand(y1, t1, y2, t2, x, q, qpoch_tol)
    return double_contour(f_w, g_z, contour.r_w, contour.r_z, tol, node_cap, contour.nodes)


def walk_discrete_term(pt1: SpaceTimePoint, pt2: SpaceTimePoint, q: float) -> float:
    (y1, t1), (y2, t2) = pt1, pt2
    value = float(t1 == t2 and y1 == y2)
    if t2 > t1 and y2 + t2 > y1 + t1:
        value -= (
            q ** ((t1 - t2) * (y1 + t1))
            * qpoch(q ** (y1 - y2 + t1 - t2 + 1), q, t2 - t1 - 1)
            / qpoch(q, q, t2 - t1 - 1)
        )
    return value


def kernel_walks(
    pt1: SpaceTimePoint,
    pt2: SpaceTimePoint,
    x: Sequence[int],
    q: float,
    tol: float = DEFAULT_TOL,
    method: str = Method.QUADRATURE,
    node_cap: int = NODE_CAP,
    contour: Optional[ContourSpec] = None,
    dps: int = MP_DPS,
    dps_cap: int = MP_DPS_CAP,
    qpoch_tol: float = QPOCH_INF_TOL,
) -> complex:
    """
    Correlation kernel of the walks started from x: indicator terms minus
    q^{-t1-y1} times the double contour integral.
    """
    check_q(q)
    pt1, pt2 = SpaceTimePoint(*pt1), SpaceTimePoint(*pt2)
    _check_walk_domain(pt1, pt2)
    integral = _walk_integral(
        pt1.y, pt1.t, pt2.y, pt2.t, x, q, tol, method, node_cap, contour, dps, dps_cap, qpoch_tol
    )
    return walk_discrete_term(pt1, pt2, q) - q ** (-pt1.t - pt1.y) * integral


def kernel_loz_lim(
    pt1: tuple[int, int],
    pt2: tuple[int, int],
    x: Sequence[int],
    q: float,
    tol: float = DEFAULT_TOL,
    method: str = Method.QUADRATURE,
    node_cap: int = NODE_CAP,
    contour: Optional[ContourSpec] = None,
    dps: int = MP_DPS,
    dps_cap: int = MP_DPS_CAP,
    qpoch_tol: float = QPOCH_INF_TOL,
) -> complex:
    """
    N -> infinity limit of the gauged lozenge kernel at rows N - t1, N - t2;
    points are (p, t).
    """
    check_q(q)
    (p1, t1), (p2, t2) = pt1, pt2
    _check_walk_domain(SpaceTimePoint(p1 - t1, t1), SpaceTimePoint(p2 - t2, t2))
    value = 0.0
    if t2 > t1 and p2 > p1:
        value = (
            q ** (-t2 * (p1 - p2))
            * qpoch(q ** (p1 - p2 + 1), q, t2 - t1 - 1)
            / qpoch(q, q, t2 - t1 - 1)
        )
    integral = _walk_integral(
        p1 - t1, t1, p2 - t2, t2, x, q, tol, method, node_cap, contour, dps, dps_cap, qpoch_tol
    )
    return value + q ** (p2 * t2 - p1 * t1 - p1) * integral


def complementation_gauge(pt1: SpaceTimePoint, pt2: SpaceTimePoint, q: float) -> float:
    """q^{t1(t1+y1) - t2(t2+y2)}, relating the walk and limit lozenge kernels"""
    return q ** (pt1.t * (pt1.t + pt1.y) - pt2.t * (pt2.t + pt2.y))


def gauss_qhyp(n1: int, N: int, q: float, arg: complex) -> complex:
    """
    Terminating 2phi1(q^-1, q^{n1-1}; q^{N-1} | q^-1; arg)
    = sum_{j<n1} (q^{n1-j};q)_j / (q^{N-j};q)_j arg^j.
    """
    check_q(q)
    if not 1 <= n1 <= N:
        raise DomainError(f"2phi1 needs 1 <= n1 <= N, got n1={n1}, N={N}")
    return sum(
        qpoch(q ** (n1 - j), q, j) / qpoch(q ** (N - j), q, j) * arg**j for j in range(n1)
    )


def q_n_function(w: complex, N: int, t1: int, p1: int, q: float) -> complex:
    """(q^{N-1};q^-1)_{t1} q^{-N p1} w^N 2phi1(...; w^-1 q^{p1}) with n1 = N - t1"""
    prefactor = qpoch(q ** (N - t1), q, t1)
    return prefactor * q ** (-N * p1) * w**N * gauss_qhyp(N - t1, N, q, q**p1 / w)


def q_n_limit(w: complex, t1: int, p1: int, q: float) -> complex:
    """(w/q^{p1})^{t1+1} (q;q)_{t1} / (w q^{-p1};q)_{t1+1}"""
    scaled = w * q ** (-p1)
    return scaled ** (t1 + 1) * qpoch(q, q, t1) / qpoch(scaled, q, t1 + 1)


def _check_loz_domain(pt1: LozengePoint, pt2: LozengePoint, N: int):
    if not (1 <= pt1.n <= N and 1 <= pt2.n <= N - 1):
        raise ContourError(
            f"Lozenge kernel needs 1 <= n1 <= N and 1 <= n2 <= N-1, got n1={pt1.n}, n2={pt2.n}, N={N}"
        )


def loz_discrete_term(pt1: LozengePoint, pt2: LozengePoint, q: float) -> float:
    (p1, n1), (p2, n2) = pt1, pt2
    if n2 < n1 and p2 <= p1:
        return -(
            q ** (n2 * (p1 - p2))
            * qpoch(q ** (p1 - p2 + 1), q, n1 - n2 - 1)
            / qpoch(q, q, n1 - n2 - 1)
        )
    return 0.0


def classify_loz_poles(pt1: LozengePoint, pt2: LozengePoint, q: float) -> ContourSpec:
    """
    z encloses q^{lambda_r - r - p1} for lambda_r - r >= p2 only; w goes
    around 0 and the z-circle.
    """
    r_z = q ** (pt2.p - pt1.p - 0.5)
    return ContourSpec(r_z * q**-0.5, r_z)


def _loz_integral_residues(
    pt1: LozengePoint, pt2: LozengePoint, lam: Sequence[int], q: float, dps: int
) -> complex:
    """
    Finite lozenge kernel integral: the w-integral extracts a Laurent
    coefficient, the z-integral sums residues at the enclosed q^{lambda_s - s - p1}.
    """
    (p1, n1), (p2, n2) = pt1, pt2
    N = len(lam)
    with mp.workdps(dps):
        base = mp.mpf(q)
        shifted = [part - r for r, part in enumerate(lam, start=1)]
        poles = [base ** (e - p1) for e in shifted]
        series = [
            mp.qp(base ** (n1 - j), base, j) / mp.qp(base ** (N - j), base, j) for j in range(n1)
        ]
        q_norm = mp.qp(base, base, N - n2 - 1)
        total = mp.mpf(0)
        for s, e in enumerate(shifted):
            if e < p2:
                continue
            pole = poles[s]
            others = poles[:s] + poles[s + 1 :]
            coefficients = [mp.mpf(1)]
            for other in others:
                # multiply by (w - other), coefficients in ascending powers
                coefficients = [
                    (coefficients[i - 1] if i > 0 else 0)
                    - other * (coefficients[i] if i < len(coefficients) else 0)
                    for i in range(len(coefficients) + 1)
                ]
            weight = mp.fsum(series[j] * coefficients[j] for j in range(min(n1, len(coefficients))))
            denominator = mp.fprod(pole - other for other in others)
            numerator = mp.qp(pole * base ** (1 - p2 + p1), base, N - n2 - 1) / q_norm
            total += pole**n2 * numerator * weight / denominator
        prefactor = mp.qp(base**n1, base, N - n1) * base ** (n2 * (p1 - p2))
        return complex(prefactor * total)


def kernel_loz(
    pt1: LozengePoint,
    pt2: LozengePoint,
    lam: Partition,
    q: float,
    tol: float = DEFAULT_TOL,
    method: str = Method.QUADRATURE,
    node_cap: int = NODE_CAP,
    contour: Optional[ContourSpec] = None,
    dps: int = MP_DPS,
    dps_cap: int = MP_DPS_CAP,
) -> complex:
    """Correlation kernel of the particle array of q^{-volume} tilings with top row lam"""
    check_q(q)
    pt1, pt2 = LozengePoint(*pt1), LozengePoint(*pt2)
    parts = tuple(lam)
    N = len(parts)
    _check_loz_domain(pt1, pt2, N)
    discrete = loz_discrete_term(pt1, pt2, q)
    if method == Method.RESIDUES:

        @refine_until_converged(dps, dps_cap, tol, label="lozenge residue working precision")
        def at_precision(digits: int) -> complex:
            return _loz_integral_residues(pt1, pt2, parts, q, digits)

        return discrete + at_precision()
    if method != Method.QUADRATURE:
        raise DomainError(f"Unknown kernel method {method}")
    (p1, n1), (p2, n2) = pt1, pt2
    poles = q ** (np.array(parts, dtype=float) - np.arange(1, N + 1) - p1)
    q_norm = qpoch(q, q, N - n2 - 1)

    def f_w(w: np.ndarray) -> np.ndarray:
        products = np.prod(w[:, None] - poles[None, :], axis=1)
        return gauss_qhyp(n1, N, q, 1 / w) * products / w

    def g_z(z: np.ndarray) -> np.ndarray:
        products = np.prod(z[:, None] - poles[None, :], axis=1)
        return z**n2 * qpoch(z * q ** (1 - p2 + p1), q, N - n2 - 1) / q_norm / products

    contour = contour or classify_loz_poles(pt1, pt2, q)
    integral = double_contour(f_w, g_z, contour.r_w, contour.r_z, tol, node_cap, contour.nodes)
    prefactor = qpoch(q**n1, q, N - n1) * q ** (n2 * (p1 - p2))
    return discrete + prefactor * integral


def gauged_loz(
    pt1: tuple[int, int],
    pt2: tuple[int, int],
    lam: Partition,
    q: float,
    **kwargs,
) -> complex:
    """q^{N(p2-p1)} K_loz(p1, N-t1; p2, N-t2) for points given as (p, t)"""
    (p1, t1), (p2, t2) = pt1, pt2
    N = len(tuple(lam))
    value = kernel_loz(LozengePoint(p1, N - t1), LozengePoint(p2, N - t2), lam, q, **kwargs)
    return value * math.exp(N * (p2 - p1) * math.log(q))


def residue_coefficient(
    p1: int, p2: int, t1: int, t2: int, N: int, q: float, dps: int = MP_DPS * 2
) -> float:
    """
    Coefficient of w^{-(N-1)} in the product of the two Laurent polynomials.
    The alternating q-binomial expansion cancels heavily, so the
    convolution runs in mpmath.
    """
    check_q(q)
    if not 0 <= t1 <= N - 1 or t2 < 1:
        raise DomainError(f"Need 0 <= t1 <= N-1 and t2 >= 1, got t1={t1}, t2={t2}, N={N}")
    with mp.workdps(dps):
        base = mp.mpf(q)

        def q_binomial(n: int, k: int):
            return mp.qp(base, base, n) / (mp.qp(base, base, k) * mp.qp(base, base, n - k))

        series = [
            base ** (p1 * j) * mp.qp(base ** (N - t1 - j), base, j) / mp.qp(base ** (N - j), base, j)
            for j in range(N - t1)
        ]
        expansion = [
            (-1) ** j * base ** ((p2 - t2 + 1) * j + j * (j - 1) // 2) * q_binomial(t2 - 1, j)
            for j in range(t2)
        ]
        k = N - 1
        return float(
            mp.fsum(
                series[j] * expansion[k - j]
                for j in range(len(series))
                if 0 <= k - j < len(expansion)
            )
        )


def residue_closed_form(p1: int, p2: int, t1: int, t2: int, N: int, q: float) -> float:
    if t2 <= t1:
        return 0.0
    exponent = p1 * (N - 1 - t1) + t1 * (t1 - 1) // 2 + (p2 - t2 + 1) * t1
    return (
        (-1) ** t1
        * qpoch(q ** (t2 - t1), q, t1)
        / qpoch(q ** (N - t1), q, t1)
        * q**exponent
        * qpoch(q ** (t1 - p1 + p2 - t2 + 1), q, t2 - t1 - 1)
    )


def residue_identity_check(p1: int, p2: int, t1: int, t2: int, N: int, q: float) -> float:
    """|Laurent coefficient - closed form| for the w = z residue of the lozenge kernel"""
    return abs(
        residue_coefficient(p1, p2, t1, t2, N, q) - residue_closed_form(p1, p2, t1, t2, N, q)
    )


def kernel_matrix(
    points: Sequence[SpaceTimePoint],
    x: Sequence[int],
    q: float,
    threads: int = 1,
    **kwargs,
) -> np.ndarray:
    """[K_walks(pt_i, pt_j)], entries evaluated on a thread pool"""
    pairs = [(i, j) for i in range(len(points)) for j in range(len(points))]
    values = joblib.Parallel(n_jobs=threads, prefer="threads")(
        joblib.delayed(kernel_walks)(points[i], points[j], x, q, **kwargs) for i, j in pairs
    )
    matrix = np.zeros((len(points), len(points)), dtype=complex)
    for (i, j), value in zip(pairs, values):
        matrix[i, j] = value
    return matrix


def correlation_det(
    points: Sequence[SpaceTimePoint],
    x: Sequence[int],
    q: float,
    threads: int = 1,
    **kwargs,
) -> float:
    """
    Probability that the walks visit every (y, t) in `points`. Points at
    t = 0 are read off the initial configuration.
    """
    points = [SpaceTimePoint(*point) for point in points]
    if len(set(points)) != len(points):
        raise DomainError(f"Correlation points must be distinct, got {points}")
    later = []
    for point in points:
        if point.t == 0:
            if point.y not in set(x):
                return 0.0
        else:
            later.append(point)
    if not later:
        return 1.0
    determinant = np.linalg.det(kernel_matrix(later, x, q, threads, **kwargs))
    logger.debug("Correlation determinant at %s has imaginary part %.3e", later, abs(determinant.imag))
    return float(determinant.real)


def loz_correlation_det(
    points: Sequence[LozengePoint],
    lam: Partition,
    q: float,
    threads: int = 1,
    **kwargs,
) -> float:
    """Probability that the particle array of a random tiling contains every (p, n)"""
    points = [LozengePoint(*point) for point in points]
    if len(set(points)) != len(points):
        raise DomainError(f"Correlation points must be distinct, got {points}")
    if not points:
        return 1.0
    pairs = [(a, b) for a in points for b in points]
    values = joblib.Parallel(n_jobs=threads, prefer="threads")(
        joblib.delayed(kernel_loz)(a, b, lam, q, **kwargs) for a, b in pairs
    )
    matrix = np.array(values, dtype=complex).reshape(len(points), len(points))
    return float(np.linalg.det(matrix).real)


def gauge_transform(matrix: np.ndarray, factors: Sequence[complex]) -> np.ndarray:
    """K(a_i, a_j) -> f(a_i) / f(a_j) K(a_i, a_j)"""
    factors = np.asarray(factors)
    return factors[:, None] / factors[None, :] * matrix
