"""
Lozenge tilings of sawtooth polygons with q^{-volume} weights: principal
Schur specializations, the top-row transition law, the boundary encoding
that links tilings to the walks, and exhaustive enumeration for small N.
"""
from __future__ import annotations

import itertools
import logging
import math
from typing import Any, Iterator, Optional, Sequence

import mpmath as mp
import numpy as np

from qwalks.src.errors import DomainError, EncodingError
from qwalks.src.qcalc import check_q
from qwalks.src.serializable import Serializable
from qwalks.src.walks import WalkConfig, transition_prob

logger = logging.getLogger(__name__)

ENUMERATION_MAX_N = 6
PRINCIPAL_DPS = 30


class Partition(Serializable):
    """Weakly decreasing nonnegative N-tuple"""

    def __init__(self, parts: Sequence[int]):
        parts = tuple(int(part) for part in parts)
        if any(part < 0 for part in parts) or any(
            upper < lower for upper, lower in zip(parts, parts[1:])
        ):
            raise DomainError(f"Not a partition: {parts}")
        self.parts = parts

    @property
    def N(self) -> int:
        return len(self.parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    @property
    def shifted(self) -> list[int]:
        """lambda_i - i for i = 1..N"""
        return [part - i for i, part in enumerate(self.parts, start=1)]

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __getitem__(self, index: int) -> int:
        return self.parts[index]

    def __hash__(self) -> int:
        return hash(self.parts)

    def serialize(self) -> list[int]:
        return list(self.parts)

    @classmethod
    def deserialize(cls, parts: Sequence[int]) -> "Partition":
        return cls(parts)


def interlaces(lower: Sequence[int], upper: Sequence[int]) -> bool:
    """upper_1 >= lower_1 >= upper_2 >= ... >= lower_{N-1} >= upper_N"""
    if len(lower) != len(upper) - 1:
        return False
    return all(upper[i] >= lower[i] >= upper[i + 1] for i in range(len(lower)))


class InterlacingPair:
    """mu < lambda, two consecutive rows of a tiling"""

    def __init__(self, lower: Partition, upper: Partition):
        if not interlaces(lower, upper):
            raise DomainError(f"{lower.parts} does not interlace with {upper.parts}")
        self.lower = lower
        self.upper = upper


def log_schur_principal(lam: Sequence[int], N: int, q: float) -> float:
    """log s_lambda(q^{1-N}, ..., q^{-1}, 1)"""
    check_q(q)
    parts = np.array(tuple(lam), dtype=float)
    if len(parts) != N:
        raise DomainError(f"Partition {tuple(lam)} does not have length {N}")
    if N <= 1:
        return 0.0
    first, second = np.triu_indices(N, k=1)
    shifted = parts - np.arange(1, N + 1)
    # each factor is q^{lambda_j} (1 - q^{d_ij}) / (1 - q^{j-i})
    log_q = math.log(q)
    return float(
        parts.sum() * (1 - N) * log_q
        + np.sum(parts[second]) * log_q
        + np.sum(np.log1p(-(q ** (shifted[first] - shifted[second]))))
        - np.sum(np.log1p(-(q ** (second - first).astype(float))))
    )


def schur_principal(lam: Sequence[int], N: int, q: float) -> float:
    """
    s_lambda(q^{1-N}, ..., q^{-1}, 1) from its product form; the partition
    function of tilings with top row lambda.
    """
    return math.exp(log_schur_principal(lam, N, q))


def _principal_parts(lam: Sequence[int], N: int, q: float) -> tuple[int, mp.mpf]:
    """
    s_lambda(q^{1-N}, ..., 1) = q^exponent * exp(rest), the exponent kept as
    an exact integer and rest summed at `PRINCIPAL_DPS` digits.
    """
    parts = tuple(int(part) for part in lam)
    if len(parts) != N:
        raise DomainError(f"Partition {parts} does not have length {N}")
    exponent = sum(parts) * (1 - N) + sum(j * part for j, part in enumerate(parts))
    shifted = [part - i for i, part in enumerate(parts, start=1)]
    with mp.workdps(PRINCIPAL_DPS):
        base = mp.mpf(q)
        rest = mp.fsum(
            mp.log1p(-(base ** (shifted[i] - shifted[j])))
            - mp.log1p(-(base ** (j - i)))
            for i, j in itertools.combinations(range(N), 2)
        )
    return exponent, rest


def cond_prob_top_row(mu: Sequence[int], lam: Sequence[int], q: float) -> float:
    """
    Probability that row N-1 of a tiling is mu given row N is lambda:
    q^{-|mu|} s_mu(q^{2-N}, ..., 1) / s_lambda(q^{1-N}, ..., 1).
    """
    check_q(q)
    if not interlaces(mu, lam):
        return 0.0
    N = len(lam)
    mu_exponent, mu_rest = _principal_parts(mu, N - 1, q)
    lam_exponent, lam_rest = _principal_parts(lam, N, q)
    exponent = mu_exponent - lam_exponent - sum(mu)
    with mp.workdps(PRINCIPAL_DPS):
        return float(mp.mpf(q) ** exponent * mp.exp(mu_rest - lam_rest))


def encode_boundary(x: WalkConfig, y: WalkConfig, N: int) -> tuple[Partition, Partition]:
    """
    Top two rows of the tiling whose holes are the walk positions:
    {lambda_i - i} = {0..N+m-1} minus x and {mu_i - i} = {1..N+m-1} minus (y + 1).
    """
    m = len(x)
    if len(y) != m:
        raise DomainError(f"{x.parts} and {y.parts} differ in length")
    top = N + m - 1
    if N < 1 or x[0] > top or y[0] + 1 > top:
        raise EncodingError(
            f"N={N} is too small to encode x={x.parts}, y={y.parts}; need N >= {max(x[0], y[0] + 1) - m + 1}"
        )
    return _from_shifted(range(0, top + 1), set(x), N), _from_shifted(
        range(1, top + 1), {part + 1 for part in y}, N
    )


def _from_shifted(window: range, holes: set[int], N: int) -> Partition:
    """Partition whose values lambda_i - i fill `window` minus `holes`"""
    shifted = sorted((e for e in window if e not in holes), reverse=True)
    try:
        return Partition([e + i for i, e in enumerate(shifted, start=1)])
    except DomainError as err:
        raise EncodingError(f"Boundary encoding at N={N} is not a partition: {err}") from err


def top_row(x: WalkConfig, N: int) -> Partition:
    """lambda with {lambda_i - i} = {0..N+m-1} minus x"""
    top = N + len(x) - 1
    if N < 1 or x[0] > top:
        raise EncodingError(f"N={N} is too small for the top row of x={x.parts}")
    return _from_shifted(range(0, top + 1), set(x), N)


def decode_boundary(lam: Partition, m: int) -> WalkConfig:
    """Holes of {lambda_i - i} in {0..N+m-1}"""
    occupied = set(lam.shifted)
    return WalkConfig(
        sorted((e for e in range(0, lam.N + m) if e not in occupied), reverse=True)
    )


def convergence_to_walks(
    x: WalkConfig, y: WalkConfig, q: float, N_list: Sequence[int]
) -> list[float]:
    """|T_N(mu | lambda) - Y_m(x, y)| for each N"""
    target = transition_prob(x, y, q)
    errors = []
    for N in N_list:
        lam, mu = encode_boundary(x, y, N)
        errors.append(abs(cond_prob_top_row(mu, lam, q) - target))
        logger.debug("N=%d: top-row law differs from the walk by %.3e", N, errors[-1])
    return errors


def lower_rows(lam: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Every mu interlacing with lam"""
    ranges = [range(lam[i + 1], lam[i] + 1) for i in range(len(lam) - 1)]
    yield from itertools.product(*ranges)


def interlacing_arrays(lam: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Sequences (row 1, ..., row N) with row n < row n+1 and row N = lam"""
    lam = tuple(lam)
    if len(lam) == 1:
        yield (lam,)
        return
    for mu in lower_rows(lam):
        for below in interlacing_arrays(mu):
            yield below + (lam,)


def array_volume(array: Sequence[Sequence[int]]) -> int:
    """Sum of |row n| over n = 1..N-1"""
    return sum(sum(row) for row in array[:-1])


def schur_by_patterns(lam: Sequence[int], variables: Sequence[float]) -> float:
    """s_lambda(x_1..x_N) as a sum over Gelfand-Tsetlin patterns"""
    total = 0.0
    for array in interlacing_arrays(lam):
        sizes = [0] + [sum(row) for row in array]
        total += math.prod(
            variable ** (sizes[n + 1] - sizes[n]) for n, variable in enumerate(variables)
        )
    return total


class TilingEnsemble(Serializable):
    """
    All tilings with top row lambda and their q^{-volume} probabilities.
    The particles of row n are p_i^n = row_n[i] - i, i = 1..n.
    """

    def __init__(self, lam: Partition, q: float):
        self.logger = logging.getLogger(__name__)
        check_q(q)
        if lam.N > ENUMERATION_MAX_N:
            raise DomainError(
                f"Enumeration is limited to N <= {ENUMERATION_MAX_N}, got N={lam.N}"
            )
        self.lam = lam
        self.q = q
        self.arrays = list(interlacing_arrays(lam.parts))
        self.volumes = np.array([array_volume(array) for array in self.arrays])
        log_weights = -self.volumes * math.log(q)
        self.log_partition = float(np.logaddexp.reduce(log_weights))
        self.probabilities = np.exp(log_weights - self.log_partition)
        self.logger.debug("Enumerated %d tilings for top row %s", len(self.arrays), lam.parts)

    @property
    def partition_function(self) -> float:
        return math.exp(self.log_partition)

    @staticmethod
    def particles(row: Sequence[int]) -> set[int]:
        return {part - i for i, part in enumerate(row, start=1)}

    def correlation(self, points: Sequence[tuple[int, int]]) -> float:
        """Probability that every (p, n) in `points` holds a particle"""
        total = 0.0
        for array, probability in zip(self.arrays, self.probabilities):
            if all(p in self.particles(array[n - 1]) for p, n in points):
                total += probability
        return float(total)

    def serialize(self) -> list[dict[str, Any]]:
        return [
            {"array": [list(row) for row in array], "volume": int(volume), "prob": float(probability)}
            for array, volume, probability in zip(self.arrays, self.volumes, self.probabilities)
        ]

    @classmethod
    def deserialize(cls, lam: Sequence[int], q: float) -> "TilingEnsemble":
        return cls(Partition(lam), q)


def row_particle_range(lam: Partition, n: int) -> Optional[range]:
    """Positions row n can possibly occupy"""
    if not 1 <= n <= lam.N:
        return None
    return range(lam[-1] - n, lam[0])
