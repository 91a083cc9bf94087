"""
The noncolliding q-exchangeable walks: one-step and T-step single-walk
kernels, the Doob-transformed m-particle chain, its exact samplers,
trajectory volumes and the q^volume partition function.
"""
from __future__ import annotations

import itertools
import logging
import math
from typing import Any, Iterator, Optional, Sequence

import networkx as nx
import numpy as np
import scipy.special

from qwalks.src.constants import Sampler
from qwalks.src.errors import (
    ConsistencyError,
    DomainError,
    SingularMatrixError,
    StepCapError,
)
from qwalks.src.qcalc import check_q, log_qpoch_q, qbinom, qpoch
from qwalks.src.serializable import Serializable

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
ENUMERATION_CAP = 2**16
STEP_CAP = 10**6


class WalkConfig(Serializable):
    """
    Positions x_1 > x_2 > ... > x_m >= 0 of m particles.
    """

    def __init__(self, parts: Sequence[int]):
        parts = tuple(int(part) for part in parts)
        if not parts:
            raise DomainError("A configuration needs at least one particle")
        if parts[-1] < 0 or any(
            upper <= lower for upper, lower in zip(parts, parts[1:])
        ):
            raise DomainError(
                f"Configuration must be strictly decreasing and nonnegative, got {parts}"
            )
        self.parts = parts

    @classmethod
    def packed(cls, m: int) -> "WalkConfig":
        """The absorbing state (m-1, ..., 1, 0)"""
        return cls(range(m - 1, -1, -1))

    @property
    def m(self) -> int:
        return len(self.parts)

    @property
    def size(self) -> int:
        """|x| = sum of the positions"""
        return sum(self.parts)

    @property
    def is_absorbed(self) -> bool:
        return self.parts[0] == self.m - 1

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __getitem__(self, index: int) -> int:
        return self.parts[index]

    def __contains__(self, position: Any) -> bool:
        return position in self.parts

    def __hash__(self) -> int:
        return hash(self.parts)

    def serialize(self) -> list[int]:
        return list(self.parts)

    @classmethod
    def deserialize(cls, parts: Sequence[int]) -> "WalkConfig":
        return cls(parts)


class Trajectory(Serializable):
    """
    States y(0), y(1), ..., y(T_end) of one run; only the last one is packed.
    """

    def __init__(
        self, states: Sequence[WalkConfig], q: float, seed: Optional[int] = None
    ):
        states = [
            state if isinstance(state, WalkConfig) else WalkConfig(state)
            for state in states
        ]
        if not states:
            raise DomainError("A trajectory has at least its initial state")
        for before, after in zip(states, states[1:]):
            if before.is_absorbed:
                raise DomainError(f"Trajectory continues after absorption at {before.parts}")
            if len(before) != len(after) or any(
                b - a not in (0, 1) for b, a in zip(before, after)
            ):
                raise DomainError(f"Illegal step {before.parts} -> {after.parts}")
        if not states[-1].is_absorbed:
            raise DomainError(f"Trajectory ends at {states[-1].parts}, not the packed state")
        self.states = states
        self.q = q
        self.seed = seed

    @property
    def m(self) -> int:
        return self.states[0].m

    @property
    def absorption_time(self) -> int:
        return len(self.states) - 1

    def serialize(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "q": self.q,
            "x0": self.states[0].serialize(),
            "seed": self.seed,
            "states": [state.serialize() for state in self.states],
        }

    @classmethod
    def deserialize(cls, data: dict[str, Any]) -> "Trajectory":
        return cls(
            [WalkConfig(state) for state in data["states"]],
            q=data["q"],
            seed=data.get("seed"),
        )


class StepDistribution:
    """Law of the next configuration from `start`"""

    def __init__(self, start: WalkConfig, support: list[tuple[WalkConfig, float]]):
        total = sum(probability for _, probability in support)
        if any(probability < 0 for _, probability in support) or abs(total - 1) > 1e-12:
            raise ConsistencyError(
                f"Step law from {start.parts} is not a probability vector (sum {total!r})"
            )
        if len(support) > 2 ** start.m:
            raise ConsistencyError(f"Step law from {start.parts} has too many targets")
        self.start = start
        self.support = support

    @property
    def targets(self) -> list[WalkConfig]:
        return [target for target, _ in self.support]

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([probability for _, probability in self.support])


def step_prob_single(x: int, y: int, q: float) -> float:
    """One step of the single walk: stay with q^x, move down with 1 - q^x"""
    if y == x:
        return q**x
    if y == x - 1:
        return 1.0 - q**x
    return 0.0


def multi_step_single(x: int, y: int, T: int, q: float) -> float:
    """T-step transition probability of the single walk"""
    if not 0 <= y <= x or x - y > T:
        return 0.0
    return qpoch(q ** (y + 1), q, x - y) * q ** (y * (T - x + y)) * qbinom(T, x - y, q)


def independent_prob(x: Sequence[int], y: Sequence[int], q: float) -> float:
    """Product of single-walk step probabilities"""
    return math.prod(step_prob_single(a, b, q) for a, b in zip(x, y))


def log_h_eigen(x: Sequence[int], q: float) -> float:
    """
    log h_m(x) for strictly decreasing x; -inf when two positions coincide.
    """
    parts = np.array(tuple(x), dtype=float)
    m = len(parts)
    upper, lower = np.triu_indices(m, k=1)
    gaps = parts[upper] - parts[lower]
    if np.any(gaps <= 0):
        return -math.inf
    # q^{x_j} - q^{x_i} = q^{x_j} (1 - q^{x_i - x_j}) for i < j
    log_q = math.log(q)
    return float(
        -(m - 1) * parts.sum() * log_q
        + np.sum(parts[lower]) * log_q
        + np.sum(np.log1p(-(q**gaps)))
    )


def h_eigen(x: Sequence[int], q: float) -> float:
    """q-deformed Vandermonde q^{-(m-1)|x|} prod_{i<j} (q^{x_j} - q^{x_i})"""
    check_q(q)
    return math.exp(log_h_eigen(x, q))


def transition_prob(x: Sequence[int], y: Sequence[int], q: float) -> float:
    """
    One step of the m-particle chain,
    h(y) / (q^{m(m-1)/2} h(x)) times the independent-step probability.
    """
    check_q(q)
    if len(x) != len(y):
        raise DomainError(f"Configurations {tuple(x)} and {tuple(y)} differ in length")
    independent = independent_prob(x, y, q)
    if independent == 0.0:
        return 0.0
    log_target = log_h_eigen(y, q)
    if log_target == -math.inf:
        return 0.0
    m = len(x)
    log_ratio = log_target - log_h_eigen(x, q) - m * (m - 1) / 2 * math.log(q)
    return independent * math.exp(log_ratio)


def step_patterns(x: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All 2^m independent-step targets, colliding or negative ones included"""
    for steps in itertools.product((0, 1), repeat=len(x)):
        yield tuple(part - step for part, step in zip(x, steps))


def admissible_targets(x: Sequence[int]) -> list[WalkConfig]:
    """Targets reachable in one step of the noncolliding chain"""
    targets = []
    for pattern in step_patterns(x):
        if pattern[-1] >= 0 and all(a > b for a, b in zip(pattern, pattern[1:])):
            targets.append(WalkConfig(pattern))
    return targets


def eigen_residual(x: Sequence[int], q: float) -> float:
    """|sum_y h(y) Y_ind(x, y) - q^{m(m-1)/2} h(x)| over all step patterns"""
    check_q(q)
    m = len(x)
    total = 0.0
    for pattern in step_patterns(x):
        weight = independent_prob(x, pattern, q)
        if weight:
            total += math.exp(log_h_eigen(pattern, q)) * weight
    return abs(total - q ** (m * (m - 1) // 2) * h_eigen(x, q))


def step_distribution(x: WalkConfig, q: float) -> StepDistribution:
    support = [(target, transition_prob(x, target, q)) for target in admissible_targets(x)]
    return StepDistribution(x, [(target, p) for target, p in support if p > 0])


def _newton_rows(nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """
    Rows [p_0(u), ..., p_{m-1}(u)] with p_k(u) = prod_{l<k} (u - nodes[l]).
    The basis is monic, so the matrix has the Vandermonde determinant.
    """
    m = len(nodes)
    differences = values[:, None] - nodes[None, : m - 1]
    rows = np.ones((len(values), m))
    rows[:, 1:] = np.cumprod(differences, axis=1)
    return rows


def _determinant_step(x: WalkConfig, q: float, rng: np.random.Generator) -> WalkConfig:
    """
    Particle-by-particle exact sampler. The weight of y is a Vandermonde
    determinant times a product of per-particle factors; summing over the
    undecided particles mixes their rows, so each conditional law is a ratio
    of two m x m determinants.
    """
    m = x.m
    parts = np.array(x.parts, dtype=float)
    nodes = q**parts
    stay = _newton_rows(nodes, q**parts)
    down = _newton_rows(nodes, q ** (parts - 1))
    weights = np.column_stack([q**parts, (1.0 - q**parts) * q ** (m - 1)])
    rows = weights[:, :1] * stay + weights[:, 1:] * down
    steps = np.zeros(m, dtype=int)
    for i in range(m):
        log_weights = np.full(2, -np.inf)
        for step, candidate in enumerate((stay[i], down[i])):
            if weights[i, step] == 0.0:
                continue
            trial = rows.copy()
            trial[i] = candidate
            sign, log_det = np.linalg.slogdet(trial)
            if sign > 0:
                log_weights[step] = log_det + math.log(weights[i, step])
        if np.all(np.isinf(log_weights)):
            raise ConsistencyError(f"No admissible move for particle {i} from {x.parts}")
        p_down = scipy.special.expit(log_weights[1] - log_weights[0])
        steps[i] = int(rng.random() < p_down)
        rows[i] = down[i] if steps[i] else stay[i]
    return WalkConfig(np.array(x.parts) - steps)


def sample_step(
    x: WalkConfig,
    q: float,
    rng: np.random.Generator,
    sampler: str = Sampler.AUTO,
    enumeration_cap: int = ENUMERATION_CAP,
) -> WalkConfig:
    """Draw the next configuration of the chain started at x"""
    if x.is_absorbed:
        return x
    if sampler == Sampler.AUTO:
        sampler = Sampler.ENUMERATION if 2**x.m <= enumeration_cap else Sampler.DETERMINANT
    if sampler == Sampler.ENUMERATION:
        if 2**x.m > enumeration_cap:
            raise DomainError(
                f"Enumerating 2^{x.m} step patterns exceeds the cap {enumeration_cap}"
            )
        law = step_distribution(x, q)
        return law.targets[rng.choice(len(law.support), p=law.probabilities)]
    if sampler == Sampler.DETERMINANT:
        return _determinant_step(x, q, rng)
    raise DomainError(f"Unknown sampler {sampler}")


def sample_trajectory(
    x: WalkConfig,
    q: float,
    rng: np.random.Generator,
    step_cap: int = STEP_CAP,
    sampler: str = Sampler.AUTO,
    seed: Optional[int] = None,
    enumeration_cap: int = ENUMERATION_CAP,
) -> Trajectory:
    """Run the chain from x until it reaches the packed state"""
    check_q(q)
    states = [x]
    while not states[-1].is_absorbed:
        if len(states) > step_cap:
            raise StepCapError(
                f"No absorption from {x.parts} within {step_cap} steps at q={q}"
            )
        states.append(sample_step(states[-1], q, rng, sampler, enumeration_cap))
    return Trajectory(states, q=q, seed=seed)


def fastest_trajectory(x: WalkConfig) -> list[WalkConfig]:
    """Greedy all-down path: every particle moves whenever it may"""
    states = [x]
    while not states[-1].is_absorbed:
        parts = list(states[-1])
        nxt = [0] * len(parts)
        nxt[-1] = max(parts[-1] - 1, 0)
        for i in range(len(parts) - 2, -1, -1):
            nxt[i] = max(parts[i] - 1, nxt[i + 1] + 1)
        states.append(WalkConfig(nxt))
    return states


def minimal_excess(x: WalkConfig) -> int:
    """sum_{t>=1} (|y_min(t)| - |delta|) along the fastest trajectory"""
    floor = WalkConfig.packed(x.m).size
    return sum(state.size - floor for state in fastest_trajectory(x)[1:])


def volume(trajectory: Trajectory) -> int:
    """Boxes added on top of the fastest trajectory from the same start"""
    fastest = fastest_trajectory(trajectory.states[0])
    floor = fastest[-1].size
    total = 0
    for t, state in enumerate(trajectory.states[1:], start=1):
        minimal = fastest[t].size if t < len(fastest) else floor
        total += state.size - minimal
    return total


def trajectory_probability(trajectory: Trajectory) -> float:
    return math.prod(
        transition_prob(before, after, trajectory.q)
        for before, after in zip(trajectory.states, trajectory.states[1:])
    )


def partition_function(x: Sequence[int], q: float) -> float:
    """prod_i 1/(q;q)_{x_i} prod_{i<j} (1 - q^{x_i - x_j})"""
    check_q(q)
    parts = np.array(tuple(x), dtype=float)
    upper, lower = np.triu_indices(len(parts), k=1)
    log_value = -sum(log_qpoch_q(int(part), q) for part in parts) + np.sum(
        np.log1p(-(q ** (parts[upper] - parts[lower])))
    )
    return float(math.exp(log_value))


def state_graph(x: WalkConfig) -> nx.DiGraph:
    """Reachable configurations with an edge for every nontrivial move"""
    graph = nx.DiGraph()
    graph.add_node(x)
    frontier = [x]
    while frontier:
        state = frontier.pop()
        for target in admissible_targets(state):
            if target == state:
                continue
            if target not in graph:
                frontier.append(target)
            graph.add_edge(state, target)
    return graph


def volume_partition_sum(x: WalkConfig, q: float) -> float:
    """
    sum over all trajectories from x of q^volume, by a transfer recursion on
    the state graph; waiting at a state is summed as a geometric series.
    """
    check_q(q)
    graph = state_graph(x)
    floor = WalkConfig.packed(x.m).size
    totals: dict[WalkConfig, float] = {}
    for state in reversed(list(nx.topological_sort(graph))):
        if state.is_absorbed:
            totals[state] = 1.0
            continue
        incoming = sum(
            q ** (target.size - floor) * totals[target] for target in graph.successors(state)
        )
        totals[state] = incoming / (1.0 - q ** (state.size - floor))
    return totals[x] * q ** (-minimal_excess(x))


def enumerate_trajectories(x: WalkConfig, q: float, max_wait: int) -> Iterator[Trajectory]:
    """Every trajectory that waits at most `max_wait` steps at each state"""
    graph = state_graph(x)

    def extend(path: list[WalkConfig]) -> Iterator[list[WalkConfig]]:
        state = path[-1]
        if state.is_absorbed:
            yield path
            return
        for wait in range(max_wait + 1):
            stalled = path + [state] * wait
            for target in graph.successors(state):
                yield from extend(stalled + [target])

    for states in extend([x]):
        yield Trajectory(states, q=q)


def det_full_pivot(values: np.ndarray) -> float:
    """Determinant by Gaussian elimination with complete (row and column) pivoting"""
    work = np.array(values, dtype=float)
    if work.ndim != 2 or work.shape[0] != work.shape[1]:
        raise DomainError(f"Need a square matrix, got shape {work.shape}")
    determinant = 1.0
    for k in range(work.shape[0]):
        block = np.abs(work[k:, k:])
        row, col = np.unravel_index(np.argmax(block), block.shape)
        row, col = row + k, col + k
        if work[row, col] == 0.0:
            return 0.0
        if row != k:
            work[[k, row]] = work[[row, k]]
            determinant = -determinant
        if col != k:
            work[:, [k, col]] = work[:, [col, k]]
            determinant = -determinant
        determinant *= work[k, k]
        factors = work[k + 1 :, k] / work[k, k]
        work[k + 1 :, k:] -= np.outer(factors, work[k, k:])
    return float(determinant)


def km_ratio(x: Sequence[int], y: Sequence[int], T: int, q: float) -> float:
    """
    det[Y^(T-1)(y_i, m-j)] / det[Y^(T)(x_i, m-j)] for the independent
    single walks. Column c is scaled by q^{-cT} (resp. q^{-c(T-1)}) so the
    entries stay of order one; the scalings leave the factor q^{-m(m-1)/2}.
    """
    check_q(q)
    m = len(x)

    def matrix(parts: Sequence[int], steps: int) -> np.ndarray:
        values = np.zeros((m, m))
        for i, part in enumerate(parts):
            for j in range(m):
                c = m - 1 - j
                if 0 <= c <= part:
                    values[i, j] = (
                        qpoch(q ** (c + 1), q, part - c)
                        * q ** (c * (c - part))
                        * qbinom(steps, part - c, q)
                    )
        return values

    numerator, denominator = matrix(y, T - 1), matrix(x, T)
    for name, values in (("numerator", numerator), ("denominator", denominator)):
        condition = np.linalg.cond(values)
        if not condition < CONDITION_LIMIT:
            raise SingularMatrixError(
                f"Karlin-McGregor {name} matrix is singular at T={T} "
                f"(condition {condition:.3e}); increase T",
                condition=condition,
            )
    ratio = det_full_pivot(numerator) / det_full_pivot(denominator)
    return float(ratio * q ** (-m * (m - 1) / 2))


def km_limit(x: Sequence[int], y: Sequence[int], q: float) -> float:
    """Long-time limit of km_ratio, q^{-m(m-1)/2} h(y) / h(x)"""
    m = len(x)
    return math.exp(
        log_h_eigen(y, q) - log_h_eigen(x, q) - m * (m - 1) / 2 * math.log(q)
    )


class ReachableChain:
    """
    The chain restricted to the states reachable from a start; small enough
    for dense transition matrices when m and x_1 are small.
    """

    def __init__(self, x: WalkConfig, q: float):
        self.logger = logging.getLogger(__name__)
        check_q(q)
        self.start = x
        self.q = q
        self.states = sorted(state_graph(x).nodes, key=lambda state: state.parts, reverse=True)
        self.index = {state: i for i, state in enumerate(self.states)}
        size = len(self.states)
        self.matrix = np.zeros((size, size))
        for state in self.states:
            for target in admissible_targets(state):
                self.matrix[self.index[state], self.index[target]] = transition_prob(
                    state, target, q
                )
        self.logger.debug("Reachable chain from %s has %d states", x.parts, size)

    def occupation_mask(self, y: int) -> np.ndarray:
        """Which states hold a particle at position y"""
        return np.array([y in state for state in self.states])

    def joint_occupation(self, points: Sequence[tuple[int, int]]) -> float:
        """
        Exact probability that position y is occupied at time t for every
        (y, t) in `points`, by forward propagation with masking.
        """
        if not points:
            return 1.0
        horizon = max(t for _, t in points)
        distribution = np.zeros(len(self.states))
        distribution[self.index[self.start]] = 1.0
        for t in range(horizon + 1):
            if t > 0:
                distribution = distribution @ self.matrix
            for y, time in points:
                if time == t:
                    distribution = distribution * self.occupation_mask(y)
        return float(distribution.sum())

    def sample_paths(
        self, count: int, horizon: int, rng: np.random.Generator, chunk: int = 100_000
    ) -> np.ndarray:
        """State indices at times 0..horizon for `count` independent runs"""
        cumulative = np.cumsum(self.matrix, axis=1)
        cumulative[:, -1] = 1.0
        paths = np.empty((count, horizon + 1), dtype=np.int32)
        paths[:, 0] = self.index[self.start]
        for begin in range(0, count, chunk):
            end = min(begin + chunk, count)
            current = paths[begin:end, 0]
            for t in range(1, horizon + 1):
                draws = rng.random(end - begin)
                current = (draws[:, None] >= cumulative[current]).sum(axis=1)
                paths[begin:end, t] = current
        return paths

    def empirical_occupation(
        self, paths: np.ndarray, points: Sequence[tuple[int, int]]
    ) -> float:
        """Fraction of sampled runs that occupy every (y, t) in `points`"""
        hits = np.ones(len(paths), dtype=bool)
        for y, t in points:
            hits &= self.occupation_mask(y)[paths[:, t]]
        return float(hits.mean())
