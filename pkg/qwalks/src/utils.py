"""
Utility functions for qwalks.
"""
from __future__ import annotations

import functools
import logging
from typing import Callable, Iterator

import numpy as np

from qwalks.src.constants import SIGNIFICANT_DIGITS
from qwalks.src.errors import NonConvergenceError


def refine_until_converged(
    initial: int,
    cap: int,
    tol: float,
    growth: int = 2,
    label: str = "refinement",
) -> Callable[[Callable[..., complex]], Callable[..., complex]]:
    """
    Call the wrapped function with a resolution parameter that grows
    geometrically (node counts, working precision) until two successive
    values agree within `tol`.

    The wrapped function takes the resolution as its first argument.
    """

    def decorator(func: Callable[..., complex]) -> Callable[..., complex]:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> complex:
            resolution = initial
            older = None
            previous = func(resolution, *args, **kwargs)
            while True:
                if resolution * growth > cap:
                    raise NonConvergenceError(
                        f"{label} did not converge within {tol:g} before reaching cap {cap}",
                        previous=older,
                        current=previous,
                    )
                resolution *= growth
                current = func(resolution, *args, **kwargs)
                difference = abs(current - previous)
                logging.debug(
                    "%s at resolution %d changed by %.3e", label, resolution, difference
                )
                if difference < tol:
                    return current
                older, previous = previous, current

        return wrapper

    return decorator


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """
    Counter-based generator for trajectory `index` of run `seed`; the
    stream depends only on the pair, so parallel runs reproduce serial ones.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(sequence))


def spawn_rngs(seed: int, count: int) -> Iterator[np.random.Generator]:
    """One independent stream per trajectory"""
    for index in range(count):
        yield trajectory_rng(seed, index)


def fmt(value: float) -> str:
    """Fixed significant-digit rendering used by every exporter"""
    return f"{float(value):.{SIGNIFICANT_DIGITS}g}"
