"""
Checks of the tiling model: the conditional law of the top rows, its
convergence to the walk chain and the principal specialization of Schur
functions.
"""
from __future__ import annotations

import itertools

from qwalks.src.constants import Suite
from qwalks.src.suites.suite_base import Check, ValidationSuite
from qwalks.src.tilings import (
    Partition,
    TilingEnsemble,
    cond_prob_top_row,
    convergence_to_walks,
    lower_rows,
    schur_by_patterns,
    schur_principal,
)
from qwalks.src.walks import WalkConfig


class TilingsSuite(ValidationSuite):
    name = Suite.TILINGS

    x = (3, 1)
    targets = ((2, 1), (3, 1), (2, 0), (3, 0))
    q = 0.5
    sizes = (10, 20, 40, 60)
    roundoff = 1e-14

    tops = ((2, 1, 0), (3, 1, 0), (4, 2, 1, 0), (3, 3, 1, 0))
    qs = (0.5, 0.8)

    def convergence_checks(self) -> list[Check]:
        x = WalkConfig(self.x)
        checks = []
        for y in self.targets:
            errors = convergence_to_walks(x, WalkConfig(y), self.q, self.sizes)
            increase = max(later - earlier for earlier, later in zip(errors, errors[1:]))
            checks.append(Check(f"monotone y={y}", max(increase, 0.0), self.roundoff))
            checks.append(Check(f"N={self.sizes[-1]} y={y}", errors[-1], 1e-3))
        return checks

    def run_subclass(self) -> list[Check]:
        checks = self.convergence_checks()
        for lam, q in itertools.product(self.tops, self.qs):
            N = len(lam)
            total = sum(cond_prob_top_row(mu, lam, q) for mu in lower_rows(lam))
            checks.append(Check(f"row law sums lambda={lam} q={q}", abs(total - 1.0), 1e-12))
            exact = schur_principal(lam, N, q)
            patterns = schur_by_patterns(lam, [q ** (n - N) for n in range(1, N + 1)])
            checks.append(
                Check(f"product form vs patterns lambda={lam} q={q}", abs(patterns - exact) / exact, 1e-12)
            )
        for q in self.qs:
            ensemble = TilingEnsemble(Partition((2, 1, 0)), q)
            exact = schur_principal((2, 1, 0), 3, q)
            checks.append(
                Check(
                    f"sum of q^-volume (2, 1, 0) q={q}",
                    abs(ensemble.partition_function - exact) / exact,
                    1e-12,
                )
            )
        return checks
