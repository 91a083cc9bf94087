from qwalks.src.constants import Suite
from qwalks.src.suites.asymptotics_suites import BetaSuite, BulkSuite, FrozenBoundarySuite
from qwalks.src.suites.kernel_suites import (
    CorrelationsSuite,
    KernelConvergenceSuite,
    LozengeSuite,
    ParticleCountSuite,
    ResidueSuite,
)
from qwalks.src.suites.suite_base import Check, SuiteReport, ValidationSuite
from qwalks.src.suites.tilings_suites import TilingsSuite
from qwalks.src.suites.walks_suites import (
    EigenfunctionSuite,
    GibbsSuite,
    KarlinMcGregorSuite,
    StochasticitySuite,
)

SUITES: dict[str, type[ValidationSuite]] = {
    Suite.STOCHASTICITY: StochasticitySuite,
    Suite.EIGENFUNCTION: EigenfunctionSuite,
    Suite.GIBBS: GibbsSuite,
    Suite.KARLIN_MCGREGOR: KarlinMcGregorSuite,
    Suite.CORRELATIONS: CorrelationsSuite,
    Suite.LOZENGE: LozengeSuite,
    Suite.KERNEL_CONVERGENCE: KernelConvergenceSuite,
    Suite.RESIDUE: ResidueSuite,
    Suite.PARTICLE_COUNT: ParticleCountSuite,
    Suite.BULK: BulkSuite,
    Suite.FROZEN_BOUNDARY: FrozenBoundarySuite,
    Suite.BETA: BetaSuite,
    Suite.TILINGS: TilingsSuite,
}

__all__ = ["SUITES", "Check", "SuiteReport", "ValidationSuite"]
