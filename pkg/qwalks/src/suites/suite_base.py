"""
Base class for validation suites. A suite runs a batch of named checks;
`run` handles timing, logging and turning library errors into failed checks.
"""
from __future__ import annotations

import logging
import time
from abc import ABC, abstractmethod
from typing import Any, NamedTuple, Optional

from qwalks.src.errors import QWalksError
from qwalks.src.options import Options
from qwalks.src.serializable import Serializable


class Check(NamedTuple):
    """One compared quantity: `value` must not exceed `threshold`"""

    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.value <= self.threshold


class SuiteReport(Serializable):
    def __init__(self, suite: str, checks: list[Check], seconds: float, error: Optional[str] = None):
        self.suite = suite
        self.checks = checks
        self.seconds = seconds
        self.error = error

    @property
    def passed(self) -> bool:
        return self.error is None and all(check.passed for check in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [check for check in self.checks if not check.passed]

    def serialize(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "error": self.error,
            "checks": [
                {"name": c.name, "value": c.value, "threshold": c.threshold, "passed": c.passed}
                for c in self.checks
            ],
        }

    @classmethod
    def deserialize(cls, data: dict[str, Any]) -> "SuiteReport":
        checks = [Check(c["name"], c["value"], c["threshold"]) for c in data["checks"]]
        return cls(data["suite"], checks, 0.0, data.get("error"))


class ValidationSuite(ABC):
    """
    One acceptance check over a fixed parameter grid.
    """

    name: str = ""
    slow: bool = False

    def __init__(self, options: Optional[Options] = None, seed: int = 0, threads: int = 1):
        self.options = options or Options()
        self.seed = seed
        self.threads = threads
        self.logger = logging.getLogger(f"{__name__}.{self.name}")

    @abstractmethod
    def run_subclass(self) -> list[Check]:
        """
        Evaluate the suite and return its checks.
        """

    def run(self) -> SuiteReport:
        """Run the suite; library errors end it as a failure with a message"""
        self.logger.info("Running suite %s", self.name)
        start = time.perf_counter()
        try:
            checks = self.run_subclass()
            error = None
        except QWalksError as err:
            self.logger.error("Suite %s aborted: %s", self.name, err, exc_info=True)
            checks, error = [], f"{err.__class__.__name__}: {err}"
        report = SuiteReport(self.name, checks, time.perf_counter() - start, error)
        self.logger.info(
            "Suite %s %s in %.2fs (%d checks, %d failed)",
            self.name,
            "passed" if report.passed else "failed",
            report.seconds,
            len(checks),
            len(report.failures),
        )
        return report
