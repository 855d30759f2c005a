"""Exception types shared across the package."""

from __future__ import annotations

from typing import Any


class ContractViolation(ValueError):
    """An operation was called with inputs outside its precondition."""


class ConfigError(ValueError):
    """Invalid user-facing configuration (session config, CLI flags, bit files)."""


class SessionAborted(Exception):
    """A decoy check failed; the parties halt the session.

    Carries the name of the failing transmission and its check report.
    """

    def __init__(self, step: str, report: Any):
        super().__init__(f"security check failed in {step}: {report}")
        self.step = step
        self.report = report
