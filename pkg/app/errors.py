"""Exception types shared across fracmem modules."""
from __future__ import annotations


class ValidationError(ValueError):
    """Input or configuration outside the admitted domain."""

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None) -> None:
        self.key = key
        self.line = line
        self.detail = message
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)


class ContractViolation(RuntimeError):
    """An operation was called with its preconditions broken."""


class NonFiniteFieldError(RuntimeError):
    def __init__(self, step: int) -> None:
        self.step = step
        super().__init__(
            f"field became non-finite at step {step}; "
            "reduce dt or increase dx (see the stability warning)"
        )


class FitError(ValueError):
    """The rational fit linear system could not be solved."""

    def __init__(self, gamma: float, alpha_order: int, beta_order: int, reason: str) -> None:
        self.gamma = gamma
        self.alpha_order = alpha_order
        self.beta_order = beta_order
        super().__init__(
            f"rational fit failed for gamma={gamma}, alpha={alpha_order}, beta={beta_order}: {reason}"
        )


class RejectedFitError(FitError):
    """The fitted denominator vanishes inside the constraint range.

    ``fit`` holds the solved coefficients for inspection.
    """

    def __init__(self, gamma: float, alpha_order: int, beta_order: int, reason: str, fit=None) -> None:
        super().__init__(gamma, alpha_order, beta_order, reason)
        self.fit = fit
