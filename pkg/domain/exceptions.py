#!/usr/bin/env python3
"""
🚨 WORKBENCH EXCEPTIONS
======================
Error hierarchy shared by every layer. The orchestrator maps each class to a
process exit code.

Domain-Driven Design: Domain-level error vocabulary.
"""

from typing import Optional


class WorkbenchError(Exception):
    """Base class for all workbench failures"""
    exit_code: int = 1


class ConfigError(WorkbenchError):
    """Bad configuration: unknown key, wrong type, missing input file"""
    exit_code = 2


class InvariantViolation(WorkbenchError):
    """A checked model or report invariant did not hold"""
    exit_code = 3


class DivergenceError(WorkbenchError):
    """Training produced a non-finite loss"""
    exit_code = 4

    def __init__(self, message: str, step: int, last_finite_loss: Optional[float] = None,
                 grad_norm: Optional[float] = None):
        super().__init__(message)
        self.step = step
        self.last_finite_loss = last_finite_loss
        self.grad_norm = grad_norm

    def diagnostic(self) -> str:
        """One-line diagnostic for logs"""
        last = f"{self.last_finite_loss:.4f}" if self.last_finite_loss is not None else "n/a"
        norm = f"{self.grad_norm:.4f}" if self.grad_norm is not None else "n/a"
        return f"diverged at step {self.step} (last finite loss {last}, grad norm {norm})"
