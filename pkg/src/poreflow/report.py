"""Structured per-iteration convergence records shared by both solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ConvergenceReport:
    """Residual history of one iterative solve.

    ``history`` has one row per iteration and one column per named quantity;
    ``converged`` is True only if every convergence test passed at the final
    record.  A run stopped by the divergence guard sets ``diverged`` and
    carries the trigger in ``reason``.
    """

    columns: tuple[str, ...]
    history: np.ndarray
    converged: bool
    iterations: int
    diverged: bool = False
    reason: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.history = np.atleast_2d(np.asarray(self.history, dtype=float))
        if self.history.size == 0:
            self.history = self.history.reshape(0, len(self.columns))
        if self.history.shape[1] != len(self.columns):
            raise ValueError("history width does not match column names")

    def final(self) -> dict[str, float]:
        """Column -> value at the last recorded iteration."""
        if self.history.shape[0] == 0:
            return {}
        return dict(zip(self.columns, self.history[-1]))

    def series(self, column: str) -> np.ndarray:
        return self.history[:, self.columns.index(column)]
