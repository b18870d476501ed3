"""
Gated one-to-one assignment on a rectangular cost matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class Assignment:
    pairs: tuple
    unmatched_rows: tuple
    unmatched_cols: tuple

    def total_cost(self, cost) -> float:
        return float(sum(cost[r][c] for r, c in self.pairs))


def associate(cost, gate: float) -> Assignment:
    """
    Minimum-cost assignment over entries <= gate.

    Forbidden entries (above the gate, inf or NaN) are replaced by a cost
    larger than any complete allowed assignment, so the solver maximizes the
    number of allowed pairs first and their total cost second; forbidden
    pairs it is forced into are then dropped.

    Returns:
        Assignment: pairs (row, col) sorted by row, plus unmatched rows/cols
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        cost = cost.reshape(len(cost), -1) if cost.size else np.zeros((len(cost), 0))
    n_rows, n_cols = cost.shape
    if n_rows == 0 or n_cols == 0:
        return Assignment((), tuple(range(n_rows)), tuple(range(n_cols)))

    allowed = np.isfinite(cost) & (cost <= gate)
    big = gate * (min(n_rows, n_cols) + 1) + 1.0
    padded = np.where(allowed, cost, big)
    rows, cols = linear_sum_assignment(padded)

    pairs = tuple(sorted((int(r), int(c)) for r, c in zip(rows, cols) if allowed[r, c]))
    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_rows=tuple(r for r in range(n_rows) if r not in matched_rows),
        unmatched_cols=tuple(c for c in range(n_cols) if c not in matched_cols),
    )


def bev_distance_matrix(a_xy, b_xy) -> np.ndarray:
    a_xy = np.asarray(a_xy, dtype=float).reshape(-1, 2)
    b_xy = np.asarray(b_xy, dtype=float).reshape(-1, 2)
    return np.linalg.norm(a_xy[:, None, :] - b_xy[None, :, :], axis=-1)
