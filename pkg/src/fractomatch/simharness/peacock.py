"""
Two-sample two-dimensional Kolmogorov-Smirnov test (Peacock) with a
permutation p-value.
"""

from typing import Optional, Sequence

import numpy as np

from fractomatch.errors import ProtocolError

MIN_POINTS = 5
MIN_PERMUTATIONS = 99
DEFAULT_PERMUTATIONS = 999
_TIE_SLACK = 1e-12
# Corner-table cells per permutation batch.
CELL_BUDGET = 2 ** 20


class PeacockResult:
    def __init__(self, statistic: float, p_value: float, n_a: int, n_b: int, permutations: int):
        self.statistic = statistic
        self.p_value = p_value
        self.n_a = n_a
        self.n_b = n_b
        self.permutations = permutations

    def __repr__(self) -> str:
        return f"PeacockResult(D={self.statistic:.4f}, p={self.p_value:.4f}, n=({self.n_a}, {self.n_b}))"


def permutation_batch(shape: tuple) -> int:
    """Permutations per batch so each cumulative table stays within CELL_BUDGET cells."""
    nx, ny = shape
    return max(1, CELL_BUDGET // (nx * ny))


def _as_points(sample: Sequence, name: str) -> np.ndarray:
    points = np.asarray(sample, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ProtocolError(f"{name} must be a list of 2D points", {"shape": points.shape})
    if points.shape[0] < MIN_POINTS:
        raise ProtocolError(f"{name} needs at least {MIN_POINTS} points", {"n": points.shape[0]})
    if not np.all(np.isfinite(points)):
        raise ProtocolError(f"{name} has non-finite coordinates")
    return points


def _statistics(cell: np.ndarray, labels: np.ndarray, shape: tuple, n_a: int, n_b: int) -> np.ndarray:
    """
    D for each row of labels (True = sample a).

    Corners range over every pooled (x, y) coordinate combination; the four
    quadrant counts follow from the lower-left cumulative table.
    """
    nx, ny = shape
    batch = labels.shape[0]
    flat = cell[None, :] + (np.arange(batch) * nx * ny)[:, None]

    def cumulative(mask: np.ndarray) -> np.ndarray:
        counts = np.bincount(flat[mask], minlength=batch * nx * ny).reshape(batch, nx, ny)
        return counts.cumsum(axis=1).cumsum(axis=2)

    ll_a = cumulative(labels)
    ll_b = cumulative(~labels)
    stats = np.zeros(batch)
    x_a, y_a = ll_a[:, :, -1:], ll_a[:, -1:, :]
    x_b, y_b = ll_b[:, :, -1:], ll_b[:, -1:, :]
    quadrants_a = (ll_a, x_a - ll_a, y_a - ll_a, n_a - x_a - y_a + ll_a)
    quadrants_b = (ll_b, x_b - ll_b, y_b - ll_b, n_b - x_b - y_b + ll_b)
    for qa, qb in zip(quadrants_a, quadrants_b):
        diff = np.abs(qa / n_a - qb / n_b).reshape(batch, -1).max(axis=1)
        stats = np.maximum(stats, diff)
    return stats


def peacock_test_2d(
    sample_a: Sequence,
    sample_b: Sequence,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: Optional[int] = None,
) -> PeacockResult:
    """
    Peacock two-sample 2D KS statistic and permutation p-value.

    The statistic depends on ranks only, so it is unchanged by any strictly
    increasing transform of either coordinate applied to both samples.

    Returns:
        PeacockResult with p = (1 + #{D_perm >= D}) / (1 + permutations)
    """
    a = _as_points(sample_a, "sample_a")
    b = _as_points(sample_b, "sample_b")
    if permutations < MIN_PERMUTATIONS:
        raise ProtocolError(f"At least {MIN_PERMUTATIONS} permutations are needed", {"permutations": permutations})

    pooled = np.vstack([a, b])
    n_a, n_b = a.shape[0], b.shape[0]
    x_values, x_rank = np.unique(pooled[:, 0], return_inverse=True)
    y_values, y_rank = np.unique(pooled[:, 1], return_inverse=True)
    shape = (x_values.size, y_values.size)
    cell = x_rank.ravel() * shape[1] + y_rank.ravel()

    observed_labels = np.zeros(n_a + n_b, dtype=bool)
    observed_labels[:n_a] = True
    statistic = float(_statistics(cell, observed_labels[None, :], shape, n_a, n_b)[0])

    rng = np.random.default_rng(seed)
    per_batch = permutation_batch(shape)
    exceed = 0
    done = 0
    while done < permutations:
        batch = min(per_batch, permutations - done)
        labels = np.stack([rng.permutation(observed_labels) for _ in range(batch)])
        perm_stats = _statistics(cell, labels, shape, n_a, n_b)
        exceed += int(np.sum(perm_stats >= statistic - _TIE_SLACK))
        done += batch

    p_value = (1.0 + exceed) / (1.0 + permutations)
    return PeacockResult(statistic, p_value, n_a, n_b, permutations)
