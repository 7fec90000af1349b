"""Storage-level grid built by iterating the contract's rate functions.

Four generator chains are run: down from b_max and from x0 via the
withdrawal rate, up from b_min and from x0 via the injection rate.  Their
union (clipped, endpoints forced, de-duplicated) forms the grid, so that a
full-rate move from a chain point lands on another grid point.  If the union
is shorter than the requested minimal length, the chains are re-run with the
rates scaled by 1/s for the smallest integer s that reaches the target.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .contract import StorageContract
from .errors import GridConstructionError

_MAX_CHAIN_POINTS = 2_000_000


@dataclass(frozen=True)
class StorageGrid:
    """Strictly increasing storage levels; endpoints are the capacity bounds."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.ndim != 1 or lv.size < 2:
            raise ValueError("grid needs at least two levels")
        if np.any(np.diff(lv) <= 0):
            raise ValueError("grid levels must be strictly increasing")
        object.__setattr__(self, "levels", lv)

    def __len__(self):
        return self.levels.size

    @property
    def b_min(self) -> float:
        return float(self.levels[0])

    @property
    def b_max(self) -> float:
        return float(self.levels[-1])

    def index_of(self, x: float, tol: float = 1e-6) -> int:
        """Index of the level equal to x (within tol); raises if absent."""
        i = int(np.argmin(np.abs(self.levels - x)))
        if abs(self.levels[i] - x) > tol:
            raise KeyError(f"level {x} is not on the grid")
        return i

    def nearest_index(self, x: float) -> int:
        return int(np.argmin(np.abs(self.levels - x)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "level"])
            for i, lv in enumerate(self.levels):
                w.writerow([i, f"{lv:.12g}"])

    def gap_histogram(self, n_bins: int = 20):
        """(bin_lo, bin_hi, count) rows over consecutive level gaps."""
        gaps = np.diff(self.levels)
        counts, edges = np.histogram(gaps, bins=n_bins)
        return [(float(edges[i]), float(edges[i + 1]), int(counts[i]))
                for i in range(n_bins)]


def _chain(start: float, rate, scale: float, b_min: float, b_max: float,
           merge_tol: float) -> list:
    """Iterate x -> x + scale*rate(x) until a capacity bound is reached.

    Stops early (without error) once the step falls below the merge
    tolerance, which happens when the rate vanishes toward a bound.  A rate
    of exactly zero at the start is a configuration error.
    """
    pts = [start]
    x = start
    for _ in range(_MAX_CHAIN_POINTS):
        step = float(rate(x)) * scale
        if step == 0.0:
            raise GridConstructionError(
                f"rate is zero at level {x:.6g}; the generator chain cannot advance")
        if abs(step) < merge_tol:
            return pts
        x = x + step
        if x <= b_min:
            pts.append(b_min)
            return pts
        if x >= b_max:
            pts.append(b_max)
            return pts
        pts.append(x)
    raise GridConstructionError(
        f"generator chain from {start:.6g} did not terminate")


def _dedupe(points: np.ndarray, protected: np.ndarray, merge_tol: float) -> np.ndarray:
    """Sort and merge points closer than merge_tol, keeping protected values exact."""
    merged = [points[0]]
    for v in points[1:]:
        if v - merged[-1] >= merge_tol:
            merged.append(v)
    merged = np.asarray(merged)
    for p in protected:
        i = int(np.argmin(np.abs(merged - p)))
        if merged[i] != p:
            if abs(merged[i] - p) <= merge_tol:
                merged[i] = p
            else:
                merged = np.insert(merged, np.searchsorted(merged, p), p)
    return np.unique(merged)


def build_grid(c: StorageContract, min_length: int,
               merge_tol: float | None = None) -> StorageGrid:
    """Build the generator-chain grid with at least min_length levels."""
    if min_length < 2:
        raise ValueError("min_length must be >= 2")
    if merge_tol is None:
        merge_tol = 1e-6 * (c.b_max - c.b_min)
    if merge_tol <= 0:
        raise ValueError("merge_tol must be > 0")
    protected = np.array([c.b_min, c.x0, c.b_max])
    for s in range(1, 1000):
        scale = 1.0 / s
        pts = []
        pts += _chain(c.b_max, c.rate_min, scale, c.b_min, c.b_max, merge_tol)
        pts += _chain(c.b_min, c.rate_max, scale, c.b_min, c.b_max, merge_tol)
        if c.b_min < c.x0 < c.b_max:
            pts += _chain(c.x0, c.rate_min, scale, c.b_min, c.b_max, merge_tol)
            pts += _chain(c.x0, c.rate_max, scale, c.b_min, c.b_max, merge_tol)
        pts += [c.b_min, c.x0, c.b_max]
        levels = _dedupe(np.sort(np.asarray(pts, dtype=float)), protected, merge_tol)
        if levels.size >= min_length:
            return StorageGrid(levels)
    raise GridConstructionError(
        f"could not reach min_length={min_length} levels by rate refinement")


def build_equidistant_grid(c: StorageContract, n_points: int) -> StorageGrid:
    """Equally spaced alternative grid (comparison baseline)."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    return StorageGrid(np.linspace(c.b_min, c.b_max, n_points))


def interpolate(grid: StorageGrid, values: np.ndarray, x):
    """Piecewise-linear interpolation of grid-sampled values at volume x."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != len(grid):
        raise ValueError("values vector length must equal the grid length")
    x = np.asarray(x, dtype=float)
    if np.any(x < grid.b_min - 1e-9) or np.any(x > grid.b_max + 1e-9):
        raise ValueError("x outside the capacity interval")
    out = np.interp(x, grid.levels, values)
    return float(out) if out.ndim == 0 else out
