"""Least-squares continuation estimators for the Monte Carlo backend.

For each stage and regime, next-stage values are regressed on monomials of
the current price, independently at every storage level (one multi-target
least-squares solve per regime).  Prices are standardized inside each regime
bucket before the monomials are built, which keeps the design matrix well
conditioned without changing the fitted predictions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError


@dataclass(frozen=True)
class BasisSpec:
    """Monomial basis 1, p, ..., p^degree with optional standardization."""

    degree: int = 3
    standardize: bool = True

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0")

    @property
    def n_functions(self) -> int:
        return self.degree + 1


@dataclass
class RegimeFit:
    """Fitted coefficients and diagnostics for one (stage, regime) bucket."""

    beta: np.ndarray            # (degree_used + 1, L)
    shift: float
    scale: float
    bucket_size: int
    degree_used: int
    condition: float
    fallback: bool


@dataclass
class StageFit:
    """Per-regime fits for one stage."""

    stage: int
    fits: dict                  # regime -> RegimeFit

    def covered(self, regime: int) -> bool:
        return regime in self.fits


class RegressionFit:
    """All stage fits of an LSMC run, keyed by stage index."""

    def __init__(self):
        self.stages: dict[int, StageFit] = {}

    def add(self, stage_fit: StageFit) -> None:
        self.stages[stage_fit.stage] = stage_fit

    def diagnostics_rows(self):
        rows = []
        for n in sorted(self.stages):
            for r, f in sorted(self.stages[n].fits.items()):
                rows.append((n, r, f.bucket_size, f.degree_used,
                             f.condition, int(f.fallback)))
        return rows

    def diagnostics_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stage", "regime", "bucket_size", "degree_used",
                        "condition", "fallback"])
            for row in self.diagnostics_rows():
                n, r, size, deg, cond, fb = row
                w.writerow([n, r, size, deg, f"{cond:.6g}", fb])


def _design_matrix(prices: np.ndarray, degree: int, shift: float,
                   scale: float) -> np.ndarray:
    t = (prices - shift) / scale
    return np.vander(t, degree + 1, increasing=True)


def fit_continuation(prices_n: np.ndarray, regimes_n: np.ndarray,
                     next_values: np.ndarray, stage: int,
                     basis: BasisSpec, num_regimes: int) -> StageFit:
    """Fit per-regime least-squares continuation functions at one stage.

    prices_n, regimes_n: per-path price and regime at the stage (M,);
    next_values: realized next-stage values, shape (L, M).  Buckets with
    fewer than 2 * (degree + 1) paths trigger a degree fallback, never a
    silent fit.  Solved by orthogonalization (SVD), not normal equations.
    """
    next_values = np.asarray(next_values, dtype=float)
    if not np.all(np.isfinite(next_values)):
        raise NumericError(f"non-finite regression targets at stage {stage}")
    out = StageFit(stage=stage, fits={})
    for r in range(num_regimes):
        sel = np.nonzero(regimes_n == r)[0]
        if sel.size == 0:
            continue
        pb = prices_n[sel]
        degree = basis.degree
        fallback = False
        while degree > 0 and sel.size < 2 * (degree + 1):
            degree -= 1
            fallback = True
        if basis.standardize:
            shift = float(pb.mean())
            scale = float(pb.std())
            if scale == 0.0:
                scale = 1.0
        else:
            shift, scale = 0.0, 1.0
        phi = _design_matrix(pb, degree, shift, scale)
        beta, *_ = np.linalg.lstsq(phi, next_values[:, sel].T, rcond=None)
        cond = float(np.linalg.cond(phi)) if phi.shape[0] >= phi.shape[1] else np.inf
        out.fits[r] = RegimeFit(beta=beta, shift=shift, scale=scale,
                                bucket_size=int(sel.size), degree_used=degree,
                                condition=cond, fallback=fallback)
    return out


def evaluate_continuation(stage_fit: StageFit, p, regime: int) -> np.ndarray:
    """Fitted continuation over all storage levels at price(s) p, one regime.

    Returns shape (L,) for scalar p, else (L, len(p)).  Discounting is the
    caller's concern.
    """
    if not stage_fit.covered(regime):
        raise NumericError(
            f"no regression fit for stage {stage_fit.stage}, regime {regime}")
    f = stage_fit.fits[regime]
    scalar = np.ndim(p) == 0
    pv = np.atleast_1d(np.asarray(p, dtype=float))
    phi = _design_matrix(pv, f.degree_used, f.shift, f.scale)  # (P, d+1)
    vals = f.beta.T @ phi.T                                    # (L, P)
    return vals[:, 0] if scalar else vals


def estimate_continuation(stage_fit: StageFit, level_index: int, p: float,
                          regime: int) -> float:
    """Fitted continuation at one storage level (scalar convenience)."""
    return float(evaluate_continuation(stage_fit, p, regime)[level_index])


def stage0_continuation(next_values: np.ndarray) -> np.ndarray:
    """Stage-0 continuation per level: plain path average.

    All paths share the initial price and regime, so the stage-0 regression
    matrix would be rank one; the arithmetic mean is the degenerate-stage
    estimator.
    """
    next_values = np.asarray(next_values, dtype=float)
    if next_values.ndim != 2:
        raise ValueError("next_values must have shape (levels, paths)")
    return next_values.mean(axis=1)
