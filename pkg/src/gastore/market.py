"""Regime-switching mean-reverting log-price model and path simulation.

The log price follows an Ornstein-Uhlenbeck diffusion whose time-dependent
mean level is selected by a discrete-time Markov chain (the "regime").  The
regime is held constant within each trading day; prices are P = exp(X).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

TRADING_DAYS_PER_YEAR = 250.0

MeanFn = Callable[[float], float]


@dataclass(frozen=True)
class SeasonalMean:
    """Log-price mean level a0 + sign_a1*a1*t + a2*cos(2*pi*(t - a3)/period).

    ``t`` is measured in trading days from contract start.  ``sign_a1``
    selects the regime variant (+1 or -1 slope on the linear trend).
    """

    a0: float
    a1: float
    a2: float
    a3: float
    sign_a1: int = 1
    period: float = TRADING_DAYS_PER_YEAR

    def __post_init__(self):
        if self.sign_a1 not in (1, -1):
            raise ValueError(f"sign_a1 must be +1 or -1, got {self.sign_a1}")
        if self.period <= 0:
            raise ValueError("period must be positive")

    def __call__(self, t):
        return (self.a0 + self.sign_a1 * self.a1 * t
                + self.a2 * np.cos(2.0 * np.pi * (t - self.a3) / self.period))


def seasonal_mean_eval(mean: SeasonalMean, t: float) -> float:
    """Evaluate a seasonal mean level at trading-day time t >= 0."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return float(mean(t))


@dataclass(frozen=True)
class RegimeModel:
    """Finite regime chain plus per-regime mean levels and OU dynamics.

    transition is row-stochastic; alpha is the mean-reversion speed per day,
    sigma the log-price volatility per sqrt(day).  Volatility is shared by
    all regimes (a regime switch moves the mean level only).
    """

    transition: np.ndarray
    mean_fns: tuple
    alpha: float
    sigma: float

    def __post_init__(self):
        q = np.asarray(self.transition, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("transition must be a square matrix")
        if np.any(q < 0.0) or np.any(q > 1.0):
            raise ValueError("transition entries must lie in [0, 1]")
        if np.max(np.abs(q.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("transition rows must sum to 1 within 1e-12")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if len(self.mean_fns) != q.shape[0]:
            raise ValueError(
                f"need one mean function per regime: got {len(self.mean_fns)} "
                f"for {q.shape[0]} regimes")
        object.__setattr__(self, "transition", q)
        object.__setattr__(self, "mean_fns", tuple(self.mean_fns))

    @property
    def num_regimes(self) -> int:
        return self.transition.shape[0]

    def mean(self, regime: int, t) -> float:
        return self.mean_fns[regime](t)

    def means_at(self, regimes: np.ndarray, t: float) -> np.ndarray:
        """Vector of mean levels mu_{r}(t) for an array of regime indices."""
        out = np.empty(regimes.shape, dtype=float)
        for r in range(self.num_regimes):
            sel = regimes == r
            if np.any(sel):
                out[sel] = self.mean_fns[r](t)
        return out

    def stationary_distribution(self) -> np.ndarray:
        """Stationary vector of the regime chain (left eigenvector for 1)."""
        w, v = np.linalg.eig(self.transition.T)
        i = int(np.argmin(np.abs(w - 1.0)))
        pi = np.real(v[:, i])
        return pi / pi.sum()


@dataclass(frozen=True)
class PricePath:
    """One realization: regimes R_0..R_N and log prices X_0..X_N."""

    regimes: np.ndarray
    log_prices: np.ndarray

    def __post_init__(self):
        if len(self.regimes) != len(self.log_prices):
            raise ValueError("regimes and log_prices must have equal length")

    @property
    def prices(self) -> np.ndarray:
        return np.exp(self.log_prices)


class PathBundle:
    """A collection of simulated paths stored as (n_paths, n_steps+1) arrays."""

    def __init__(self, regimes: np.ndarray, log_prices: np.ndarray):
        regimes = np.asarray(regimes)
        log_prices = np.asarray(log_prices, dtype=float)
        if regimes.shape != log_prices.shape:
            raise ValueError("regimes and log_prices must have the same shape")
        self.regimes = regimes
        self.log_prices = log_prices

    @property
    def prices(self) -> np.ndarray:
        return np.exp(self.log_prices)

    @property
    def n_paths(self) -> int:
        return self.regimes.shape[0]

    @property
    def n_steps(self) -> int:
        return 0 if self.n_paths == 0 else self.regimes.shape[1] - 1

    def __len__(self):
        return self.n_paths

    def path(self, i: int) -> PricePath:
        return PricePath(self.regimes[i], self.log_prices[i])

    def to_csv(self, path) -> None:
        """Write rows path_id, day, regime, price."""
        prices = self.prices
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "day", "regime", "price"])
            for i in range(self.n_paths):
                for n in range(self.regimes.shape[1]):
                    w.writerow([i, n, int(self.regimes[i, n]),
                                f"{prices[i, n]:.12g}"])


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def simulate_regime_chain(model: RegimeModel, r0: int, n_steps: int,
                          rng) -> np.ndarray:
    """Simulate one regime-chain realization R_0..R_{n_steps}."""
    if not 0 <= r0 < model.num_regimes:
        raise ValueError(f"r0 must be a regime index in [0, {model.num_regimes}), got {r0}")
    rng = _as_rng(rng)
    cum = np.cumsum(model.transition, axis=1)
    out = np.empty(n_steps + 1, dtype=np.int64)
    out[0] = r0
    u = rng.random(n_steps)
    for n in range(n_steps):
        out[n + 1] = np.searchsorted(cum[out[n]], u[n], side="right")
    return out


def _simulate_regimes(model: RegimeModel, r0: int, n_steps: int,
                      n_paths: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(model.transition, axis=1)
    regimes = np.empty((n_paths, n_steps + 1), dtype=np.int64)
    regimes[:, 0] = r0
    u = rng.random((n_paths, n_steps))
    for n in range(n_steps):
        thresholds = cum[regimes[:, n]]              # (n_paths, R)
        regimes[:, n + 1] = (u[:, n][:, None] >= thresholds).sum(axis=1)
    return regimes


def simulate_price_paths(model: RegimeModel, x0: float, r0: int,
                         n_steps: int, n_paths: int, substeps: int = 1,
                         rng=None, scheme: str = "euler") -> PathBundle:
    """Simulate price paths with the regime frozen within each day.

    scheme "euler": Euler-Maruyama with ``substeps`` equal sub-steps per day;
    the drift mean is evaluated at each sub-step's left endpoint.  scheme
    "exact": samples the exact one-day OU transition with the mean level
    frozen at the day's start (substeps is ignored).  Deterministic for a
    given seed.
    """
    if not 0 <= r0 < model.num_regimes:
        raise ValueError(f"r0 must be a regime index in [0, {model.num_regimes}), got {r0}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if scheme not in ("euler", "exact"):
        raise ValueError(f"unknown scheme {scheme!r}")
    rng = _as_rng(rng)
    if n_paths == 0:
        return PathBundle(np.empty((0, n_steps + 1), dtype=np.int64),
                          np.empty((0, n_steps + 1)))
    regimes = _simulate_regimes(model, r0, n_steps, n_paths, rng)
    X = np.empty((n_paths, n_steps + 1))
    X[:, 0] = x0
    alpha, sigma = model.alpha, model.sigma
    if scheme == "exact":
        decay = np.exp(-alpha)
        sd = sigma * np.sqrt((1.0 - np.exp(-2.0 * alpha)) / (2.0 * alpha))
        z = rng.standard_normal((n_paths, n_steps))
        for n in range(n_steps):
            mu_n = model.means_at(regimes[:, n], float(n))
            X[:, n + 1] = mu_n + (X[:, n] - mu_n) * decay + sd * z[:, n]
    else:
        dt = 1.0 / substeps
        sq = np.sqrt(dt)
        z = rng.standard_normal((n_paths, n_steps, substeps))
        for n in range(n_steps):
            x = X[:, n].copy()
            for k in range(substeps):
                mu_nk = model.means_at(regimes[:, n], n + k * dt)
                x = x + alpha * (mu_nk - x) * dt + sigma * sq * z[:, n, k]
            X[:, n + 1] = x
    return PathBundle(regimes, X)
