"""Storage contract: capacities, rate limits, bid/ask transforms, rewards.

Volumes are in MMBtu, prices in GBP/MMBtu.  Withdrawal rates are negative,
injection rates positive; both depend on the current storage level through
named parametric forms so that configurations stay serializable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

PROBE_POINTS = 101

TERMINAL_KINDS = ("sell_all", "penalty_to_target", "zero_above_target")


@dataclass(frozen=True)
class RateForm:
    """A named rate function of the storage level.

    kind "affine": c0 + c1*x; "sqrt": c0*sqrt(x); "constant": c0.
    """

    kind: str
    c0: float
    c1: float = 0.0

    def __post_init__(self):
        if self.kind not in ("affine", "sqrt", "constant"):
            raise ValueError(f"unknown rate form {self.kind!r}")

    def __call__(self, x):
        if self.kind == "affine":
            return self.c0 + self.c1 * np.asarray(x, dtype=float)
        if self.kind == "sqrt":
            return self.c0 * np.sqrt(np.asarray(x, dtype=float))
        return np.broadcast_to(np.float64(self.c0), np.shape(x)).copy() \
            if np.ndim(x) else float(self.c0)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "c0": self.c0}
        if self.kind == "affine":
            d["c1"] = self.c1
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RateForm":
        return cls(kind=d["kind"], c0=float(d["c0"]), c1=float(d.get("c1", 0.0)))


@dataclass(frozen=True)
class TerminalReward:
    """Terminal payoff kind and (for the target variants) the target level."""

    kind: str
    x_end: float | None = None

    def __post_init__(self):
        if self.kind not in TERMINAL_KINDS:
            raise ValueError(f"unknown terminal reward kind {self.kind!r}")
        if self.kind != "sell_all" and self.x_end is None:
            raise ValueError(f"terminal kind {self.kind!r} requires x_end")


@dataclass(frozen=True)
class StorageContract:
    b_min: float
    b_max: float
    x0: float
    rate_min: RateForm          # i_min(x) <= 0, convex, decreasing
    rate_max: RateForm          # i_max(x) >= 0, concave, decreasing
    w1: float                   # ask k(p) = (1 + w1) p + z1
    z1: float
    w2: float                   # bid e(p) = (1 - w2) p - z2
    z2: float
    terminal: TerminalReward
    horizon: int
    discount: float = 1.0
    price_probe: Tuple[float, float] = (0.1, 100.0)

    def __post_init__(self):
        if not self.b_min < self.b_max:
            raise ValueError("b_min must be < b_max")
        if not self.b_min <= self.x0 <= self.b_max:
            raise ValueError("x0 must lie in [b_min, b_max]")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        self._check_rates()
        self._check_prices()
        self._check_terminal_concavity()

    # -- construction-time shape checks on probe sets ----------------------

    def _probe_x(self) -> np.ndarray:
        return np.linspace(self.b_min, self.b_max, PROBE_POINTS)

    def _check_rates(self):
        xs = self._probe_x()
        lo = np.asarray(self.rate_min(xs), dtype=float)
        hi = np.asarray(self.rate_max(xs), dtype=float)
        tol = 1e-9 * max(1.0, np.max(np.abs(lo)), np.max(np.abs(hi)))
        if np.any(lo > tol):
            raise ValueError("rate_min must be <= 0 on [b_min, b_max]")
        if np.any(hi < -tol):
            raise ValueError("rate_max must be >= 0 on [b_min, b_max]")
        mid_lo = np.asarray(self.rate_min(0.5 * (xs[:-2] + xs[2:])))
        mid_hi = np.asarray(self.rate_max(0.5 * (xs[:-2] + xs[2:])))
        # midpoint tests: convex rate_min below chord, concave rate_max above
        if np.any(mid_lo > 0.5 * (lo[:-2] + lo[2:]) + tol):
            raise ValueError("rate_min failed the midpoint convexity test")
        if np.any(mid_hi < 0.5 * (hi[:-2] + hi[2:]) - tol):
            raise ValueError("rate_max failed the midpoint concavity test")

    def _check_prices(self):
        ps = np.linspace(self.price_probe[0], self.price_probe[1], PROBE_POINTS)
        k, e = self.ask(ps), self.bid(ps)
        if np.any(k < e - 1e-12):
            raise ValueError("ask k(p) must dominate bid e(p) on the probe prices")
        if np.any(e < -1e-12):
            raise ValueError("bid e(p) must be >= 0 on the probe prices")

    def _check_terminal_concavity(self):
        xs = self._probe_x()
        for p in np.linspace(self.price_probe[0], self.price_probe[1], 7):
            v = terminal_reward(self, xs, p)
            mid = terminal_reward(self, 0.5 * (xs[:-2] + xs[2:]), p)
            tol = 1e-9 * max(1.0, float(np.max(np.abs(v))))
            if np.any(mid < 0.5 * (v[:-2] + v[2:]) - tol):
                raise ValueError("terminal reward is not concave in the volume")

    # -- price transforms ---------------------------------------------------

    def ask(self, p):
        """Effective buy price per unit injected."""
        return (1.0 + self.w1) * np.asarray(p, dtype=float) + self.z1

    def bid(self, p):
        """Effective sell price per unit withdrawn."""
        return (1.0 - self.w2) * np.asarray(p, dtype=float) - self.z2


def admissible_interval(c: StorageContract, x: float) -> Tuple[float, float]:
    """Bounds [a_lo, a_hi] of the admissible volume change at level x."""
    if not c.b_min - 1e-9 <= x <= c.b_max + 1e-9:
        raise ValueError(f"x={x} outside capacity [{c.b_min}, {c.b_max}]")
    a_lo = max(c.b_min - x, float(c.rate_min(x)))
    a_hi = min(c.b_max - x, float(c.rate_max(x)))
    return a_lo, a_hi


def admissible_bounds(c: StorageContract, xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized admissible_interval over an array of levels."""
    xs = np.asarray(xs, dtype=float)
    a_lo = np.maximum(c.b_min - xs, c.rate_min(xs))
    a_hi = np.minimum(c.b_max - xs, c.rate_max(xs))
    return a_lo, a_hi


def stage_reward(c: StorageContract, p, a):
    """Cash flow of changing the volume by a at price p: pay the ask when
    injecting, receive the bid when withdrawing."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    out = np.where(a > 0, -c.ask(p) * a, np.where(a < 0, -c.bid(p) * a, 0.0))
    return float(out) if out.ndim == 0 else out


def terminal_reward(c: StorageContract, x, p):
    """Terminal payoff at volume x and price p for the configured kind."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    kind = c.terminal.kind
    if kind == "sell_all":
        out = c.bid(p) * (x - c.b_min)
    elif kind == "penalty_to_target":
        t = c.terminal.x_end
        out = np.where(x >= t, c.bid(p) * (x - t), c.ask(p) * (x - t))
    else:  # zero_above_target
        t = c.terminal.x_end
        out = np.where(x >= t, 0.0, c.ask(p) * (x - t))
    return float(out) if out.ndim == 0 else out
