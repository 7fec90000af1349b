"""Recombining log-price lattice with regime-dependent transition probabilities.

Each trading day is split into m binomial sub-steps of size sigma*sqrt(dt),
dt = 1/m.  Node values are regime-independent; the regime (frozen within the
day) shifts the drift and hence the up-probabilities, which are clamped to
[0, 1].  Day transitions are the convolution of the m sub-steps; nodes never
reached with positive probability are pruned.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .market import RegimeModel


def up_probability(model: RegimeModel, y: float, t: float, dt: float,
                   regime: int) -> float:
    """Clamped probability of the up move from log-price y at time t."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    raw = 0.5 + np.sqrt(dt) * model.alpha * (model.mean(regime, t) - y) / (2.0 * model.sigma)
    return float(min(1.0, max(0.0, raw)))


@dataclass
class DayLayer:
    """Transition data for one day n -> n+1.

    offsets: integer node offsets from x0 in units of sigma*sqrt(dt);
    probs[r][i, j]: probability of moving from node i to successor slot j;
    succ_idx[i, j]: index of that successor in the next day's node array
    (clipped for zero-probability slots); cmass[r][i]: expected number of
    clamped sub-steps within the day, conditional on starting at node i.
    """

    offsets: np.ndarray
    probs: np.ndarray          # (R, C, m+1)
    succ_idx: np.ndarray       # (C, m+1)
    cmass: np.ndarray          # (R, C)


@dataclass
class PriceLattice:
    m: int
    x0: float
    n_days: int
    delta: float
    node_offsets: list         # per day 0..n_days: integer offsets (ascending)
    layers: list               # per day 0..n_days-1: DayLayer
    clamp_events: int = 0
    prob_evals: int = 0

    def num_nodes(self, n: int) -> int:
        return self.node_offsets[n].size

    def log_levels(self, n: int) -> np.ndarray:
        return self.x0 + self.node_offsets[n] * self.delta

    def prices(self, n: int) -> np.ndarray:
        return np.exp(self.log_levels(n))

    def day_transition(self, n: int, node: int, regime: int) -> np.ndarray:
        """Probability vector over the reachable day-(n+1) successor slots."""
        return self.layers[n].probs[regime, node]

    def nearest_node(self, n: int, log_price: float) -> int:
        return int(np.argmin(np.abs(self.log_levels(n) - log_price)))

    def max_nodes(self) -> int:
        return max(off.size for off in self.node_offsets)

    def clamp_mass_rate(self, transition: np.ndarray, r0: int) -> float:
        """Probability-weighted share of sub-steps that used a clamped move.

        Weighs each day's conditional clamped sub-step count by the chance of
        occupying that (node, regime) when starting from (x0, r0); the
        denominator is the total number of sub-steps, n_days * m.
        """
        q = np.asarray(transition, dtype=float)
        occ = np.zeros((q.shape[0], 1))
        occ[r0, 0] = 1.0
        clamped = 0.0
        for n in range(self.n_days):
            layer = self.layers[n]
            clamped += float(np.sum(occ * layer.cmass))
            c_next = self.node_offsets[n + 1].size
            nxt = np.zeros((q.shape[0], c_next))
            for r in range(q.shape[0]):
                move = np.zeros(c_next)
                np.add.at(move, layer.succ_idx.ravel(),
                          (occ[r][:, None] * layer.probs[r]).ravel())
                for l in range(q.shape[0]):
                    nxt[l] += q[r, l] * move
            occ = nxt
        return clamped / (self.n_days * self.m)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["day", "node_index", "log_price"])
            for n in range(self.n_days + 1):
                for i, lv in enumerate(self.log_levels(n)):
                    w.writerow([n, i, f"{lv:.12g}"])

    @classmethod
    def constant_price(cls, price: float, n_days: int,
                       num_regimes: int = 1) -> "PriceLattice":
        """Degenerate single-node lattice holding the price fixed (test stub)."""
        offsets = [np.array([0]) for _ in range(n_days + 1)]
        layers = []
        for _ in range(n_days):
            probs = np.zeros((num_regimes, 1, 2))
            probs[:, 0, 0] = 1.0
            layers.append(DayLayer(offsets=np.array([0]), probs=probs,
                                   succ_idx=np.zeros((1, 2), dtype=np.int64),
                                   cmass=np.zeros((num_regimes, 1))))
        return cls(m=1, x0=float(np.log(price)), n_days=n_days, delta=0.0,
                   node_offsets=offsets, layers=layers)


def build_lattice(model: RegimeModel, x0: float, n_days: int, m: int) -> PriceLattice:
    """Build the recombining lattice for n_days with m sub-steps per day."""
    if m < 1:
        raise ValueError("m must be >= 1")
    dt = 1.0 / m
    delta = model.sigma * np.sqrt(dt)
    R = model.num_regimes
    drift_scale = np.sqrt(dt) * model.alpha / (2.0 * model.sigma)

    node_offsets = [np.array([0])]
    layers = []
    clamp_events = 0
    prob_evals = 0
    lo, hi = 0, 0
    for n in range(n_days):
        offs = node_offsets[n]
        C = offs.size
        probs = np.zeros((R, C, m + 1))
        cmass = np.zeros((R, C))
        for r in range(R):
            for i, k in enumerate(offs):
                # within-day sub-step convolution; mass[j] is the probability
                # of sitting j up-moves above the lowest reachable sub-level
                mass = np.array([1.0])
                base = k  # offset of mass[0]
                for sub in range(m):
                    t = n + sub * dt
                    sub_offs = base + 2 * np.arange(mass.size)
                    y = x0 + sub_offs * delta
                    raw = 0.5 + drift_scale * (np.asarray(
                        [model.mean(r, t)] * mass.size) - y)
                    q = np.clip(raw, 0.0, 1.0)
                    live = mass > 0.0
                    prob_evals += int(np.count_nonzero(live))
                    clamped = live & ((raw < 0.0) | (raw > 1.0))
                    clamp_events += int(np.count_nonzero(clamped))
                    cmass[r, i] += float(mass[clamped].sum())
                    nxt = np.zeros(mass.size + 1)
                    nxt[1:] += mass * q          # up
                    nxt[:-1] += mass * (1.0 - q)  # down
                    mass = nxt
                    base -= 1
                probs[r, i] = mass
        # prune to the hull of positive-probability successors
        reach = probs.sum(axis=0).astype(bool)  # (C, m+1) any-regime positive
        slot_offsets = offs[:, None] - m + 2 * np.arange(m + 1)[None, :]
        live_offsets = slot_offsets[reach]
        lo1, hi1 = int(live_offsets.min()), int(live_offsets.max())
        next_offs = np.arange(lo1, hi1 + 1, 2)
        succ_idx = np.clip((slot_offsets - lo1) // 2, 0, next_offs.size - 1)
        layers.append(DayLayer(offsets=offs, probs=probs,
                               succ_idx=succ_idx.astype(np.int64), cmass=cmass))
        node_offsets.append(next_offs)
    return PriceLattice(m=m, x0=x0, n_days=n_days, delta=delta,
                        node_offsets=node_offsets, layers=layers,
                        clamp_events=clamp_events, prob_evals=prob_evals)


def lattice_continuation(lat: PriceLattice, transition: np.ndarray,
                         next_values: np.ndarray, n: int,
                         discount: float = 1.0) -> np.ndarray:
    """Continuation values U_n from the day-(n+1) value table.

    next_values has shape (L, C_{n+1}, R): storage level x price node x
    regime.  Returns (L, C_n, R):
    U_n(x, p, r) = discount * sum_l q_rl sum_j V_{n+1}(x, succ_j, l) * P_r(j).
    """
    q = np.asarray(transition, dtype=float)
    layer = lat.layers[n]
    R = q.shape[0]
    next_values = np.asarray(next_values, dtype=float)
    if next_values.ndim != 3:
        raise ValueError("next_values must have shape (levels, nodes, regimes)")
    L, c_next, r_next = next_values.shape
    if c_next != lat.num_nodes(n + 1) or r_next != R:
        raise ValueError(
            f"next_values shape {next_values.shape} inconsistent with day "
            f"{n + 1}: expected (*, {lat.num_nodes(n + 1)}, {R})")
    # mix next-day regimes first: Vbar[r] = sum_l q_rl V(:, :, l)
    vbar = np.einsum("rl,xcl->rxc", q, next_values)
    C = lat.num_nodes(n)
    out = np.empty((L, C, R))
    for r in range(R):
        gathered = vbar[r][:, layer.succ_idx]          # (L, C, m+1)
        out[:, :, r] = np.einsum("xcj,cj->xc", gathered, layer.probs[r])
    return discount * out
