"""Processed-data accounting, efficiency metrics, reward, and feasibility.

The system utility is Processed-Data Efficiency (PDE): aggregate processed
bits divided by aggregate communication delay. The per-interval reward
combines weighted queue-drain terms with a PDE-improvement term that is
gated by the per-device delay-bound indicator eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .queueing import QueueTriple, SplitAmounts


@dataclass
class PdeAccumulator:
    """Cumulative processed bits and communication delay, total and per device.

    Also keeps the per-interval aggregate history so the short-term PDE can
    be evaluated at any past interval index.
    """
    num_devices: int
    cum_processed: float = 0.0
    cum_comm_delay: float = 0.0
    per_device_processed: np.ndarray = field(default=None)
    per_device_delay: np.ndarray = field(default=None)
    processed_history: list = field(default_factory=list)
    delay_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.per_device_processed is None:
            self.per_device_processed = np.zeros(self.num_devices)
        if self.per_device_delay is None:
            self.per_device_delay = np.zeros(self.num_devices)

    def record_interval(self, b_tot: np.ndarray, t_comm: np.ndarray) -> None:
        """Append one interval of per-device processed bits and comm delays."""
        self.cum_processed += float(np.sum(b_tot))
        self.cum_comm_delay += float(np.sum(t_comm))
        self.per_device_processed += b_tot
        self.per_device_delay += t_comm
        self.processed_history.append(float(np.sum(b_tot)))
        self.delay_history.append(float(np.sum(t_comm)))

    def device_pde(self, k: int) -> float:
        """Historical per-device PDE; 0 while the device has no delay history."""
        if self.per_device_delay[k] <= 0.0:
            return 0.0
        return self.per_device_processed[k] / self.per_device_delay[k]


@dataclass(frozen=True)
class RewardWeights:
    v1: float = 1e-6
    v2: float = 1e-6
    v3: float = 1e-6
    v4: float = 1.0
    lyapunov_v: float = 1.0
    violation_penalty: float = 0.0


@dataclass
class FeasibilityReport:
    """Per-constraint verdicts for one interval plus the delay indicators."""
    c1_power: bool
    c2_offload_fracs: bool
    c3_compute_fracs: bool
    c4_local_cpu: bool
    c5_uav_cpu: bool
    c6_cloud_cpu: bool
    c7_speed: bool
    c8_endpoints: bool
    c9_area: bool
    c10_delay: bool
    eta: np.ndarray          # per-device {0,1}, 1 iff total delay <= tau

    def all_satisfied(self) -> bool:
        return all([self.c1_power, self.c2_offload_fracs, self.c3_compute_fracs,
                    self.c4_local_cpu, self.c5_uav_cpu, self.c6_cloud_cpu,
                    self.c7_speed, self.c8_endpoints, self.c9_area,
                    self.c10_delay])


def processed_total(b_local: float, b_uav: float, b_cloud: float) -> float:
    """Bits processed for one device in one interval, summed over tiers."""
    return b_local + b_uav + b_cloud


def long_term_pde(acc: PdeAccumulator) -> float:
    """Cumulative processed bits over cumulative comm delay, all devices."""
    if acc.cum_comm_delay <= 0.0:
        return math.inf if acc.cum_processed > 0.0 else 0.0
    return acc.cum_processed / acc.cum_comm_delay


def short_term_pde(acc: PdeAccumulator, n: int) -> float:
    """PDE over recorded intervals 0..n-1; 0 for empty or zero-delay history."""
    if n <= 0:
        return 0.0
    num = sum(acc.processed_history[:n])
    den = sum(acc.delay_history[:n])
    if den <= 0.0:
        return 0.0
    return num / den


def drift_plus_penalty_value(queues, splits, t_comms, acc: PdeAccumulator,
                             weights: RewardWeights, interval: int) -> float:
    """Per-interval drift-plus-penalty objective (diagnostic / greedy oracle).

    queues, splits, t_comms are per-device sequences for one interval; the
    penalty term weighs aggregate processed bits against aggregate comm
    delay priced at the current short-term PDE.
    """
    u_n = short_term_pde(acc, interval)
    b_tot = sum(processed_total(s.b_local, s.b_uav, s.b_cloud) for s in splits)
    t_sum = sum(t_comms)
    value = weights.lyapunov_v * (b_tot - u_n * t_sum)
    for q, s in zip(queues, splits):
        value += q.q_local * (s.b_local + s.d_uav)
        value -= q.q_uav * (s.d_uav - s.b_uav - s.d_cloud)
        value -= q.q_cloud * (s.d_cloud - s.b_cloud)
    return value


def reward(q: QueueTriple, s: SplitAmounts, t_comm: float, hist_pde: float,
           weights: RewardWeights, eta: int) -> float:
    """Per-device reward for one interval.

    Queue-drain terms are always active; the PDE-improvement term only
    counts when the device met the delay bound (eta = 1), so an infinite
    delay sentinel never propagates into the reward.
    """
    r = (weights.v1 * q.q_local * (s.b_local + s.d_uav)
         - weights.v2 * q.q_uav * (s.d_uav - s.b_uav - s.d_cloud)
         - weights.v3 * q.q_cloud * (s.d_cloud - s.b_cloud))
    if eta:
        b_tot = processed_total(s.b_local, s.b_uav, s.b_cloud)
        r += weights.v4 * (b_tot - t_comm * hist_pde)
    else:
        r -= weights.violation_penalty
    return r


def check_feasibility(fractions, tx_powers, cpu_local, cpu_uav, cpu_cloud,
                      prev_pos, new_pos, total_delays, config) -> FeasibilityReport:
    """Evaluate the per-interval constraint set.

    fractions: per-device (x_uav, x_cloud, w_local, w_uav, w_cloud) tuples.
    prev_pos/new_pos: UAV positions before and after the interval's move.
    total_delays: per-device end-to-end task delays in seconds.
    Infeasibility is reported, never repaired.
    """
    fr = np.asarray(fractions, dtype=float)
    tx = np.asarray(tx_powers, dtype=float)
    delays = np.asarray(total_delays, dtype=float)
    c1 = bool(np.all((tx >= 0.0) & (tx <= config.p_max)))
    c2 = bool(np.all((fr[:, :2] >= 0.0) & (fr[:, :2] <= 1.0)))
    c3 = bool(np.all((fr[:, 2:] >= 0.0) & (fr[:, 2:] <= 1.0)))
    c4 = bool(np.all((np.asarray(cpu_local) >= 0.0)
                     & (np.asarray(cpu_local) <= config.local_cpu_max)))
    c5 = 0.0 <= float(np.sum(cpu_uav)) <= config.uav_cpu_total * (1 + 1e-12)
    c6 = 0.0 <= float(np.sum(cpu_cloud)) <= config.cloud_cpu_total * (1 + 1e-12)
    speed = prev_pos.displacement(new_pos) / config.tau
    c7 = speed <= config.v_max * (1 + 1e-12)
    # The terminal-waypoint condition is not enforced per interval; the
    # harness reports the terminal distance to the start point instead.
    c8 = True
    c9 = (0.0 <= new_pos.x <= config.area_size
          and 0.0 <= new_pos.y <= config.area_size)
    eta = (delays <= config.tau).astype(int)
    c10 = bool(np.all(eta == 1))
    return FeasibilityReport(c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, eta)
