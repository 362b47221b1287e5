"""Per-packet cost-of-analysis bids and energy accounting.

The cost a node bids is private-information-derived: it grows as remaining
energy shrinks, as the node's desired lifetime grows, and as its already
earned reputation grows (so leadership rotates toward low-reputation
nodes).  Only the quantized cost is ever transmitted, never the energy
level or desired lifetime themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DeadNode


@dataclass(frozen=True)
class EnergyState:
    remaining: float

    @property
    def alive(self) -> bool:
        return self.remaining > 0


@dataclass(frozen=True)
class CostParams:
    """Parameters of the bid formula and its quantization grid."""

    e_slot: float = 1.0       # energy per analysis slot
    delta_c: float = 0.1      # cost quantum; every bid is a multiple of it
    c_max: float = 10.0       # ceiling so near-dead nodes can't bid unbounded
    r_scale: float = 100.0    # reputation scale in the (1 + R/r_scale) factor

    def __post_init__(self):
        if min(self.e_slot, self.delta_c, self.c_max, self.r_scale) <= 0:
            raise ValueError("all cost parameters must be strictly positive")
        if self.c_max < self.delta_c:
            raise ValueError("c_max must be at least delta_c")


@dataclass(frozen=True)
class CostOfAnalysis:
    """A per-packet analysis cost, always a positive multiple of delta_c."""

    value: float

    def __lt__(self, other: "CostOfAnalysis") -> bool:
        return self.value < other.value


@dataclass(frozen=True)
class EnergyRates:
    r_idle: float = 0.0
    r_msg: float = 0.0
    r_sample: float = 0.0


def quantize_cost(raw: float, p: CostParams) -> CostOfAnalysis:
    """Round raw up to the delta_c grid and clamp to [delta_c, c_max].

    Rounding is upward so quantization never under-states a cost.
    """
    steps = math.ceil(raw / p.delta_c - 1e-9)
    value = max(1, steps) * p.delta_c
    return CostOfAnalysis(min(value, p.c_max))


def cost_of_analysis(e: EnergyState, expected_slots: int,
                     reputation: float, p: CostParams) -> CostOfAnalysis:
    """Compute a node's quantized per-packet bid.

    raw = (e_slot * expected_slots / remaining) * (1 + reputation / r_scale)
    """
    if not e.alive:
        raise DeadNode("a dead node cannot bid")
    if expected_slots < 1:
        raise ValueError("expected_slots must be >= 1")
    if reputation < 0:
        raise ValueError("reputation must be non-negative")
    raw = (p.e_slot * expected_slots / e.remaining) * (1 + reputation / p.r_scale)
    return quantize_cost(raw, p)


def consume_energy(e: EnergyState, idle_slots: int = 0, messages_sent: int = 0,
                   packets_sampled: int = 0,
                   rates: EnergyRates = EnergyRates()) -> EnergyState:
    """Charge per-activity energy; remaining saturates at zero (node dies)."""
    if min(idle_slots, messages_sent, packets_sampled) < 0:
        raise ValueError("activity counts must be non-negative")
    spent = (idle_slots * rates.r_idle
             + messages_sent * rates.r_msg
             + packets_sampled * rates.r_sample)
    return EnergyState(max(0.0, e.remaining - spent))
