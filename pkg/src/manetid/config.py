"""Simulation config: INI-style file with fixed sections and strict keys.

Sections: [topology] [energy] [election] [ids] [mobility] [misbehavior].
Unknown sections or keys are errors, not warnings.  Every key has a
default except the topology itself.
"""

from __future__ import annotations

import configparser
import random
from dataclasses import dataclass, field, replace

from .cost_model import CostParams, EnergyRates
from .errors import InvalidConfig
from .topology import Graph, NodeId, build_graph


@dataclass(frozen=True)
class MobilityEvent:
    slot: int
    op: str                      # "add" | "remove"
    node: NodeId
    links: tuple[NodeId, ...] = ()


@dataclass(frozen=True)
class UnderDelivery:
    round: int                   # election round index
    node: NodeId
    delivered_fraction: float    # share of the promised sampling delivered


@dataclass(frozen=True)
class SimConfig:
    # [topology]
    topology_kind: str = "explicit"
    nodes: tuple[NodeId, ...] = ()
    links: tuple[tuple[NodeId, NodeId], ...] = ()
    n: int = 0
    area: float = 100.0
    radio_range: float = 35.0
    # [energy]
    initial_energy: tuple[float, float] = (100.0, 100.0)
    rates: EnergyRates = EnergyRates(r_idle=0.01, r_msg=0.01, r_sample=0.01)
    # [election]
    mode: str = "CILE"
    policy: str = "mechanism"
    budget: float = 25.0
    t_elect: int = 10
    rounds: int = 10
    seed: int = 0
    expected_slots: int = 10
    cost_params: CostParams = CostParams()
    reputation_threshold: float = 0.0
    penalty_rate: float = 1.0
    # [ids]
    training_file: str | None = None
    alpha: float = 1.0
    traffic_per_slot: int = 8
    attack_rate: float = 0.1
    interval_initial: int = 1
    interval_min: int = 1
    interval_max: int = 8
    flag_threshold: float = 0.3
    # [mobility] / [misbehavior]
    mobility_events: tuple[MobilityEvent, ...] = ()
    cheaters: frozenset[NodeId] = frozenset()
    underdeliver: tuple[UnderDelivery, ...] = ()

    def with_overrides(self, **kw) -> "SimConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_SECTIONS = {
    "topology": {"kind", "nodes", "links", "n", "area", "range"},
    "energy": {"initial", "r_idle", "r_msg", "r_sample"},
    "election": {"mode", "policy", "budget", "t_elect", "rounds", "seed",
                 "expected_slots", "e_slot", "delta_c", "c_max", "r_scale",
                 "reputation_threshold", "penalty_rate"},
    "ids": {"training_file", "alpha", "traffic_per_slot", "attack_rate",
            "interval_initial", "interval_min", "interval_max",
            "flag_threshold"},
    "mobility": {"events"},
    "misbehavior": {"cheaters", "underdeliver"},
}


def parse_config(text: str) -> SimConfig:
    """Parse config text into a validated SimConfig."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InvalidConfig(str(exc)) from exc

    for section in cp.sections():
        if section not in _SECTIONS:
            raise InvalidConfig(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                raise InvalidConfig(f"unknown key '{key}' in [{section}]")
    if "topology" not in cp:
        raise InvalidConfig("missing required section [topology]")

    def get(section, key, conv, default):
        if section in cp and key in cp[section]:
            raw = cp[section][key]
            try:
                return conv(raw)
            except InvalidConfig:
                raise
            except Exception as exc:
                raise InvalidConfig(
                    f"[{section}] {key}: cannot parse {raw!r}") from exc
        return default

    top = cp["topology"]
    kind = top.get("kind", "explicit").strip()
    if kind not in ("explicit", "random_geometric"):
        raise InvalidConfig(f"[topology] kind: unknown kind {kind!r}")
    nodes: tuple[NodeId, ...] = ()
    links: tuple[tuple[NodeId, NodeId], ...] = ()
    n = 0
    if kind == "explicit":
        if "nodes" not in top:
            raise InvalidConfig("[topology] nodes: required for explicit graphs")
        nodes = get("topology", "nodes", _int_list, ())
        links = get("topology", "links", _link_list, ())
    else:
        n = get("topology", "n", int, 0)
        if n <= 0:
            raise InvalidConfig("[topology] n: must be >= 1 for random_geometric")

    mode = get("election", "mode", str.strip, "CILE").upper()
    if mode not in ("CILE", "CDLE"):
        raise InvalidConfig(f"[election] mode: must be CILE or CDLE, got {mode!r}")
    policy = get("election", "policy", str.strip, "mechanism").lower()
    if policy not in ("mechanism", "random", "connectivity"):
        raise InvalidConfig(f"[election] policy: unknown policy {policy!r}")

    try:
        cost_params = CostParams(
            e_slot=get("election", "e_slot", float, 1.0),
            delta_c=get("election", "delta_c", float, 0.1),
            c_max=get("election", "c_max", float, 10.0),
            r_scale=get("election", "r_scale", float, 100.0))
    except ValueError as exc:
        raise InvalidConfig(f"[election] cost params: {exc}") from exc

    cfg = SimConfig(
        topology_kind=kind, nodes=nodes, links=links, n=n,
        area=get("topology", "area", float, 100.0),
        radio_range=get("topology", "range", float, 35.0),
        initial_energy=get("energy", "initial", _float_range, (100.0, 100.0)),
        rates=EnergyRates(
            r_idle=get("energy", "r_idle", float, 0.01),
            r_msg=get("energy", "r_msg", float, 0.01),
            r_sample=get("energy", "r_sample", float, 0.01)),
        mode=mode, policy=policy,
        budget=get("election", "budget", float, 25.0),
        t_elect=get("election", "t_elect", int, 10),
        rounds=get("election", "rounds", int, 10),
        seed=get("election", "seed", int, 0),
        expected_slots=get("election", "expected_slots", int, 10),
        cost_params=cost_params,
        reputation_threshold=get("election", "reputation_threshold", float, 0.0),
        penalty_rate=get("election", "penalty_rate", float, 1.0),
        training_file=get("ids", "training_file", str.strip, None) or None,
        alpha=get("ids", "alpha", float, 1.0),
        traffic_per_slot=get("ids", "traffic_per_slot", int, 8),
        attack_rate=get("ids", "attack_rate", float, 0.1),
        interval_initial=get("ids", "interval_initial", int, 1),
        interval_min=get("ids", "interval_min", int, 1),
        interval_max=get("ids", "interval_max", int, 8),
        flag_threshold=get("ids", "flag_threshold", float, 0.3),
        mobility_events=get("mobility", "events", _mobility_events, ()),
        cheaters=frozenset(get("misbehavior", "cheaters", _int_list, ())),
        underdeliver=get("misbehavior", "underdeliver", _underdeliver, ()),
    )
    _validate(cfg)
    return cfg


def load_config(path) -> SimConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _validate(cfg: SimConfig) -> None:
    problems = []
    if cfg.t_elect < 1:
        problems.append("[election] t_elect: must be >= 1")
    if cfg.rounds < 1:
        problems.append("[election] rounds: must be >= 1")
    if cfg.expected_slots < 1:
        problems.append("[election] expected_slots: must be >= 1")
    if cfg.budget < 0:
        problems.append("[election] budget: must be >= 0")
    if min(cfg.rates.r_idle, cfg.rates.r_msg, cfg.rates.r_sample) < 0:
        problems.append("[energy] rates: must be >= 0")
    if cfg.initial_energy[0] <= 0 or cfg.initial_energy[1] < cfg.initial_energy[0]:
        problems.append("[energy] initial: need 0 < lo <= hi")
    if not 0 <= cfg.attack_rate <= 1:
        problems.append("[ids] attack_rate: must be in [0, 1]")
    if cfg.alpha <= 0:
        problems.append("[ids] alpha: must be > 0")
    if not (1 <= cfg.interval_min <= cfg.interval_initial <= cfg.interval_max):
        problems.append("[ids] intervals: need 1 <= min <= initial <= max")
    for ev in cfg.mobility_events:
        if ev.op not in ("add", "remove"):
            problems.append(f"[mobility] events: unknown op {ev.op!r}")
    for ud in cfg.underdeliver:
        if not 0 <= ud.delivered_fraction <= 1:
            problems.append("[misbehavior] underdeliver: fraction must be in [0, 1]")
    if cfg.topology_kind == "explicit":
        if len(set(cfg.nodes)) != len(cfg.nodes):
            problems.append("[topology] nodes: duplicate ids")
    if problems:
        raise InvalidConfig("; ".join(problems))


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.split())


def _float_range(raw: str) -> tuple[float, float]:
    parts = raw.split()
    if len(parts) == 1:
        v = float(parts[0])
        return (v, v)
    if len(parts) == 2:
        return (float(parts[0]), float(parts[1]))
    raise ValueError("expected one value or 'lo hi'")


def _link_list(raw: str) -> tuple[tuple[int, int], ...]:
    links = []
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        a, b = line.split()
        links.append((int(a), int(b)))
    return tuple(links)


def _mobility_events(raw: str) -> tuple[MobilityEvent, ...]:
    events = []
    for line in raw.splitlines():
        parts = line.split()
        if not parts:
            continue
        slot, op, node = int(parts[0]), parts[1], int(parts[2])
        links = tuple(int(p) for p in parts[3:])
        events.append(MobilityEvent(slot=slot, op=op, node=node, links=links))
    return tuple(sorted(events, key=lambda e: (e.slot, e.node)))


def _underdeliver(raw: str) -> tuple[UnderDelivery, ...]:
    out = []
    for line in raw.splitlines():
        parts = line.split()
        if not parts:
            continue
        out.append(UnderDelivery(round=int(parts[0]), node=int(parts[1]),
                                 delivered_fraction=float(parts[2])))
    return tuple(out)


def build_topology(cfg: SimConfig) -> Graph:
    """Explicit adjacency from the config, or a seeded random-geometric graph."""
    if cfg.topology_kind == "explicit":
        return build_graph(cfg.nodes, cfg.links)
    rng = random.Random(f"{cfg.seed}:topology")
    points = {i: (rng.uniform(0, cfg.area), rng.uniform(0, cfg.area))
              for i in range(cfg.n)}
    links = []
    for i in range(cfg.n):
        for j in range(i + 1, cfg.n):
            dx = points[i][0] - points[j][0]
            dy = points[i][1] - points[j][1]
            if (dx * dx + dy * dy) ** 0.5 <= cfg.radio_range:
                links.append((i, j))
    return build_graph(range(cfg.n), links)


def initial_energies(cfg: SimConfig, graph: Graph) -> dict[NodeId, float]:
    lo, hi = cfg.initial_energy
    if lo == hi:
        return {k: lo for k in sorted(graph.nodes)}
    rng = random.Random(f"{cfg.seed}:energy")
    return {k: rng.uniform(lo, hi) for k in sorted(graph.nodes)}
