"""Deterministic discrete-event simulation of election + detection rounds.

Time is discretized into slots.  Every t_elect slots all nodes drop their
leadership state and re-elect from scratch; within a period, leaders run
Bayes detection over their voters' sampled traffic, energy is accounted
per activity, scripted leaders under-deliver and get punished, and
scripted mobility adds or removes nodes.

Everything is a pure function of the config (seed included): two runs of
the same config produce byte-identical trace and report files.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field, replace

from . import payments as pay
from .clustering import elect_per_cluster, form_clusters
from .config import MobilityEvent, SimConfig, build_topology, initial_energies
from .cost_model import CostOfAnalysis, EnergyState, consume_energy, cost_of_analysis
from .election import ElectionOutcome, run_election_round
from .errors import InvalidConfig
from .ids import (
    ATTACK,
    NORMAL,
    BayesModel,
    Transaction,
    classify,
    detection_round,
    load_training_file,
    next_interval,
    train_bayes,
)
from .topology import Graph, NodeId, add_node, build_graph, neighbors, remove_node

POLICIES = ("mechanism", "random", "connectivity")

_FEATURE_WEIGHTS = {NORMAL: (0.6, 0.3, 0.1), ATTACK: (0.1, 0.3, 0.6)}
_N_FEATURES = 3


def _draw_category(rng: random.Random, label: str) -> int:
    x = rng.random()
    acc = 0.0
    weights = _FEATURE_WEIGHTS[label]
    for cat, w in enumerate(weights):
        acc += w
        if x < acc:
            return cat
    return len(weights) - 1


def generate_traffic(seed: int, slot: int, node: NodeId, count: int,
                     attack_rate: float) -> list[Transaction]:
    """Synthetic per-node traffic for one slot, derived from the run seed."""
    rng = random.Random(f"{seed}:traffic:{slot}:{node}")
    out = []
    for _ in range(count):
        label = ATTACK if rng.random() < attack_rate else NORMAL
        feats = tuple(_draw_category(rng, label) for _ in range(_N_FEATURES))
        out.append(Transaction(features=feats, label=label))
    return out


def builtin_training(seed: int, per_label: int = 120) -> list[Transaction]:
    """Default training corpus when no training file is configured."""
    rng = random.Random(f"{seed}:train")
    data = []
    for label in (NORMAL, ATTACK):
        for _ in range(per_label):
            feats = tuple(_draw_category(rng, label)
                          for _ in range(_N_FEATURES))
            data.append(Transaction(features=feats, label=label))
    return data


def induced_subgraph(g: Graph, keep: set[NodeId]) -> Graph:
    links = [l for l in g.links if l[0] in keep and l[1] in keep]
    return build_graph(keep, links)


def apply_mobility_event(g: Graph, event: MobilityEvent,
                         affiliation: dict[NodeId, NodeId],
                         leader_costs: dict[NodeId, CostOfAnalysis],
                         ) -> tuple[Graph, dict[NodeId, NodeId]]:
    """Apply a scripted add/remove and patch affiliations until re-election.

    A joining node attaches to the cheapest current leader among its new
    neighbors, or runs its own IDS if there is none.  A removed leader's
    voters run their own IDS until the next round.
    """
    aff = dict(affiliation)
    if event.op == "add":
        g = add_node(g, event.node, event.links)
        leaders = set(aff.values())
        nearby = [l for l in neighbors(g, event.node)
                  if l in leaders and l in leader_costs]
        if nearby:
            aff[event.node] = min(
                nearby, key=lambda l: (leader_costs[l].value, l))
        else:
            aff[event.node] = event.node
        return g, aff
    if event.op == "remove":
        g = remove_node(g, event.node)
        aff.pop(event.node, None)
        for k, target in list(aff.items()):
            if target == event.node:
                aff[k] = k
        return g, aff
    raise ValueError(f"unknown mobility op {event.op!r}")


@dataclass
class SimReport:
    mode: str
    policy: str
    seed: int
    rounds_run: int
    slots_run: int
    node_order: list[NodeId]
    round_records: list[dict] = field(default_factory=list)
    slot_records: list[dict] = field(default_factory=list)
    energy_timeline: list[list[float]] = field(default_factory=list)
    initial_energy: dict[NodeId, float] = field(default_factory=dict)
    final_energy: dict[NodeId, float] = field(default_factory=dict)
    final_reputation: dict[NodeId, float] = field(default_factory=dict)
    energy_charged: dict[NodeId, float] = field(default_factory=dict)
    lifetime_slot: int | None = None
    coverage_violations: int = 0
    detection_totals: dict = field(default_factory=lambda: {
        "sampled": 0, "flagged": 0, "true_positives": 0, "false_positives": 0})

    @property
    def final_energy_variance(self) -> float:
        vals = [self.final_energy[k] for k in sorted(self.final_energy)]
        return statistics.pvariance(vals) if len(vals) > 1 else 0.0


class TraceWriter:
    """Tab-separated, one event per line: slot round kind node details."""

    def __init__(self, path=None):
        self._fh = open(path, "w") if path else None
        self.lines: list[str] = []

    def write(self, slot: int, rnd: int, kind: str, node, details: str):
        line = f"{slot}\t{rnd}\t{kind}\t{node}\t{details}"
        self.lines.append(line)
        if self._fh:
            self._fh.write(line + "\n")

    def close(self):
        if self._fh:
            self._fh.close()
            self._fh = None


def _train_model(cfg: SimConfig) -> BayesModel:
    if cfg.training_file:
        data = load_training_file(cfg.training_file)
    else:
        data = builtin_training(cfg.seed)
    return train_bayes(data, cfg.alpha)


class _Simulation:
    def __init__(self, cfg: SimConfig, trace: TraceWriter):
        self.cfg = cfg
        self.trace = trace
        self.graph = build_topology(cfg)
        self.energy = initial_energies(cfg, self.graph)
        self.initial_energy = dict(self.energy)
        self.reputation = pay.ReputationTable(
            entries={k: 0.0 for k in sorted(self.graph.nodes)},
            threshold=cfg.reputation_threshold)
        self.model = _train_model(cfg)
        self.charged = {k: 0.0 for k in self.graph.nodes}
        self.intervals: dict[NodeId, int] = {}
        self.slots_since: dict[NodeId, int] = {}
        self.mobility: dict[int, list[MobilityEvent]] = {}
        for ev in cfg.mobility_events:
            self.mobility.setdefault(ev.slot, []).append(ev)
        self.underdeliver = {(u.round, u.node): u.delivered_fraction
                             for u in cfg.underdeliver}
        self.report = SimReport(
            mode=cfg.mode, policy=cfg.policy, seed=cfg.seed, rounds_run=0,
            slots_run=0, node_order=sorted(self.graph.nodes),
            initial_energy=dict(self.energy))

    # -- helpers ---------------------------------------------------------

    def alive_nodes(self) -> list[NodeId]:
        return sorted(k for k in self.graph.nodes if self.energy[k] > 0)

    def _charge(self, k: NodeId, idle=0, msgs=0, sampled=0):
        before = self.energy[k]
        after = consume_energy(EnergyState(before), idle, msgs, sampled,
                               self.cfg.rates).remaining
        self.energy[k] = after
        self.charged[k] = self.charged.get(k, 0.0) + (before - after)

    def _costs(self, alive: list[NodeId]) -> dict[NodeId, CostOfAnalysis]:
        return {k: cost_of_analysis(EnergyState(self.energy[k]),
                                    self.cfg.expected_slots,
                                    self.reputation.get(k),
                                    self.cfg.cost_params)
                for k in alive}

    # -- election --------------------------------------------------------

    def _elect(self, rnd: int, alive: list[NodeId],
               costs: dict[NodeId, CostOfAnalysis]) -> ElectionOutcome:
        cfg = self.cfg
        sub = induced_subgraph(self.graph, set(alive))
        slot0 = rnd * cfg.t_elect
        if cfg.policy == "mechanism":
            if cfg.mode == "CILE":
                def sink(kind, node, details):
                    self.trace.write(slot0, rnd, kind, node, details)
                return run_election_round(
                    sub, costs, cfg.budget,
                    cheaters=frozenset(cfg.cheaters), trace=sink)
            honest = induced_subgraph(
                self.graph, set(alive) - set(cfg.cheaters))
            clusters = form_clusters(honest)
            outcome = elect_per_cluster(clusters, costs, cfg.budget)
            outcome = replace(
                outcome, excluded=frozenset(cfg.cheaters) & set(alive))
            for k in sorted(honest.nodes):
                self.trace.write(slot0, rnd, "msg_hello", k, "")
                self.trace.write(slot0, rnd, "msg_begin_election", k, "")
            for leader in sorted(outcome.votes):
                for v in outcome.votes[leader]:
                    self.trace.write(slot0, rnd, "msg_vote", v.sender,
                                     f"candidate={leader}")
                self.trace.write(slot0, rnd, "msg_acknowledge", leader,
                                 f"votes={len(outcome.votes[leader])}")
            return outcome
        return self._elect_baseline(rnd, alive)

    def _elect_baseline(self, rnd: int, alive: list[NodeId]) -> ElectionOutcome:
        """Random / connectivity election policies (no payments)."""
        cfg = self.cfg
        alive_set = set(alive)
        affiliation: dict[NodeId, NodeId] = {}
        rng = random.Random(f"{cfg.seed}:policy:{rnd}")
        for k in alive:
            cands = sorted((neighbors(self.graph, k) & alive_set) | {k})
            if cfg.policy == "random":
                affiliation[k] = rng.choice(cands)
            else:  # connectivity: highest degree, lowest id on ties
                affiliation[k] = max(
                    cands,
                    key=lambda c: (len(neighbors(self.graph, c) & alive_set),
                                   -c))
        leaders = frozenset(affiliation.values())
        return ElectionOutcome(
            leaders=leaders, affiliation=affiliation, payments={},
            excluded=frozenset(), votes={},
            message_counts={"hello": len(alive), "begin_election": 0,
                            "vote": len(alive), "acknowledge": 0},
            messages_sent={k: 2 for k in alive})

    # -- main loop -------------------------------------------------------

    def run(self) -> SimReport:
        cfg = self.cfg
        rep = self.report
        for rnd in range(cfg.rounds):
            alive = self.alive_nodes()
            if not alive:
                break
            costs = self._costs(alive)
            outcome = self._elect(rnd, alive, costs)
            for leader in sorted(outcome.payments):
                payment = outcome.payments[leader]
                if payment.total:
                    self.reputation = pay.credit_payment(
                        self.reputation, leader, payment)
                    self.trace.write(rnd * cfg.t_elect, rnd, "payment", leader,
                                     f"total={payment.total!r}")
            for k in alive:
                self._charge(k, msgs=outcome.messages_sent.get(k, 0))
            affiliation = dict(outcome.affiliation)
            excluded = set(outcome.excluded)
            self.trace.write(
                rnd * cfg.t_elect, rnd, "elected", -1,
                "leaders=" + ",".join(map(str, sorted(outcome.leaders)))
                + (" excluded=" + ",".join(map(str, sorted(excluded)))
                   if excluded else ""))
            self._run_period(rnd, costs, affiliation, excluded)
            rep.round_records.append({
                "round": rnd,
                "alive_at_election": tuple(alive),
                "leaders": tuple(sorted(outcome.leaders)),
                "excluded": tuple(sorted(excluded)),
                "payments": {k: outcome.payments[k].total
                             for k in sorted(outcome.payments)},
                "message_counts": dict(outcome.message_counts),
                "reputation": {k: self.reputation.get(k)
                               for k in sorted(self.graph.nodes)},
                "alive": tuple(self.alive_nodes()),
            })
            rep.rounds_run = rnd + 1
        rep.final_energy = {k: self.energy[k] for k in sorted(self.graph.nodes)}
        rep.final_reputation = {k: self.reputation.get(k)
                                for k in sorted(self.graph.nodes)}
        rep.energy_charged = {k: self.charged.get(k, 0.0)
                              for k in sorted(self.graph.nodes)}
        rep.node_order = sorted(set(rep.node_order) | self.graph.nodes)
        return rep

    def _run_period(self, rnd: int, costs, affiliation, excluded):
        cfg = self.cfg
        rep = self.report
        for j in range(cfg.t_elect):
            slot = rnd * cfg.t_elect + j
            for ev in self.mobility.get(slot, ()):
                self._apply_mobility(slot, rnd, ev, affiliation, costs)
            alive = self.alive_nodes()
            alive_set = set(alive)
            # Nodes whose leader died or left fall back to their own IDS.
            for k in alive:
                target = affiliation.get(k)
                if target is not None and target != k and target not in alive_set:
                    affiliation[k] = k
                    self.trace.write(slot, rnd, "orphan", k, "own-ids")
            # Coverage invariant: leader, affiliated to an alive leader, or
            # running own IDS.
            for k in alive:
                if k in excluded:
                    continue
                target = affiliation.get(k)
                if target is None or (target != k and target not in alive_set):
                    rep.coverage_violations += 1
                    self.trace.write(slot, rnd, "coverage_violation", k, "")
            traffic = {k: generate_traffic(cfg.seed, slot, k,
                                           cfg.traffic_per_slot,
                                           cfg.attack_rate)
                       for k in alive}
            sampled = self._detection(slot, rnd, affiliation, alive, traffic)
            for k in alive:
                self._charge(k, idle=1, sampled=sampled.get(k, 0))
            self._record_slot(slot)
            rep.slots_run = slot + 1

    def _detection(self, slot, rnd, affiliation, alive, traffic):
        """Run per-leader detection where the dynamic interval is due.

        Returns per-node packets sampled this slot (for energy accounting).
        """
        cfg = self.cfg
        rep = self.report
        alive_set = set(alive)
        leaders = sorted({t for t in affiliation.values() if t in alive_set})
        sampled: dict[NodeId, int] = {}
        for leader in leaders:
            self.slots_since[leader] = self.slots_since.get(
                leader, self.intervals.get(leader, cfg.interval_initial)) + 1
            interval = self.intervals.get(leader, cfg.interval_initial)
            if self.slots_since[leader] < interval:
                continue
            self.slots_since[leader] = 0
            voters = [k for k in alive
                      if affiliation.get(k) == leader and k != leader]
            total_sampled = 0
            total_flagged = 0
            if voters:
                alloc = pay.allocate_budget(leader, voters, self.reputation,
                                            cfg.budget)
                fraction = self.underdeliver.get((rnd, leader), 1.0)
                delivered = pay.BudgetAllocation(
                    {v: s * fraction for v, s in alloc.shares.items()})
                det = detection_round(leader, delivered, traffic, self.model,
                                      f"{cfg.seed}:detect:{slot}:{leader}")
                for v in sorted(det.per_voter):
                    d = det.per_voter[v]
                    rep.detection_totals["sampled"] += d.sampled
                    rep.detection_totals["flagged"] += d.flagged
                    rep.detection_totals["true_positives"] += d.true_positives
                    rep.detection_totals["false_positives"] += d.false_positives
                total_sampled += det.packets_sampled
                total_flagged += det.flagged
                if fraction < 1.0:
                    before = self.reputation.get(leader)
                    self.reputation = pay.apply_punishment(
                        self.reputation, leader, alloc.total, delivered.total,
                        cfg.penalty_rate)
                    self.trace.write(
                        slot, rnd, "punishment", leader,
                        f"shortfall={alloc.total - delivered.total!r} "
                        f"reputation={before!r}->{self.reputation.get(leader)!r}")
            # Self-monitoring consumes budget but pays nothing.
            own = traffic[leader]
            k_self = min(int(cfg.budget), len(own))
            rng = random.Random(f"{cfg.seed}:selfdetect:{slot}:{leader}")
            own_sample = rng.sample(own, k_self) if k_self else []
            for t in own_sample:
                label, _ = classify(self.model, t)
                if label == ATTACK:
                    total_flagged += 1
                    rep.detection_totals["flagged"] += 1
                    if t.label == ATTACK:
                        rep.detection_totals["true_positives"] += 1
                    else:
                        rep.detection_totals["false_positives"] += 1
            rep.detection_totals["sampled"] += k_self
            total_sampled += k_self
            sampled[leader] = total_sampled
            frac_flagged = (total_flagged / total_sampled
                            if total_sampled else 0.0)
            self.intervals[leader] = next_interval(
                interval, frac_flagged, cfg.flag_threshold,
                cfg.interval_min, cfg.interval_max)
            self.trace.write(slot, rnd, "detect", leader,
                             f"sampled={total_sampled} flagged={total_flagged} "
                             f"next_interval={self.intervals[leader]}")
        return sampled

    def _apply_mobility(self, slot, rnd, ev, affiliation, costs):
        leader_costs = {k: c for k, c in costs.items()
                        if k in set(affiliation.values())}
        try:
            self.graph, new_aff = apply_mobility_event(
                self.graph, ev, affiliation, leader_costs)
        except Exception as exc:
            raise InvalidConfig(f"mobility event at slot {slot}: {exc}") from exc
        affiliation.clear()
        affiliation.update(new_aff)
        if ev.op == "add":
            lo, hi = self.cfg.initial_energy
            if lo == hi:
                e0 = lo
            else:
                e0 = random.Random(
                    f"{self.cfg.seed}:energy:add:{ev.node}").uniform(lo, hi)
            self.energy[ev.node] = e0
            self.initial_energy[ev.node] = e0
            self.charged[ev.node] = 0.0
            entries = dict(self.reputation.entries)
            entries.setdefault(ev.node, 0.0)
            self.reputation = replace(self.reputation, entries=entries)
            self.report.initial_energy[ev.node] = e0
        self.trace.write(slot, rnd, "mobility", ev.node, ev.op)

    def _record_slot(self, slot):
        rep = self.report
        order = sorted(self.graph.nodes)
        energies = [self.energy[k] for k in order]
        alive_count = sum(1 for e in energies if e > 0)
        if rep.lifetime_slot is None and alive_count < len(order):
            rep.lifetime_slot = slot
            self.trace.write(slot, slot // self.cfg.t_elect, "death", -1,
                             "first node death")
        rep.node_order = order
        rep.energy_timeline.append(energies)
        rep.slot_records.append({
            "slot": slot,
            "fraction_alive": alive_count / len(order) if order else 0.0,
            "energy_variance": (statistics.pvariance(energies)
                                if len(energies) > 1 else 0.0),
        })


def run_simulation(cfg: SimConfig, trace_path=None) -> SimReport:
    """Run the full simulation loop for cfg; optionally stream a trace file."""
    trace = TraceWriter(trace_path)
    try:
        return _Simulation(cfg, trace).run()
    finally:
        trace.close()


def compare_election_policies(cfg: SimConfig, policies=POLICIES,
                              ) -> dict[str, SimReport]:
    """Run the same seeded scenario under each election policy."""
    out = {}
    for policy in policies:
        if policy not in POLICIES:
            raise InvalidConfig(f"unknown policy {policy!r}")
        out[policy] = run_simulation(cfg.with_overrides(policy=policy))
    return out


# -- report file -------------------------------------------------------------


def format_report(rep: SimReport) -> str:
    lines = ["# manetid simulation report"]
    lines.append(f"mode\t{rep.mode}")
    lines.append(f"policy\t{rep.policy}")
    lines.append(f"seed\t{rep.seed}")
    lines.append(f"rounds_run\t{rep.rounds_run}")
    lines.append(f"slots_run\t{rep.slots_run}")
    lines.append(f"lifetime_slot\t{rep.lifetime_slot if rep.lifetime_slot is not None else 'none'}")
    lines.append(f"coverage_violations\t{rep.coverage_violations}")
    lines.append(f"final_energy_variance\t{rep.final_energy_variance!r}")
    d = rep.detection_totals
    lines.append("detection\tsampled={sampled} flagged={flagged} "
                 "tp={true_positives} fp={false_positives}".format(**d))
    lines.append("")
    lines.append("[rounds]")
    lines.append("round\tleaders\texcluded\tpayment_total\tmessages")
    for rec in rep.round_records:
        msgs = ",".join(f"{k}={v}" for k, v in sorted(
            rec["message_counts"].items()))
        lines.append("{}\t{}\t{}\t{!r}\t{}".format(
            rec["round"],
            ",".join(map(str, rec["leaders"])) or "-",
            ",".join(map(str, rec["excluded"])) or "-",
            sum(rec["payments"].values()),
            msgs))
    lines.append("")
    lines.append("[timeline]")
    lines.append("slot\tfraction_alive\tenergy_variance")
    for rec in rep.slot_records:
        lines.append(f"{rec['slot']}\t{rec['fraction_alive']!r}\t"
                     f"{rec['energy_variance']!r}")
    lines.append("")
    lines.append("[energy]")
    lines.append("node\tinitial\tfinal\tcharged")
    for k in sorted(rep.final_energy):
        lines.append(f"{k}\t{rep.initial_energy.get(k, 0.0)!r}\t"
                     f"{rep.final_energy[k]!r}\t"
                     f"{rep.energy_charged.get(k, 0.0)!r}")
    lines.append("")
    lines.append("[reputation]")
    lines.append("node\treputation")
    for k in sorted(rep.final_reputation):
        lines.append(f"{k}\t{rep.final_reputation[k]!r}")
    return "\n".join(lines) + "\n"


def write_report(rep: SimReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_report(rep))


def format_comparison(reports: dict[str, SimReport]) -> str:
    lines = ["# manetid policy comparison"]
    lines.append("policy\tlifetime_slot\tfinal_energy_variance\t"
                 "final_fraction_alive")
    for policy in sorted(reports):
        rep = reports[policy]
        frac = (rep.slot_records[-1]["fraction_alive"]
                if rep.slot_records else 0.0)
        life = rep.lifetime_slot if rep.lifetime_slot is not None else "none"
        lines.append(f"{policy}\t{life}\t{rep.final_energy_variance!r}\t"
                     f"{frac!r}")
    return "\n".join(lines) + "\n"
