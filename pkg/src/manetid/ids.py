"""Toy anomaly-based intrusion detection: categorical naive Bayes.

Leaders classify sampled transactions.  A transaction is a fixed-length
vector of categorical features plus a Normal/Attack label (known for
training data, hidden for evaluation).  Laplace smoothing keeps unseen
category counts away from zero; exact ties go to Attack (conservative).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import EmptyTraining, UnknownCategory
from .payments import BudgetAllocation
from .topology import NodeId

NORMAL = "normal"
ATTACK = "attack"
LABELS = (NORMAL, ATTACK)


@dataclass(frozen=True)
class Transaction:
    features: tuple[int, ...]
    label: str | None = None


@dataclass(frozen=True)
class BayesModel:
    class_priors: dict[str, float]
    # per feature index: {label: {category: count}}
    conditional_counts: tuple[dict[str, dict[int, int]], ...]
    label_counts: dict[str, int]
    alphabets: tuple[frozenset[int], ...]
    alpha: float


def train_bayes(data: list[Transaction], alpha: float = 1.0) -> BayesModel:
    """Fit priors and smoothed per-feature conditionals from labeled data."""
    if not data:
        raise EmptyTraining("no training transactions")
    if alpha <= 0:
        raise ValueError("smoothing alpha must be > 0")
    arity = len(data[0].features)
    label_counts = {l: 0 for l in LABELS}
    cond: tuple[dict[str, dict[int, int]], ...] = tuple(
        {l: {} for l in LABELS} for _ in range(arity))
    alphabets: list[set[int]] = [set() for _ in range(arity)]
    for t in data:
        if t.label not in LABELS:
            raise ValueError(f"unknown label {t.label!r}")
        if len(t.features) != arity:
            raise ValueError("inconsistent feature arity in training data")
        label_counts[t.label] += 1
        for j, cat in enumerate(t.features):
            cond[j][t.label][cat] = cond[j][t.label].get(cat, 0) + 1
            alphabets[j].add(cat)
    n = len(data)
    if all(label_counts[l] > 0 for l in LABELS):
        priors = {l: label_counts[l] / n for l in LABELS}
    else:
        priors = {l: 1 / len(LABELS) for l in LABELS}
    return BayesModel(
        class_priors=priors, conditional_counts=cond,
        label_counts=label_counts,
        alphabets=tuple(frozenset(a) for a in alphabets), alpha=alpha)


def conditional(m: BayesModel, feature: int, category: int, label: str) -> float:
    """Smoothed P(feature = category | label)."""
    arity = len(m.alphabets[feature])
    count = m.conditional_counts[feature][label].get(category, 0)
    return (count + m.alpha) / (m.label_counts[label] + m.alpha * arity)


def posteriors(m: BayesModel, t: Transaction) -> dict[str, float]:
    """Normalized label posteriors, computed in log space."""
    for j, cat in enumerate(t.features):
        if cat not in m.alphabets[j]:
            raise UnknownCategory(f"feature {j} category {cat} unseen in training")
    log_post = {}
    for label in LABELS:
        lp = math.log(m.class_priors[label])
        for j, cat in enumerate(t.features):
            lp += math.log(conditional(m, j, cat, label))
        log_post[label] = lp
    peak = max(log_post.values())
    weights = {l: math.exp(lp - peak) for l, lp in log_post.items()}
    total = sum(weights.values())
    return {l: w / total for l, w in weights.items()}


def classify(m: BayesModel, t: Transaction) -> tuple[str, float]:
    """Return (label, posterior P(attack)); ties resolve to Attack."""
    post = posteriors(m, t)
    p_attack = post[ATTACK]
    label = ATTACK if p_attack >= 0.5 else NORMAL
    return label, p_attack


@dataclass(frozen=True)
class VoterDetection:
    sampled: int
    flagged: int
    true_positives: int
    false_positives: int


@dataclass(frozen=True)
class DetectionReport:
    leader: NodeId
    per_voter: dict[NodeId, VoterDetection]

    @property
    def packets_sampled(self) -> int:
        return sum(v.sampled for v in self.per_voter.values())

    @property
    def flagged(self) -> int:
        return sum(v.flagged for v in self.per_voter.values())


def detection_round(leader: NodeId, allocation: BudgetAllocation,
                    traffic: dict[NodeId, list[Transaction]],
                    m: BayesModel, rng_seed) -> DetectionReport:
    """Sample each voter's traffic up to its share and classify it.

    Sampling is uniform without replacement from a generator seeded with
    rng_seed, so reports replay exactly for a given seed.
    """
    rng = random.Random(rng_seed)
    per_voter: dict[NodeId, VoterDetection] = {}
    for voter in sorted(allocation.shares):
        stream = traffic[voter]
        k = min(int(allocation.shares[voter]), len(stream))
        sample = rng.sample(stream, k) if k else []
        flagged = tp = fp = 0
        for t in sample:
            label, _ = classify(m, t)
            if label == ATTACK:
                flagged += 1
                if t.label == ATTACK:
                    tp += 1
                else:
                    fp += 1
        per_voter[voter] = VoterDetection(k, flagged, tp, fp)
    return DetectionReport(leader=leader, per_voter=per_voter)


def next_interval(current: int, flagged_fraction: float, flag_threshold: float,
                  lo: int, hi: int) -> int:
    """Dynamic detection interval: halve when hot, double when quiet."""
    if flagged_fraction > flag_threshold:
        return max(lo, current // 2)
    return min(hi, current * 2)


def load_training_file(path) -> list[Transaction]:
    """One transaction per line: comma-separated categories, last field label."""
    data: list[Transaction] = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) < 2:
                raise ValueError(f"{path}:{line_no}: need features and a label")
            label = parts[-1].lower()
            features = tuple(int(p) for p in parts[:-1])
            data.append(Transaction(features=features, label=label))
    if not data:
        raise EmptyTraining(f"no transactions in {path}")
    return data
